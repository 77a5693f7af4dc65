//! C ABI.
//!
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `*_free`. Fallible calls return an [`LrStatus`] code and write
//! results through out pointers; on failure `lr_last_error` gives the
//! message for the calling thread. Strings returned by the library are
//! released with `lr_string_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use localrules::data::{generate_synthetic, load_csv, BinMap, Dataset, FeatureSchema, Imputer, DEFAULT_MISSING_TOKEN};
use localrules::eval::weighted_f1;
use localrules::rulemine::{mine, rules_to_jsonl, z_score, MiningConfig, RuleSet, SizeThreshold, ZVariant};
use localrules::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    DataError = 3,
    Internal = 4,
    Panic = 5,
}

/// Loaded dataset.
pub struct LrDataset {
    inner: Dataset,
}

/// Mined rules plus the bins they refer to.
pub struct LrRuleSet {
    rules: RuleSet,
    schema: FeatureSchema,
    bins: BinMap,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: LrStatus, msg: impl Into<String>) -> LrStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> LrStatus {
    let status = match e.exit_code() {
        2 => LrStatus::InvalidArgument,
        4 => LrStatus::Internal,
        _ => LrStatus::DataError,
    };
    fail(status, e.to_string())
}

/// Runs `f`, turning panics into `LrStatus::Panic`.
fn guard(f: impl FnOnce() -> LrStatus) -> LrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(LrStatus::Panic, format!("panic: {msg}"))
        }
    }
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, LrStatus> {
    if p.is_null() {
        return Err(fail(LrStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| fail(LrStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a CSV file described by a schema file.
///
/// # Safety
/// `csv_path` and `schema_path` must be null or NUL-terminated strings;
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lr_dataset_load(csv_path: *const c_char, schema_path: *const c_char, out: *mut *mut LrDataset) -> LrStatus {
    guard(|| {
        if out.is_null() {
            return fail(LrStatus::NullArgument, "out is null");
        }
        let (csv, schema) = match (path_arg(csv_path, "csv_path"), path_arg(schema_path, "schema_path")) {
            (Ok(c), Ok(s)) => (c, s),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        let loaded = FeatureSchema::load(schema).and_then(|s| {
            let token = s.missing_token.clone().unwrap_or_else(|| DEFAULT_MISSING_TOKEN.to_string());
            load_csv(csv, &s, &token)
        });
        match loaded {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(LrDataset { inner: ds }));
                LrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Generates the synthetic rule-system dataset.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lr_dataset_synthetic(n: usize, noise_rate: f64, seed: u64, out: *mut *mut LrDataset) -> LrStatus {
    guard(|| {
        if out.is_null() {
            return fail(LrStatus::NullArgument, "out is null");
        }
        match generate_synthetic(n, noise_rate, seed) {
            Ok(ds) => {
                *out = Box::into_raw(Box::new(LrDataset { inner: ds }));
                LrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lr_dataset_len(ds: *const LrDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_samples())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lr_dataset_free(ds: *mut LrDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Imputes, quantizes into `n_bins` bins and mines rules up to
/// `max_dimension` features.
///
/// # Safety
/// `ds` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lr_mine(ds: *const LrDataset, max_dimension: u32, z_min: f64, n_bins: u32, out: *mut *mut LrRuleSet) -> LrStatus {
    guard(|| {
        let Some(ds) = ds.as_ref() else {
            return fail(LrStatus::NullArgument, "dataset is null");
        };
        if out.is_null() {
            return fail(LrStatus::NullArgument, "out is null");
        }
        if !(1..=2).contains(&max_dimension) || n_bins < 2 || !(z_min > 0.0) {
            return fail(LrStatus::InvalidArgument, "need max_dimension in 1..=2, n_bins >= 2 and z_min > 0");
        }
        let config = MiningConfig {
            max_dimension: max_dimension as usize,
            z_min,
            n_bins: n_bins as usize,
            size_threshold: SizeThreshold::PerClass,
            z_variant: ZVariant::AsPrinted,
        };
        let result = Imputer::fit(&ds.inner)
            .and_then(|imp| imp.apply(&ds.inner))
            .and_then(|filled| {
                let bins = BinMap::fit(&filled, config.n_bins)?;
                let rules = mine(&bins.apply(&filled)?, &config)?;
                Ok((rules, bins))
            });
        match result {
            Ok((rules, bins)) => {
                *out = Box::into_raw(Box::new(LrRuleSet {
                    rules,
                    schema: ds.inner.schema().clone(),
                    bins,
                }));
                LrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Number of rules, or 0 for a null handle.
///
/// # Safety
/// `rules` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lr_ruleset_len(rules: *const LrRuleSet) -> usize {
    rules.as_ref().map_or(0, |r| r.rules.len())
}

/// Rules as JSON lines (bin indices plus feature and class names).
///
/// # Safety
/// `rules` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lr_ruleset_to_jsonl(rules: *const LrRuleSet, out: *mut *mut c_char) -> LrStatus {
    guard(|| write_string(rules, out, |r| rules_to_jsonl(&r.rules, Some(&r.schema))))
}

/// One readable line per rule, with bin edges in original units.
///
/// # Safety
/// `rules` must be a live handle; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lr_ruleset_describe(rules: *const LrRuleSet, out: *mut *mut c_char) -> LrStatus {
    guard(|| {
        write_string(rules, out, |r| {
            r.rules
                .iter()
                .map(|rule| format!("{} (z={:.4})\n", rule.describe(&r.schema, Some(&r.bins)), rule.stats.z))
                .collect()
        })
    })
}

unsafe fn write_string(rules: *const LrRuleSet, out: *mut *mut c_char, f: impl FnOnce(&LrRuleSet) -> String) -> LrStatus {
    let Some(r) = rules.as_ref() else {
        return fail(LrStatus::NullArgument, "rule set is null");
    };
    if out.is_null() {
        return fail(LrStatus::NullArgument, "out is null");
    }
    match CString::new(f(r)) {
        Ok(s) => {
            *out = s.into_raw();
            LrStatus::Ok
        }
        Err(_) => fail(LrStatus::Internal, "output contains a nul byte"),
    }
}

/// # Safety
/// `rules` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lr_ruleset_free(rules: *mut LrRuleSet) {
    if !rules.is_null() {
        drop(Box::from_raw(rules));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Rule z-score `sqrt(n) (p - p0) / sqrt(p (1 - p0))`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lr_z_score(n: usize, p: f64, p0: f64, out: *mut f64) -> LrStatus {
    guard(|| {
        if out.is_null() {
            return fail(LrStatus::NullArgument, "out is null");
        }
        if !(0.0..=1.0).contains(&p) || !(0.0..1.0).contains(&p0) {
            return fail(LrStatus::InvalidArgument, "need 0 <= p <= 1 and 0 <= p0 < 1");
        }
        *out = z_score(n, p, p0, ZVariant::AsPrinted);
        LrStatus::Ok
    })
}

/// Class-balanced F1 on a 0 to 100 scale.
///
/// # Safety
/// `y_true` and `y_pred` must each point to `n` readable values; `out` must
/// be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn lr_weighted_f1(y_true: *const usize, y_pred: *const usize, n: usize, n_classes: usize, out: *mut f64) -> LrStatus {
    guard(|| {
        if y_true.is_null() || y_pred.is_null() || out.is_null() {
            return fail(LrStatus::NullArgument, "null pointer argument");
        }
        let t = std::slice::from_raw_parts(y_true, n);
        let p = std::slice::from_raw_parts(y_pred, n);
        match weighted_f1(t, p, n_classes) {
            Ok(v) => {
                *out = v;
                LrStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}
