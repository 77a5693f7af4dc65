use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use localrules_ffi::*;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn last_error() -> String {
    let p = lr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn synthetic_mine_roundtrip() {
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(lr_dataset_synthetic(300, 0.0, 11, &mut ds), LrStatus::Ok);
        assert_eq!(lr_dataset_len(ds), 300);
        let mut rules = ptr::null_mut();
        assert_eq!(lr_mine(ds, 1, 1.96, 10, &mut rules), LrStatus::Ok);
        assert!(lr_ruleset_len(rules) > 0);
        let mut text = ptr::null_mut();
        assert_eq!(lr_ruleset_to_jsonl(rules, &mut text), LrStatus::Ok);
        let s = CStr::from_ptr(text).to_str().unwrap().to_string();
        lr_string_free(text);
        assert_eq!(s.lines().count(), lr_ruleset_len(rules));
        assert!(s.contains("\"feature_name\":\"x3\""));
        let mut desc = ptr::null_mut();
        assert_eq!(lr_ruleset_describe(rules, &mut desc), LrStatus::Ok);
        assert!(CStr::from_ptr(desc).to_str().unwrap().contains("x3 = {1} => 2"));
        lr_string_free(desc);
        lr_ruleset_free(rules);
        lr_dataset_free(ds);
    }
}

#[test]
fn load_iris() {
    let csv = CString::new(data_dir().join("iris.csv").to_str().unwrap()).unwrap();
    let schema = CString::new(data_dir().join("iris.schema").to_str().unwrap()).unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(lr_dataset_load(csv.as_ptr(), schema.as_ptr(), &mut ds), LrStatus::Ok);
        assert_eq!(lr_dataset_len(ds), 150);
        lr_dataset_free(ds);
    }
}

#[test]
fn error_codes_and_messages() {
    let missing = CString::new("/nonexistent/file.csv").unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        assert_eq!(lr_dataset_load(missing.as_ptr(), missing.as_ptr(), &mut ds), LrStatus::DataError);
        assert!(ds.is_null());
        assert!(last_error().contains("nonexistent"));
        assert_eq!(lr_dataset_load(ptr::null(), missing.as_ptr(), &mut ds), LrStatus::NullArgument);
        assert_eq!(lr_dataset_synthetic(10, 1.5, 1, &mut ds), LrStatus::InvalidArgument);
        assert_eq!(lr_mine(ptr::null(), 1, 1.96, 10, ptr::null_mut()), LrStatus::NullArgument);
        let mut syn = ptr::null_mut();
        assert_eq!(lr_dataset_synthetic(50, 0.0, 1, &mut syn), LrStatus::Ok);
        let mut rules = ptr::null_mut();
        assert_eq!(lr_mine(syn, 3, 1.96, 10, &mut rules), LrStatus::InvalidArgument);
        lr_dataset_free(syn);
        assert_eq!(lr_dataset_len(ptr::null()), 0);
        lr_dataset_free(ptr::null_mut());
        lr_string_free(ptr::null_mut());
    }
}

#[test]
fn scalar_functions() {
    unsafe {
        let mut z = 0.0;
        assert_eq!(lr_z_score(100, 0.5, 0.3, &mut z), LrStatus::Ok);
        let expect = 10.0 * 0.2 / (0.5f64 * 0.7).sqrt();
        assert!((z - expect).abs() < 1e-12);
        assert_eq!(lr_z_score(100, 1.5, 0.3, &mut z), LrStatus::InvalidArgument);
        let t = [0usize, 0, 1, 1];
        let mut f1 = 0.0;
        assert_eq!(lr_weighted_f1(t.as_ptr(), t.as_ptr(), 4, 2, &mut f1), LrStatus::Ok);
        assert!((f1 - 100.0).abs() < 1e-12);
        let bad = [0usize, 5, 1, 1];
        assert_eq!(lr_weighted_f1(t.as_ptr(), bad.as_ptr(), 4, 2, &mut f1), LrStatus::DataError);
    }
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include "localrules.h"

int main(void) {
    LrDataset *ds = NULL;
    LrRuleSet *rules = NULL;
    char *text = NULL;
    double z = 0.0;
    if (lr_dataset_synthetic(200, 0.0, 3, &ds) != LR_STATUS_OK) return 1;
    if (lr_mine(ds, 1, 1.96, 10, &rules) != LR_STATUS_OK) return 2;
    if (lr_ruleset_describe(rules, &text) != LR_STATUS_OK) return 3;
    if (lr_z_score(100, 0.5, 0.3, &z) != LR_STATUS_OK) return 4;
    if (lr_dataset_load(NULL, NULL, &ds) != LR_STATUS_NULL_ARGUMENT || lr_last_error() == NULL) return 5;
    printf("%zu %.3f\n", lr_ruleset_len(rules), z);
    lr_string_free(text);
    lr_ruleset_free(rules);
    lr_dataset_free(ds);
    return 0;
}
"#;

/// Compiles and runs a C client against the generated header and the static
/// library. Skipped when no C compiler or static library is available.
#[test]
fn c_client_links_and_runs() {
    let Some(lib_dir) = std::env::current_exe().ok().and_then(|p| p.parent()?.parent().map(PathBuf::from)) else {
        return;
    };
    let lib = lib_dir.join("liblocalrules_ffi.a");
    if !lib.is_file() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no static library or C compiler");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("client.c");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let exe = dir.path().join("client");
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "client exited with {:?}", out.status);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.trim().ends_with("3.381"), "{stdout}");
}
