//! Flat `key = value` run configuration. Lists are comma separated, `#`
//! starts a comment. The seed is mandatory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::data::{generate_synthetic, load_csv, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::eval::{Classifier, Strategy};
use crate::features::WeightScope;
use crate::rng::derive_seed;
use crate::rulemine::ZVariant;

/// Datasets the benchmark knows by name.
pub const REGISTRY: &[&str] = &["wdbc", "wine", "iris", "balance-scale", "heart-disease", "synthetic", "synthetic-noisy"];

const KNOWN_KEYS: &[&str] = &[
    "seed",
    "datasets",
    "data_dir",
    "out_dir",
    "strategies",
    "bins",
    "z_min",
    "z_variant",
    "weight_scope",
    "c_grid",
    "trees_grid",
    "gamma",
    "splits",
    "folds",
    "test_fraction",
    "assoc_max_len",
    "inner_remine",
    "synthetic_n",
    "synthetic_noise",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub datasets: Vec<String>,
    pub data_dir: PathBuf,
    pub out_dir: PathBuf,
    pub strategies: Vec<Strategy>,
    pub bins: usize,
    pub z_min: f64,
    pub z_variant: ZVariant,
    pub weight_scope: WeightScope,
    pub c_grid: Vec<f64>,
    pub trees_grid: Vec<usize>,
    /// RBF bandwidth; `None` derives it from the training matrix.
    pub gamma: Option<f64>,
    pub splits: usize,
    pub folds: usize,
    pub test_fraction: f64,
    pub assoc_max_len: usize,
    /// Re-mine rules inside every inner fold (otherwise once per outer split).
    pub inner_remine: bool,
    pub synthetic_n: usize,
    pub synthetic_noise: f64,
}

impl RunConfig {
    /// Defaults for everything but the seed and the dataset list.
    pub fn with_seed(seed: u64) -> Self {
        RunConfig {
            seed,
            datasets: Vec::new(),
            data_dir: PathBuf::from("data"),
            out_dir: PathBuf::from("out"),
            strategies: Strategy::standard_set(),
            bins: 10,
            z_min: 1.96,
            z_variant: ZVariant::AsPrinted,
            weight_scope: WeightScope::PerClass,
            c_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            trees_grid: vec![100, 200, 300, 400, 500],
            gamma: None,
            splits: 5,
            folds: 5,
            test_fraction: 0.3,
            assoc_max_len: 3,
            inner_remine: true,
            synthetic_n: 500,
            synthetic_noise: 0.12,
        }
    }

    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text, seed_override)?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new(""));
        if cfg.data_dir.is_relative() {
            cfg.data_dir = base.join(&cfg.data_dir);
        }
        if cfg.out_dir.is_relative() {
            cfg.out_dir = base.join(&cfg.out_dir);
        }
        Ok(cfg)
    }

    pub fn parse(text: &str, seed_override: Option<u64>) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            let key = k.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)));
            }
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key '{key}'", lineno + 1)));
            }
        }
        let seed = match (seed_override, entries.get("seed")) {
            (Some(s), _) => s,
            (None, Some(v)) => num(v, "seed")?,
            (None, None) => return Err(Error::Config("missing key 'seed'".into())),
        };
        let mut cfg = RunConfig::with_seed(seed);
        for (k, v) in &entries {
            match k.as_str() {
                "seed" => {}
                "datasets" => cfg.datasets = list(v).into_iter().map(str::to_string).collect(),
                "data_dir" => cfg.data_dir = PathBuf::from(v),
                "out_dir" => cfg.out_dir = PathBuf::from(v),
                "strategies" => {
                    cfg.strategies = list(v)
                        .into_iter()
                        .map(|s| Strategy::parse(s).ok_or_else(|| Error::Config(format!("unknown strategy '{s}'"))))
                        .collect::<Result<_>>()?
                }
                "bins" => cfg.bins = num(v, k)?,
                "z_min" => cfg.z_min = num(v, k)?,
                "z_variant" => {
                    cfg.z_variant = match v.as_str() {
                        "as-printed" => ZVariant::AsPrinted,
                        "standard" => ZVariant::Standard,
                        _ => return Err(Error::Config(format!("unknown z_variant '{v}'"))),
                    }
                }
                "weight_scope" => {
                    cfg.weight_scope = match v.as_str() {
                        "per-class" => WeightScope::PerClass,
                        "global" => WeightScope::Global,
                        _ => return Err(Error::Config(format!("unknown weight_scope '{v}'"))),
                    }
                }
                "c_grid" => cfg.c_grid = list(v).into_iter().map(|s| num(s, k)).collect::<Result<_>>()?,
                "trees_grid" => cfg.trees_grid = list(v).into_iter().map(|s| num(s, k)).collect::<Result<_>>()?,
                "gamma" => cfg.gamma = if v == "auto" { None } else { Some(num(v, k)?) },
                "splits" => cfg.splits = num(v, k)?,
                "folds" => cfg.folds = num(v, k)?,
                "test_fraction" => cfg.test_fraction = num(v, k)?,
                "assoc_max_len" => cfg.assoc_max_len = num(v, k)?,
                "inner_remine" => cfg.inner_remine = num(v, k)?,
                "synthetic_n" => cfg.synthetic_n = num(v, k)?,
                "synthetic_noise" => cfg.synthetic_noise = num(v, k)?,
                _ => unreachable!("keys are checked above"),
            }
        }
        cfg.validate_values()?;
        Ok(cfg)
    }

    fn validate_values(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.datasets.is_empty() {
            return bad("'datasets' must list at least one dataset".into());
        }
        if let Some(d) = self.datasets.iter().find(|d| !REGISTRY.contains(&d.as_str())) {
            return bad(format!("unknown dataset '{d}' in 'datasets' (known: {})", REGISTRY.join(", ")));
        }
        if self.strategies.is_empty() {
            return bad("'strategies' is empty".into());
        }
        if self.bins < 2 {
            return bad("'bins' must be at least 2".into());
        }
        if !(self.z_min > 0.0) {
            return bad("'z_min' must be positive".into());
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return bad("'c_grid' needs positive values".into());
        }
        if self.trees_grid.is_empty() || self.trees_grid.contains(&0) {
            return bad("'trees_grid' needs positive values".into());
        }
        if self.gamma.is_some_and(|g| !(g > 0.0)) {
            return bad("'gamma' must be positive".into());
        }
        if self.splits == 0 {
            return bad("'splits' must be positive".into());
        }
        if self.folds < 2 {
            return bad("'folds' must be at least 2".into());
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return bad("'test_fraction' must lie in (0, 1)".into());
        }
        if self.assoc_max_len == 0 {
            return bad("'assoc_max_len' must be positive".into());
        }
        if !(0.0..1.0).contains(&self.synthetic_noise) {
            return bad("'synthetic_noise' must lie in [0, 1)".into());
        }
        if self.synthetic_n == 0 {
            return bad("'synthetic_n' must be positive".into());
        }
        Ok(())
    }

    /// Checks that every file-backed dataset is present.
    pub fn validate_files(&self) -> Result<()> {
        for name in &self.datasets {
            if let Some((csv, schema)) = self.dataset_files(name) {
                for p in [csv, schema] {
                    if !p.is_file() {
                        return Err(Error::Config(format!("dataset '{name}': missing file {}", p.display())));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dataset_files(&self, name: &str) -> Option<(PathBuf, PathBuf)> {
        if name.starts_with("synthetic") {
            return None;
        }
        Some((self.data_dir.join(format!("{name}.csv")), self.data_dir.join(format!("{name}.schema"))))
    }

    pub fn load_dataset(&self, name: &str) -> Result<Dataset> {
        match name {
            "synthetic" => generate_synthetic(self.synthetic_n, 0.0, derive_seed(self.seed, "synthetic", &[0])),
            "synthetic-noisy" => generate_synthetic(self.synthetic_n, self.synthetic_noise, derive_seed(self.seed, "synthetic", &[1])),
            _ => {
                let (csv, schema) = self
                    .dataset_files(name)
                    .ok_or_else(|| Error::Config(format!("unknown dataset '{name}'")))?;
                let schema = FeatureSchema::load(&schema)?;
                let missing = schema.missing_token.clone().unwrap_or_else(|| crate::data::DEFAULT_MISSING_TOKEN.to_string());
                load_csv(&csv, &schema, &missing)
            }
        }
    }

    /// Canonical text form: every key in a fixed order. Paths are omitted so
    /// the hash only depends on what is computed.
    pub fn canonical_text(&self) -> String {
        let join = |v: Vec<String>| v.join(", ");
        let mut s = String::new();
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("datasets = {}\n", self.datasets.join(", ")));
        s.push_str(&format!("strategies = {}\n", join(self.strategies.iter().map(|x| x.name()).collect())));
        s.push_str(&format!("bins = {}\n", self.bins));
        s.push_str(&format!("z_min = {}\n", self.z_min));
        s.push_str(&format!(
            "z_variant = {}\n",
            match self.z_variant {
                ZVariant::AsPrinted => "as-printed",
                ZVariant::Standard => "standard",
            }
        ));
        s.push_str(&format!(
            "weight_scope = {}\n",
            match self.weight_scope {
                WeightScope::PerClass => "per-class",
                WeightScope::Global => "global",
            }
        ));
        s.push_str(&format!("c_grid = {}\n", join(self.c_grid.iter().map(|c| c.to_string()).collect())));
        s.push_str(&format!("trees_grid = {}\n", join(self.trees_grid.iter().map(|c| c.to_string()).collect())));
        s.push_str(&format!("gamma = {}\n", self.gamma.map_or("auto".into(), |g| g.to_string())));
        s.push_str(&format!("splits = {}\n", self.splits));
        s.push_str(&format!("folds = {}\n", self.folds));
        s.push_str(&format!("test_fraction = {}\n", self.test_fraction));
        s.push_str(&format!("assoc_max_len = {}\n", self.assoc_max_len));
        s.push_str(&format!("inner_remine = {}\n", self.inner_remine));
        s.push_str(&format!("synthetic_n = {}\n", self.synthetic_n));
        s.push_str(&format!("synthetic_noise = {}\n", self.synthetic_noise));
        s
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn classifiers(&self) -> Vec<Classifier> {
        let mut c: Vec<Classifier> = self.strategies.iter().filter_map(|s| s.classifier()).collect();
        c.sort();
        c.dedup();
        c
    }
}

fn list(v: &str) -> Vec<&str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn num<T: std::str::FromStr>(v: &str, key: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'")))
}
