//! The repeated-split benchmark: for every (dataset, strategy, split) cell,
//! an inner cross-validated grid search on the training part, a refit with
//! the selected hyperparameter and a score on the held-out part.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{model_complexity, weighted_f1};
use super::pipeline::{hyper_params, train_on, FittedPipeline, PipelineSettings, Prepared, Strategy};
use super::split::{stratified_kfold, stratified_split, Split};
use crate::config::RunConfig;
use crate::data::{BinMap, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::rng::derive_seed;
use crate::rulemine::{rules_to_jsonl, Constraint, Rule};

/// Everything a cell needs besides its data.
#[derive(Debug, Clone, PartialEq)]
pub struct CellContext {
    pub settings: PipelineSettings,
    pub c_grid: Vec<f64>,
    pub trees_grid: Vec<f64>,
    pub folds: usize,
    pub inner_remine: bool,
    pub seed: u64,
}

impl CellContext {
    pub fn from_config(cfg: &RunConfig) -> Self {
        CellContext {
            settings: PipelineSettings {
                bins: cfg.bins,
                z_min: cfg.z_min,
                z_variant: cfg.z_variant,
                weight_scope: cfg.weight_scope,
                assoc_max_len: cfg.assoc_max_len,
                gamma: cfg.gamma,
            },
            c_grid: cfg.c_grid.clone(),
            trees_grid: cfg.trees_grid.iter().map(|&t| t as f64).collect(),
            folds: cfg.folds,
            inner_remine: cfg.inner_remine,
            seed: cfg.seed,
        }
    }

    pub fn grid(&self, strategy: Strategy) -> &[f64] {
        match strategy {
            Strategy::Rf => &self.trees_grid,
            _ => &self.c_grid,
        }
    }
}

/// Index of the grid point with the best mean fold score; the first one wins
/// ties.
pub fn select_best(scores: &[Vec<f64>]) -> usize {
    let means: Vec<f64> = scores.iter().map(|s| s.iter().sum::<f64>() / s.len().max(1) as f64).collect();
    let mut best = 0;
    for (i, &m) in means.iter().enumerate().skip(1) {
        if m > means[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    pub best: usize,
    pub value: f64,
    /// `scores[grid point][fold]`.
    pub scores: Vec<Vec<f64>>,
}

fn model_seed(ctx: &CellContext, dataset: &str, strategy: Strategy, split: usize, fold: usize) -> u64 {
    derive_seed(ctx.seed, &format!("model/{dataset}/{}", strategy.name()), &[split as u64, fold as u64])
}

/// Inner k-fold grid search on `train`. With `inner_remine` the whole
/// representation is refitted on every fold; otherwise `outer` (fitted on
/// all of `train`) is reused and only the classifier is refitted.
pub fn grid_search(strategy: Strategy, train: &Dataset, ctx: &CellContext, split: usize, outer: Option<&Prepared>) -> Result<GridOutcome> {
    let grid = ctx.grid(strategy);
    if grid.is_empty() {
        return Err(Error::Config("empty hyperparameter grid".into()));
    }
    let name = train.schema().name.clone();
    let k = train.n_classes();
    let folds = stratified_kfold(train.labels(), k, ctx.folds, derive_seed(ctx.seed, &format!("folds/{name}"), &[split as u64]))?;
    let shared = match (ctx.inner_remine, outer) {
        (false, Some(p)) => Some((p, p.features(train)?)),
        _ => None,
    };
    let mut scores = vec![Vec::with_capacity(folds.len()); grid.len()];
    for (f, fold) in folds.iter().enumerate() {
        let fit_part = train.subset(&fold.train);
        let val_part = train.subset(&fold.test);
        let local;
        let (prepared, x_fit, x_val) = match &shared {
            Some((p, x)) => (*p, x.select_rows(&fold.train), x.select_rows(&fold.test)),
            None => {
                local = Prepared::fit(strategy, &fit_part, &ctx.settings)?;
                let xf = local.features(&fit_part)?;
                let xv = local.features(&val_part)?;
                (&local, xf, xv)
            }
        };
        let fold_scores: Vec<f64> = grid
            .par_iter()
            .map(|&v| {
                let hp = hyper_params(strategy, v, &ctx.settings, model_seed(ctx, &name, strategy, split, f + 1));
                let model = train_on(prepared, &x_fit, fit_part.labels(), k, &hp)?;
                weighted_f1(val_part.labels(), &model.predict(&x_val)?, k)
            })
            .collect::<Result<_>>()?;
        for (g, s) in fold_scores.into_iter().enumerate() {
            scores[g].push(s);
        }
    }
    let best = select_best(&scores);
    Ok(GridOutcome {
        best,
        value: grid[best],
        scores,
    })
}

/// Hyperparameter search and refit on the training part of one split.
pub fn fit_cell(ds: &Dataset, strategy: Strategy, split_index: usize, split: &Split, ctx: &CellContext) -> Result<(FittedPipeline, GridOutcome)> {
    let train = ds.subset(&split.train);
    let prepared = Prepared::fit(strategy, &train, &ctx.settings)?;
    let outcome = grid_search(strategy, &train, ctx, split_index, Some(&prepared))?;
    let hp = hyper_params(strategy, outcome.value, &ctx.settings, model_seed(ctx, &ds.schema().name, strategy, split_index, 0));
    let x = prepared.features(&train)?;
    let model = train_on(&prepared, &x, train.labels(), train.n_classes(), &hp)?;
    Ok((FittedPipeline { prepared, model }, outcome))
}

/// Canonical text of everything fitted in a cell: rules, bin edges, fills
/// and model parameters.
pub fn fit_fingerprint(p: &FittedPipeline) -> String {
    let mut s = String::new();
    if let Some(r) = &p.prepared.rules {
        s.push_str(&rules_to_jsonl(r, None));
    }
    s.push_str(&serde_json::to_string(p.prepared.bins.features()).expect("bins serialize"));
    s.push_str(&format!("{:?}", p.prepared.imputer.fills()));
    s.push_str(&p.model.to_json());
    s
}

/// Refits a cell after changing every test label and reports whether the
/// fitted state is unchanged.
pub fn leakage_sentinel(ds: &Dataset, strategy: Strategy, split: &Split, ctx: &CellContext) -> Result<bool> {
    let (a, _) = fit_cell(ds, strategy, 0, split, ctx)?;
    let k = ds.n_classes();
    let mut labels = ds.labels().to_vec();
    for &i in &split.test {
        labels[i] = (labels[i] + 1) % k;
    }
    let mutated = ds.with_labels(labels)?;
    let (b, _) = fit_cell(&mutated, strategy, 0, split, ctx)?;
    Ok(fit_fingerprint(&a) == fit_fingerprint(&b))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionSummary {
    pub feature: String,
    /// Admitted 1-based bins (continuous) or category names.
    pub values: Vec<String>,
    /// Value bounds of continuous conditions.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bins: Option<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleSummary {
    pub class: String,
    /// Bin-level description; identical rules across splits share it.
    pub key: String,
    pub conditions: Vec<ConditionSummary>,
    pub z: Option<f64>,
    pub n: usize,
}

impl RuleSummary {
    pub fn of(rule: &Rule, schema: &FeatureSchema, bins: &BinMap) -> Self {
        let conditions = rule
            .conditions
            .iter()
            .map(|c| {
                let spec = &schema.features[c.feature];
                match c.constraint {
                    Constraint::Interval { lo, hi } => {
                        let (lo, hi) = (lo as usize, hi as usize);
                        ConditionSummary {
                            feature: spec.name.clone(),
                            values: (lo..=hi).map(|b| (b + 1).to_string()).collect(),
                            lower: bins.interval(c.feature, lo).map(|v| v.0),
                            upper: bins.interval(c.feature, hi).map(|v| v.1),
                            bins: Some([lo + 1, hi + 1]),
                        }
                    }
                    Constraint::Categories(_) => ConditionSummary {
                        feature: spec.name.clone(),
                        values: match &spec.kind {
                            crate::data::FeatureKind::Categorical(names) => c.levels().iter().map(|&l| names[l].clone()).collect(),
                            crate::data::FeatureKind::Continuous => c.levels().iter().map(|l| (l + 1).to_string()).collect(),
                        },
                        lower: None,
                        upper: None,
                        bins: None,
                    },
                }
            })
            .collect();
        RuleSummary {
            class: schema.classes[rule.target_class].clone(),
            key: rule.describe(schema, None),
            conditions,
            z: rule.stats.z.is_finite().then_some(rule.stats.z),
            n: rule.stats.n,
        }
    }
}

/// Outcome of one (dataset, strategy, split) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub dataset: String,
    pub strategy: String,
    pub split: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub f1: Option<f64>,
    /// Selected C, or tree count for the forest.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub param: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub complexity: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub n_rules: Option<usize>,
    /// `(feature, 0-based bin)` tuples covered by the rules.
    #[serde(default)]
    pub tuples: Vec<(usize, usize)>,
    #[serde(default)]
    pub rules: Vec<RuleSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

impl CellRecord {
    pub fn ok(&self) -> bool {
        self.error.is_none()
    }
}

pub fn run_cell(ds: &Dataset, strategy: Strategy, split_index: usize, split: &Split, ctx: &CellContext) -> CellRecord {
    let mut rec = CellRecord {
        dataset: ds.schema().name.clone(),
        strategy: strategy.name(),
        split: split_index,
        f1: None,
        param: None,
        complexity: None,
        n_rules: None,
        tuples: Vec::new(),
        rules: Vec::new(),
        error: None,
    };
    let result = (|| -> Result<()> {
        let (fitted, outcome) = fit_cell(ds, strategy, split_index, split, ctx)?;
        let test = ds.subset(&split.test);
        let pred = fitted.predict(&test)?;
        rec.f1 = Some(weighted_f1(test.labels(), &pred, ds.n_classes())?);
        rec.param = Some(outcome.value);
        rec.complexity = Some(model_complexity(&fitted.model));
        if let Some(rules) = &fitted.prepared.rules {
            rec.n_rules = Some(rules.len());
            let tuples: BTreeSet<(usize, usize)> = rules.iter().flat_map(|r| r.level_tuples()).collect();
            rec.tuples = tuples.into_iter().collect();
            rec.rules = rules.iter().map(|r| RuleSummary::of(r, ds.schema(), &fitted.prepared.bins)).collect();
        }
        Ok(())
    })();
    if let Err(e) = result {
        rec.error = Some(e.to_string());
    }
    rec
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub samples: usize,
    pub features: usize,
    pub class_counts: Vec<(String, usize)>,
    pub missing: usize,
}

impl DatasetInfo {
    pub fn of(ds: &Dataset) -> Self {
        DatasetInfo {
            name: ds.schema().name.clone(),
            samples: ds.n_samples(),
            features: ds.n_features(),
            class_counts: ds.schema().classes.iter().cloned().zip(ds.class_counts()).collect(),
            missing: ds.missing_count(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub seed: u64,
    pub config_hash: String,
    pub config_text: String,
    pub datasets: Vec<DatasetInfo>,
    pub records: Vec<CellRecord>,
}

/// Runs every configured cell. `jobs` bounds the worker threads; results do
/// not depend on it.
pub fn run_benchmark(cfg: &RunConfig, jobs: usize) -> Result<BenchmarkReport> {
    cfg.validate_files()?;
    let datasets: Vec<Dataset> = cfg.datasets.iter().map(|d| cfg.load_dataset(d)).collect::<Result<_>>()?;
    let ctx = CellContext::from_config(cfg);
    let mut cells = Vec::new();
    for (d, ds) in datasets.iter().enumerate() {
        let seed = derive_seed(cfg.seed, &format!("split/{}", cfg.datasets[d]), &[]);
        let plan = stratified_split(ds.labels(), ds.n_classes(), cfg.test_fraction, cfg.splits, seed)?;
        for &s in &cfg.strategies {
            for (i, split) in plan.splits.iter().enumerate() {
                cells.push((d, s, i, split.clone()));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let records: Vec<CellRecord> = pool.install(|| {
        cells
            .par_iter()
            .map(|(d, s, i, split)| {
                let mut rec = run_cell(&datasets[*d], *s, *i, split, &ctx);
                rec.dataset = cfg.datasets[*d].clone();
                rec
            })
            .collect()
    });
    Ok(BenchmarkReport {
        seed: cfg.seed,
        config_hash: cfg.hash(),
        config_text: cfg.canonical_text(),
        datasets: datasets.iter().map(DatasetInfo::of).collect(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_selection_rules() {
        assert_eq!(select_best(&[vec![0.7, 0.8]]), 0);
        assert_eq!(select_best(&[vec![0.5, 0.6, 0.4], vec![0.9, 0.7, 0.5], vec![0.1, 0.2, 0.3]]), 1);
        assert_eq!(select_best(&[vec![0.5, 0.5], vec![0.5, 0.5], vec![0.5, 0.5]]), 0);
    }
}
