use rayon::prelude::*;

use super::enumerate::{enumerate_candidates_1d, enumerate_candidates_multi};
use super::prune::prune_nested;
use super::score::{select_rules, size_threshold, stats_from_counts};
use super::{Condition, Rule, RuleSet};
use crate::data::BinnedDataset;
use crate::error::{Error, Result};

/// Denominator of the z-score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ZVariant {
    /// `sqrt(p (1 - p0))`
    #[default]
    AsPrinted,
    /// `sqrt(p0 (1 - p0))`
    Standard,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeThreshold {
    /// `samples / bins * class share`, computed per target class.
    PerClass,
    /// Same minimum class count for every class.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MiningConfig {
    pub max_dimension: usize,
    pub z_min: f64,
    /// Bin count used by the size threshold formula.
    pub n_bins: usize,
    pub size_threshold: SizeThreshold,
    pub z_variant: ZVariant,
}

impl Default for MiningConfig {
    fn default() -> Self {
        MiningConfig {
            max_dimension: 1,
            z_min: 1.96,
            n_bins: 10,
            size_threshold: SizeThreshold::PerClass,
            z_variant: ZVariant::AsPrinted,
        }
    }
}

impl MiningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=2).contains(&self.max_dimension) {
            return Err(Error::Config(format!("max_dimension must be 1 or 2, got {}", self.max_dimension)));
        }
        if !(self.z_min > 0.0) {
            return Err(Error::Config(format!("z_min must be positive, got {}", self.z_min)));
        }
        if self.n_bins == 0 {
            return Err(Error::Config("n_bins must be positive".into()));
        }
        Ok(())
    }

    pub fn class_thresholds(&self, data: &BinnedDataset) -> Vec<f64> {
        let n = data.n_samples();
        data.class_counts()
            .iter()
            .map(|&c| match self.size_threshold {
                SizeThreshold::PerClass => size_threshold(n, self.n_bins, c as f64 / n as f64),
                SizeThreshold::Fixed(t) => t,
            })
            .collect()
    }
}

fn combinations(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for f in start..n {
            cur.push(f);
            rec(f + 1, n, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, d, &mut Vec::with_capacity(d), &mut out);
    out
}

/// Joint (levels x class) histogram of a feature tuple.
struct JointHistogram {
    strides: Vec<usize>,
    n_classes: usize,
    counts: Vec<usize>,
}

impl JointHistogram {
    fn build(data: &BinnedDataset, features: &[usize]) -> Self {
        let mut strides = vec![0; features.len()];
        let mut cells = 1;
        for (j, &f) in features.iter().enumerate().rev() {
            strides[j] = cells;
            cells *= data.levels(f);
        }
        let n_classes = data.n_classes();
        let mut counts = vec![0; cells * n_classes];
        for (i, &y) in data.labels().iter().enumerate() {
            let cell: usize = features.iter().zip(&strides).map(|(&f, s)| data.code(f, i) * s).sum();
            counts[cell * n_classes + y] += 1;
        }
        JointHistogram {
            strides,
            n_classes,
            counts,
        }
    }

    /// Per-class counts of samples admitted by every condition.
    fn class_counts(&self, conditions: &[Condition], out: &mut [usize]) {
        out.iter_mut().for_each(|c| *c = 0);
        let levels: Vec<Vec<usize>> = conditions.iter().map(Condition::levels).collect();
        let mut idx = vec![0usize; levels.len()];
        loop {
            let cell: usize = idx.iter().zip(&levels).zip(&self.strides).map(|((&i, l), s)| l[i] * s).sum();
            let base = cell * self.n_classes;
            for (o, c) in out.iter_mut().zip(&self.counts[base..base + self.n_classes]) {
                *o += c;
            }
            let mut j = levels.len();
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                idx[j] += 1;
                if idx[j] < levels[j].len() {
                    break;
                }
                idx[j] = 0;
            }
        }
    }
}

fn mine_tuple(data: &BinnedDataset, features: &[usize], config: &MiningConfig, thresholds: &[f64], prevalence: &[f64]) -> Vec<Rule> {
    let hist = JointHistogram::build(data, features);
    let per_feature: Vec<Vec<Condition>> = features
        .iter()
        .map(|&f| enumerate_candidates_1d(f, data.is_continuous(f), data.levels(f)))
        .collect();
    let candidates = enumerate_candidates_multi(&per_feature);
    let n_classes = data.n_classes();
    let mut per_class: Vec<Vec<Rule>> = vec![Vec::new(); n_classes];
    let mut counts = vec![0usize; n_classes];
    for conds in candidates {
        hist.class_counts(&conds, &mut counts);
        let n: usize = counts.iter().sum();
        for (class, rules) in per_class.iter_mut().enumerate() {
            let stats = stats_from_counts(n, counts[class], prevalence[class], config.z_variant);
            if stats.scorable() {
                rules.push(Rule::new(conds.clone(), class, stats));
            }
        }
    }
    per_class
        .into_iter()
        .enumerate()
        .flat_map(|(class, rules)| prune_nested(select_rules(rules, config.z_min, thresholds[class])))
        .collect()
}

/// Exhaustive rule mining over every feature tuple of dimension 1 up to
/// `max_dimension`, with per-class size thresholds from the config.
pub fn mine(data: &BinnedDataset, config: &MiningConfig) -> Result<RuleSet> {
    let thresholds = config.class_thresholds(data);
    mine_with_thresholds(data, config, &thresholds)
}

/// Same as [`mine`] with explicit per-class minimum class counts.
pub fn mine_with_thresholds(data: &BinnedDataset, config: &MiningConfig, thresholds: &[f64]) -> Result<RuleSet> {
    config.validate()?;
    if thresholds.len() != data.n_classes() {
        return Err(Error::Dimension {
            expected: data.n_classes(),
            got: thresholds.len(),
        });
    }
    let n = data.n_samples() as f64;
    let prevalence: Vec<f64> = data.class_counts().iter().map(|&c| c as f64 / n).collect();
    let tuples: Vec<Vec<usize>> = (1..=config.max_dimension.min(data.n_features()))
        .flat_map(|d| combinations(data.n_features(), d))
        .collect();
    let rules: Vec<Rule> = tuples
        .par_iter()
        .map(|t| mine_tuple(data, t, config, thresholds, &prevalence))
        .flatten_iter()
        .collect();
    Ok(RuleSet::from_rules(data.n_classes(), rules))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, FeatureSpec};
    use std::sync::Arc;

    fn binned(features: Vec<FeatureSpec>, levels: Vec<usize>, codes: Vec<Vec<u16>>, labels: Vec<usize>) -> BinnedDataset {
        let schema = FeatureSchema::new("t", features, "y", vec!["a".into(), "b".into()]).unwrap();
        BinnedDataset::new(Arc::new(schema), levels, codes, labels).unwrap()
    }

    #[test]
    fn perfectly_separating_binary_feature() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let codes: Vec<u16> = labels.iter().map(|&y| y as u16).collect();
        let data = binned(vec![FeatureSpec::categorical("f", ["0", "1"])], vec![2], vec![codes], labels);
        let rs = mine(&data, &MiningConfig::default()).unwrap();
        assert_eq!(rs.len(), 2);
        for class in 0..2 {
            let r = &rs.class_rules(class)[0];
            assert_eq!(r.stats.p, 1.0);
            assert_eq!(r.conditions[0].levels(), vec![class]);
        }
    }

    #[test]
    fn independent_labels_give_no_rules() {
        // every level holds exactly the same class mix
        let mut codes = Vec::new();
        let mut labels = Vec::new();
        for level in 0..4u16 {
            for j in 0..10 {
                codes.push(level);
                labels.push(j % 2);
            }
        }
        let data = binned(vec![FeatureSpec::continuous("x")], vec![4], vec![codes], labels);
        assert!(mine(&data, &MiningConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn rejects_bad_config() {
        let data = binned(vec![FeatureSpec::continuous("x")], vec![1], vec![vec![0, 0]], vec![0, 1]);
        let cfg = MiningConfig {
            max_dimension: 3,
            ..MiningConfig::default()
        };
        assert!(mine(&data, &cfg).is_err());
        let cfg = MiningConfig {
            z_min: 0.0,
            ..MiningConfig::default()
        };
        assert!(mine(&data, &cfg).is_err());
    }

    #[test]
    fn combinations_enumerate_tuples() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(3, 1), vec![vec![0], vec![1], vec![2]]);
    }
}
