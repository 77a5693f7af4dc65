//! Exhaustive supervised rule mining.
//!
//! For every tuple of up to `max_dimension` features and every class, all
//! candidate conditions are enumerated (contiguous bin intervals for
//! continuous features, non-empty category subsets for categorical ones),
//! scored by the class over-concentration z-score, filtered by z-score and
//! in-rule class size, and finally reduced so that nested rules on the same
//! features keep only the most discriminative one.

mod enumerate;
mod io;
mod mine;
mod prune;
mod score;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

pub use enumerate::{enumerate_candidates_1d, enumerate_candidates_multi, interval_count, subset_count};
pub use io::{read_rules, rules_from_jsonl, rules_to_jsonl, write_rules};
pub use mine::{mine, mine_with_thresholds, MiningConfig, SizeThreshold, ZVariant};
pub use prune::{dominates, prune_nested};
pub use score::{score_rule, select_rules, size_threshold, stats_from_counts, z_score};

use crate::data::{BinMap, BinnedDataset, FeatureSchema};

/// Per-feature constraint on bin codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// Contiguous bins `lo..=hi` (0-based) of a continuous feature.
    Interval { lo: u16, hi: u16 },
    /// Bitmask of allowed categories.
    Categories(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Condition {
    pub feature: usize,
    pub constraint: Constraint,
}

impl Condition {
    pub fn interval(feature: usize, lo: usize, hi: usize) -> Self {
        debug_assert!(lo <= hi);
        Condition {
            feature,
            constraint: Constraint::Interval {
                lo: lo as u16,
                hi: hi as u16,
            },
        }
    }

    pub fn categories(feature: usize, cats: impl IntoIterator<Item = usize>) -> Self {
        let mask = cats.into_iter().fold(0u64, |m, c| m | (1 << c));
        debug_assert!(mask != 0);
        Condition {
            feature,
            constraint: Constraint::Categories(mask),
        }
    }

    #[inline]
    pub fn admits(&self, level: usize) -> bool {
        match self.constraint {
            Constraint::Interval { lo, hi } => (lo as usize..=hi as usize).contains(&level),
            Constraint::Categories(mask) => level < 64 && mask & (1 << level) != 0,
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.constraint, Constraint::Interval { .. })
    }

    /// Levels admitted by the condition, ascending.
    pub fn levels(&self) -> Vec<usize> {
        match self.constraint {
            Constraint::Interval { lo, hi } => (lo as usize..=hi as usize).collect(),
            Constraint::Categories(mask) => (0..64).filter(|b| mask & (1 << b) != 0).collect(),
        }
    }

    pub fn level_count(&self) -> usize {
        match self.constraint {
            Constraint::Interval { lo, hi } => (hi - lo) as usize + 1,
            Constraint::Categories(mask) => mask.count_ones() as usize,
        }
    }

    /// Set containment of admitted levels (`self ⊆ other`), same feature only.
    pub fn within(&self, other: &Condition) -> bool {
        if self.feature != other.feature {
            return false;
        }
        match (self.constraint, other.constraint) {
            (Constraint::Interval { lo: a, hi: b }, Constraint::Interval { lo: c, hi: d }) => c <= a && b <= d,
            (Constraint::Categories(m), Constraint::Categories(n)) => m & !n == 0,
            _ => false,
        }
    }

    /// Human readable form using schema names and, for intervals, value bounds.
    pub fn describe(&self, schema: &FeatureSchema, bins: Option<&BinMap>) -> String {
        let spec = &schema.features[self.feature];
        match self.constraint {
            Constraint::Interval { lo, hi } => match bins.and_then(|b| {
                Some((b.interval(self.feature, lo as usize)?.0, b.interval(self.feature, hi as usize)?.1))
            }) {
                Some((a, z)) => format!("{} in [{a}, {z}[", spec.name),
                None => format!("{} in bins {}..{}", spec.name, lo + 1, hi + 1),
            },
            Constraint::Categories(_) => {
                let names: Vec<String> = match &spec.kind {
                    crate::data::FeatureKind::Categorical(c) => self.levels().iter().map(|&l| c[l].clone()).collect(),
                    crate::data::FeatureKind::Continuous => self.levels().iter().map(|l| (l + 1).to_string()).collect(),
                };
                format!("{} = {{{}}}", spec.name, names.join(", "))
            }
        }
    }

    fn sort_key(&self) -> (usize, u8, u64, u64) {
        match self.constraint {
            Constraint::Interval { lo, hi } => (self.feature, 0, lo as u64, hi as u64),
            Constraint::Categories(m) => (self.feature, 1, m, 0),
        }
    }
}

impl Ord for Condition {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Condition {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Quality statistics of a rule on the mining data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuleStats {
    /// Samples satisfying every condition.
    pub n: usize,
    /// Samples of the target class among them.
    pub class_count: usize,
    pub p: f64,
    pub p0: f64,
    /// `-inf` when the rule is unscorable (`n = 0` or `p = 0`).
    #[serde(with = "z_repr")]
    pub z: f64,
}

impl RuleStats {
    pub fn scorable(&self) -> bool {
        self.z.is_finite()
    }
}

mod z_repr {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(z: &f64, s: S) -> Result<S::Ok, S::Error> {
        if z.is_finite() {
            s.serialize_f64(*z)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    /// Conditions on distinct features, sorted by feature id.
    pub conditions: Vec<Condition>,
    pub target_class: usize,
    pub stats: RuleStats,
}

impl Rule {
    pub fn new(mut conditions: Vec<Condition>, target_class: usize, stats: RuleStats) -> Self {
        conditions.sort();
        Rule {
            conditions,
            target_class,
            stats,
        }
    }

    pub fn dimension(&self) -> usize {
        self.conditions.len()
    }

    pub fn features(&self) -> Vec<usize> {
        self.conditions.iter().map(|c| c.feature).collect()
    }

    pub fn has_continuous(&self) -> bool {
        self.conditions.iter().any(Condition::is_continuous)
    }

    pub fn is_continuous_only(&self) -> bool {
        self.conditions.iter().all(Condition::is_continuous)
    }

    pub fn is_categorical_only(&self) -> bool {
        !self.has_continuous()
    }

    pub fn matches(&self, data: &BinnedDataset, i: usize) -> bool {
        self.conditions.iter().all(|c| c.admits(data.code(c.feature, i)))
    }

    /// Covered (feature, level) pairs.
    pub fn level_tuples(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.conditions
            .iter()
            .flat_map(|c| c.levels().into_iter().map(move |l| (c.feature, l)))
    }

    /// `self ⊆ other` condition-wise on the same feature set.
    pub fn nested_in(&self, other: &Rule) -> bool {
        self.conditions.len() == other.conditions.len()
            && self.conditions.iter().zip(&other.conditions).all(|(a, b)| a.within(b))
    }

    /// Total admitted levels, used to order nested rules by coverage.
    pub fn breadth(&self) -> usize {
        self.conditions.iter().map(Condition::level_count).sum()
    }

    pub fn canonical_cmp(&self, other: &Rule) -> Ordering {
        self.target_class
            .cmp(&other.target_class)
            .then_with(|| self.features().cmp(&other.features()))
            .then_with(|| self.conditions.cmp(&other.conditions))
    }

    pub fn describe(&self, schema: &FeatureSchema, bins: Option<&BinMap>) -> String {
        let conds: Vec<String> = self.conditions.iter().map(|c| c.describe(schema, bins)).collect();
        format!("{} => {}", conds.join(" AND "), schema.classes[self.target_class])
    }
}

/// Rules grouped by target class, canonically ordered within each class.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RuleSet {
    per_class: Vec<Vec<Rule>>,
}

impl RuleSet {
    pub fn new(n_classes: usize) -> Self {
        RuleSet {
            per_class: vec![Vec::new(); n_classes],
        }
    }

    pub fn from_rules(n_classes: usize, rules: impl IntoIterator<Item = Rule>) -> Self {
        let mut set = RuleSet::new(n_classes);
        for r in rules {
            let c = r.target_class;
            set.per_class[c].push(r);
        }
        set.canonicalize();
        set
    }

    pub fn canonicalize(&mut self) {
        for rules in &mut self.per_class {
            rules.sort_by(Rule::canonical_cmp);
            rules.dedup_by(|a, b| a.conditions == b.conditions);
        }
    }

    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn class_rules(&self, class: usize) -> &[Rule] {
        &self.per_class[class]
    }

    /// All rules, class by class in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = &Rule> {
        self.per_class.iter().flatten()
    }

    pub fn len(&self) -> usize {
        self.per_class.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
