use super::mine::ZVariant;
use super::{Condition, Rule, RuleStats};
use crate::data::BinnedDataset;

/// Over-concentration z-score of a rule with support `n`, in-rule class
/// proportion `p` and population prevalence `p0`.
///
/// `AsPrinted` uses `sqrt(n) (p - p0) / sqrt(p (1 - p0))`; `Standard` the
/// one-proportion test denominator `sqrt(p0 (1 - p0))`. Rules with `n = 0`
/// or `p = 0` get `-inf`.
pub fn z_score(n: usize, p: f64, p0: f64, variant: ZVariant) -> f64 {
    if n == 0 || p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let num = p - p0;
    if num == 0.0 {
        return 0.0;
    }
    let denom = match variant {
        ZVariant::AsPrinted => (p * (1.0 - p0)).sqrt(),
        ZVariant::Standard => (p0 * (1.0 - p0)).sqrt(),
    };
    if denom == 0.0 {
        return f64::NEG_INFINITY;
    }
    (n as f64).sqrt() * num / denom
}

pub fn stats_from_counts(n: usize, class_count: usize, p0: f64, variant: ZVariant) -> RuleStats {
    let p = if n == 0 { 0.0 } else { class_count as f64 / n as f64 };
    RuleStats {
        n,
        class_count,
        p,
        p0,
        z: z_score(n, p, p0, variant),
    }
}

/// Statistics of `conditions` for `target_class` by direct membership
/// counting over the samples.
pub fn score_rule(conditions: &[Condition], target_class: usize, data: &BinnedDataset, variant: ZVariant) -> RuleStats {
    let labels = data.labels();
    let total = labels.len();
    let prevalence = labels.iter().filter(|&&y| y == target_class).count();
    let (mut n, mut hit) = (0usize, 0usize);
    for (i, &y) in labels.iter().enumerate() {
        if conditions.iter().all(|c| c.admits(data.code(c.feature, i))) {
            n += 1;
            if y == target_class {
                hit += 1;
            }
        }
    }
    stats_from_counts(n, hit, prevalence as f64 / total as f64, variant)
}

/// Minimum in-rule class size: `samples / bins * class share`.
pub fn size_threshold(n_samples: usize, n_bins: usize, class_share: f64) -> f64 {
    n_samples as f64 / n_bins as f64 * class_share
}

/// Keeps rules with `z >= z_min` and `class_count >= threshold`, in order.
pub fn select_rules(candidates: Vec<Rule>, z_min: f64, threshold: f64) -> Vec<Rule> {
    candidates
        .into_iter()
        .filter(|r| r.stats.scorable() && r.stats.z >= z_min && r.stats.class_count as f64 >= threshold)
        .collect()
}
