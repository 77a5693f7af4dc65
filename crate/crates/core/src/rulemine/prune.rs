use std::cmp::Ordering;
use std::collections::BTreeMap;

use super::Rule;

/// Whether `s` removes `x` during nested-rule reduction (same class and
/// feature set assumed).
///
/// * `x` strictly inside `s` and `s.z >= x.z`: the inner rule goes.
/// * `s` strictly inside `x`, `s.z > x.z` and `x` constrains a continuous
///   feature: the covering rule goes. Purely categorical rules skip this
///   case so broader category sets survive.
pub fn dominates(s: &Rule, x: &Rule) -> bool {
    if s.conditions == x.conditions {
        return false;
    }
    (x.nested_in(s) && s.stats.z >= x.stats.z)
        || (s.nested_in(x) && s.stats.z > x.stats.z && x.has_continuous())
}

fn priority(a: &Rule, b: &Rule) -> Ordering {
    b.stats
        .z
        .total_cmp(&a.stats.z)
        .then_with(|| b.breadth().cmp(&a.breadth()))
        .then_with(|| a.canonical_cmp(b))
}

/// Reduces rules of one class so that no surviving rule is dominated by
/// another surviving rule.
///
/// A rule is removed only by a dominator that itself survives. Any
/// dominator has a strictly higher z-score or the same z-score and strictly
/// wider coverage, so processing rules in that priority order and keeping
/// each one not dominated by an already kept rule reaches the fixed point in
/// one pass. Output is canonically ordered.
pub fn prune_nested(rules: Vec<Rule>) -> Vec<Rule> {
    let mut groups: BTreeMap<Vec<usize>, Vec<Rule>> = BTreeMap::new();
    for r in rules {
        groups.entry(r.features()).or_default().push(r);
    }
    let mut out = Vec::new();
    for (_, mut group) in groups {
        group.sort_by(priority);
        let mut kept: Vec<Rule> = Vec::with_capacity(group.len());
        for r in group {
            if !kept.iter().any(|k| dominates(k, &r)) {
                kept.push(r);
            }
        }
        out.extend(kept);
    }
    out.sort_by(Rule::canonical_cmp);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rulemine::{Condition, RuleStats};

    fn interval(lo: usize, hi: usize, z: f64) -> Rule {
        Rule::new(
            vec![Condition::interval(0, lo, hi)],
            0,
            RuleStats {
                n: 10,
                class_count: 5,
                p: 0.5,
                p0: 0.2,
                z,
            },
        )
    }

    fn cats(levels: &[usize], z: f64) -> Rule {
        Rule::new(
            vec![Condition::categories(0, levels.iter().copied())],
            0,
            RuleStats {
                n: 10,
                class_count: 5,
                p: 0.5,
                p0: 0.2,
                z,
            },
        )
    }

    fn bounds(rules: &[Rule]) -> Vec<Vec<usize>> {
        rules.iter().map(|r| r.conditions[0].levels()).collect()
    }

    #[test]
    fn outer_with_higher_z_removes_inner() {
        let out = prune_nested(vec![interval(2, 3, 3.0), interval(2, 5, 4.0)]);
        assert_eq!(bounds(&out), vec![vec![2, 3, 4, 5]]);
    }

    #[test]
    fn inner_with_higher_z_removes_outer() {
        let out = prune_nested(vec![interval(2, 3, 4.0), interval(2, 5, 3.0)]);
        assert_eq!(bounds(&out), vec![vec![2, 3]]);
    }

    #[test]
    fn disjoint_rules_both_kept() {
        let out = prune_nested(vec![interval(0, 1, 4.0), interval(3, 5, 3.0)]);
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn ties_keep_the_wider_rule() {
        let out = prune_nested(vec![interval(2, 3, 3.0), interval(1, 5, 3.0)]);
        assert_eq!(bounds(&out), vec![vec![1, 2, 3, 4, 5]]);
    }

    #[test]
    fn categorical_outer_survives_a_stronger_inner() {
        let out = prune_nested(vec![cats(&[0], 5.0), cats(&[0, 1], 3.0)]);
        assert_eq!(out.len(), 2);
        let out = prune_nested(vec![cats(&[0], 3.0), cats(&[0, 1], 5.0)]);
        assert_eq!(bounds(&out), vec![vec![0, 1]]);
    }

    #[test]
    fn removed_dominator_does_not_remove_others() {
        // two disjoint inner rules inside one outer rule; the strongest
        // inner removes the outer, the weaker inner stays
        let out = prune_nested(vec![interval(0, 5, 3.0), interval(0, 1, 4.0), interval(4, 5, 2.0)]);
        assert_eq!(bounds(&out), vec![vec![0, 1], vec![4, 5]]);
    }
}
