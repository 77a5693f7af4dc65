use crate::data::BinnedDataset;
use crate::error::{Error, Result};
use crate::learn::{train_cart, CodeLayout, Split, SplitTest, TreeParams};
use crate::rulemine::{score_rule, size_threshold, Condition, Constraint, Rule, RuleSet, ZVariant};

/// `ceil(samples / bins * minority share)`, at least 1.
pub fn tree_min_leaf(data: &BinnedDataset, n_bins: usize) -> usize {
    let n = data.n_samples();
    let minority = data.class_counts().into_iter().filter(|&c| c > 0).min().unwrap_or(0);
    let t = size_threshold(n, n_bins, minority as f64 / n.max(1) as f64);
    (t.ceil() as usize).max(1)
}

fn full_condition(data: &BinnedDataset, f: usize) -> Condition {
    let k = data.levels(f);
    if data.is_continuous(f) {
        Condition::interval(f, 0, k - 1)
    } else {
        Condition::categories(f, 0..k)
    }
}

/// Narrows per-feature constraints along a root-to-leaf path. A root leaf
/// becomes a full-domain condition on feature 0.
pub fn leaf_rule_conditions(data: &BinnedDataset, path: &[Split]) -> Vec<Condition> {
    let mut conds: Vec<Condition> = Vec::new();
    for s in path {
        let pos = match conds.iter().position(|c| c.feature == s.feature) {
            Some(p) => p,
            None => {
                conds.push(full_condition(data, s.feature));
                conds.len() - 1
            }
        };
        let c = &mut conds[pos];
        c.constraint = match (c.constraint, s.test, s.passed) {
            (Constraint::Interval { lo, hi }, SplitTest::LessEq(t), true) => Constraint::Interval { lo, hi: hi.min(t) },
            (Constraint::Interval { lo, hi }, SplitTest::LessEq(t), false) => Constraint::Interval { lo: lo.max(t + 1), hi },
            (Constraint::Categories(m), SplitTest::Equals(v), true) => Constraint::Categories(m & (1 << v)),
            (Constraint::Categories(m), SplitTest::Equals(v), false) => Constraint::Categories(m & !(1 << v)),
            (other, _, _) => other,
        };
    }
    if conds.is_empty() {
        conds.push(full_condition(data, 0));
    }
    conds
}

/// Grows an unweighted Gini tree on the bin codes and turns every leaf into
/// a rule for its majority class.
pub fn mine_tree_rules(data: &BinnedDataset, min_leaf: usize, variant: ZVariant) -> Result<RuleSet> {
    let n = data.n_samples();
    if min_leaf == 0 || min_leaf > n {
        return Err(Error::Data(format!("min_leaf {min_leaf} must lie in 1..={n}")));
    }
    let k = data.n_classes();
    let counts = data.class_counts();
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        let class = counts.iter().position(|&c| c > 0).unwrap_or(0);
        let conds = vec![full_condition(data, 0)];
        let stats = score_rule(&conds, class, data, variant);
        return Ok(RuleSet::from_rules(k, [Rule::new(conds, class, stats)]));
    }
    let x = crate::data::code_matrix(data);
    let layout = CodeLayout::from_binned(data);
    let params = TreeParams {
        min_leaf,
        max_features: None,
    };
    let tree = train_cart(&x, data.labels(), k, &layout, &params, None, None)?;
    let rules = tree.leaves().into_iter().map(|leaf| {
        let conds = leaf_rule_conditions(data, &leaf.path);
        let stats = score_rule(&conds, leaf.class, data, variant);
        Rule::new(conds, leaf.class, stats)
    });
    Ok(RuleSet::from_rules(k, rules))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, FeatureSpec};
    use std::sync::Arc;

    fn binned(codes: Vec<Vec<u16>>, levels: Vec<usize>, cont: &[bool], labels: Vec<usize>) -> BinnedDataset {
        let feats = cont
            .iter()
            .enumerate()
            .map(|(f, &c)| {
                if c {
                    FeatureSpec::continuous(format!("f{f}"))
                } else {
                    FeatureSpec::categorical(format!("f{f}"), (0..levels[f]).map(|l| format!("c{l}")).collect::<Vec<String>>())
                }
            })
            .collect();
        let schema = FeatureSchema::new("t", feats, "y", vec!["a".into(), "b".into(), "c".into()]).unwrap();
        BinnedDataset::new(Arc::new(schema), levels, codes, labels).unwrap()
    }

    #[test]
    fn one_threshold_gives_two_pure_rules() {
        let d = binned(vec![vec![0, 1, 2, 3, 4, 5], vec![1, 0, 1, 0, 1, 0]], vec![6, 2], &[true, false], vec![0, 0, 0, 1, 1, 1]);
        let rs = mine_tree_rules(&d, 1, ZVariant::AsPrinted).unwrap();
        assert_eq!(rs.len(), 2);
        for r in rs.iter() {
            assert_eq!(r.stats.p, 1.0);
            assert_eq!(r.conditions.len(), 1);
        }
        assert_eq!(rs.class_rules(0)[0].conditions[0], Condition::interval(0, 0, 2));
        assert_eq!(rs.class_rules(1)[0].conditions[0], Condition::interval(0, 3, 5));
    }

    #[test]
    fn pure_data_gives_one_covering_rule() {
        let d = binned(vec![vec![0, 1, 2]], vec![3], &[true], vec![1, 1, 1]);
        let rs = mine_tree_rules(&d, 1, ZVariant::AsPrinted).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.class_rules(1)[0].stats.n, 3);
    }

    #[test]
    fn leaves_partition_the_data() {
        let n = 80;
        let codes = vec![
            (0..n).map(|i| (i * 7 % 10) as u16).collect(),
            (0..n).map(|i| (i * 3 % 4) as u16).collect(),
        ];
        let labels: Vec<usize> = (0..n).map(|i| ((i * 7 % 10) / 4 + (i * 3 % 4) % 2) % 3).collect();
        let d = binned(codes, vec![10, 4], &[true, false], labels);
        let min_leaf = 3;
        let rs = mine_tree_rules(&d, min_leaf, ZVariant::AsPrinted).unwrap();
        let total: usize = rs.iter().map(|r| r.stats.n).sum();
        assert_eq!(total, n);
        for i in 0..n {
            assert_eq!(rs.iter().filter(|r| r.matches(&d, i)).count(), 1);
        }
        assert!(rs.iter().all(|r| r.stats.n >= min_leaf));
        assert!(mine_tree_rules(&d, n + 1, ZVariant::AsPrinted).is_err());
    }

    #[test]
    fn min_leaf_formula() {
        // 437 training samples with a minority share of 0.08: 3.496 -> 4
        let n = 437;
        let labels: Vec<usize> = (0..n).map(|i| if i < 35 { 1 } else { 0 }).collect();
        let d = binned(vec![vec![0; n]], vec![1], &[true], labels);
        assert_eq!(tree_min_leaf(&d, 10), 4);
    }
}
