use std::collections::HashSet;

use rayon::prelude::*;

use crate::data::BinnedDataset;
use crate::error::{Error, Result};
use crate::rulemine::{select_rules, size_threshold, stats_from_counts, Condition, Rule, RuleSet, ZVariant};

/// A `(feature, bin code)` pair.
pub type Item = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Itemset {
    /// Items sorted by feature, one per feature.
    pub items: Vec<Item>,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssocConfig {
    pub min_support: usize,
    /// Longest antecedent considered.
    pub max_len: usize,
    pub z_min: f64,
    pub z_variant: ZVariant,
}

/// Minority-class size threshold, rounded up to a count.
pub fn default_min_support(data: &BinnedDataset, n_bins: usize) -> usize {
    let n = data.n_samples();
    let minority = data.class_counts().into_iter().filter(|&c| c > 0).min().unwrap_or(0);
    (size_threshold(n, n_bins, minority as f64 / n.max(1) as f64).ceil() as usize).max(1)
}

type Bits = Vec<u64>;

fn and(a: &Bits, b: &Bits) -> Bits {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn popcount(a: &Bits) -> usize {
    a.iter().map(|w| w.count_ones() as usize).sum()
}

fn item_bits(data: &BinnedDataset) -> (Vec<Item>, Vec<Bits>) {
    let words = data.n_samples().div_ceil(64);
    let mut items = Vec::new();
    let mut bits = Vec::new();
    for f in 0..data.n_features() {
        let start = bits.len();
        for c in 0..data.levels(f) {
            items.push((f, c));
            bits.push(vec![0u64; words]);
        }
        for (i, &c) in data.codes(f).iter().enumerate() {
            bits[start + c as usize][i / 64] |= 1 << (i % 64);
        }
    }
    (items, bits)
}

/// Level-wise search: a k-itemset is a candidate only if all of its
/// (k-1)-subsets are frequent. Item ids are ordered by (feature, code), so
/// itemsets are kept as ascending id lists and joined on a shared prefix.
fn frequent_with_bits(data: &BinnedDataset, min_support: usize, max_len: usize) -> (Vec<Item>, Vec<(Vec<usize>, Bits)>) {
    let (items, bits) = item_bits(data);
    let mut level: Vec<(Vec<usize>, Bits)> = bits
        .into_iter()
        .enumerate()
        .filter(|(_, b)| popcount(b) >= min_support)
        .map(|(id, b)| (vec![id], b))
        .collect();
    let mut out = level.clone();
    for _ in 1..max_len {
        let known: HashSet<&[usize]> = level.iter().map(|(s, _)| s.as_slice()).collect();
        let mut joins = Vec::new();
        for a in 0..level.len() {
            for b in a + 1..level.len() {
                let (sa, sb) = (&level[a].0, &level[b].0);
                let k = sa.len();
                if sa[..k - 1] != sb[..k - 1] {
                    break;
                }
                if items[sa[k - 1]].0 == items[sb[k - 1]].0 {
                    continue;
                }
                let mut cand = sa.clone();
                cand.push(sb[k - 1]);
                let closed = (0..cand.len()).all(|drop| {
                    let sub: Vec<usize> = cand.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &v)| v).collect();
                    known.contains(sub.as_slice())
                });
                if closed {
                    joins.push((a, b, cand));
                }
            }
        }
        let next: Vec<(Vec<usize>, Bits)> = joins
            .into_par_iter()
            .filter_map(|(a, b, cand)| {
                let bits = and(&level[a].1, &level[b].1);
                (popcount(&bits) >= min_support).then_some((cand, bits))
            })
            .collect();
        if next.is_empty() {
            break;
        }
        out.extend(next.iter().cloned());
        level = next;
    }
    (items, out)
}

/// Frequent itemsets with support `>= min_support` and at most `max_len`
/// items, shortest first.
pub fn frequent_itemsets(data: &BinnedDataset, min_support: usize, max_len: usize) -> Vec<Itemset> {
    let (items, sets) = frequent_with_bits(data, min_support.max(1), max_len);
    sets.into_iter()
        .map(|(ids, bits)| Itemset {
            items: ids.iter().map(|&i| items[i]).collect(),
            support: popcount(&bits),
        })
        .collect()
}

/// Pairs every frequent itemset with every class and keeps the pairs that
/// pass the z-score and per-class size filters.
pub fn mine_assoc_rules(data: &BinnedDataset, config: &AssocConfig, class_thresholds: &[f64]) -> Result<RuleSet> {
    let k = data.n_classes();
    if class_thresholds.len() != k {
        return Err(Error::Dimension {
            expected: k,
            got: class_thresholds.len(),
        });
    }
    if config.max_len == 0 {
        return Err(Error::Config("association rules need max_len >= 1".into()));
    }
    let n = data.n_samples();
    let words = n.div_ceil(64);
    let mut class_bits = vec![vec![0u64; words]; k];
    for (i, &c) in data.labels().iter().enumerate() {
        class_bits[c][i / 64] |= 1 << (i % 64);
    }
    let counts = data.class_counts();
    let (items, sets) = frequent_with_bits(data, config.min_support.max(1), config.max_len);
    let mut per_class: Vec<Vec<Rule>> = vec![Vec::new(); k];
    for (ids, bits) in &sets {
        let support = popcount(bits);
        let conds: Vec<Condition> = ids
            .iter()
            .map(|&id| {
                let (f, c) = items[id];
                if data.is_continuous(f) {
                    Condition::interval(f, c, c)
                } else {
                    Condition::categories(f, [c])
                }
            })
            .collect();
        for (class, cb) in class_bits.iter().enumerate() {
            let hit = popcount(&and(bits, cb));
            let stats = stats_from_counts(support, hit, counts[class] as f64 / n as f64, config.z_variant);
            per_class[class].push(Rule::new(conds.clone(), class, stats));
        }
    }
    let rules = per_class
        .into_iter()
        .enumerate()
        .flat_map(|(class, cands)| select_rules(cands, config.z_min, class_thresholds[class]));
    Ok(RuleSet::from_rules(k, rules))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, FeatureSpec};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn binned(codes: Vec<Vec<u16>>, levels: Vec<usize>, labels: Vec<usize>) -> BinnedDataset {
        let feats = levels
            .iter()
            .enumerate()
            .map(|(f, &l)| FeatureSpec::categorical(format!("f{f}"), (0..l.max(2)).map(|c| format!("c{c}")).collect::<Vec<String>>()))
            .collect();
        let schema = FeatureSchema::new("t", feats, "y", vec!["a".into(), "b".into()]).unwrap();
        BinnedDataset::new(Arc::new(schema), levels, codes, labels).unwrap()
    }

    #[test]
    fn four_transaction_fixture() {
        // item A is f0 = 1, item B is f1 = 1
        let d = binned(vec![vec![1, 1, 1, 0], vec![1, 1, 0, 1]], vec![2, 2], vec![0, 1, 0, 1]);
        let sets = frequent_itemsets(&d, 2, 3);
        let got: Vec<(Vec<Item>, usize)> = sets.into_iter().map(|s| (s.items, s.support)).collect();
        assert_eq!(got, vec![(vec![(0, 1)], 3), (vec![(1, 1)], 3), (vec![(0, 1), (1, 1)], 2)]);
    }

    #[test]
    fn full_support_keeps_universal_items() {
        let d = binned(vec![vec![1, 1, 1], vec![0, 1, 0]], vec![2, 2], vec![0, 1, 0]);
        let sets = frequent_itemsets(&d, 3, 3);
        assert_eq!(sets.len(), 1);
        assert_eq!(sets[0].items, vec![(0, 1)]);
    }

    #[test]
    fn filter_matches_select_rules() {
        let d = binned(
            vec![vec![0, 0, 0, 1, 1, 1, 0, 1], vec![1, 0, 1, 0, 1, 0, 1, 0]],
            vec![2, 2],
            vec![0, 0, 0, 1, 1, 1, 0, 1],
        );
        let config = AssocConfig {
            min_support: 1,
            max_len: 2,
            z_min: 1.0,
            z_variant: ZVariant::AsPrinted,
        };
        let rs = mine_assoc_rules(&d, &config, &[2.0, 2.0]).unwrap();
        let all = mine_assoc_rules(&d, &AssocConfig { z_min: f64::NEG_INFINITY, ..config }, &[0.0, 0.0]).unwrap();
        for class in 0..2 {
            let expect = select_rules(all.class_rules(class).to_vec(), 1.0, 2.0);
            assert_eq!(rs.class_rules(class), expect.as_slice());
        }
        assert!(rs.iter().all(|r| r.conditions.iter().all(|c| c.level_count() == 1)));
    }

    fn brute_force(codes: &[Vec<u16>], levels: &[usize], min_support: usize, max_len: usize) -> Vec<(Vec<Item>, usize)> {
        let items: Vec<Item> = levels.iter().enumerate().flat_map(|(f, &l)| (0..l).map(move |c| (f, c))).collect();
        let n = codes[0].len();
        let mut out = Vec::new();
        for mask in 1u32..(1 << items.len()) {
            let set: Vec<Item> = (0..items.len()).filter(|b| mask & (1 << b) != 0).map(|b| items[b]).collect();
            if set.len() > max_len || set.windows(2).any(|w| w[0].0 == w[1].0) {
                continue;
            }
            let support = (0..n).filter(|&i| set.iter().all(|&(f, c)| codes[f][i] as usize == c)).count();
            if support >= min_support {
                out.push((set, support));
            }
        }
        out.sort();
        out
    }

    proptest! {
        #[test]
        fn apriori_matches_powerset(
            levels in proptest::collection::vec(2usize..=4, 1..=3),
            rows in proptest::collection::vec(proptest::collection::vec(0u16..4, 3), 4..30),
            min_support in 1usize..6,
        ) {
            let total: usize = levels.iter().sum();
            prop_assume!(total <= 12);
            let codes: Vec<Vec<u16>> = (0..levels.len())
                .map(|f| rows.iter().map(|r| r[f] % levels[f] as u16).collect())
                .collect();
            let labels = (0..rows.len()).map(|i| i % 2).collect();
            let d = binned(codes.clone(), levels.clone(), labels);
            let mut got: Vec<(Vec<Item>, usize)> = frequent_itemsets(&d, min_support, 3).into_iter().map(|s| (s.items, s.support)).collect();
            got.sort();
            prop_assert_eq!(got, brute_force(&codes, &levels, min_support, 3));
        }
    }
}
