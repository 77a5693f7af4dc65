use super::Condition;

/// `k(k+1)/2` contiguous intervals.
pub fn interval_count(k: usize) -> usize {
    k * (k + 1) / 2
}

/// `2^k - 1` non-empty subsets.
pub fn subset_count(k: usize) -> usize {
    (1usize << k) - 1
}

/// Univariate candidates of one feature with `k` levels: every contiguous
/// bin interval for a continuous feature, every non-empty category subset
/// for a categorical one. Ordered by `(lo, hi)` or by subset bitmask.
pub fn enumerate_candidates_1d(feature: usize, continuous: bool, k: usize) -> Vec<Condition> {
    if continuous {
        let mut out = Vec::with_capacity(interval_count(k));
        for lo in 0..k {
            for hi in lo..k {
                out.push(Condition::interval(feature, lo, hi));
            }
        }
        out
    } else {
        assert!(k <= 24, "categorical feature with {k} levels is too wide for subset enumeration");
        (1u64..(1u64 << k))
            .map(|mask| Condition {
                feature,
                constraint: super::Constraint::Categories(mask),
            })
            .collect()
    }
}

/// Cartesian product of per-feature candidate lists, first feature varying
/// slowest.
pub fn enumerate_candidates_multi(per_feature: &[Vec<Condition>]) -> Vec<Vec<Condition>> {
    let mut out: Vec<Vec<Condition>> = vec![Vec::new()];
    for list in per_feature {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for c in list {
                let mut t = prefix.clone();
                t.push(*c);
                next.push(t);
            }
        }
        out = next;
    }
    if per_feature.is_empty() {
        out.clear();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn counts_match_brute_force() {
        for k in 1..=6 {
            // brute force: every (lo, hi) pair that is contiguous
            let mut brute = 0;
            for a in 0..k {
                for b in 0..k {
                    if a <= b {
                        brute += 1;
                    }
                }
            }
            let ints = enumerate_candidates_1d(0, true, k);
            assert_eq!(ints.len(), brute);
            assert_eq!(ints.len(), interval_count(k));
            let uniq: BTreeSet<_> = ints.iter().map(|c| c.levels()).collect();
            assert_eq!(uniq.len(), ints.len());

            // brute force: every level pattern with at least one member
            let mut subsets = BTreeSet::new();
            for pattern in 0..(1u32 << k) {
                let levels: Vec<usize> = (0..k).filter(|b| pattern >> b & 1 == 1).collect();
                if !levels.is_empty() {
                    subsets.insert(levels);
                }
            }
            let cats = enumerate_candidates_1d(0, false, k);
            assert_eq!(cats.len(), subsets.len());
            assert_eq!(cats.len(), subset_count(k));
            let ours: BTreeSet<_> = cats.iter().map(|c| c.levels()).collect();
            assert_eq!(ours, subsets);
        }
    }

    #[test]
    fn fixed_counts() {
        assert_eq!(enumerate_candidates_1d(0, true, 10).len(), 55);
        assert_eq!(enumerate_candidates_1d(0, true, 1).len(), 1);
        assert_eq!(enumerate_candidates_1d(3, false, 3).len(), 7);
    }

    #[test]
    fn product_sizes() {
        let a = enumerate_candidates_1d(0, true, 10);
        let b = enumerate_candidates_1d(1, true, 10);
        assert_eq!(enumerate_candidates_multi(&[a.clone(), b]).len(), 3025);
        let c = enumerate_candidates_1d(0, true, 2);
        let d = enumerate_candidates_1d(1, false, 2);
        assert_eq!(enumerate_candidates_multi(&[c, d]).len(), 9);
        let single = enumerate_candidates_multi(&[a.clone()]);
        assert_eq!(single, a.iter().map(|c| vec![*c]).collect::<Vec<_>>());
    }
}
