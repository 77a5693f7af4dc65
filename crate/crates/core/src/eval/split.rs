//! Stratified train/test splits and stratified k-fold partitions.

use rand::seq::SliceRandom;

use crate::data::class_counts;
use crate::error::{Error, Result};
use crate::rng::derive_rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub splits: Vec<Split>,
    pub test_fraction: f64,
    pub seed: u64,
}

fn by_class(labels: &[usize], n_classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); n_classes];
    for (i, &c) in labels.iter().enumerate() {
        groups[c].push(i);
    }
    groups
}

/// `n_repeats` independent splits. Within each class the indices are
/// shuffled and `round(test_fraction * count)` of them go to the test set.
pub fn stratified_split(labels: &[usize], n_classes: usize, test_fraction: f64, n_repeats: usize, seed: u64) -> Result<SplitPlan> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!("test fraction must lie in (0, 1), got {test_fraction}")));
    }
    if let Some((c, _)) = class_counts(labels, n_classes).iter().enumerate().find(|(_, &n)| n == 1) {
        return Err(Error::Data(format!("class {c} has a single sample and cannot be split")));
    }
    let groups = by_class(labels, n_classes);
    let splits = (0..n_repeats)
        .map(|r| {
            let mut rng = derive_rng(seed, "split", &[r as u64]);
            let mut train = Vec::new();
            let mut test = Vec::new();
            for g in &groups {
                let mut idx = g.clone();
                idx.shuffle(&mut rng);
                let n_test = ((g.len() as f64 * test_fraction).round() as usize).min(g.len().saturating_sub(1));
                test.extend_from_slice(&idx[..n_test]);
                train.extend_from_slice(&idx[n_test..]);
            }
            train.sort_unstable();
            test.sort_unstable();
            Split { train, test }
        })
        .collect();
    Ok(SplitPlan {
        splits,
        test_fraction,
        seed,
    })
}

/// `k` folds over positions `0..labels.len()`; each class is dealt round
/// robin after a seeded shuffle, so every fold holds every class.
pub fn stratified_kfold(labels: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Split>> {
    if k < 2 {
        return Err(Error::Config(format!("need at least 2 folds, got {k}")));
    }
    if let Some((c, &n)) = class_counts(labels, n_classes).iter().enumerate().find(|(_, &n)| n > 0 && n < k) {
        return Err(Error::Data(format!("class {c} has {n} training samples, fewer than {k} folds")));
    }
    let mut rng = derive_rng(seed, "kfold", &[]);
    let mut fold_of = vec![0usize; labels.len()];
    for g in by_class(labels, n_classes) {
        let mut idx = g;
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            fold_of[i] = pos % k;
        }
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..labels.len()).partition(|&i| fold_of[i] == f);
            Split { train, test }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wdbc_sized_split() {
        let labels: Vec<usize> = (0..569).map(|i| usize::from(i >= 212)).collect();
        let plan = stratified_split(&labels, 2, 0.3, 5, 4).unwrap();
        for s in &plan.splits {
            assert!((s.test.len() as i64 - 171).abs() <= 1);
            assert_eq!(s.train.len() + s.test.len(), 569);
            let mut all: Vec<usize> = s.train.iter().chain(&s.test).copied().collect();
            all.sort_unstable();
            assert_eq!(all, (0..569).collect::<Vec<_>>());
            for (c, &count) in [212usize, 357].iter().enumerate() {
                let t = s.test.iter().filter(|&&i| labels[i] == c).count() as f64;
                assert!((t - 0.3 * count as f64).abs() <= 1.0);
            }
        }
        assert_eq!(plan, stratified_split(&labels, 2, 0.3, 5, 4).unwrap());
        assert_ne!(plan.splits[0], plan.splits[1]);
    }

    #[test]
    fn invalid_plans() {
        let labels = vec![0, 0, 1, 1];
        assert!(stratified_split(&labels, 2, 0.0, 5, 1).is_err());
        assert!(stratified_split(&[0, 0, 1], 2, 0.3, 5, 1).is_err());
    }

    #[test]
    fn folds_cover_once_and_keep_classes() {
        let labels: Vec<usize> = (0..53).map(|i| i % 3).collect();
        let folds = stratified_kfold(&labels, 3, 5, 2).unwrap();
        let mut seen = vec![0; 53];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
            }
            for c in 0..3 {
                assert!(f.test.iter().any(|&i| labels[i] == c));
                assert!(f.train.iter().any(|&i| labels[i] == c));
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        assert!(stratified_kfold(&[0, 0, 0, 1, 1, 1, 1, 1], 2, 5, 2).is_err());
    }
}
