//! Scores: class-balanced F1, Jaccard stability, model complexity.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::learn::Model;

/// F1 on a confusion matrix whose samples are weighted by
/// `n / (n_classes * count(true class))`, averaged over the true classes
/// with their weighted support, scaled to 0..100.
pub fn weighted_f1(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<f64> {
    if y_true.is_empty() {
        return Err(Error::Data("weighted F1 of an empty sample".into()));
    }
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.iter().chain(y_pred).any(|&c| c >= n_classes) {
        return Err(Error::Data("label outside the class list".into()));
    }
    let counts = crate::data::class_counts(y_true, n_classes);
    let present = counts.iter().filter(|&&c| c > 0).count() as f64;
    let n = y_true.len() as f64;
    let w: Vec<f64> = counts.iter().map(|&c| if c > 0 { n / (present * c as f64) } else { 0.0 }).collect();
    let mut conf = vec![vec![0.0; n_classes]; n_classes];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        conf[t][p] += w[t];
    }
    let mut total = 0.0;
    let mut support = 0.0;
    for c in 0..n_classes {
        let s: f64 = conf[c].iter().sum();
        if s == 0.0 {
            continue;
        }
        let tp = conf[c][c];
        let predicted: f64 = (0..n_classes).map(|t| conf[t][c]).sum();
        let precision = if predicted > 0.0 { tp / predicted } else { 0.0 };
        let recall = tp / s;
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        total += s * f1;
        support += s;
    }
    Ok(100.0 * total / support)
}

/// `|A ∩ B| / |A ∪ B|`, with two empty sets counted as identical.
pub fn jaccard<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    inter as f64 / union as f64
}

/// Mean and population standard deviation of all pairwise Jaccard indices,
/// times 100.
pub fn jaccard_stability<T: Ord>(sets: &[BTreeSet<T>]) -> (f64, f64) {
    let mut values = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            values.push(100.0 * jaccard(&sets[i], &sets[j]));
        }
    }
    mean_std(&values)
}

/// Input columns the model depends on.
pub fn model_complexity(model: &Model) -> usize {
    model.used_features().len()
}

/// Mean and population standard deviation; `(NaN, NaN)` when empty.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Median; the mean of the middle pair for even lengths.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{LinearModel, Penalty};

    #[test]
    fn f1_fixtures() {
        let y: Vec<usize> = (0..100).map(|i| usize::from(i >= 90)).collect();
        assert_eq!(weighted_f1(&y, &y, 2).unwrap(), 100.0);
        let majority = weighted_f1(&y, &[0; 100], 2).unwrap();
        assert!((majority - 100.0 / 3.0).abs() < 1e-9);
        assert!(weighted_f1(&[], &[], 2).is_err());
    }

    #[test]
    fn f1_is_label_symmetric() {
        let t = [0, 1, 2, 2, 1, 0, 0, 2, 1, 1];
        let p = [0, 2, 2, 1, 1, 0, 1, 2, 0, 1];
        let perm = [2, 0, 1];
        let tp: Vec<usize> = t.iter().map(|&c| perm[c]).collect();
        let pp: Vec<usize> = p.iter().map(|&c| perm[c]).collect();
        let a = weighted_f1(&t, &p, 3).unwrap();
        let b = weighted_f1(&tp, &pp, 3).unwrap();
        assert!((a - b).abs() < 1e-12);
        assert!(a > 0.0 && a < 100.0);
    }

    #[test]
    fn jaccard_fixtures() {
        let a: BTreeSet<(usize, usize)> = [(0, 1), (0, 2)].into();
        let b: BTreeSet<(usize, usize)> = [(0, 2), (0, 3)].into();
        let empty = BTreeSet::new();
        assert_eq!(jaccard(&a, &b), 1.0 / 3.0);
        assert_eq!(jaccard(&a, &a), 1.0);
        assert_eq!(jaccard(&a, &b), jaccard(&b, &a));
        assert_eq!(jaccard(&a, &empty), 0.0);
        assert_eq!(jaccard(&empty, &empty), 1.0);
        let same = vec![a.clone(); 5];
        assert_eq!(jaccard_stability(&same), (100.0, 0.0));
        let c: BTreeSet<(usize, usize)> = [(1, 0)].into();
        assert_eq!(jaccard_stability(&[a, c]).0, 0.0);
    }

    #[test]
    fn complexity_counts() {
        let l1 = Model::Linear(LinearModel {
            penalty: Penalty::L1,
            c: 1.0,
            n_classes: 2,
            weights: vec![vec![0.0, 0.3, 0.0]],
            intercepts: vec![0.1],
            iterations: 1,
            converged: true,
        });
        assert_eq!(model_complexity(&l1), 1);
        let l2 = Model::Linear(LinearModel {
            penalty: Penalty::L2,
            c: 1.0,
            n_classes: 2,
            weights: vec![vec![0.0; 30]],
            intercepts: vec![0.0],
            iterations: 1,
            converged: true,
        });
        assert_eq!(model_complexity(&l2), 30);
        assert_eq!(median(&[3.0, 1.0, 2.0, 10.0]), 2.5);
    }
}
