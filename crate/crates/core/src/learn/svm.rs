//! Linear SVM trained in the primal by averaged stochastic subgradient
//! descent. The bias is an extra constant feature and is regularized along
//! with the weights. Steps follow `eta0 / (1 + lambda eta0 t)^(3/4)` with
//! `eta0` set from the largest weighted row norm, capped by the Pegasos
//! step `1 / (lambda t)`; the plain Pegasos schedule alone crawls when C is
//! large. Iterates are averaged from the second epoch on, and iterates stay
//! in the ball that holds the optimum. At every epoch boundary the averaged iterate replaces the returned
//! parameters only if it lowers the objective, so the reported trace never
//! increases.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{check_training_input, ovr_tasks, LinearModel, Penalty, MAX_EPOCHS, PARAM_TOL};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::rng::derive_rng;

/// `lambda/2 |theta|^2 + (1/n) sum_i c_i max(0, 1 - t_i (w.x_i + b))`, with
/// `theta = [w, b]`. For `lambda = 1/(nC)` this is the usual
/// `1/2 |theta|^2 + C sum c_i hinge_i` scaled by `1/(nC)`.
pub fn hinge_objective(x: &Matrix, targets: &[f64], weights: &[f64], theta: &[f64], lambda: f64) -> f64 {
    let n = x.rows();
    let reg = 0.5 * lambda * theta.iter().map(|v| v * v).sum::<f64>();
    reg + hinge_loss(x, targets, weights, theta) / n as f64
}

/// Weighted hinge loss summed over samples.
pub fn hinge_loss(x: &Matrix, targets: &[f64], weights: &[f64], theta: &[f64]) -> f64 {
    let d = x.cols();
    (0..x.rows())
        .map(|i| {
            let m = targets[i] * (dot(&theta[..d], x.row(i)) + theta[d]);
            weights[i] * (1.0 - m).max(0.0)
        })
        .sum()
}

#[derive(Debug, Clone)]
pub struct PegasosFit {
    /// Best averaged parameters `[w, b]` seen at an epoch boundary.
    pub theta: Vec<f64>,
    /// Objective of the returned parameters after each epoch.
    pub trace: Vec<f64>,
    /// Objective of the raw averaged iterate after each epoch.
    pub raw_trace: Vec<f64>,
    pub epochs: usize,
    pub converged: bool,
}

/// One binary run; every epoch visits the samples in a fresh seeded
/// permutation.
pub fn pegasos(x: &Matrix, targets: &[f64], weights: &[f64], c: f64, seed: u64, task: u64) -> PegasosFit {
    let n = x.rows();
    let d = x.cols();
    let lambda = 1.0 / (n as f64 * c);
    let mean_w = weights.iter().sum::<f64>() / n as f64;
    let radius = (2.0 * mean_w / lambda).sqrt();
    let eta0 = 1.0
        / (0..n)
            .map(|i| weights[i] * (1.0 + x.row(i).iter().map(|v| v * v).sum::<f64>()))
            .fold(1e-12, f64::max);
    let mut rng = derive_rng(seed, "pegasos", &[task]);
    let mut order: Vec<usize> = (0..n).collect();
    let mut theta = vec![0.0; d + 1];
    let mut avg = vec![0.0; d + 1];
    let mut best = avg.clone();
    let mut best_obj = f64::INFINITY;
    let mut trace = Vec::new();
    let mut raw_trace = Vec::new();
    let mut step = 0u64;
    for epoch in 1..=MAX_EPOCHS {
        order.shuffle(&mut rng);
        let before = avg.clone();
        for &i in &order {
            step += 1;
            let t = step as f64;
            let eta = (eta0 / (1.0 + lambda * eta0 * t).powf(0.75)).min(1.0 / (lambda * t));
            let row = x.row(i);
            let margin = targets[i] * (dot(&theta[..d], row) + theta[d]);
            let shrink = 1.0 - eta * lambda;
            for v in theta.iter_mut() {
                *v *= shrink;
            }
            if margin < 1.0 {
                let g = eta * weights[i] * targets[i];
                for (v, xj) in theta[..d].iter_mut().zip(row) {
                    *v += g * xj;
                }
                theta[d] += g;
            }
            let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                for v in theta.iter_mut() {
                    *v *= s;
                }
            }
            if step <= n as u64 {
                avg.copy_from_slice(&theta);
            } else {
                let a = 1.0 / (step - n as u64) as f64;
                for (m, v) in avg.iter_mut().zip(&theta) {
                    *m += a * (v - *m);
                }
            }
        }
        let obj = hinge_objective(x, targets, weights, &avg, lambda);
        raw_trace.push(obj);
        if obj <= best_obj {
            best_obj = obj;
            best.copy_from_slice(&avg);
        }
        trace.push(best_obj);
        let change = avg.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = avg.iter().map(|v| v.abs()).fold(1.0, f64::max);
        if change < PARAM_TOL * scale {
            return PegasosFit {
                theta: best,
                trace,
                raw_trace,
                epochs: epoch,
                converged: true,
            };
        }
    }
    PegasosFit {
        theta: best,
        trace,
        raw_trace,
        epochs: MAX_EPOCHS,
        converged: false,
    }
}

pub fn train_linear_svm(x: &Matrix, y: &[usize], n_classes: usize, c: f64, class_w: &[f64], seed: u64) -> Result<LinearModel> {
    check_training_input(x, y, n_classes)?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Data(format!("C must be positive, got {c}")));
    }
    let weights: Vec<f64> = y.iter().map(|&k| class_w[k]).collect();
    let fits: Vec<PegasosFit> = ovr_tasks(n_classes)
        .par_iter()
        .map(|&k| {
            let targets: Vec<f64> = y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            pegasos(x, &targets, &weights, c, seed, k as u64)
        })
        .collect();
    let d = x.cols();
    Ok(LinearModel {
        penalty: Penalty::Hinge,
        c,
        n_classes,
        weights: fits.iter().map(|f| f.theta[..d].to_vec()).collect(),
        intercepts: fits.iter().map(|f| f.theta[d]).collect(),
        iterations: fits.iter().map(|f| f.epochs).max().unwrap_or(0),
        converged: fits.iter().all(|f| f.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{class_weights, Model};

    fn toy() -> (Matrix, Vec<usize>) {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![0.2, 0.8],
            vec![0.9, 0.1],
            vec![3.0, 3.0],
            vec![3.4, 2.1],
            vec![2.2, 3.9],
        ])
        .unwrap();
        (x, vec![0, 0, 0, 1, 1, 1])
    }

    #[test]
    fn separable_toy_has_zero_hinge_loss() {
        let (x, y) = toy();
        let t: Vec<f64> = y.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let fit = pegasos(&x, &t, &[1.0; 6], 100.0, 3, 0);
        assert!(hinge_loss(&x, &t, &[1.0; 6], &fit.theta) < 1e-3);
        let m = train_linear_svm(&x, &y, 2, 100.0, &class_weights(&y, 2), 3).unwrap();
        assert_eq!(Model::Linear(m).predict(&x).unwrap(), y);
    }

    #[test]
    fn averaged_objective_never_increases() {
        let x = Matrix::from_rows(&[
            vec![0.0, 0.0],
            vec![1.0, 0.4],
            vec![0.3, 1.2],
            vec![1.5, 1.4],
            vec![2.0, 0.9],
            vec![0.8, 2.1],
            vec![2.4, 2.2],
            vec![1.1, 1.0],
        ])
        .unwrap();
        let t = [-1.0, -1.0, -1.0, 1.0, 1.0, 1.0, 1.0, -1.0];
        let fit = pegasos(&x, &t, &[1.0; 8], 1.0, 9, 0);
        assert!(fit.trace.len() > 10);
        for w in fit.trace.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
        let lambda = 1.0 / 8.0;
        let last = *fit.trace.last().unwrap();
        assert_eq!(last, hinge_objective(&x, &t, &[1.0; 8], &fit.theta, lambda));
        // the raw averages settle next to the returned optimum
        let raw_last = *fit.raw_trace.last().unwrap();
        assert!(raw_last - last < 1e-3 * last.max(1.0), "{raw_last} vs {last}");
    }

    #[test]
    fn xor_is_not_linearly_separable() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let y = vec![0, 0, 1, 1];
        let m = Model::Linear(train_linear_svm(&x, &y, 2, 10.0, &class_weights(&y, 2), 1).unwrap());
        let pred = m.predict(&x).unwrap();
        let correct = pred.iter().zip(&y).filter(|(a, b)| a == b).count();
        assert!(correct <= 3);
    }
}
