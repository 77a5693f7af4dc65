//! RBF-kernel SVM solved in the dual with SMO (second-order working set
//! selection, libsvm style). Per-sample box bounds are `C * c_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training_input, ovr_tasks};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

const SMO_EPS: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelModel {
    pub n_classes: usize,
    pub c: f64,
    pub gamma: f64,
    /// Training rows that are support vectors in at least one task.
    pub support: Matrix,
    /// Per task, `alpha_i * t_i` aligned with `support`.
    pub coefs: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KernelModel {
    pub fn n_features(&self) -> usize {
        self.support.cols()
    }

    pub(crate) fn task_scores(&self, row: &[f64]) -> Vec<f64> {
        let k: Vec<f64> = (0..self.support.rows())
            .map(|s| rbf(self.gamma, self.support.row(s), row))
            .collect();
        self.coefs
            .iter()
            .zip(&self.intercepts)
            .map(|(coef, b)| coef.iter().zip(&k).map(|(a, kv)| a * kv).sum::<f64>() + b)
            .collect()
    }
}

fn rbf(gamma: f64, a: &[f64], b: &[f64]) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// `1 / (d * var(X))` over all entries, or 1 for a constant matrix.
pub fn default_gamma(x: &Matrix) -> f64 {
    let v = x.as_slice();
    if v.is_empty() || x.cols() == 0 {
        return 1.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / v.len() as f64;
    if var > 0.0 {
        1.0 / (x.cols() as f64 * var)
    } else {
        1.0
    }
}

pub(crate) struct SmoFit {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves `min 1/2 a'Qa - sum a` s.t. `0 <= a_i <= ub_i`, `t'a = 0`, with
/// `Q_ij = t_i t_j K_ij`.
pub(crate) fn smo(kernel: &Matrix, t: &[f64], ub: &[f64]) -> SmoFit {
    let n = t.len();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = (100 * n).max(10_000_000);
    let q = |i: usize, j: usize| t[i] * t[j] * kernel.get(i, j);
    let is_up = |a: &[f64], k: usize| (t[k] > 0.0 && a[k] < ub[k]) || (t[k] < 0.0 && a[k] > 0.0);
    let is_low = |a: &[f64], k: usize| (t[k] > 0.0 && a[k] > 0.0) || (t[k] < 0.0 && a[k] < ub[k]);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for k in 0..n {
            if is_up(&alpha, k) && -t[k] * grad[k] > gmax {
                gmax = -t[k] * grad[k];
                i = k;
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for k in 0..n {
            if !is_low(&alpha, k) {
                continue;
            }
            let v = -t[k] * grad[k];
            gmin = gmin.min(v);
            if i == usize::MAX {
                continue;
            }
            let b = gmax - v;
            if b > 0.0 {
                let a = kernel.get(i, i) + kernel.get(k, k) - 2.0 * kernel.get(i, k);
                let obj = -(b * b) / a.max(TAU);
                if obj < best {
                    best = obj;
                    j = k;
                }
            }
        }
        if i == usize::MAX || j == usize::MAX || gmax - gmin < SMO_EPS {
            converged = true;
            break;
        }
        iterations += 1;
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (ci, cj) = (ub[i], ub[j]);
        if t[i] != t[j] {
            let quad = (q(i, i) + q(j, j) + 2.0 * q(i, j)).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let quad = (q(i, i) + q(j, j) - 2.0 * q(i, j)).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for k in 0..n {
            grad[k] += q(k, i) * di + q(k, j) * dj;
        }
    }
    // intercept from free vectors, else the midpoint of the feasible range
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for k in 0..n {
        let yg = t[k] * grad[k];
        if alpha[k] >= ub[k] {
            if t[k] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[k] <= 0.0 {
            if t[k] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else if upper.is_finite() && lower.is_finite() {
        0.5 * (upper + lower)
    } else if upper.is_finite() {
        upper
    } else {
        lower
    };
    SmoFit {
        alpha,
        rho,
        iterations,
        converged,
    }
}

pub fn train_kernel_svm(x: &Matrix, y: &[usize], n_classes: usize, c: f64, gamma: f64, class_w: &[f64]) -> Result<KernelModel> {
    check_training_input(x, y, n_classes)?;
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Data(format!("C must be positive, got {c}")));
    }
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::Data(format!("gamma must be positive, got {gamma}")));
    }
    let n = x.rows();
    let mut kernel = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = rbf(gamma, x.row(i), x.row(j));
            kernel.set(i, j, v);
            kernel.set(j, i, v);
        }
    }
    let ub: Vec<f64> = y.iter().map(|&k| c * class_w[k]).collect();
    let fits: Vec<(Vec<f64>, SmoFit)> = ovr_tasks(n_classes)
        .par_iter()
        .map(|&k| {
            let t: Vec<f64> = y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            let fit = smo(&kernel, &t, &ub);
            (t, fit)
        })
        .collect();
    let keep: Vec<usize> = (0..n).filter(|&i| fits.iter().any(|(_, f)| f.alpha[i] > 0.0)).collect();
    Ok(KernelModel {
        n_classes,
        c,
        gamma,
        support: x.select_rows(&keep),
        coefs: fits
            .iter()
            .map(|(t, f)| keep.iter().map(|&i| f.alpha[i] * t[i]).collect())
            .collect(),
        intercepts: fits.iter().map(|(_, f)| -f.rho).collect(),
        iterations: fits.iter().map(|(_, f)| f.iterations).max().unwrap_or(0),
        converged: fits.iter().all(|(_, f)| f.converged),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{class_weights, Model};

    #[test]
    fn xor_is_separated() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let y = vec![0, 0, 1, 1];
        let m = train_kernel_svm(&x, &y, 2, 10.0, 1.0, &class_weights(&y, 2)).unwrap();
        assert_eq!(Model::Kernel(m).predict(&x).unwrap(), y);
    }

    #[test]
    fn duals_respect_box_and_balance() {
        let x = Matrix::from_rows(&[vec![0.0], vec![0.3], vec![0.5], vec![0.9], vec![1.4], vec![2.0], vec![0.45]]).unwrap();
        let y = vec![0, 0, 0, 1, 1, 1, 1];
        let cw = class_weights(&y, 2);
        let m = train_kernel_svm(&x, &y, 2, 2.0, 0.7, &cw).unwrap();
        let bound = 2.0 * cw.iter().cloned().fold(0.0, f64::max);
        assert!(m.coefs[0].iter().all(|a| a.abs() <= bound + 1e-12));
        assert!(m.coefs[0].iter().sum::<f64>().abs() < 1e-9);
    }

    #[test]
    fn three_classes_one_vs_rest() {
        let x = Matrix::from_rows(&[vec![0.0, 0.0], vec![0.1, 0.2], vec![3.0, 0.0], vec![3.1, 0.3], vec![0.0, 3.0], vec![0.2, 3.2]]).unwrap();
        let y = vec![0, 0, 1, 1, 2, 2];
        let m = Model::Kernel(train_kernel_svm(&x, &y, 3, 10.0, 0.5, &class_weights(&y, 3)).unwrap());
        assert_eq!(m.predict(&x).unwrap(), y);
        assert_eq!(m.decision_values(&x).unwrap().cols(), 3);
    }

    #[test]
    fn gamma_must_be_positive() {
        let x = Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(train_kernel_svm(&x, &[0, 1], 2, 1.0, 0.0, &[1.0, 1.0]).is_err());
        assert_eq!(default_gamma(&Matrix::zeros(3, 2)), 1.0);
    }
}
