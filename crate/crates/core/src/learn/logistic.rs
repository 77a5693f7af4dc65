//! Class-weighted one-vs-rest logistic regression solved with FISTA.
//! L2 enters the smooth part; L1 is handled by soft-thresholding.

use rayon::prelude::*;

use super::{check_training_input, ovr_tasks, LinearModel, Penalty, MAX_EPOCHS, PARAM_TOL};
use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};

/// One binary task: `sum_i c_i log(1 + exp(-t_i (w.x_i + b))) + (1/C) pen(w)`.
/// Parameters are laid out as `[w_0, .., w_{d-1}, b]`.
#[derive(Debug, Clone)]
pub struct LogisticObjective<'a> {
    x: &'a Matrix,
    targets: Vec<f64>,
    weights: Vec<f64>,
    penalty: Penalty,
    lambda: f64,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl<'a> LogisticObjective<'a> {
    /// `targets` are +-1, `weights` are per-sample loss weights.
    pub fn new(x: &'a Matrix, targets: Vec<f64>, weights: Vec<f64>, penalty: Penalty, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Data(format!("C must be positive, got {c}")));
        }
        if penalty == Penalty::Hinge {
            return Err(Error::Internal("hinge penalty is not a logistic objective".into()));
        }
        if targets.len() != x.rows() || weights.len() != x.rows() {
            return Err(Error::Dimension {
                expected: x.rows(),
                got: targets.len().min(weights.len()),
            });
        }
        Ok(LogisticObjective {
            x,
            targets,
            weights,
            penalty,
            lambda: 1.0 / c,
        })
    }

    pub fn n_params(&self) -> usize {
        self.x.cols() + 1
    }

    fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.x.cols();
        (0..self.x.rows())
            .map(|i| self.targets[i] * (dot(&theta[..d], self.x.row(i)) + theta[d]))
            .collect()
    }

    /// Loss plus the L2 term (zero for L1).
    pub fn smooth_value(&self, theta: &[f64]) -> f64 {
        let loss: f64 = self
            .margins(theta)
            .iter()
            .zip(&self.weights)
            .map(|(&m, &c)| c * softplus(-m))
            .sum();
        let d = self.x.cols();
        match self.penalty {
            Penalty::L2 => loss + 0.5 * self.lambda * theta[..d].iter().map(|w| w * w).sum::<f64>(),
            _ => loss,
        }
    }

    pub fn smooth_gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.x.cols();
        let mut g = vec![0.0; d + 1];
        for (i, m) in self.margins(theta).into_iter().enumerate() {
            let coef = -self.weights[i] * self.targets[i] * sigmoid(-m);
            if coef == 0.0 {
                continue;
            }
            for (gj, xj) in g[..d].iter_mut().zip(self.x.row(i)) {
                *gj += coef * xj;
            }
            g[d] += coef;
        }
        if self.penalty == Penalty::L2 {
            for (gj, wj) in g[..d].iter_mut().zip(&theta[..d]) {
                *gj += self.lambda * wj;
            }
        }
        g
    }

    /// Full objective including the L1 term.
    pub fn value(&self, theta: &[f64]) -> f64 {
        let d = self.x.cols();
        let l1 = match self.penalty {
            Penalty::L1 => self.lambda * theta[..d].iter().map(|w| w.abs()).sum::<f64>(),
            _ => 0.0,
        };
        self.smooth_value(theta) + l1
    }

    /// Upper bound on the Lipschitz constant of the smooth gradient:
    /// a quarter of the top eigenvalue of the weighted Gram matrix of
    /// `[x, 1]`, found by power iteration, plus the L2 curvature.
    pub fn lipschitz(&self) -> f64 {
        let n = self.x.rows();
        let d = self.x.cols();
        let mut v = vec![1.0 / ((d + 1) as f64).sqrt(); d + 1];
        let mut eig = 0.0;
        for _ in 0..100 {
            let mut out = vec![0.0; d + 1];
            for i in 0..n {
                let row = self.x.row(i);
                let s = self.weights[i] * (dot(row, &v[..d]) + v[d]);
                for (o, xj) in out[..d].iter_mut().zip(row) {
                    *o += s * xj;
                }
                out[d] += s;
            }
            let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let prev = eig;
            eig = norm;
            for (vj, oj) in v.iter_mut().zip(&out) {
                *vj = oj / norm;
            }
            if (eig - prev).abs() <= 1e-6 * eig {
                break;
            }
        }
        // power iteration approaches the top eigenvalue from below
        let curvature = 0.25 * eig * 1.01;
        let l2 = if self.penalty == Penalty::L2 { self.lambda } else { 0.0 };
        (curvature + l2).max(1e-12)
    }

    fn prox(&self, theta: &mut [f64], step: f64) {
        if self.penalty != Penalty::L1 {
            return;
        }
        let d = self.x.cols();
        let t = step * self.lambda;
        for w in &mut theta[..d] {
            *w = if *w > t {
                *w - t
            } else if *w < -t {
                *w + t
            } else {
                0.0
            };
        }
    }

    /// FISTA with gradient-based adaptive restart. Returns the parameters,
    /// the iteration count and whether the tolerance was reached.
    pub fn minimize(&self) -> (Vec<f64>, usize, bool) {
        let p = self.n_params();
        let step = 1.0 / self.lipschitz();
        let mut theta = vec![0.0; p];
        let mut y = theta.clone();
        let mut t = 1.0_f64;
        for iter in 1..=MAX_EPOCHS {
            let g = self.smooth_gradient(&y);
            let mut next: Vec<f64> = y.iter().zip(&g).map(|(yj, gj)| yj - step * gj).collect();
            self.prox(&mut next, step);
            let change = next.iter().zip(&theta).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let scale = next.iter().map(|v| v.abs()).fold(1.0, f64::max);
            if change < PARAM_TOL * scale {
                return (next, iter, true);
            }
            // restart momentum when it points against the descent direction
            let restart = y
                .iter()
                .zip(&next)
                .zip(&theta)
                .map(|((yj, nj), tj)| (yj - nj) * (nj - tj))
                .sum::<f64>()
                > 0.0;
            if restart {
                t = 1.0;
            }
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = next.iter().zip(&theta).map(|(nj, tj)| nj + beta * (nj - tj)).collect();
            theta = next;
            t = t_next;
        }
        (theta, MAX_EPOCHS, false)
    }
}

pub fn train_logreg(x: &Matrix, y: &[usize], n_classes: usize, penalty: Penalty, c: f64, class_w: &[f64]) -> Result<LinearModel> {
    check_training_input(x, y, n_classes)?;
    if penalty == Penalty::Hinge {
        return Err(Error::Internal("train_logreg needs an L1 or L2 penalty".into()));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::Data(format!("C must be positive, got {c}")));
    }
    let weights: Vec<f64> = y.iter().map(|&k| class_w[k]).collect();
    let tasks = ovr_tasks(n_classes);
    let fits: Vec<(Vec<f64>, usize, bool)> = tasks
        .par_iter()
        .map(|&k| {
            let targets = y.iter().map(|&l| if l == k { 1.0 } else { -1.0 }).collect();
            let obj = LogisticObjective::new(x, targets, weights.clone(), penalty, c).expect("validated");
            obj.minimize()
        })
        .collect();
    let d = x.cols();
    Ok(LinearModel {
        penalty,
        c,
        n_classes,
        weights: fits.iter().map(|f| f.0[..d].to_vec()).collect(),
        intercepts: fits.iter().map(|f| f.0[d]).collect(),
        iterations: fits.iter().map(|f| f.1).max().unwrap_or(0),
        converged: fits.iter().all(|f| f.2),
    })
}
