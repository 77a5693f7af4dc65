//! Classifiers: L1/L2 logistic regression, linear and RBF SVM, CART and
//! random forest. All use inverse-frequency class weights and one-vs-rest
//! decision functions; ties resolve to the lowest class index.

mod forest;
mod kernel;
mod logistic;
mod svm;
mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use forest::{train_rf, ForestModel, ForestParams};
pub use kernel::{default_gamma, train_kernel_svm, KernelModel};
pub use logistic::{train_logreg, LogisticObjective};
pub use svm::{hinge_loss, hinge_objective, pegasos, train_linear_svm, PegasosFit};
pub use tree::{train_cart, Leaf, Split, SplitTest, TreeModel, TreeParams};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Epoch / iteration cap for the iterative solvers.
pub const MAX_EPOCHS: usize = 2000;
/// Convergence threshold on the parameter change between iterations.
pub const PARAM_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    L1,
    L2,
    Hinge,
}

/// `n / (n_classes * count)` per class; classes absent from `y` get 0.
pub fn class_weights(y: &[usize], n_classes: usize) -> Vec<f64> {
    let counts = crate::data::class_counts(y, n_classes);
    let present = counts.iter().filter(|&&c| c > 0).count().max(1);
    counts
        .iter()
        .map(|&c| {
            if c == 0 {
                0.0
            } else {
                y.len() as f64 / (present as f64 * c as f64)
            }
        })
        .collect()
}

pub fn sample_weights(y: &[usize], class_w: &[f64]) -> Vec<f64> {
    y.iter().map(|&c| class_w[c]).collect()
}

pub(crate) fn check_training_input(x: &Matrix, y: &[usize], n_classes: usize) -> Result<()> {
    if x.rows() != y.len() {
        return Err(Error::Dimension {
            expected: x.rows(),
            got: y.len(),
        });
    }
    if !x.is_finite() {
        return Err(Error::Data("non-finite value in training matrix".into()));
    }
    if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
        return Err(Error::Data(format!("label {bad} out of range")));
    }
    let present = crate::data::class_counts(y, n_classes).iter().filter(|&&c| c > 0).count();
    if present < 2 {
        return Err(Error::Data("training labels contain a single class".into()));
    }
    Ok(())
}

/// Binary tasks of a one-vs-rest scheme: a single task when there are two
/// classes (class 1 positive), one per class otherwise.
pub(crate) fn ovr_tasks(n_classes: usize) -> Vec<usize> {
    if n_classes == 2 {
        vec![1]
    } else {
        (0..n_classes).collect()
    }
}

/// Spreads task scores into per-class decision values.
pub(crate) fn task_scores_to_classes(n_classes: usize, scores: &[f64]) -> Vec<f64> {
    if n_classes == 2 {
        vec![-scores[0], scores[0]]
    } else {
        scores.to_vec()
    }
}

/// Per-class one-vs-rest weights and intercepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub penalty: Penalty,
    pub c: f64,
    pub n_classes: usize,
    /// One row per binary task.
    pub weights: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl LinearModel {
    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Columns with a nonzero weight in at least one task.
    pub fn used_features(&self) -> Vec<usize> {
        (0..self.n_features())
            .filter(|&j| self.weights.iter().any(|w| w[j] != 0.0))
            .collect()
    }

    fn task_scores(&self, row: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.intercepts)
            .map(|(w, b)| crate::matrix::dot(w, row) + b)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    L1Logistic,
    L2Logistic,
    LinearSvm,
    RbfSvm,
    Cart,
    RandomForest,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::L1Logistic => "l1lr",
            ClassifierKind::L2Logistic => "l2lr",
            ClassifierKind::LinearSvm => "svm-lin",
            ClassifierKind::RbfSvm => "svm-rbf",
            ClassifierKind::Cart => "cart",
            ClassifierKind::RandomForest => "rf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "l1lr" => ClassifierKind::L1Logistic,
            "l2lr" => ClassifierKind::L2Logistic,
            "svm-lin" => ClassifierKind::LinearSvm,
            "svm-rbf" => ClassifierKind::RbfSvm,
            "cart" => ClassifierKind::Cart,
            "rf" => ClassifierKind::RandomForest,
            _ => return None,
        })
    }

    pub fn uses_trees(self) -> bool {
        matches!(self, ClassifierKind::Cart | ClassifierKind::RandomForest)
    }
}

/// Hyperparameters for any classifier kind; irrelevant fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub c: f64,
    /// RBF bandwidth; `None` uses [`default_gamma`].
    pub gamma: Option<f64>,
    pub n_trees: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            c: 1.0,
            gamma: None,
            n_trees: 100,
            min_leaf: 1,
            seed: 0,
        }
    }
}

/// Column layout needed by the tree learners: level count per column and
/// whether levels are ordered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeLayout {
    pub levels: Vec<usize>,
    pub ordinal: Vec<bool>,
}

impl CodeLayout {
    /// Continuous features are ordinal, categorical ones unordered.
    pub fn from_binned(ds: &crate::data::BinnedDataset) -> Self {
        CodeLayout {
            levels: ds.all_levels().to_vec(),
            ordinal: (0..ds.n_features()).map(|f| ds.is_continuous(f)).collect(),
        }
    }

    /// Treats every column as ordinal with `max + 1` levels.
    pub fn infer(x: &Matrix) -> Result<Self> {
        let mut levels = vec![1; x.cols()];
        for i in 0..x.rows() {
            for (j, l) in levels.iter_mut().enumerate() {
                let v = x.get(i, j);
                if v < 0.0 || v.fract() != 0.0 || v > u16::MAX as f64 {
                    return Err(Error::Data(format!("tree input must hold level codes, found {v}")));
                }
                *l = (*l).max(v as usize + 1);
            }
        }
        Ok(CodeLayout {
            ordinal: vec![true; x.cols()],
            levels,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearModel),
    Kernel(KernelModel),
    Tree(TreeModel),
    Forest(ForestModel),
}

pub fn train(kind: ClassifierKind, x: &Matrix, y: &[usize], n_classes: usize, hp: &HyperParams, layout: Option<&CodeLayout>) -> Result<Model> {
    let cw = class_weights(y, n_classes);
    let tree_layout = || -> Result<CodeLayout> {
        match layout {
            Some(l) => Ok(l.clone()),
            None => CodeLayout::infer(x),
        }
    };
    Ok(match kind {
        ClassifierKind::L1Logistic => Model::Linear(train_logreg(x, y, n_classes, Penalty::L1, hp.c, &cw)?),
        ClassifierKind::L2Logistic => Model::Linear(train_logreg(x, y, n_classes, Penalty::L2, hp.c, &cw)?),
        ClassifierKind::LinearSvm => Model::Linear(train_linear_svm(x, y, n_classes, hp.c, &cw, hp.seed)?),
        ClassifierKind::RbfSvm => {
            let gamma = hp.gamma.unwrap_or_else(|| default_gamma(x));
            Model::Kernel(train_kernel_svm(x, y, n_classes, hp.c, gamma, &cw)?)
        }
        ClassifierKind::Cart => {
            let params = TreeParams {
                min_leaf: hp.min_leaf,
                max_features: None,
            };
            Model::Tree(train_cart(x, y, n_classes, &tree_layout()?, &params, Some(&cw), None)?)
        }
        ClassifierKind::RandomForest => {
            let params = ForestParams {
                n_trees: hp.n_trees,
                min_leaf: hp.min_leaf,
                max_features: None,
                seed: hp.seed,
            };
            Model::Forest(train_rf(x, y, n_classes, &tree_layout()?, &params, &cw)?)
        }
    })
}

impl Model {
    pub fn n_classes(&self) -> usize {
        match self {
            Model::Linear(m) => m.n_classes,
            Model::Kernel(m) => m.n_classes,
            Model::Tree(m) => m.n_classes(),
            Model::Forest(m) => m.n_classes(),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Model::Linear(m) => m.n_features(),
            Model::Kernel(m) => m.n_features(),
            Model::Tree(m) => m.n_features(),
            Model::Forest(m) => m.n_features(),
        }
    }

    /// `n x n_classes` one-vs-rest scores.
    pub fn decision_values(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: x.cols(),
            });
        }
        let k = self.n_classes();
        let mut out = Matrix::zeros(x.rows(), k);
        for i in 0..x.rows() {
            let row = x.row(i);
            let scores = match self {
                Model::Linear(m) => task_scores_to_classes(k, &m.task_scores(row)),
                Model::Kernel(m) => task_scores_to_classes(k, &m.task_scores(row)),
                Model::Tree(m) => m.class_scores(row),
                Model::Forest(m) => m.vote_fractions(row),
            };
            out.row_mut(i).copy_from_slice(&scores);
        }
        Ok(out)
    }

    /// Row-wise argmax of the decision values, lowest class on ties.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let dv = self.decision_values(x)?;
        Ok((0..dv.rows()).map(|i| argmax(dv.row(i))).collect())
    }

    /// Input columns the model actually relies on.
    pub fn used_features(&self) -> Vec<usize> {
        match self {
            Model::Linear(m) if m.penalty == Penalty::L1 => m.used_features(),
            Model::Linear(m) => (0..m.n_features()).collect(),
            Model::Kernel(m) => (0..m.n_features()).collect(),
            Model::Tree(m) => m.split_features(),
            Model::Forest(m) => m.split_features(),
        }
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            model: self.clone(),
        };
        serde_json::to_string(&doc).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Model> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::parse("model", 1, e.to_string()))?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(Error::parse(
                "model",
                1,
                format!("unsupported model format {} v{}", doc.format, doc.version),
            ));
        }
        Ok(doc.model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Model> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text)
    }
}

const MODEL_FORMAT: &str = "localrules-model";
const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    model: Model,
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn balanced_weights() {
        let w = class_weights(&[0, 0, 0, 1], 2);
        assert!((w[0] - 4.0 / 6.0).abs() < 1e-12);
        assert!((w[1] - 2.0).abs() < 1e-12);
        assert_eq!(class_weights(&[0, 0, 2], 3)[1], 0.0);
    }

    #[test]
    fn zero_model_predicts_class_zero() {
        let m = Model::Linear(LinearModel {
            penalty: Penalty::L2,
            c: 1.0,
            n_classes: 3,
            weights: vec![vec![0.0; 2]; 3],
            intercepts: vec![0.0; 3],
            iterations: 0,
            converged: true,
        });
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        assert_eq!(m.predict(&x).unwrap(), vec![0, 0]);
        let dv = m.decision_values(&x).unwrap();
        assert_eq!((dv.rows(), dv.cols()), (2, 3));
        assert!(m.predict(&Matrix::zeros(1, 3)).is_err());
    }

    #[test]
    fn argmax_prefers_lowest_index() {
        assert_eq!(argmax(&[1.0, 1.0, 0.5]), 0);
        assert_eq!(argmax(&[0.0, 2.0, 2.0]), 1);
    }
}
