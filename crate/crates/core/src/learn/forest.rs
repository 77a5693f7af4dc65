//! Random forest: bootstrap resamples, `ceil(sqrt(p))` features per split,
//! hard majority vote.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::grow_tree;
use super::{check_training_input, CodeLayout, TreeModel, TreeParams};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::derive_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub min_leaf: usize,
    /// Features drawn per split; `None` uses `ceil(sqrt(p))`.
    pub max_features: Option<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    n_classes: usize,
    max_features: usize,
    trees: Vec<TreeModel>,
    /// Bootstrap row indices of every tree.
    indices: Vec<Vec<usize>>,
}

pub fn train_rf(x: &Matrix, y: &[usize], n_classes: usize, layout: &CodeLayout, params: &ForestParams, class_w: &[f64]) -> Result<ForestModel> {
    check_training_input(x, y, n_classes)?;
    if params.n_trees == 0 {
        return Err(Error::Data("forest needs at least one tree".into()));
    }
    let p = x.cols();
    let m = params
        .max_features
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p.max(1));
    let tp = TreeParams {
        min_leaf: params.min_leaf,
        max_features: Some(m),
    };
    let n = x.rows();
    let grown: Vec<Result<(TreeModel, Vec<usize>)>> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = derive_rng(params.seed, "forest", &[t as u64]);
            let mut idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
            idx.sort_unstable();
            let tree = grow_tree(x, y, n_classes, layout, &tp, Some(class_w), Some(&idx), Some(rng))?;
            Ok((tree, idx))
        })
        .collect();
    let mut trees = Vec::with_capacity(params.n_trees);
    let mut indices = Vec::with_capacity(params.n_trees);
    for g in grown {
        let (tree, idx) = g?;
        trees.push(tree);
        indices.push(idx);
    }
    Ok(ForestModel {
        n_classes,
        max_features: m,
        trees,
        indices,
    })
}

impl ForestModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.trees[0].n_features()
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[TreeModel] {
        &self.trees
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn max_features(&self) -> usize {
        self.max_features
    }

    pub fn vote_counts(&self, row: &[f64]) -> Vec<usize> {
        let mut votes = vec![0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_row(row)] += 1;
        }
        votes
    }

    pub fn vote_fractions(&self, row: &[f64]) -> Vec<f64> {
        let n = self.trees.len() as f64;
        self.vote_counts(row).into_iter().map(|v| v as f64 / n).collect()
    }

    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self.trees.iter().flat_map(TreeModel::split_features).collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{class_weights, train_cart, Model};
    use rand::SeedableRng;

    fn fixture() -> (Matrix, Vec<usize>, CodeLayout) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let n = 120;
        let x = Matrix::from_vec(n, 5, (0..n * 5).map(|_| rng.gen_range(0..6) as f64).collect()).unwrap();
        let y: Vec<usize> = (0..n).map(|i| usize::from(x.get(i, 1) + x.get(i, 3) > 5.0)).collect();
        let layout = CodeLayout::infer(&x).unwrap();
        (x, y, layout)
    }

    #[test]
    fn deterministic_given_seed() {
        let (x, y, layout) = fixture();
        let cw = class_weights(&y, 2);
        let p = ForestParams {
            n_trees: 15,
            min_leaf: 1,
            max_features: None,
            seed: 8,
        };
        let a = train_rf(&x, &y, 2, &layout, &p, &cw).unwrap();
        let b = train_rf(&x, &y, 2, &layout, &p, &cw).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.max_features(), 3);
    }

    #[test]
    fn single_full_tree_equals_cart() {
        let (x, y, layout) = fixture();
        let cw = class_weights(&y, 2);
        let p = ForestParams {
            n_trees: 1,
            min_leaf: 1,
            max_features: Some(5),
            seed: 1,
        };
        let forest = train_rf(&x, &y, 2, &layout, &p, &cw).unwrap();
        let cart = train_cart(&x, &y, 2, &layout, &TreeParams::default(), Some(&cw), Some(&forest.indices()[0])).unwrap();
        let a = Model::Forest(forest).predict(&x).unwrap();
        let b = Model::Tree(cart).predict(&x).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn votes_sum_to_tree_count() {
        let (x, y, layout) = fixture();
        let p = ForestParams {
            n_trees: 7,
            min_leaf: 2,
            max_features: None,
            seed: 3,
        };
        let f = train_rf(&x, &y, 2, &layout, &p, &class_weights(&y, 2)).unwrap();
        for i in 0..x.rows() {
            assert_eq!(f.vote_counts(x.row(i)).iter().sum::<usize>(), 7);
        }
    }
}
