//! CART with Gini impurity on level-coded inputs. Ordinal columns split as
//! `code <= t`, unordered ones as `code == c` versus the rest.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_input, CodeLayout};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{derive_rng, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitTest {
    LessEq(u16),
    Equals(u16),
}

impl SplitTest {
    /// Whether `code` goes to the left child.
    pub fn passes(self, code: usize) -> bool {
        match self {
            SplitTest::LessEq(t) => code <= t as usize,
            SplitTest::Equals(c) => code == c as usize,
        }
    }
}

/// One decision taken on the way to a leaf.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Split {
    pub feature: usize,
    pub test: SplitTest,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Leaf {
    pub path: Vec<Split>,
    pub class: usize,
    /// Training samples reaching the leaf.
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
enum Node {
    Split {
        feature: usize,
        test: SplitTest,
        left: usize,
        right: usize,
    },
    Leaf {
        class: usize,
        n: usize,
        /// Normalized (weighted) class distribution.
        dist: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub min_leaf: usize,
    /// Features drawn per split; `None` searches all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            min_leaf: 1,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    n_classes: usize,
    layout: CodeLayout,
    nodes: Vec<Node>,
}

struct Grower<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    w: Vec<f64>,
    n_classes: usize,
    layout: &'a CodeLayout,
    params: TreeParams,
    rng: Option<Rng>,
    nodes: Vec<Node>,
}

struct Best {
    feature: usize,
    test: SplitTest,
    gain: f64,
}

fn weighted_gini_mass(dist: &[f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    total - dist.iter().map(|v| v * v).sum::<f64>() / total
}

impl Grower<'_> {
    fn code(&self, i: usize, f: usize) -> usize {
        self.x.get(i, f) as usize
    }

    fn leaf(&self, sample: &[usize]) -> Node {
        let mut dist = vec![0.0; self.n_classes];
        for &i in sample {
            dist[self.y[i]] += self.w[i];
        }
        let total: f64 = dist.iter().sum();
        let mut class = 0;
        for k in 1..self.n_classes {
            if dist[k] > dist[class] {
                class = k;
            }
        }
        if total > 0.0 {
            for v in &mut dist {
                *v /= total;
            }
        }
        Node::Leaf {
            class,
            n: sample.len(),
            dist,
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let p = self.x.cols();
        let mut feats: Vec<usize> = (0..p).collect();
        if let (Some(m), Some(rng)) = (self.params.max_features, self.rng.as_mut()) {
            if m < p {
                feats.partial_shuffle(rng, m);
                feats.truncate(m);
                feats.sort_unstable();
            }
        }
        feats
    }

    fn best_split(&mut self, sample: &[usize]) -> Option<Best> {
        let k = self.n_classes;
        let mut node_dist = vec![0.0; k];
        for &i in sample {
            node_dist[self.y[i]] += self.w[i];
        }
        let total: f64 = node_dist.iter().sum();
        let parent = weighted_gini_mass(&node_dist, total);
        if parent <= 0.0 {
            return None;
        }
        let min_leaf = self.params.min_leaf;
        let mut best: Option<Best> = None;
        for f in self.candidate_features() {
            let levels = self.layout.levels[f];
            let mut hist = vec![0.0; levels * k];
            let mut counts = vec![0usize; levels];
            for &i in sample {
                let c = self.code(i, f);
                hist[c * k + self.y[i]] += self.w[i];
                counts[c] += 1;
            }
            let mut consider = |test: SplitTest, left: &[f64], n_left: usize| {
                let n_right = sample.len() - n_left;
                if n_left < min_leaf || n_right < min_leaf || n_left == 0 || n_right == 0 {
                    return;
                }
                let wl: f64 = left.iter().sum();
                let right: Vec<f64> = node_dist.iter().zip(left).map(|(a, b)| a - b).collect();
                let wr = total - wl;
                let gain = parent - weighted_gini_mass(left, wl) - weighted_gini_mass(&right, wr);
                if gain > 1e-12 * total && best.as_ref().map_or(true, |b| gain > b.gain) {
                    best = Some(Best { feature: f, test, gain });
                }
            };
            if self.layout.ordinal[f] {
                let mut left = vec![0.0; k];
                let mut n_left = 0;
                for t in 0..levels.saturating_sub(1) {
                    for c in 0..k {
                        left[c] += hist[t * k + c];
                    }
                    n_left += counts[t];
                    consider(SplitTest::LessEq(t as u16), &left, n_left);
                }
            } else {
                for c in 0..levels {
                    consider(SplitTest::Equals(c as u16), &hist[c * k..(c + 1) * k], counts[c]);
                }
            }
        }
        best
    }

    fn grow(&mut self, sample: Vec<usize>) -> usize {
        let id = self.nodes.len();
        match self.best_split(&sample) {
            None => {
                let leaf = self.leaf(&sample);
                self.nodes.push(leaf);
            }
            Some(b) => {
                self.nodes.push(Node::Leaf {
                    class: 0,
                    n: 0,
                    dist: Vec::new(),
                });
                let (l, r): (Vec<usize>, Vec<usize>) = sample.iter().partition(|&&i| b.test.passes(self.code(i, b.feature)));
                let left = self.grow(l);
                let right = self.grow(r);
                self.nodes[id] = Node::Split {
                    feature: b.feature,
                    test: b.test,
                    left,
                    right,
                };
            }
        }
        id
    }
}

fn check_codes(x: &Matrix, layout: &CodeLayout) -> Result<()> {
    if layout.levels.len() != x.cols() || layout.ordinal.len() != x.cols() {
        return Err(Error::Dimension {
            expected: x.cols(),
            got: layout.levels.len(),
        });
    }
    for i in 0..x.rows() {
        for (j, &l) in layout.levels.iter().enumerate() {
            let v = x.get(i, j);
            if v < 0.0 || v.fract() != 0.0 || v >= l as f64 {
                return Err(Error::Data(format!("column {j} holds {v}, expected a code below {l}")));
            }
        }
    }
    Ok(())
}

/// Grows a tree on `sample` (row indices, repeats allowed; all rows when
/// `None`). Sample weights are the class weights of the labels, or 1.
pub fn train_cart(x: &Matrix, y: &[usize], n_classes: usize, layout: &CodeLayout, params: &TreeParams, class_w: Option<&[f64]>, sample: Option<&[usize]>) -> Result<TreeModel> {
    grow_tree(x, y, n_classes, layout, params, class_w, sample, None)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn grow_tree(x: &Matrix, y: &[usize], n_classes: usize, layout: &CodeLayout, params: &TreeParams, class_w: Option<&[f64]>, sample: Option<&[usize]>, rng: Option<Rng>) -> Result<TreeModel> {
    check_training_input(x, y, n_classes)?;
    check_codes(x, layout)?;
    let sample: Vec<usize> = sample.map_or_else(|| (0..x.rows()).collect(), <[usize]>::to_vec);
    if params.min_leaf == 0 || params.min_leaf > sample.len() {
        return Err(Error::Data(format!(
            "min_leaf {} must lie in 1..={}",
            params.min_leaf,
            sample.len()
        )));
    }
    if sample.iter().any(|&i| i >= x.rows()) {
        return Err(Error::Data("sample index out of range".into()));
    }
    let rng = match (params.max_features, rng) {
        (Some(_), None) => Some(derive_rng(0, "cart", &[])),
        (_, r) => r,
    };
    let mut g = Grower {
        x,
        y,
        w: y.iter().map(|&k| class_w.map_or(1.0, |cw| cw[k])).collect(),
        n_classes,
        layout,
        params: *params,
        rng,
        nodes: Vec::new(),
    };
    g.grow(sample);
    Ok(TreeModel {
        n_classes,
        layout: layout.clone(),
        nodes: g.nodes,
    })
}

impl TreeModel {
    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.layout.levels.len()
    }

    pub fn layout(&self) -> &CodeLayout {
        &self.layout
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    fn leaf_of(&self, row: &[f64]) -> &Node {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    id = if test.passes(row[*feature] as usize) { *left } else { *right };
                }
                leaf => return leaf,
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> usize {
        match self.leaf_of(row) {
            Node::Leaf { class, .. } => *class,
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Class distribution of the leaf reached by `row`.
    pub fn class_scores(&self, row: &[f64]) -> Vec<f64> {
        match self.leaf_of(row) {
            Node::Leaf { dist, .. } => dist.clone(),
            Node::Split { .. } => unreachable!(),
        }
    }

    /// Distinct features used in any split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    /// Root-to-leaf paths, left subtrees first.
    pub fn leaves(&self) -> Vec<Leaf> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((id, path)) = stack.pop() {
            match &self.nodes[id] {
                Node::Leaf { class, n, .. } => out.push(Leaf {
                    path,
                    class: *class,
                    n: *n,
                }),
                Node::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    let mut r = path.clone();
                    r.push(Split {
                        feature: *feature,
                        test: *test,
                        passed: false,
                    });
                    let mut l = path;
                    l.push(Split {
                        feature: *feature,
                        test: *test,
                        passed: true,
                    });
                    stack.push((*right, r));
                    stack.push((*left, l));
                }
            }
        }
        out
    }
}
