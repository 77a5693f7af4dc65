use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Column, Dataset, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Quantization of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureBins {
    /// `edges.len() - 1` intervals `[edges[j], edges[j + 1])`, the last one
    /// closed. Edges are strictly increasing except for a constant column,
    /// which keeps the single degenerate interval `[c, c]`.
    Continuous { edges: Vec<f64> },
    /// Identity map category index -> bin index.
    Categorical { levels: usize },
}

impl FeatureBins {
    pub fn levels(&self) -> usize {
        match self {
            FeatureBins::Continuous { edges } => edges.len() - 1,
            FeatureBins::Categorical { levels } => *levels,
        }
    }

    /// Bin of a continuous value; out-of-range values clamp to the boundary bins.
    pub fn bin_of(&self, x: f64) -> usize {
        match self {
            FeatureBins::Continuous { edges } => {
                let inner = &edges[1..edges.len() - 1];
                inner.partition_point(|&e| e <= x)
            }
            FeatureBins::Categorical { .. } => x as usize,
        }
    }
}

/// Per-feature bin layout fitted on training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinMap {
    bins: Vec<FeatureBins>,
}

impl BinMap {
    /// Empirical quantile edges at probabilities `i / n_bins` (linear
    /// interpolation between order statistics), duplicates merged.
    pub fn fit(train: &Dataset, n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::Config("n_bins must be at least 1".into()));
        }
        let mut bins = Vec::with_capacity(train.n_features());
        for (f, col) in train.columns().iter().enumerate() {
            let spec = &train.schema().features[f];
            bins.push(match (col, &spec.kind) {
                (Column::Continuous(v), _) => {
                    let mut obs = Vec::with_capacity(v.len());
                    for x in v {
                        obs.push(x.ok_or_else(|| {
                            Error::Data(format!("feature `{}` has missing values; impute before binning", spec.name))
                        })?);
                    }
                    obs.sort_by(f64::total_cmp);
                    FeatureBins::Continuous {
                        edges: quantile_edges(&obs, n_bins),
                    }
                }
                (Column::Categorical(_), FeatureKind::Categorical(c)) => FeatureBins::Categorical { levels: c.len() },
                _ => unreachable!("dataset columns follow the schema"),
            });
        }
        Ok(BinMap { bins })
    }

    pub fn from_bins(bins: Vec<FeatureBins>) -> Self {
        BinMap { bins }
    }

    pub fn features(&self) -> &[FeatureBins] {
        &self.bins
    }

    pub fn feature(&self, f: usize) -> &FeatureBins {
        &self.bins[f]
    }

    pub fn levels(&self, f: usize) -> usize {
        self.bins[f].levels()
    }

    /// Value bounds `[lo, hi)` of a continuous bin.
    pub fn interval(&self, f: usize, bin: usize) -> Option<(f64, f64)> {
        match &self.bins[f] {
            FeatureBins::Continuous { edges } => Some((edges[bin], edges[bin + 1])),
            FeatureBins::Categorical { .. } => None,
        }
    }

    /// Training range `(min, max)` of a continuous feature.
    pub fn value_range(&self, f: usize) -> Option<(f64, f64)> {
        match &self.bins[f] {
            FeatureBins::Continuous { edges } => Some((edges[0], edges[edges.len() - 1])),
            FeatureBins::Categorical { .. } => None,
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Result<BinnedDataset> {
        if ds.n_features() != self.bins.len() {
            return Err(Error::Dimension {
                expected: self.bins.len(),
                got: ds.n_features(),
            });
        }
        let mut codes = Vec::with_capacity(self.bins.len());
        for (f, (col, fb)) in ds.columns().iter().zip(&self.bins).enumerate() {
            let name = &ds.schema().features[f].name;
            let missing = || Error::Data(format!("feature `{name}` has missing values; impute before binning"));
            let c: Vec<u16> = match (col, fb) {
                (Column::Continuous(v), FeatureBins::Continuous { .. }) => v
                    .iter()
                    .map(|x| x.map(|x| fb.bin_of(x) as u16).ok_or_else(missing))
                    .collect::<Result<_>>()?,
                (Column::Categorical(v), FeatureBins::Categorical { .. }) => v
                    .iter()
                    .map(|x| x.map(|k| k as u16).ok_or_else(missing))
                    .collect::<Result<_>>()?,
                _ => return Err(Error::Data(format!("bin map kind does not match feature `{name}`"))),
            };
            codes.push(c);
        }
        BinnedDataset::new(
            Arc::clone(ds.schema_arc()),
            self.bins.iter().map(FeatureBins::levels).collect(),
            codes,
            ds.labels().to_vec(),
        )
    }
}

fn quantile_edges(sorted: &[f64], n_bins: usize) -> Vec<f64> {
    let n = sorted.len();
    let mut edges: Vec<f64> = (0..=n_bins)
        .map(|i| {
            let h = (n - 1) as f64 * i as f64 / n_bins as f64;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        })
        .collect();
    // interpolation can leave tiny non-monotone wobble between equal values
    for i in 1..edges.len() {
        if edges[i] < edges[i - 1] {
            edges[i] = edges[i - 1];
        }
    }
    edges.dedup();
    if edges.len() == 1 {
        edges.push(edges[0]);
    }
    edges
}

/// Dataset with every feature mapped to a 0-based level code.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedDataset {
    schema: Arc<FeatureSchema>,
    levels: Vec<usize>,
    codes: Vec<Vec<u16>>,
    labels: Vec<usize>,
}

impl BinnedDataset {
    pub fn new(schema: Arc<FeatureSchema>, levels: Vec<usize>, codes: Vec<Vec<u16>>, labels: Vec<usize>) -> Result<Self> {
        if levels.len() != schema.n_features() || codes.len() != schema.n_features() {
            return Err(Error::Dimension {
                expected: schema.n_features(),
                got: codes.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::Data("empty dataset".into()));
        }
        for (f, (c, &k)) in codes.iter().zip(&levels).enumerate() {
            if k == 0 {
                return Err(Error::Data(format!("feature {f} has no levels")));
            }
            if c.len() != labels.len() {
                return Err(Error::Data(format!("feature {f} has {} codes for {} labels", c.len(), labels.len())));
            }
            if c.iter().any(|&v| v as usize >= k) {
                return Err(Error::Data(format!("feature {f} has a code outside 0..{k}")));
            }
        }
        if labels.iter().any(|&y| y >= schema.n_classes()) {
            return Err(Error::Data("class index out of range".into()));
        }
        Ok(BinnedDataset {
            schema,
            levels,
            codes,
            labels,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.codes.len()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }

    pub fn levels(&self, f: usize) -> usize {
        self.levels[f]
    }

    pub fn all_levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn is_continuous(&self, f: usize) -> bool {
        self.schema.features[f].is_continuous()
    }

    #[inline]
    pub fn code(&self, f: usize, i: usize) -> usize {
        self.codes[f][i] as usize
    }

    pub fn codes(&self, f: usize) -> &[u16] {
        &self.codes[f]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        super::class_counts(&self.labels, self.n_classes())
    }

    pub fn subset(&self, idx: &[usize]) -> BinnedDataset {
        BinnedDataset {
            schema: Arc::clone(&self.schema),
            levels: self.levels.clone(),
            codes: self.codes.iter().map(|c| idx.iter().map(|&i| c[i]).collect()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Raw 0-based bin codes, one column per feature.
pub fn code_matrix(ds: &BinnedDataset) -> Matrix {
    let (n, p) = (ds.n_samples(), ds.n_features());
    let mut m = Matrix::zeros(n, p);
    for f in 0..p {
        for (i, &c) in ds.codes(f).iter().enumerate() {
            m.set(i, f, c as f64);
        }
    }
    m
}

/// Indicator encoding of every feature: `levels(f)` columns per feature, in
/// feature order then level order.
pub fn one_hot(ds: &BinnedDataset) -> Matrix {
    let width: usize = ds.all_levels().iter().sum();
    let mut m = Matrix::zeros(ds.n_samples(), width);
    let mut offset = 0;
    for f in 0..ds.n_features() {
        for i in 0..ds.n_samples() {
            m.set(i, offset + ds.code(f, i), 1.0);
        }
        offset += ds.levels(f);
    }
    m
}

/// Design matrix for the global classifiers: continuous features enter as
/// their 1-based bin index, categorical features are one-hot encoded.
pub fn global_design(ds: &BinnedDataset) -> Matrix {
    let width: usize = (0..ds.n_features())
        .map(|f| if ds.is_continuous(f) { 1 } else { ds.levels(f) })
        .sum();
    let mut m = Matrix::zeros(ds.n_samples(), width);
    let mut offset = 0;
    for f in 0..ds.n_features() {
        if ds.is_continuous(f) {
            for i in 0..ds.n_samples() {
                m.set(i, offset, (ds.code(f, i) + 1) as f64);
            }
            offset += 1;
        } else {
            for i in 0..ds.n_samples() {
                m.set(i, offset + ds.code(f, i), 1.0);
            }
            offset += ds.levels(f);
        }
    }
    m
}
