//! Rule-derived local features: binary membership, or the weighted
//! distance to the rule center for rules with continuous conditions.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::data::{BinMap, BinnedDataset, Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rulemine::{Rule, RuleSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Encoding {
    /// Membership for discrete rules, Δ for continuous ones, Δ gated by the
    /// discrete conditions for mixed ones.
    #[default]
    Default,
    /// Membership indicator for every rule.
    Binary,
}

impl Encoding {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "default" | "delta" => Some(Encoding::Default),
            "binary" => Some(Encoding::Binary),
            _ => None,
        }
    }
}

/// Which rules the feature frequency `w_i` is counted over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScope {
    /// Rules of the same target class.
    #[default]
    PerClass,
    /// All rules.
    Global,
}

/// Weights of the Δ distance.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaWeights {
    /// `w_r`: z-score of each rule, in column order.
    pub rule: Vec<f64>,
    /// `w_i` per class (one row when global) and feature.
    pub feature: Vec<Vec<f64>>,
    pub scope: WeightScope,
    /// Training `(min, max)` of continuous features.
    pub ranges: Vec<Option<(f64, f64)>>,
}

impl DeltaWeights {
    pub fn fit(rules: &RuleSet, bins: &BinMap, n_features: usize, scope: WeightScope) -> Self {
        let groups: Vec<Vec<&Rule>> = match scope {
            WeightScope::PerClass => (0..rules.n_classes()).map(|c| rules.class_rules(c).iter().collect()).collect(),
            WeightScope::Global => vec![rules.iter().collect()],
        };
        let feature = groups
            .iter()
            .map(|g| {
                let mut w = vec![0.0; n_features];
                for r in g {
                    for f in r.features() {
                        w[f] += 1.0;
                    }
                }
                if !g.is_empty() {
                    for v in &mut w {
                        *v /= g.len() as f64;
                    }
                }
                w
            })
            .collect();
        DeltaWeights {
            rule: rules.iter().map(|r| r.stats.z).collect(),
            feature,
            scope,
            ranges: (0..n_features).map(|f| bins.value_range(f)).collect(),
        }
    }

    pub fn feature_weight(&self, class: usize, f: usize) -> f64 {
        match self.scope {
            WeightScope::PerClass => self.feature[class][f],
            WeightScope::Global => self.feature[0][f],
        }
    }
}

/// `w_r * sqrt(sum (w_i * delta_i)^2)` with
/// `delta_i = 1 - |x_i - center_i| / span_i`, clamped to `[0, 1]`.
pub fn delta_distance(x: &[f64], centers: &[f64], spans: &[f64], feature_weights: &[f64], w_r: f64) -> Result<f64> {
    let mut acc = 0.0;
    for i in 0..x.len() {
        if !(spans[i] > 0.0) {
            return Err(Error::Data("zero feature range in delta distance".into()));
        }
        let delta = (1.0 - (x[i] - centers[i]).abs() / spans[i]).clamp(0.0, 1.0);
        let t = feature_weights[i] * delta;
        acc += t * t;
    }
    Ok(w_r * acc.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
struct Column {
    rule: Rule,
    /// Continuous conditions as `(feature, center, span, w_i)`.
    continuous: Vec<(usize, f64, f64, f64)>,
    w_r: f64,
    membership_only: bool,
}

/// Column definitions fitted on training data; apply with [`LocalFeatureMap::transform`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeatureMap {
    columns: Vec<Column>,
    encoding: Encoding,
    weights: DeltaWeights,
}

/// `n x m` local features with the originating rule of every column.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalFeatureMatrix {
    pub matrix: Matrix,
    pub rules: Vec<Rule>,
    pub encoding: Encoding,
}

impl LocalFeatureMap {
    pub fn fit(rules: &RuleSet, bins: &BinMap, encoding: Encoding, scope: WeightScope) -> Result<Self> {
        let p = bins.features().len();
        if let Some(c) = rules.iter().flat_map(|r| &r.conditions).find(|c| c.feature >= p) {
            return Err(Error::Data(format!("rule references unknown feature {}", c.feature)));
        }
        let weights = DeltaWeights::fit(rules, bins, p, scope);
        let mut columns = Vec::with_capacity(rules.len());
        for (j, rule) in rules.iter().enumerate() {
            let membership_only = encoding == Encoding::Binary || !rule.has_continuous();
            let mut continuous = Vec::new();
            if !membership_only {
                for c in rule.conditions.iter().filter(|c| c.is_continuous()) {
                    let levels = c.levels();
                    let (lo, hi) = (levels[0], levels[levels.len() - 1]);
                    let (r_low, r_up) = match (bins.interval(c.feature, lo), bins.interval(c.feature, hi)) {
                        (Some(a), Some(b)) => (a.0, b.1),
                        _ => return Err(Error::Data(format!("feature {} has no continuous bins", c.feature))),
                    };
                    let (min, max) = weights.ranges[c.feature].expect("continuous feature has a range");
                    if !(max > min) {
                        return Err(Error::Data(format!("zero range for feature {}", c.feature)));
                    }
                    let center = r_low + (r_up - r_low) / 2.0;
                    continuous.push((c.feature, center, max - min, weights.feature_weight(rule.target_class, c.feature)));
                }
            }
            columns.push(Column {
                rule: rule.clone(),
                continuous,
                w_r: weights.rule[j],
                membership_only,
            });
        }
        Ok(LocalFeatureMap {
            columns,
            encoding,
            weights,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn rules(&self) -> Vec<Rule> {
        self.columns.iter().map(|c| c.rule.clone()).collect()
    }

    pub fn weights(&self) -> &DeltaWeights {
        &self.weights
    }

    /// `data` holds the original values and `binned` its codes under the
    /// fitted bin map; both describe the same samples.
    pub fn transform(&self, data: &Dataset, binned: &BinnedDataset) -> Result<LocalFeatureMatrix> {
        let n = binned.n_samples();
        if data.n_samples() != n {
            return Err(Error::Dimension {
                expected: n,
                got: data.n_samples(),
            });
        }
        let cols: Vec<Vec<f64>> = self
            .columns
            .par_iter()
            .map(|col| column_values(col, data, binned))
            .collect::<Result<_>>()?;
        let m = cols.len();
        let mut matrix = Matrix::zeros(n, m);
        for (j, col) in cols.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                matrix.set(i, j, v);
            }
        }
        Ok(LocalFeatureMatrix {
            matrix,
            rules: self.rules(),
            encoding: self.encoding,
        })
    }
}

fn column_values(col: &Column, data: &Dataset, binned: &BinnedDataset) -> Result<Vec<f64>> {
    let n = binned.n_samples();
    let mut out = vec![0.0; n];
    let mut x = vec![0.0; col.continuous.len()];
    let centers: Vec<f64> = col.continuous.iter().map(|c| c.1).collect();
    let spans: Vec<f64> = col.continuous.iter().map(|c| c.2).collect();
    let fw: Vec<f64> = col.continuous.iter().map(|c| c.3).collect();
    for (i, v) in out.iter_mut().enumerate() {
        if col.membership_only {
            *v = f64::from(u8::from(col.rule.matches(binned, i)));
            continue;
        }
        let discrete_ok = col
            .rule
            .conditions
            .iter()
            .filter(|c| !c.is_continuous())
            .all(|c| c.admits(binned.code(c.feature, i)));
        if !discrete_ok {
            continue;
        }
        for (k, c) in col.continuous.iter().enumerate() {
            x[k] = data
                .continuous(c.0, i)
                .ok_or_else(|| Error::Data(format!("missing value for feature {} at row {i}", c.0)))?;
        }
        *v = delta_distance(&x, &centers, &spans, &fw, col.w_r)?;
    }
    Ok(out)
}

/// Rule-based transform in one call: fit on `rules` and apply to `data`.
pub fn transform(data: &Dataset, binned: &BinnedDataset, bins: &BinMap, rules: &RuleSet, encoding: Encoding) -> Result<LocalFeatureMatrix> {
    LocalFeatureMap::fit(rules, bins, encoding, WeightScope::PerClass)?.transform(data, binned)
}

/// CSV with one `# column: rule` comment line per column, a header row,
/// then the values followed by the class label.
pub fn write_local_features(path: &Path, lfm: &LocalFeatureMatrix, labels: &[usize], schema: &FeatureSchema, bins: Option<&BinMap>) -> Result<()> {
    let mut text = String::new();
    for (j, r) in lfm.rules.iter().enumerate() {
        text.push_str(&format!("# r{}: {} (z={:.4})\n", j + 1, r.describe(schema, bins), r.stats.z));
    }
    let mut header: Vec<String> = (1..=lfm.rules.len()).map(|j| format!("r{j}")).collect();
    header.push(schema.target.clone());
    text.push_str(&header.join(","));
    text.push('\n');
    for i in 0..lfm.matrix.rows() {
        for v in lfm.matrix.row(i) {
            text.push_str(&format!("{v},"));
        }
        text.push_str(&schema.classes[labels[i]]);
        text.push('\n');
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Column as DataColumn, FeatureBins, FeatureSpec};
    use crate::rulemine::{Condition, RuleStats};
    use std::sync::Arc;

    #[test]
    fn delta_fixtures() {
        assert!((delta_distance(&[7.5], &[5.0], &[10.0], &[1.0], 2.0).unwrap() - 1.5).abs() < 1e-9);
        assert_eq!(delta_distance(&[5.0], &[5.0], &[10.0], &[1.0], 3.0).unwrap(), 3.0);
        let two = delta_distance(&[1.0, 2.0], &[1.0, 2.0], &[4.0, 4.0], &[1.0, 1.0], 1.0).unwrap();
        assert!((two - 2f64.sqrt()).abs() < 1e-12);
        assert!(delta_distance(&[1.0], &[1.0], &[0.0], &[1.0], 1.0).is_err());
    }

    #[test]
    fn delta_peaks_at_center() {
        let at = |x: f64| delta_distance(&[x], &[5.0], &[10.0], &[0.5], 2.0).unwrap();
        let mut prev = at(5.0);
        for k in 1..40 {
            let d = 0.25 * k as f64;
            let v = at(5.0 + d);
            assert!(v < prev || v == 0.0);
            assert_eq!(v, at(5.0 - d));
            prev = v;
        }
    }

    fn fixture() -> (Dataset, BinMap, BinnedDataset) {
        let schema = FeatureSchema::new(
            "t",
            vec![FeatureSpec::continuous("x"), FeatureSpec::categorical("c", vec!["u", "v"])],
            "y",
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let xs = [0.5, 4.5, 5.0, 7.5, 9.5, 2.0];
        let cs = [0, 1, 1, 0, 1, 0];
        let ds = Dataset::new(
            Arc::new(schema),
            vec![
                DataColumn::Continuous(xs.iter().map(|&v| Some(v)).collect()),
                DataColumn::Categorical(cs.iter().map(|&v| Some(v)).collect()),
            ],
            vec![0, 1, 1, 0, 1, 0],
        )
        .unwrap();
        let bins = BinMap::from_bins(vec![
            FeatureBins::Continuous {
                edges: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            },
            FeatureBins::Categorical { levels: 2 },
        ]);
        let binned = bins.apply(&ds).unwrap();
        (ds, bins, binned)
    }

    fn stats(z: f64) -> RuleStats {
        RuleStats {
            n: 3,
            class_count: 2,
            p: 0.6,
            p0: 0.5,
            z,
        }
    }

    #[test]
    fn encodings() {
        let (ds, bins, binned) = fixture();
        let rules = RuleSet::from_rules(
            2,
            [
                Rule::new(vec![Condition::interval(0, 2, 2)], 0, stats(2.0)),
                Rule::new(vec![Condition::categories(1, [1])], 1, stats(2.5)),
                Rule::new(vec![Condition::interval(0, 2, 2), Condition::categories(1, [1])], 1, stats(3.0)),
            ],
        );
        let lfm = transform(&ds, &binned, &bins, &rules, Encoding::Default).unwrap();
        assert_eq!((lfm.matrix.rows(), lfm.matrix.cols()), (6, 3));
        // class-0 rule on x in [4, 6[: center 5, span 10, w_i = 1, w_r = 2
        assert!((lfm.matrix.get(3, 0) - 1.5).abs() < 1e-12);
        assert_eq!(lfm.matrix.get(2, 0), 2.0);
        let class1 = rules.class_rules(1);
        let (disc, mixed) = if class1[0].dimension() == 1 { (1, 2) } else { (2, 1) };
        let cats: Vec<f64> = (0..6).map(|i| lfm.matrix.get(i, disc)).collect();
        assert_eq!(cats, vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0]);
        // mixed rule is zero wherever the categorical condition fails
        for i in [0, 3, 5] {
            assert_eq!(lfm.matrix.get(i, mixed), 0.0);
        }
        assert!(lfm.matrix.get(4, mixed) > 0.0);

        let bin = transform(&ds, &binned, &bins, &rules, Encoding::Binary).unwrap();
        for (j, r) in rules.iter().enumerate() {
            for i in 0..6 {
                assert_eq!(bin.matrix.get(i, j), if r.matches(&binned, i) { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn unknown_feature_is_rejected() {
        let (_, bins, _) = fixture();
        let rules = RuleSet::from_rules(2, [Rule::new(vec![Condition::interval(5, 0, 1)], 0, stats(2.0))]);
        assert!(LocalFeatureMap::fit(&rules, &bins, Encoding::Binary, WeightScope::PerClass).is_err());
    }
}
