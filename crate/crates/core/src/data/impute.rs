use std::sync::Arc;

use super::{Column, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fill {
    Continuous(f64),
    Categorical(u32),
}

/// Median (continuous) / modal category (categorical) fill values.
#[derive(Debug, Clone, PartialEq)]
pub struct Imputer {
    fills: Vec<Fill>,
}

impl Imputer {
    /// Fill values come from `train` only. Mode ties resolve to the lowest
    /// category index.
    pub fn fit(train: &Dataset) -> Result<Self> {
        let mut fills = Vec::with_capacity(train.n_features());
        for (f, col) in train.columns().iter().enumerate() {
            let name = &train.schema().features[f].name;
            let fill = match col {
                Column::Continuous(v) => {
                    let mut obs: Vec<f64> = v.iter().flatten().copied().collect();
                    if obs.is_empty() {
                        return Err(Error::Data(format!("feature `{name}` is entirely missing")));
                    }
                    obs.sort_by(f64::total_cmp);
                    Fill::Continuous(median_sorted(&obs))
                }
                Column::Categorical(v) => {
                    let arity = match &train.schema().features[f].kind {
                        super::FeatureKind::Categorical(c) => c.len(),
                        super::FeatureKind::Continuous => unreachable!(),
                    };
                    let mut counts = vec![0usize; arity];
                    for &c in v.iter().flatten() {
                        counts[c as usize] += 1;
                    }
                    let best = counts.iter().copied().max().unwrap_or(0);
                    if best == 0 {
                        return Err(Error::Data(format!("feature `{name}` is entirely missing")));
                    }
                    Fill::Categorical(counts.iter().position(|&c| c == best).unwrap() as u32)
                }
            };
            fills.push(fill);
        }
        Ok(Imputer { fills })
    }

    pub fn fills(&self) -> &[Fill] {
        &self.fills
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if ds.n_features() != self.fills.len() {
            return Err(Error::Dimension {
                expected: self.fills.len(),
                got: ds.n_features(),
            });
        }
        let columns = ds
            .columns()
            .iter()
            .zip(&self.fills)
            .map(|(col, fill)| match (col, fill) {
                (Column::Continuous(v), Fill::Continuous(x)) => {
                    Ok(Column::Continuous(v.iter().map(|c| Some(c.unwrap_or(*x))).collect()))
                }
                (Column::Categorical(v), Fill::Categorical(k)) => {
                    Ok(Column::Categorical(v.iter().map(|c| Some(c.unwrap_or(*k))).collect()))
                }
                _ => Err(Error::Data("imputer fitted on a different schema".into())),
            })
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(Arc::clone(ds.schema_arc()), columns, ds.labels().to_vec())
    }
}

fn median_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureSchema, FeatureSpec};
    use proptest::prelude::*;

    fn ds(cont: Vec<Option<f64>>, cat: Vec<Option<u32>>) -> Dataset {
        let schema = FeatureSchema::new(
            "t",
            vec![FeatureSpec::continuous("x"), FeatureSpec::categorical("c", ["a", "b", "c"])],
            "y",
            vec!["n".into(), "p".into()],
        )
        .unwrap();
        let n = cont.len();
        Dataset::new(
            Arc::new(schema),
            vec![Column::Continuous(cont), Column::Categorical(cat)],
            vec![0; n],
        )
        .unwrap()
    }

    #[test]
    fn median_and_mode_fill() {
        let d = ds(
            vec![Some(1.0), Some(2.0), Some(4.0), None],
            vec![Some(0), Some(0), Some(1), None],
        );
        let imp = Imputer::fit(&d).unwrap();
        assert_eq!(imp.fills(), &[Fill::Continuous(2.0), Fill::Categorical(0)]);
        let out = imp.apply(&d).unwrap();
        assert_eq!(out.missing_count(), 0);
        assert_eq!(out.continuous(0, 3), Some(2.0));
        assert_eq!(out.column(1), &Column::Categorical(vec![Some(0), Some(0), Some(1), Some(0)]));
    }

    #[test]
    fn complete_data_unchanged() {
        let d = ds(vec![Some(3.0), Some(1.0)], vec![Some(2), Some(1)]);
        assert_eq!(Imputer::fit(&d).unwrap().apply(&d).unwrap(), d);
    }

    #[test]
    fn entirely_missing_feature_is_an_error() {
        let d = ds(vec![None, None], vec![Some(1), Some(1)]);
        assert!(Imputer::fit(&d).is_err());
    }

    proptest! {
        #[test]
        fn observed_values_never_change(
            cells in proptest::collection::vec((proptest::option::of(-1e3f64..1e3), proptest::option::of(0u32..3)), 1..40)
        ) {
            let (cont, cat): (Vec<_>, Vec<_>) = cells.into_iter().unzip();
            prop_assume!(cont.iter().any(Option::is_some) && cat.iter().any(Option::is_some));
            let d = ds(cont.clone(), cat.clone());
            let out = Imputer::fit(&d).unwrap().apply(&d).unwrap();
            prop_assert_eq!(out.missing_count(), 0);
            for i in 0..cont.len() {
                if let Some(x) = cont[i] { prop_assert_eq!(out.continuous(0, i), Some(x)); }
                if let (Some(k), Column::Categorical(v)) = (cat[i], out.column(1)) { prop_assert_eq!(v[i], Some(k)); }
            }
        }
    }
}
