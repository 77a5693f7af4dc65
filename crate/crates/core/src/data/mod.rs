//! Dataset ingestion and preprocessing.

mod csv_io;
mod fetch;
mod impute;
mod quantize;
mod schema;
mod synthetic;

use std::sync::Arc;

pub use csv_io::{load_csv, write_binned_csv, write_csv, DEFAULT_MISSING_TOKEN};
pub use fetch::{fetch_datasets, parse_manifest, FetchRecord, FetchStatus, ManifestEntry};
pub use impute::{Fill, Imputer};
pub use quantize::{code_matrix, global_design, one_hot, BinMap, BinnedDataset, FeatureBins};
pub use schema::{FeatureKind, FeatureSchema, FeatureSpec};
pub use synthetic::{generate_synthetic, label_synthetic, synthetic_schema, Color};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Continuous(Vec<Option<f64>>),
    Categorical(Vec<Option<u32>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn missing_count(&self) -> usize {
        match self {
            Column::Continuous(v) => v.iter().filter(|c| c.is_none()).count(),
            Column::Categorical(v) => v.iter().filter(|c| c.is_none()).count(),
        }
    }

    fn select(&self, idx: &[usize]) -> Column {
        match self {
            Column::Continuous(v) => Column::Continuous(idx.iter().map(|&i| v[i]).collect()),
            Column::Categorical(v) => Column::Categorical(idx.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Column-typed samples with class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    schema: Arc<FeatureSchema>,
    columns: Vec<Column>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(schema: Arc<FeatureSchema>, columns: Vec<Column>, labels: Vec<usize>) -> Result<Self> {
        if columns.len() != schema.n_features() {
            return Err(Error::Data(format!(
                "{} columns for {} schema features",
                columns.len(),
                schema.n_features()
            )));
        }
        let n = labels.len();
        if n == 0 {
            return Err(Error::Data("empty dataset".into()));
        }
        for (f, (col, spec)) in columns.iter().zip(&schema.features).enumerate() {
            if col.len() != n {
                return Err(Error::Data(format!(
                    "column `{}` has {} values, expected {n}",
                    spec.name,
                    col.len()
                )));
            }
            match (col, &spec.kind) {
                (Column::Continuous(_), FeatureKind::Continuous) => {}
                (Column::Categorical(v), FeatureKind::Categorical(cats)) => {
                    if let Some(bad) = v.iter().flatten().find(|&&c| c as usize >= cats.len()) {
                        return Err(Error::Data(format!(
                            "category index {bad} out of range for feature {f} (`{}`)",
                            spec.name
                        )));
                    }
                }
                _ => {
                    return Err(Error::Data(format!(
                        "column kind of `{}` does not match schema",
                        spec.name
                    )))
                }
            }
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= schema.n_classes()) {
            return Err(Error::Data(format!("class index {bad} out of range")));
        }
        Ok(Dataset {
            schema,
            columns,
            labels,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<FeatureSchema> {
        &self.schema
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, f: usize) -> &Column {
        &self.columns[f]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn n_classes(&self) -> usize {
        self.schema.n_classes()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        class_counts(&self.labels, self.n_classes())
    }

    pub fn missing_count(&self) -> usize {
        self.columns.iter().map(Column::missing_count).sum()
    }

    /// Continuous value of sample `i`, `None` if missing or categorical.
    pub fn continuous(&self, f: usize, i: usize) -> Option<f64> {
        match &self.columns[f] {
            Column::Continuous(v) => v[i],
            Column::Categorical(_) => None,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            schema: Arc::clone(&self.schema),
            columns: self.columns.iter().map(|c| c.select(idx)).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn with_labels(&self, labels: Vec<usize>) -> Result<Dataset> {
        Dataset::new(Arc::clone(&self.schema), self.columns.clone(), labels)
    }
}

pub fn class_counts(labels: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0; n_classes];
    for &y in labels {
        counts[y] += 1;
    }
    counts
}
