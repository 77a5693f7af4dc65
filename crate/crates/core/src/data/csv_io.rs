use std::path::Path;
use std::sync::Arc;

use super::{BinnedDataset, Column, Dataset, FeatureKind, FeatureSchema};
use crate::error::{Error, Result};

pub const DEFAULT_MISSING_TOKEN: &str = "?";

/// Reads a comma separated file with one header row.
///
/// Columns are matched to the schema by header name, so their order in the
/// file is free; every schema feature and the target must be present and no
/// other column may appear.
pub fn load_csv(path: &Path, schema: &FeatureSchema, missing_token: &str) -> Result<Dataset> {
    let origin = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => Error::parse(&origin, 0, format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(&origin, 1, e.to_string()))?
        .clone();
    let expected = schema.n_features() + 1;
    if headers.len() != expected {
        return Err(Error::parse(
            &origin,
            1,
            format!("{} columns in header, schema declares {expected}", headers.len()),
        ));
    }
    // slot[c] = Some(feature index) or None for the target column
    let mut slot = Vec::with_capacity(headers.len());
    let mut target_col = None;
    for (c, h) in headers.iter().enumerate() {
        if h == schema.target {
            target_col = Some(c);
            slot.push(None);
        } else if let Some(f) = schema.feature_index(h) {
            if slot.contains(&Some(f)) {
                return Err(Error::parse(&origin, 1, format!("duplicate column `{h}`")));
            }
            slot.push(Some(f));
        } else {
            return Err(Error::parse(&origin, 1, format!("column `{h}` not in schema")));
        }
    }
    if target_col.is_none() {
        return Err(Error::parse(&origin, 1, format!("target column `{}` missing", schema.target)));
    }

    let mut columns: Vec<Column> = schema
        .features
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Continuous => Column::Continuous(Vec::new()),
            FeatureKind::Categorical(_) => Column::Categorical(Vec::new()),
        })
        .collect();
    let mut labels = Vec::new();

    for (r, record) in reader.records().enumerate() {
        let line = r + 2;
        let record = record.map_err(|e| Error::parse(&origin, line, e.to_string()))?;
        if record.len() != expected {
            return Err(Error::parse(
                &origin,
                line,
                format!("{} cells, expected {expected}", record.len()),
            ));
        }
        for (cell, s) in record.iter().zip(&slot) {
            let Some(f) = *s else {
                let y = schema
                    .class_index(cell)
                    .ok_or_else(|| Error::parse(&origin, line, format!("unknown class label `{cell}`")))?;
                labels.push(y);
                continue;
            };
            let missing = cell == missing_token || cell.is_empty();
            match (&mut columns[f], &schema.features[f].kind) {
                (Column::Continuous(v), _) => {
                    if missing {
                        v.push(None);
                    } else {
                        let x: f64 = cell.parse().map_err(|_| {
                            Error::parse(&origin, line, format!("unparseable number `{cell}` in `{}`", schema.features[f].name))
                        })?;
                        if !x.is_finite() {
                            return Err(Error::parse(&origin, line, format!("non-finite value `{cell}`")));
                        }
                        v.push(Some(x));
                    }
                }
                (Column::Categorical(v), FeatureKind::Categorical(cats)) => {
                    if missing {
                        v.push(None);
                    } else {
                        let k = cats.iter().position(|c| c == cell).ok_or_else(|| {
                            Error::parse(&origin, line, format!("unknown category `{cell}` in `{}`", schema.features[f].name))
                        })?;
                        v.push(Some(k as u32));
                    }
                }
                _ => unreachable!("columns are built from the schema"),
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::Data(format!("{origin}: empty dataset (header only)")));
    }
    Dataset::new(Arc::new(schema.clone()), columns, labels)
}

fn io_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Internal(format!("csv writer: {other:?}")),
    }
}

/// Writes the dataset back in the same layout `load_csv` reads (features in
/// schema order, target last).
pub fn write_csv(ds: &Dataset, path: &Path, missing_token: &str) -> Result<()> {
    let schema = ds.schema();
    let mut w = csv::WriterBuilder::new().from_path(path).map_err(|e| io_err(path, e))?;
    let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&schema.target);
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for i in 0..ds.n_samples() {
        let mut row = Vec::with_capacity(header.len());
        for (col, spec) in ds.columns().iter().zip(&schema.features) {
            row.push(match (col, &spec.kind) {
                (Column::Continuous(v), _) => v[i].map_or_else(|| missing_token.to_string(), |x| x.to_string()),
                (Column::Categorical(v), FeatureKind::Categorical(c)) => {
                    v[i].map_or_else(|| missing_token.to_string(), |k| c[k as usize].clone())
                }
                _ => unreachable!(),
            });
        }
        row.push(schema.classes[ds.labels()[i]].clone());
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Binned dataset as CSV with 1-based bin indices.
pub fn write_binned_csv(ds: &BinnedDataset, path: &Path) -> Result<()> {
    let schema = ds.schema();
    let mut w = csv::WriterBuilder::new().from_path(path).map_err(|e| io_err(path, e))?;
    let mut header: Vec<&str> = schema.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&schema.target);
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for i in 0..ds.n_samples() {
        let mut row: Vec<String> = (0..ds.n_features()).map(|f| (ds.code(f, i) + 1).to_string()).collect();
        row.push(schema.classes[ds.labels()[i]].clone());
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::FeatureSpec;
    use std::io::Write;

    fn schema() -> FeatureSchema {
        FeatureSchema::new(
            "t",
            vec![FeatureSpec::continuous("x"), FeatureSpec::categorical("c", ["a", "b"])],
            "y",
            vec!["no".into(), "yes".into()],
        )
        .unwrap()
    }

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn missing_marker_keeps_row() {
        let f = file("x,c,y\n1.5,a,no\n?,b,yes\n2,?,yes\n");
        let ds = load_csv(f.path(), &schema(), "?").unwrap();
        assert_eq!(ds.n_samples(), 3);
        assert_eq!(ds.column(0), &Column::Continuous(vec![Some(1.5), None, Some(2.0)]));
        assert_eq!(ds.column(1), &Column::Categorical(vec![Some(0), Some(1), None]));
        assert_eq!(ds.labels(), &[0, 1, 1]);
    }

    #[test]
    fn columns_matched_by_name() {
        let f = file("y,c,x\nyes,b,3\n");
        let ds = load_csv(f.path(), &schema(), "?").unwrap();
        assert_eq!(ds.continuous(0, 0), Some(3.0));
        assert_eq!(ds.labels(), &[1]);
    }

    #[test]
    fn error_cases() {
        let s = schema();
        assert!(matches!(load_csv(file("x,c,y\n").path(), &s, "?"), Err(Error::Data(_))));
        assert!(load_csv(file("x,c\n1,a\n").path(), &s, "?").is_err());
        assert!(load_csv(file("x,c,y\n1,a\n").path(), &s, "?").is_err());
        assert!(load_csv(file("x,c,y\nabc,a,no\n").path(), &s, "?").is_err());
        assert!(load_csv(file("x,c,y\n1,z,no\n").path(), &s, "?").is_err());
        assert!(load_csv(file("x,c,y\n1,a,maybe\n").path(), &s, "?").is_err());
        assert!(matches!(
            load_csv(Path::new("/nonexistent/file.csv"), &s, "?"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn write_then_load_is_identity() {
        let f = file("x,c,y\n0.1,a,no\n?,b,yes\n2.25,?,yes\n");
        let ds = load_csv(f.path(), &schema(), "?").unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, out.path(), "?").unwrap();
        assert_eq!(load_csv(out.path(), &schema(), "?").unwrap(), ds);
    }
}
