use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureKind {
    Continuous,
    /// Ordered category labels; values are stored as indices into this list.
    Categorical(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
}

impl FeatureSpec {
    pub fn continuous(name: impl Into<String>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Continuous,
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, cats: impl IntoIterator<Item = S>) -> Self {
        FeatureSpec {
            name: name.into(),
            kind: FeatureKind::Categorical(cats.into_iter().map(Into::into).collect()),
        }
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, FeatureKind::Continuous)
    }
}

/// Ordered feature descriptions plus the target and its class labels.
///
/// Text form, one declaration per line (`#` starts a comment):
///
/// ```text
/// name = iris
/// missing = ?
/// target = species : setosa, versicolor, virginica
/// feature = sepal_length : continuous
/// feature = colour : categorical : blue, white, red
/// ```
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSchema {
    pub name: String,
    pub features: Vec<FeatureSpec>,
    pub target: String,
    pub classes: Vec<String>,
    pub missing_token: Option<String>,
}

impl FeatureSchema {
    pub fn new(
        name: impl Into<String>,
        features: Vec<FeatureSpec>,
        target: impl Into<String>,
        classes: Vec<String>,
    ) -> Result<Self> {
        let schema = FeatureSchema {
            name: name.into(),
            features,
            target: target.into(),
            classes,
            missing_token: None,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for f in &self.features {
            if f.name.is_empty() {
                return Err(Error::Schema("empty feature name".into()));
            }
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature name `{}`", f.name)));
            }
            if let FeatureKind::Categorical(cats) = &f.kind {
                if cats.len() < 2 {
                    return Err(Error::Schema(format!(
                        "categorical feature `{}` needs at least 2 categories",
                        f.name
                    )));
                }
                if cats.len() > 64 {
                    return Err(Error::Schema(format!(
                        "categorical feature `{}` has more than 64 categories",
                        f.name
                    )));
                }
                let uniq: HashSet<_> = cats.iter().collect();
                if uniq.len() != cats.len() {
                    return Err(Error::Schema(format!("duplicate category in `{}`", f.name)));
                }
            }
        }
        if self.features.is_empty() {
            return Err(Error::Schema("no features declared".into()));
        }
        if self.classes.len() < 2 {
            return Err(Error::Schema("target needs at least 2 class labels".into()));
        }
        if seen.contains(self.target.as_str()) {
            return Err(Error::Schema(format!("target `{}` is also a feature", self.target)));
        }
        Ok(())
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut name = String::new();
        let mut features = Vec::new();
        let mut target = None;
        let mut missing = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, lineno + 1, "expected `key = value`"))?;
            let value = value.trim();
            match key.trim() {
                "name" => name = value.to_string(),
                "missing" => missing = Some(value.to_string()),
                "target" => {
                    let (t, labels) = value
                        .split_once(':')
                        .ok_or_else(|| Error::parse(origin, lineno + 1, "target needs `name : labels`"))?;
                    target = Some((t.trim().to_string(), split_list(labels)));
                }
                "feature" => {
                    let parts: Vec<&str> = value.splitn(3, ':').map(str::trim).collect();
                    let spec = match parts.as_slice() {
                        [n, "continuous"] => FeatureSpec::continuous(*n),
                        [n, "categorical", cats] => FeatureSpec::categorical(*n, split_list(cats)),
                        _ => {
                            return Err(Error::parse(
                                origin,
                                lineno + 1,
                                "feature needs `name : continuous` or `name : categorical : a, b`",
                            ))
                        }
                    };
                    features.push(spec);
                }
                other => {
                    return Err(Error::parse(origin, lineno + 1, format!("unknown key `{other}`")));
                }
            }
        }
        let (target, classes) = target.ok_or_else(|| Error::Schema(format!("{origin}: no target declared")))?;
        let mut schema = FeatureSchema::new(name, features, target, classes)?;
        schema.missing_token = missing;
        Ok(schema)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.name.is_empty() {
            out.push_str(&format!("name = {}\n", self.name));
        }
        if let Some(m) = &self.missing_token {
            out.push_str(&format!("missing = {m}\n"));
        }
        out.push_str(&format!("target = {} : {}\n", self.target, self.classes.join(", ")));
        for f in &self.features {
            match &f.kind {
                FeatureKind::Continuous => out.push_str(&format!("feature = {} : continuous\n", f.name)),
                FeatureKind::Categorical(c) => {
                    out.push_str(&format!("feature = {} : categorical : {}\n", f.name, c.join(", ")))
                }
            }
        }
        out
    }
}

fn split_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let text = "name = toy\nmissing = NA\ntarget = y : a, b\nfeature = x1 : continuous\nfeature = c : categorical : blue, white, red # colours\n";
        let s = FeatureSchema::parse(text, "toy").unwrap();
        assert_eq!(s.n_features(), 2);
        assert_eq!(s.missing_token.as_deref(), Some("NA"));
        assert_eq!(s.features[1].kind, FeatureKind::Categorical(vec!["blue".into(), "white".into(), "red".into()]));
        assert_eq!(FeatureSchema::parse(&s.to_text(), "again").unwrap(), s);
    }

    #[test]
    fn rejects_invalid_schemas() {
        assert!(FeatureSchema::parse("target = y : a\nfeature = x : continuous\n", "t").is_err());
        assert!(FeatureSchema::parse("target = y : a, b\nfeature = x : continuous\nfeature = x : continuous\n", "t").is_err());
        assert!(FeatureSchema::parse("target = y : a, b\nfeature = c : categorical : only\n", "t").is_err());
        assert!(FeatureSchema::parse("feature = x : continuous\n", "t").is_err());
        assert!(FeatureSchema::parse("target = y : a, b\nfeature = x : ordinal\n", "t").is_err());
    }
}
