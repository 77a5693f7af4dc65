//! Line-delimited JSON rule records.
//!
//! One object per rule:
//!
//! ```text
//! {"class":1,"conditions":[{"feature":0,"interval":[2,5]}],"n":40,"class_count":31,"p":0.775,"p0":0.37,"z":6.1}
//! ```
//!
//! Bin and category indices are 0-based. `class_label` and `feature_name`
//! are written when a schema is supplied and ignored when reading.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Condition, Constraint, Rule, RuleSet, RuleStats};
use crate::data::FeatureSchema;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
struct ConditionRecord {
    feature: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    feature_name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    interval: Option<[u16; 2]>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    categories: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct RuleRecord {
    class: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    class_label: Option<String>,
    conditions: Vec<ConditionRecord>,
    #[serde(flatten)]
    stats: RuleStats,
}

pub fn rules_to_jsonl(rules: &RuleSet, schema: Option<&FeatureSchema>) -> String {
    let mut out = String::new();
    for r in rules.iter() {
        let rec = RuleRecord {
            class: r.target_class,
            class_label: schema.map(|s| s.classes[r.target_class].clone()),
            conditions: r
                .conditions
                .iter()
                .map(|c| {
                    let (interval, categories) = match c.constraint {
                        Constraint::Interval { lo, hi } => (Some([lo, hi]), None),
                        Constraint::Categories(_) => (None, Some(c.levels())),
                    };
                    ConditionRecord {
                        feature: c.feature,
                        feature_name: schema.map(|s| s.features[c.feature].name.clone()),
                        interval,
                        categories,
                    }
                })
                .collect(),
            stats: r.stats,
        };
        out.push_str(&serde_json::to_string(&rec).expect("rule records serialize"));
        out.push('\n');
    }
    out
}

pub fn rules_from_jsonl(text: &str, n_classes: usize, origin: &str) -> Result<RuleSet> {
    let mut rules = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |msg: String| Error::parse(origin, lineno + 1, msg);
        let rec: RuleRecord = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        if rec.class >= n_classes {
            return Err(bad(format!("class {} out of range", rec.class)));
        }
        let mut conditions = Vec::with_capacity(rec.conditions.len());
        for c in rec.conditions {
            let constraint = match (c.interval, c.categories) {
                (Some([lo, hi]), None) if lo <= hi => Constraint::Interval { lo, hi },
                (None, Some(cats)) if !cats.is_empty() && cats.iter().all(|&k| k < 64) => {
                    Constraint::Categories(cats.iter().fold(0u64, |m, &k| m | (1 << k)))
                }
                _ => return Err(bad("condition needs a valid `interval` or `categories`".into())),
            };
            conditions.push(Condition {
                feature: c.feature,
                constraint,
            });
        }
        let mut feats: Vec<usize> = conditions.iter().map(|c| c.feature).collect();
        feats.sort_unstable();
        feats.dedup();
        if conditions.is_empty() || feats.len() != conditions.len() {
            return Err(bad("rule needs conditions on distinct features".into()));
        }
        rules.push(Rule::new(conditions, rec.class, rec.stats));
    }
    Ok(RuleSet::from_rules(n_classes, rules))
}

pub fn write_rules(path: &Path, rules: &RuleSet, schema: Option<&FeatureSchema>) -> Result<()> {
    std::fs::write(path, rules_to_jsonl(rules, schema)).map_err(|e| Error::io(path, e))
}

pub fn read_rules(path: &Path, n_classes: usize) -> Result<RuleSet> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    rules_from_jsonl(&text, n_classes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_rule() -> impl Strategy<Value = Rule> {
        (
            0usize..3,
            proptest::collection::btree_map(0usize..6, (any::<bool>(), 0u16..10, 0u16..10, 1u64..1024), 1..3),
            0usize..500,
            0usize..500,
            any::<f64>().prop_filter("finite", |v| v.is_finite()),
            0.0f64..1.0,
            proptest::option::of(-1e6f64..1e6),
        )
            .prop_map(|(class, conds, n, k, p, p0, z)| {
                let conditions = conds
                    .into_iter()
                    .map(|(f, (cont, a, b, mask))| Condition {
                        feature: f,
                        constraint: if cont {
                            Constraint::Interval { lo: a.min(b), hi: a.max(b) }
                        } else {
                            Constraint::Categories(mask)
                        },
                    })
                    .collect();
                Rule::new(
                    conditions,
                    class,
                    RuleStats {
                        n,
                        class_count: k,
                        p,
                        p0,
                        z: z.unwrap_or(f64::NEG_INFINITY),
                    },
                )
            })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip_is_bit_exact(rules in proptest::collection::vec(arb_rule(), 0..20)) {
            let set = RuleSet::from_rules(3, rules);
            let text = rules_to_jsonl(&set, None);
            let back = rules_from_jsonl(&text, 3, "mem").unwrap();
            prop_assert_eq!(back.len(), set.len());
            for (a, b) in set.iter().zip(back.iter()) {
                prop_assert_eq!(&a.conditions, &b.conditions);
                prop_assert_eq!(a.stats.p.to_bits(), b.stats.p.to_bits());
                prop_assert_eq!(a.stats.p0.to_bits(), b.stats.p0.to_bits());
                prop_assert_eq!(a.stats.z.to_bits(), b.stats.z.to_bits());
                prop_assert_eq!(a.stats.n, b.stats.n);
            }
            prop_assert_eq!(rules_to_jsonl(&back, None), text);
        }
    }

    #[test]
    fn rejects_malformed_records() {
        assert!(rules_from_jsonl("{\"class\":0}\n", 2, "t").is_err());
        assert!(rules_from_jsonl("{\"class\":5,\"conditions\":[{\"feature\":0,\"interval\":[1,2]}],\"n\":1,\"class_count\":1,\"p\":1,\"p0\":0.5,\"z\":1}\n", 2, "t").is_err());
        assert!(rules_from_jsonl("{\"class\":0,\"conditions\":[{\"feature\":0,\"interval\":[3,2]}],\"n\":1,\"class_count\":1,\"p\":1,\"p0\":0.5,\"z\":1}\n", 2, "t").is_err());
    }
}
