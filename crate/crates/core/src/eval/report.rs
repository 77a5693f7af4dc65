//! Report files. Every table is computed from the per-cell records alone,
//! so `records.jsonl` is enough to regenerate them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::benchmark::{BenchmarkReport, CellRecord, ConditionSummary};
use super::metrics::{jaccard_stability, mean_std, median};
use super::pipeline::Strategy;
use crate::error::{Error, Result};

pub const RECORDS_FILE: &str = "records.jsonl";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Aggregate of one (dataset, strategy) pair over its splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub strategy: String,
    pub scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub median_complexity: f64,
    pub failed: usize,
}

impl Summary {
    pub fn mean_over_std(&self) -> f64 {
        self.mean / self.std
    }
}

/// Groups in first-appearance order.
fn grouped(records: &[CellRecord]) -> Vec<((String, String), Vec<&CellRecord>)> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&CellRecord>> = BTreeMap::new();
    for r in records {
        let key = (r.dataset.clone(), r.strategy.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let mut v = groups.remove(&k).unwrap_or_default();
            v.sort_by_key(|r| r.split);
            (k, v)
        })
        .collect()
}

pub fn summaries(records: &[CellRecord]) -> Vec<Summary> {
    grouped(records)
        .into_iter()
        .map(|((dataset, strategy), recs)| {
            let scores: Vec<f64> = recs.iter().filter_map(|r| r.f1).collect();
            let (mean, std) = mean_std(&scores);
            let cx: Vec<f64> = recs.iter().filter_map(|r| r.complexity.map(|c| c as f64)).collect();
            Summary {
                dataset,
                strategy,
                mean,
                std,
                median_complexity: median(&cx),
                failed: recs.iter().filter(|r| !r.ok()).count(),
                scores,
            }
        })
        .collect()
}

/// Jaccard stability of the covered `(feature, bin)` tuples per rule-based
/// strategy, over its successful splits.
pub fn stabilities(records: &[CellRecord]) -> Vec<(String, String, f64, f64)> {
    grouped(records)
        .into_iter()
        .filter(|((_, s), _)| Strategy::parse(s).is_some_and(|s| s.uses_rules()))
        .map(|((d, s), recs)| {
            let sets: Vec<BTreeSet<(usize, usize)>> = recs.iter().filter(|r| r.ok()).map(|r| r.tuples.iter().copied().collect()).collect();
            let (m, sd) = jaccard_stability(&sets);
            (d, s, m, sd)
        })
        .collect()
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        "NA".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.4}")
    }
}

pub fn level_table(records: &[CellRecord], level: u8) -> String {
    let mut out = String::from("dataset,strategy,splits,mean_f1,std_f1,mean_over_std,median_complexity,failed\n");
    for s in summaries(records) {
        let in_level = Strategy::parse(&s.strategy).is_some_and(|st| st.levels().contains(&level));
        if !in_level {
            continue;
        }
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.dataset,
            s.strategy,
            s.scores.len(),
            fmt(s.mean),
            fmt(s.std),
            fmt(s.mean_over_std()),
            fmt(s.median_complexity),
            s.failed
        );
    }
    out
}

pub fn complexity_table(records: &[CellRecord]) -> String {
    let mut out = String::from("dataset,strategy,median_complexity\n");
    for s in summaries(records) {
        let _ = writeln!(out, "{},{},{}", s.dataset, s.strategy, fmt(s.median_complexity));
    }
    out
}

pub fn stability_table(records: &[CellRecord]) -> String {
    let mut out = String::from("dataset,strategy,mean_jaccard,std_jaccard\n");
    for (d, s, m, sd) in stabilities(records) {
        let _ = writeln!(out, "{d},{s},{},{}", fmt(m), fmt(sd));
    }
    out
}

pub fn splits_table(records: &[CellRecord]) -> String {
    let mut out = String::from("dataset,strategy,split,f1,param,complexity,n_rules,error\n");
    for r in records {
        let opt = |v: Option<String>| v.unwrap_or_default();
        let err = r.error.as_deref().unwrap_or("").replace(['"', ','], ";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.dataset,
            r.strategy,
            r.split,
            opt(r.f1.map(fmt)),
            opt(r.param.map(|p| p.to_string())),
            opt(r.complexity.map(|c| c.to_string())),
            opt(r.n_rules.map(|c| c.to_string())),
            err
        );
    }
    out
}

/// One rule of the rule report: how often it was selected over the splits
/// and its mean z-score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleReportEntry {
    pub dataset: String,
    pub strategy: String,
    pub class: String,
    pub rule: String,
    pub conditions: Vec<ConditionSummary>,
    pub frequency: usize,
    pub splits: usize,
    pub mean_z: Option<f64>,
}

pub fn rule_report(records: &[CellRecord]) -> Vec<RuleReportEntry> {
    let mut out = Vec::new();
    for ((dataset, strategy), recs) in grouped(records) {
        let ok: Vec<&CellRecord> = recs.into_iter().filter(|r| r.ok() && r.n_rules.is_some()).collect();
        if ok.is_empty() {
            continue;
        }
        let mut by_key: BTreeMap<(String, String), (Vec<ConditionSummary>, usize, Vec<f64>)> = BTreeMap::new();
        for r in &ok {
            for rule in &r.rules {
                let e = by_key
                    .entry((rule.class.clone(), rule.key.clone()))
                    .or_insert_with(|| (rule.conditions.clone(), 0, Vec::new()));
                e.1 += 1;
                if let Some(z) = rule.z {
                    e.2.push(z);
                }
            }
        }
        let mut entries: Vec<RuleReportEntry> = by_key
            .into_iter()
            .map(|((class, rule), (conditions, frequency, zs))| RuleReportEntry {
                dataset: dataset.clone(),
                strategy: strategy.clone(),
                class,
                rule,
                conditions,
                frequency,
                splits: ok.len(),
                mean_z: (!zs.is_empty()).then(|| zs.iter().sum::<f64>() / zs.len() as f64),
            })
            .collect();
        entries.sort_by(|a, b| a.class.cmp(&b.class).then(b.frequency.cmp(&a.frequency)).then(a.rule.cmp(&b.rule)));
        out.extend(entries);
    }
    out
}

pub fn records_to_jsonl(records: &[CellRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}

pub fn records_from_jsonl(text: &str, origin: &str) -> Result<Vec<CellRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::parse(origin, i + 1, e.to_string())))
        .collect()
}

pub fn read_records(dir: &Path) -> Result<Vec<CellRecord>> {
    let path = dir.join(RECORDS_FILE);
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    records_from_jsonl(&text, &path.display().to_string())
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Table files derived from the records; returns their names.
pub fn write_tables(records: &[CellRecord], dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for level in 1..=3u8 {
        let name = format!("level{level}.csv");
        write(dir, &name, &level_table(records, level))?;
        files.push(name);
    }
    for (name, text) in [
        ("complexity.csv", complexity_table(records)),
        ("stability.csv", stability_table(records)),
        ("splits.csv", splits_table(records)),
    ] {
        write(dir, name, &text)?;
        files.push(name.to_string());
    }
    let rules: String = rule_report(records)
        .iter()
        .map(|e| serde_json::to_string(e).expect("rule report serializes") + "\n")
        .collect();
    write(dir, "rules.jsonl", &rules)?;
    files.push("rules.jsonl".into());
    Ok(files)
}

pub fn manifest_text(report: &BenchmarkReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "tool = localrules {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(s, "seed = {}", report.seed);
    let _ = writeln!(s, "config_sha256 = {}", report.config_hash);
    let _ = writeln!(s, "cells = {}", report.records.len());
    let _ = writeln!(s, "failed_cells = {}", report.records.iter().filter(|r| !r.ok()).count());
    for d in &report.datasets {
        let counts: Vec<String> = d.class_counts.iter().map(|(c, n)| format!("{c}:{n}")).collect();
        let _ = writeln!(
            s,
            "dataset = {} samples={} features={} missing={} classes={}",
            d.name,
            d.samples,
            d.features,
            d.missing,
            counts.join("/")
        );
    }
    s.push_str("\n[config]\n");
    s.push_str(&report.config_text);
    s
}

/// Records, manifest and every table.
pub fn write_report(report: &BenchmarkReport, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write(dir, RECORDS_FILE, &records_to_jsonl(&report.records))?;
    write(dir, MANIFEST_FILE, &manifest_text(report))?;
    let mut files = vec![RECORDS_FILE.to_string(), MANIFEST_FILE.to_string()];
    files.extend(write_tables(&report.records, dir)?);
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(dataset: &str, strategy: &str, split: usize, f1: Option<f64>) -> CellRecord {
        CellRecord {
            dataset: dataset.into(),
            strategy: strategy.into(),
            split,
            f1,
            param: f1.map(|_| 1.0),
            complexity: f1.map(|_| 4),
            n_rules: Some(2),
            tuples: vec![(0, split % 2)],
            rules: Vec::new(),
            error: if f1.is_none() { Some("boom".into()) } else { None },
        }
    }

    #[test]
    fn summaries_match_records() {
        let records = vec![
            rec("iris", "rm1d-l2lr", 0, Some(90.0)),
            rec("iris", "rm1d-l2lr", 1, Some(100.0)),
            rec("iris", "rm1d-l2lr", 2, None),
        ];
        let s = &summaries(&records)[0];
        assert_eq!(s.mean, 95.0);
        assert_eq!(s.std, 5.0);
        assert_eq!(s.failed, 1);
        assert!(level_table(&records, 1).contains("iris,rm1d-l2lr,2,95.0000,5.0000,19.0000,4.0000,1"));
        assert_eq!(stabilities(&records)[0].2, 0.0);
    }

    #[test]
    fn records_round_trip() {
        let records = vec![rec("wine", "rf", 0, Some(88.123456789)), rec("wine", "rf", 1, None)];
        let text = records_to_jsonl(&records);
        assert_eq!(records_from_jsonl(&text, "t").unwrap(), records);
        assert!(records_from_jsonl("{nope", "t").is_err());
    }
}
