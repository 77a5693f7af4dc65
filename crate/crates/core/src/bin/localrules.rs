//! Command line front end.
//!
//! Every command appends one JSON line to `runlog.jsonl` in its output
//! directory, or in the working directory when it fails early. Exit
//! status: 0 ok, 2 bad configuration or arguments, 3 data error, 4
//! internal invariant violation.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use localrules::altminers::{default_min_support, mine_assoc_rules, mine_tree_rules, tree_min_leaf, AssocConfig};
use localrules::config::RunConfig;
use localrules::data::{fetch_datasets, generate_synthetic, load_csv, write_csv, Dataset, FeatureSchema, DEFAULT_MISSING_TOKEN};
use localrules::eval::{read_records, records_to_jsonl, run_benchmark, weighted_f1, write_report, write_tables};
use localrules::features::{write_local_features, Encoding, LocalFeatureMap};
use localrules::learn::{train, ClassifierKind, HyperParams};
use localrules::matrix::Matrix;
use localrules::rulemine::{mine, read_rules, write_rules, MiningConfig, SizeThreshold};
use localrules::{Error, Result};

const CACHE_ENV: &str = "LOCALRULES_CACHE";
const RUN_LOG: &str = "runlog.jsonl";

#[derive(Parser)]
#[command(name = "localrules", version, about = "Supervised rule mining and rule-based local features")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the one in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the one in the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Maximum number of benchmark cells run in parallel.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download the files of a manifest into the cache, verifying checksums.
    Fetch {
        #[arg(long)]
        manifest: PathBuf,
        /// Cache directory (default: $LOCALRULES_CACHE, else `data`).
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Generate the synthetic rule-system dataset (CSV plus schema).
    Synth {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Output CSV; the schema is written next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine rules on a dataset and write them as JSON lines.
    Mine {
        #[command(flatten)]
        input: DataInput,
        #[arg(long, value_enum, default_value_t = Miner::Exhaustive)]
        miner: Miner,
        /// Maximum rule dimension for the exhaustive miner.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Turn a dataset into local features with a rule file.
    Transform {
        #[command(flatten)]
        input: DataInput,
        #[arg(long)]
        rules: PathBuf,
        /// `default` (binary / delta / mixed by rule type) or `binary`.
        #[arg(long, default_value = "default")]
        encoding: String,
        /// Dataset the rules were mined on; its bins are used. Defaults to
        /// the transformed dataset itself.
        #[arg(long)]
        fit_data: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on a feature CSV whose last column is the label.
    Train {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 100)]
        trees: usize,
        #[arg(long, default_value_t = 1)]
        min_leaf: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the benchmark described by --config.
    Benchmark,
    /// Rebuild tables from a benchmark directory without recomputing.
    Report {
        /// Directory holding `records.jsonl`.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args)]
struct DataInput {
    /// Dataset name from the config registry.
    #[arg(long, conflicts_with = "data")]
    dataset: Option<String>,
    /// CSV file; needs --schema unless `<file>.schema` exists.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Miner {
    Exhaustive,
    Tree,
    Assoc,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Records,
}

struct Outcome {
    dir: PathBuf,
    files: Vec<PathBuf>,
    info: serde_json::Value,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = command_name(&cli.command);
    let start = Instant::now();
    let result = run(&cli);
    let elapsed = start.elapsed().as_millis() as u64;
    let (code, log_dir) = match &result {
        Ok(out) => {
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            (0, Some(out.dir.clone()))
        }
        Err(e) => {
            eprintln!("error: {e}");
            (e.exit_code(), Some(cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."))))
        }
    };
    if let Some(dir) = log_dir {
        let line = json!({
            "command": name,
            "args": std::env::args().skip(1).collect::<Vec<_>>(),
            "status": if code == 0 { "ok" } else { "error" },
            "exit_code": code,
            "error": result.as_ref().err().map(|e| e.to_string()),
            "outputs": result.as_ref().map(|o| o.files.iter().map(|f| f.display().to_string()).collect::<Vec<_>>()).unwrap_or_default(),
            "info": result.as_ref().map(|o| o.info.clone()).unwrap_or(serde_json::Value::Null),
            "elapsed_ms": elapsed,
        });
        if let Err(e) = append_log(&dir, &line) {
            eprintln!("warning: run log not written: {e}");
        }
    }
    ExitCode::from(code as u8)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Fetch { .. } => "fetch",
        Command::Synth { .. } => "synth",
        Command::Mine { .. } => "mine",
        Command::Transform { .. } => "transform",
        Command::Train { .. } => "train",
        Command::Benchmark => "benchmark",
        Command::Report { .. } => "report",
    }
}

fn append_log(dir: &Path, line: &serde_json::Value) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(RUN_LOG);
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    writeln!(f, "{line}").map_err(|e| Error::io(&path, e))
}

fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Fetch { manifest, cache } => {
            let cache = cache
                .clone()
                .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("data"));
            let records = fetch_datasets(manifest, &cache)?;
            for r in &records {
                println!("{} {} {}", r.name, r.status.as_str(), r.path.display());
            }
            let info = json!(records.iter().map(|r| json!({"name": r.name, "status": r.status.as_str()})).collect::<Vec<_>>());
            Ok(Outcome {
                dir: cli.out_dir.clone().unwrap_or(cache),
                files: Vec::new(),
                info,
            })
        }
        Command::Synth { n, noise, out } => {
            let seed = cli.seed.ok_or_else(|| Error::Config("synth needs --seed".into()))?;
            let ds = generate_synthetic(*n, *noise, seed)?;
            let out = in_dir(cli, out);
            create_parent(&out)?;
            write_csv(&ds, &out, DEFAULT_MISSING_TOKEN)?;
            let schema_path = out.with_extension("schema");
            std::fs::write(&schema_path, ds.schema().to_text()).map_err(|e| Error::io(&schema_path, e))?;
            Ok(Outcome {
                dir: parent(&out),
                info: json!({"n": n, "noise": noise, "seed": seed, "class_counts": ds.class_counts()}),
                files: vec![out, schema_path],
            })
        }
        Command::Mine { input, miner, dim, out } => {
            let cfg = settings(cli)?;
            let ds = load_input(cli, &cfg, input)?;
            let filled = localrules::data::Imputer::fit(&ds)?.apply(&ds)?;
            let bins = localrules::data::BinMap::fit(&filled, cfg.bins)?;
            let binned = bins.apply(&filled)?;
            let mining = MiningConfig {
                max_dimension: *dim,
                z_min: cfg.z_min,
                n_bins: cfg.bins,
                size_threshold: SizeThreshold::PerClass,
                z_variant: cfg.z_variant,
            };
            let rules = match miner {
                Miner::Exhaustive => mine(&binned, &mining)?,
                Miner::Tree => mine_tree_rules(&binned, tree_min_leaf(&binned, cfg.bins), cfg.z_variant)?,
                Miner::Assoc => {
                    let ac = AssocConfig {
                        min_support: default_min_support(&binned, cfg.bins),
                        max_len: cfg.assoc_max_len,
                        z_min: cfg.z_min,
                        z_variant: cfg.z_variant,
                    };
                    mine_assoc_rules(&binned, &ac, &mining.class_thresholds(&binned))?
                }
            };
            let out = in_dir(cli, out);
            create_parent(&out)?;
            write_rules(&out, &rules, Some(ds.schema()))?;
            for r in rules.iter() {
                println!("{}", r.describe(ds.schema(), Some(&bins)));
            }
            Ok(Outcome {
                dir: parent(&out),
                info: json!({"rules": rules.len()}),
                files: vec![out],
            })
        }
        Command::Transform {
            input,
            rules,
            encoding,
            fit_data,
            out,
        } => {
            let cfg = settings(cli)?;
            let encoding = Encoding::parse(encoding).ok_or_else(|| Error::Config(format!("unknown encoding '{encoding}'")))?;
            let ds = load_input(cli, &cfg, input)?;
            let fit_ds = match fit_data {
                Some(p) => load_file(p, None)?,
                None => ds.clone(),
            };
            let imputer = localrules::data::Imputer::fit(&fit_ds)?;
            let bins = localrules::data::BinMap::fit(&imputer.apply(&fit_ds)?, cfg.bins)?;
            let filled = imputer.apply(&ds)?;
            let binned = bins.apply(&filled)?;
            let rules = read_rules(rules, ds.n_classes())?;
            let lfm = LocalFeatureMap::fit(&rules, &bins, encoding, cfg.weight_scope)?.transform(&filled, &binned)?;
            let out = in_dir(cli, out);
            create_parent(&out)?;
            write_local_features(&out, &lfm, ds.labels(), ds.schema(), Some(&bins))?;
            Ok(Outcome {
                dir: parent(&out),
                info: json!({"rows": lfm.matrix.rows(), "columns": lfm.matrix.cols()}),
                files: vec![out],
            })
        }
        Command::Train {
            features,
            model,
            c,
            gamma,
            trees,
            min_leaf,
            out,
        } => {
            let kind = ClassifierKind::parse(model).ok_or_else(|| Error::Config(format!("unknown model kind '{model}'")))?;
            let seed = cli.seed.ok_or_else(|| Error::Config("train needs --seed".into()))?;
            let (x, y, classes) = read_feature_csv(features)?;
            let hp = HyperParams {
                c: *c,
                gamma: *gamma,
                n_trees: *trees,
                min_leaf: *min_leaf,
                seed,
            };
            let m = train(kind, &x, &y, classes.len(), &hp, None)?;
            let f1 = weighted_f1(&y, &m.predict(&x)?, classes.len())?;
            println!("training weighted F1 = {f1:.2}");
            let out = in_dir(cli, out);
            create_parent(&out)?;
            m.save(&out)?;
            Ok(Outcome {
                dir: parent(&out),
                info: json!({"model": kind.name(), "classes": classes, "train_f1": f1}),
                files: vec![out],
            })
        }
        Command::Benchmark => {
            let mut cfg = load_config(cli)?;
            if let Some(d) = &cli.out_dir {
                cfg.out_dir = d.clone();
            }
            let report = run_benchmark(&cfg, cli.jobs)?;
            let failed = report.records.iter().filter(|r| !r.ok()).count();
            if failed > 0 {
                eprintln!("warning: {failed} cells failed; see records.jsonl");
            }
            let files = write_report(&report, &cfg.out_dir)?;
            Ok(Outcome {
                dir: cfg.out_dir.clone(),
                info: json!({"seed": report.seed, "config_sha256": report.config_hash, "cells": report.records.len(), "failed": failed}),
                files: files.iter().map(|f| cfg.out_dir.join(f)).collect(),
            })
        }
        Command::Report { input, format } => {
            let records = read_records(input)?;
            let dir = cli.out_dir.clone().unwrap_or_else(|| input.clone());
            let files = match format {
                Format::Csv => write_tables(&records, &dir)?.iter().map(|f| dir.join(f)).collect(),
                Format::Records => {
                    print!("{}", records_to_jsonl(&records));
                    Vec::new()
                }
            };
            Ok(Outcome {
                dir,
                info: json!({"records": records.len()}),
                files,
            })
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Config("--config is required".into()))?;
    RunConfig::load(path, cli.seed)
}

/// Mining and transform settings: the config when given, defaults otherwise.
fn settings(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(_) => load_config(cli),
        None => Ok(RunConfig::with_seed(cli.seed.unwrap_or(0))),
    }
}

fn load_input(cli: &Cli, cfg: &RunConfig, input: &DataInput) -> Result<Dataset> {
    match (&input.dataset, &input.data) {
        (Some(name), _) => {
            if cli.config.is_none() {
                return Err(Error::Config("--dataset needs --config".into()));
            }
            if !localrules::config::REGISTRY.contains(&name.as_str()) {
                return Err(Error::Config(format!("unknown dataset '{name}'")));
            }
            cfg.load_dataset(name)
        }
        (None, Some(p)) => load_file(p, input.schema.as_deref()),
        (None, None) => Err(Error::Config("give --dataset or --data".into())),
    }
}

fn load_file(csv: &Path, schema: Option<&Path>) -> Result<Dataset> {
    if !csv.is_file() {
        return Err(Error::Data(format!("data file {} not found", csv.display())));
    }
    let schema_path = schema.map(Path::to_path_buf).unwrap_or_else(|| csv.with_extension("schema"));
    if !schema_path.is_file() {
        return Err(Error::Config(format!("schema file {} not found", schema_path.display())));
    }
    let schema = FeatureSchema::load(&schema_path)?;
    let missing = schema.missing_token.clone().unwrap_or_else(|| DEFAULT_MISSING_TOKEN.to_string());
    load_csv(csv, &schema, &missing)
}

/// Features CSV as written by `transform`: `#` comment lines, a header, then
/// numeric columns and a trailing label. Classes are indexed in sorted order.
fn read_feature_csv(path: &Path) -> Result<(Matrix, Vec<usize>, Vec<String>)> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let body: String = text.lines().filter(|l| !l.starts_with('#')).map(|l| format!("{l}\n")).collect();
    let mut reader = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(&origin, i + 2, e.to_string()))?;
        let n = rec.len();
        if n < 2 {
            return Err(Error::parse(&origin, i + 2, "need at least one feature and a label"));
        }
        let row = rec
            .iter()
            .take(n - 1)
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::parse(&origin, i + 2, format!("`{v}` is not a number"))))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        labels.push(rec[n - 1].trim().to_string());
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{origin}: no data rows")));
    }
    let mut classes = labels.clone();
    classes.sort();
    classes.dedup();
    let y = labels.iter().map(|l| classes.binary_search(l).expect("label is a class")).collect();
    Ok((Matrix::from_rows(&rows)?, y, classes))
}

fn in_dir(cli: &Cli, p: &Path) -> PathBuf {
    match &cli.out_dir {
        Some(d) if p.is_relative() => d.join(p),
        _ => p.to_path_buf(),
    }
}

fn parent(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn create_parent(p: &Path) -> Result<()> {
    let d = parent(p);
    std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))
}
