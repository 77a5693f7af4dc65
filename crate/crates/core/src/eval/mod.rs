//! Evaluation protocol: stratified repeated splits, inner cross-validated
//! grid search, class-balanced F1, rule stability and model complexity,
//! and the benchmark that ties them together.

mod benchmark;
mod metrics;
mod pipeline;
mod report;
mod split;

pub use benchmark::{
    fit_cell, fit_fingerprint, grid_search, leakage_sentinel, run_benchmark, run_cell, select_best, BenchmarkReport, CellContext,
    CellRecord, ConditionSummary, DatasetInfo, GridOutcome, RuleSummary,
};
pub use metrics::{jaccard, jaccard_stability, mean_std, median, model_complexity, weighted_f1};
pub use pipeline::{hyper_params, train_on, Classifier, FittedPipeline, PipelineSettings, Prepared, Strategy};
pub use report::{
    complexity_table, level_table, manifest_text, read_records, records_from_jsonl, records_to_jsonl, rule_report, splits_table,
    stabilities, stability_table, summaries, write_report, write_tables, RuleReportEntry, Summary, MANIFEST_FILE, RECORDS_FILE,
};
pub use split::{stratified_kfold, stratified_split, Split, SplitPlan};
