//! Experiment matrix runner: one declarative JSON file describes a grid of
//! pipeline configurations; each cell runs the batch pipeline, is scored,
//! and lands in per-cell JSONL/CSV files plus one combined markdown table.

pub mod cli;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{load_corpus, Corpus, CorpusError, CorpusFormat};
use crate::metrics::{
    evaluate, Embedder, EvalItem, HashedProjectionEmbedder, MetricReport, MetricsError,
    MetricsSelection, OneHotEmbedder, PRF,
};
use crate::pipeline::{
    save_results, InstanceFailure, Pipeline, PipelineConfig, PipelineError, ResultRecord,
    SummaryResult,
};
use crate::prompting::{InputCondition, Ordering, PromptError, PromptStrategy, TemplateSet};
use crate::provider::{DecodingParams, ProviderConfig, SourceCounts};
use crate::token::tokenize_text;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Matrix file as written on disk. Paths are relative to the file itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixFile {
    corpus: String,
    output_dir: String,
    #[serde(default)]
    exemplar_corpus: Option<String>,
    #[serde(default)]
    exemplar_pool: Vec<String>,
    #[serde(default)]
    providers: BTreeMap<String, ProviderConfig>,
    #[serde(default = "default_embedder")]
    embedder: String,
    #[serde(default = "default_epsilon")]
    epsilon: f64,
    #[serde(default = "default_parallelism")]
    parallelism: usize,
    cells: Vec<MatrixCellFile>,
    metrics: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixCellFile {
    label: String,
    strategy: String,
    #[serde(default)]
    k: usize,
    condition: String,
    ordering: String,
    #[serde(default = "default_chunk_limit")]
    chunk_limit: usize,
    provider: String,
    #[serde(default)]
    decoding: DecodingParams,
}

fn default_embedder() -> String {
    "one_hot".to_string()
}

fn default_epsilon() -> f64 {
    0.3
}

fn default_parallelism() -> usize {
    4
}

fn default_chunk_limit() -> usize {
    1024
}

/// A validated matrix with resolved paths and per-cell pipeline configs.
#[derive(Debug, Clone)]
pub struct ExperimentMatrix {
    pub corpus: PathBuf,
    pub exemplar_corpus: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub cells: Vec<(String, PipelineConfig)>,
    pub selection: MetricsSelection,
    pub embedder: String,
    pub epsilon: f64,
    pub parallelism: usize,
    pub config_hash: String,
}

/// Load and validate a matrix file. Relative paths resolve against the
/// file's directory; the config hash covers only semantic fields, so
/// reformatting the JSON never changes it.
pub fn load_matrix(path: &Path) -> Result<ExperimentMatrix, HarnessError> {
    let text = fs::read_to_string(path)?;
    let file: MatrixFile = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Usage(format!("matrix {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));

    let mut labels = std::collections::BTreeSet::new();
    let mut cells = Vec::new();
    for cell in &file.cells {
        if !labels.insert(cell.label.clone()) {
            return Err(HarnessError::Usage(format!("duplicate cell label {}", cell.label)));
        }
        let provider = resolve_provider(&file.providers, &cell.provider, base)?;
        let config = PipelineConfig {
            strategy: PromptStrategy::parse(&cell.strategy, cell.k)
                .map_err(|e| HarnessError::Usage(e.to_string()))?,
            condition: InputCondition::parse(&cell.condition)
                .map_err(|e| HarnessError::Usage(e.to_string()))?,
            ordering: Ordering::parse(&cell.ordering).map_err(|e| HarnessError::Usage(e.to_string()))?,
            chunk_limit: cell.chunk_limit,
            chunk_snap: Default::default(),
            decoding: cell.decoding.clone(),
            provider,
            exemplar_pool: file.exemplar_pool.clone(),
        };
        config.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        cells.push((cell.label.clone(), config));
    }
    if cells.is_empty() {
        return Err(HarnessError::Usage("matrix has no cells".to_string()));
    }

    Ok(ExperimentMatrix {
        corpus: base.join(&file.corpus),
        exemplar_corpus: file.exemplar_corpus.as_ref().map(|p| base.join(p)),
        output_dir: base.join(&file.output_dir),
        selection: MetricsSelection::from_names(&file.metrics),
        embedder: file.embedder.clone(),
        epsilon: file.epsilon,
        parallelism: file.parallelism.max(1),
        config_hash: config_hash(&file),
        cells,
    })
}

fn resolve_provider(
    providers: &BTreeMap<String, ProviderConfig>,
    name: &str,
    base: &Path,
) -> Result<ProviderConfig, HarnessError> {
    let mut cfg = match providers.get(name) {
        Some(cfg) => cfg.clone(),
        None if name == "mock" => ProviderConfig::mock(),
        None => return Err(HarnessError::Usage(format!("cell references unknown provider {name}"))),
    };
    if !cfg.cache_dir.as_os_str().is_empty() && cfg.cache_dir.is_relative() {
        cfg.cache_dir = base.join(&cfg.cache_dir);
    }
    Ok(cfg)
}

/// Hash of the semantic run configuration: cells, providers, exemplar pool,
/// and metric selection. Serialized through `serde_json::Value`, which sorts
/// object keys, so formatting and key order in the file are irrelevant.
fn config_hash(file: &MatrixFile) -> String {
    let semantic = serde_json::json!({
        "cells": file.cells,
        "providers": file.providers,
        "exemplar_pool": file.exemplar_pool,
        "metrics": file.metrics,
    });
    let canonical = serde_json::to_string(&semantic).expect("serializable");
    Sha256::digest(canonical.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn make_embedder(name: &str) -> Result<Box<dyn Embedder>, HarnessError> {
    match name {
        "one_hot" | "onehot" => Ok(Box::new(OneHotEmbedder::default())),
        "hashed" | "hashed_projection" => Ok(Box::new(HashedProjectionEmbedder::default())),
        other => Err(HarnessError::Usage(format!(
            "unknown embedder {other} (expected one_hot or hashed; remote embedders are configured via flags)"
        ))),
    }
}

/// Score a batch of persisted results against a corpus.
pub fn evaluate_results(
    corpus: &Corpus,
    records: &[ResultRecord],
    selection: MetricsSelection,
    embedder: &dyn Embedder,
    epsilon: f64,
) -> Result<MetricReport, HarnessError> {
    let mut pairs = Vec::new();
    for record in records {
        let instance = corpus.get(&record.bug_id).ok_or_else(|| {
            HarnessError::Usage(format!("results reference bug {} absent from the corpus", record.bug_id))
        })?;
        pairs.push((instance, tokenize_text(&record.summary)));
    }
    let items: Vec<EvalItem<'_>> = pairs
        .iter()
        .map(|(instance, candidate)| EvalItem { instance, candidate })
        .collect();
    Ok(evaluate(&items, selection, embedder, epsilon)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellReport {
    pub label: String,
    pub status: CellStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub source_counts: SourceCounts,
    #[serde(default)]
    pub instance_failures: Vec<InstanceFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub config_hash: String,
    pub started_at_epoch: u64,
    pub finished_at_epoch: u64,
    pub cells: Vec<CellReport>,
}

/// Run every cell, write per-cell artifacts and the combined reports into
/// the matrix's output directory, and return the run report. A failing cell
/// (cold replay cache, no instances surviving) is recorded and skipped;
/// it never aborts the other cells.
pub fn run_matrix(matrix: &ExperimentMatrix, templates: &TemplateSet) -> Result<RunReport, HarnessError> {
    let corpus = load_corpus(&matrix.corpus, CorpusFormat::InstanceJsonl)?;
    if corpus.is_empty() {
        return Err(HarnessError::Pipeline(PipelineError::EmptyCorpus));
    }
    let exemplar_corpus = match &matrix.exemplar_corpus {
        Some(path) => Some(load_corpus(path, CorpusFormat::InstanceJsonl)?),
        None => None,
    };
    fs::create_dir_all(&matrix.output_dir)?;

    let started_at_epoch = epoch_seconds();
    let mut cells = Vec::new();
    for (label, config) in &matrix.cells {
        let report = run_cell(matrix, templates, &corpus, exemplar_corpus.as_ref(), label, config);
        cells.push(report);
    }

    let run_report = RunReport {
        config_hash: matrix.config_hash.clone(),
        started_at_epoch,
        finished_at_epoch: epoch_seconds(),
        cells,
    };
    fs::write(matrix.output_dir.join("report.md"), render_markdown(&run_report))?;
    fs::write(matrix.output_dir.join("run_report.json"), serde_json::to_string_pretty(&run_report)?)?;
    Ok(run_report)
}

fn run_cell(
    matrix: &ExperimentMatrix,
    templates: &TemplateSet,
    corpus: &Corpus,
    exemplar_corpus: Option<&Corpus>,
    label: &str,
    config: &PipelineConfig,
) -> CellReport {
    match execute_cell(matrix, templates, corpus, exemplar_corpus, config) {
        Ok((results, failures, counts, metrics)) => {
            if let Err(e) = write_cell_outputs(matrix, label, &results, &metrics) {
                return CellReport {
                    label: label.to_string(),
                    status: CellStatus::Failed,
                    error: Some(e.to_string()),
                    source_counts: counts,
                    instance_failures: failures,
                    metrics: None,
                };
            }
            CellReport {
                label: label.to_string(),
                status: CellStatus::Ok,
                error: None,
                source_counts: counts,
                instance_failures: failures,
                metrics: Some(metrics),
            }
        }
        Err(e) => CellReport {
            label: label.to_string(),
            status: CellStatus::Failed,
            error: Some(e.to_string()),
            source_counts: SourceCounts::default(),
            instance_failures: Vec::new(),
            metrics: None,
        },
    }
}

type CellData = (Vec<SummaryResult>, Vec<InstanceFailure>, SourceCounts, MetricReport);

fn execute_cell(
    matrix: &ExperimentMatrix,
    templates: &TemplateSet,
    corpus: &Corpus,
    exemplar_corpus: Option<&Corpus>,
    config: &PipelineConfig,
) -> Result<CellData, HarnessError> {
    let pipeline = Pipeline::new(config.clone(), templates.clone(), exemplar_corpus.or(Some(corpus)))?;
    let outcome = pipeline.run_batch(corpus, matrix.parallelism)?;
    if let Some(miss) = outcome.failures.iter().find(|f| f.replay_miss) {
        return Err(HarnessError::Usage(format!("cell aborted: {}", miss.error)));
    }
    if outcome.results.is_empty() {
        return Err(HarnessError::Usage("no instance succeeded in this cell".to_string()));
    }
    let counts = pipeline.provider().source_counts();

    let records: Vec<ResultRecord> = outcome.results.iter().map(ResultRecord::from).collect();
    let embedder = make_embedder(&matrix.embedder)?;
    let metrics = evaluate_results(corpus, &records, matrix.selection, embedder.as_ref(), matrix.epsilon)?;
    Ok((outcome.results, outcome.failures, counts, metrics))
}

fn write_cell_outputs(
    matrix: &ExperimentMatrix,
    label: &str,
    results: &[SummaryResult],
    metrics: &MetricReport,
) -> Result<(), HarnessError> {
    save_results(results, &matrix.output_dir.join(format!("{label}.results.jsonl")))?;
    fs::write(matrix.output_dir.join(format!("{label}.metrics.csv")), metrics.to_csv()?)?;
    fs::write(matrix.output_dir.join(format!("{label}.metrics.json")), metrics.to_json()?)?;
    Ok(())
}

fn epoch_seconds() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

fn cell_value(prf: Option<PRF>, pick: impl Fn(PRF) -> f64) -> String {
    prf.map(|p| format!("{:.6}", pick(p))).unwrap_or_else(|| "-".to_string())
}

/// Combined per-run table: one row per cell, BERTScore P/R/F1 plus the
/// ROUGE macro F1 columns. Failed cells keep their row with dashes.
pub fn render_markdown(report: &RunReport) -> String {
    let mut out = String::new();
    out.push_str("| Cell | BERT-P | BERT-R | BERT-F1 | ROUGE1-F1 | ROUGE2-F1 | ROUGEL-F1 | Status |\n");
    out.push_str("|---|---|---|---|---|---|---|---|\n");
    for cell in &report.cells {
        let corpus = cell.metrics.as_ref().map(|m| m.corpus);
        let bert = corpus.and_then(|c| c.bert_macro);
        let status = match cell.status {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "FAILED",
        };
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} |\n",
            cell.label,
            cell_value(bert, |p| p.precision),
            cell_value(bert, |p| p.recall),
            cell_value(bert, |p| p.f1),
            cell_value(corpus.and_then(|c| c.rouge1_macro), |p| p.f1),
            cell_value(corpus.and_then(|c| c.rouge2_macro), |p| p.f1),
            cell_value(corpus.and_then(|c| c.rouge_l_macro), |p| p.f1),
            status,
        ));
    }
    out
}

/// Parse a markdown table emitted by [`render_markdown`] back into rows of
/// trimmed cells (header row first, separator row dropped).
pub fn parse_markdown_table(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|line| line.starts_with('|'))
        .map(|line| {
            line.trim_matches('|')
                .split('|')
                .map(|cell| cell.trim().to_string())
                .collect::<Vec<String>>()
        })
        .filter(|cells| !cells.iter().all(|c| c.chars().all(|ch| ch == '-' || ch == ' ')))
        .collect()
}

/// Parse a metrics CSV back into (header, rows).
pub fn parse_metrics_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<String>>), HarnessError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        rows.push(record?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{save_corpus, ArtifactKind, BugInstance, CodeArtifact};
    use crate::token::{tokenize_code, tokenize_text};

    fn fixture_instance(id: &str) -> BugInstance {
        BugInstance {
            bug_id: id.to_string(),
            project: "demo".to_string(),
            report_tokens: tokenize_text(&format!("Instance {id} crashes on save. It also logs errors.")),
            code_artifacts: vec![
                CodeArtifact {
                    kind: ArtifactKind::BuggyCode,
                    tokens: tokenize_code("int save() {\nreturn -1;\n}"),
                    source_path: Some("Save.java".to_string()),
                },
                CodeArtifact {
                    kind: ArtifactKind::PatchCode,
                    tokens: tokenize_code("int save() {\nreturn 0;\n}"),
                    source_path: Some("Save.java".to_string()),
                },
            ],
            reference_summary: Some(tokenize_text(&format!("Saving crashes instance {id}."))),
            tracker_url: None,
        }
    }

    fn write_fixture(dir: &Path) {
        let corpus = Corpus::new(
            "fixture",
            (0..3).map(|i| fixture_instance(&format!("bug-{i}"))).collect(),
            "test fixture",
        )
        .unwrap();
        save_corpus(&corpus, &dir.join("corpus.jsonl")).unwrap();

        let exemplars = Corpus::new(
            "exemplars",
            vec![fixture_instance("ex-0"), fixture_instance("ex-1")],
            "exemplar fixture",
        )
        .unwrap();
        save_corpus(&exemplars, &dir.join("exemplars.jsonl")).unwrap();
    }

    fn write_matrix(dir: &Path) -> PathBuf {
        write_fixture(dir);
        let matrix = serde_json::json!({
            "corpus": "corpus.jsonl",
            "exemplar_corpus": "exemplars.jsonl",
            "exemplar_pool": ["ex-0", "ex-1"],
            "output_dir": "out",
            "cells": [
                {"label": "zero_report", "strategy": "zero", "condition": "report_only",
                 "ordering": "report_first", "chunk_limit": 64, "provider": "mock"},
                {"label": "one_code", "strategy": "one", "k": 1, "condition": "report_plus_code",
                 "ordering": "code_first", "chunk_limit": 64, "provider": "mock"},
            ],
            "metrics": ["rouge1", "rouge2", "rougeL", "bert"],
        });
        let path = dir.join("matrix.json");
        fs::write(&path, serde_json::to_string_pretty(&matrix).unwrap()).unwrap();
        path
    }

    #[test]
    fn matrix_loads_and_validates() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let matrix = load_matrix(&path).unwrap();
        assert_eq!(matrix.cells.len(), 2);
        assert_eq!(matrix.cells[0].0, "zero_report");
        assert!(matrix.corpus.ends_with("corpus.jsonl"));
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        value["cells"][1]["label"] = value["cells"][0]["label"].clone();
        fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert!(matches!(load_matrix(&path), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn unknown_provider_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        value["cells"][0]["provider"] = "nope".into();
        fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert!(matches!(load_matrix(&path), Err(HarnessError::Usage(_))));
    }

    #[test]
    fn config_hash_ignores_formatting_but_tracks_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let hash1 = load_matrix(&path).unwrap().config_hash;

        // reformat: compact whitespace, same content
        let value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert_eq!(load_matrix(&path).unwrap().config_hash, hash1);

        // output_dir is not semantic config
        let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        value["output_dir"] = "elsewhere".into();
        fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert_eq!(load_matrix(&path).unwrap().config_hash, hash1);

        // chunk_limit is
        let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        value["cells"][0]["chunk_limit"] = 32.into();
        fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();
        assert_ne!(load_matrix(&path).unwrap().config_hash, hash1);
    }

    #[test]
    fn run_matrix_writes_cell_artifacts_and_reports() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let matrix = load_matrix(&path).unwrap();
        let report = run_matrix(&matrix, &TemplateSet::builtin()).unwrap();

        assert_eq!(report.cells.len(), 2);
        assert!(report.cells.iter().all(|c| c.status == CellStatus::Ok));
        for label in ["zero_report", "one_code"] {
            assert!(matrix.output_dir.join(format!("{label}.results.jsonl")).is_file());
            assert!(matrix.output_dir.join(format!("{label}.metrics.csv")).is_file());
        }
        let md = fs::read_to_string(matrix.output_dir.join("report.md")).unwrap();
        let rows = parse_markdown_table(&md);
        assert_eq!(rows.len(), 3); // header + 2 cells
        assert_eq!(rows[0][0], "Cell");
        for row in &rows[1..] {
            assert_eq!(row.last().unwrap(), "ok");
            for cell in &row[1..row.len() - 1] {
                let value: f64 = cell.parse().unwrap();
                assert!((0.0..=1.0).contains(&value), "{value} out of range");
            }
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let matrix = load_matrix(&path).unwrap();
        run_matrix(&matrix, &TemplateSet::builtin()).unwrap();
        let first: Vec<(PathBuf, Vec<u8>)> = ["zero_report.metrics.csv", "one_code.metrics.csv", "report.md"]
            .iter()
            .map(|name| {
                let p = matrix.output_dir.join(name);
                (p.clone(), fs::read(&p).unwrap())
            })
            .collect();

        run_matrix(&matrix, &TemplateSet::builtin()).unwrap();
        for (path, bytes) in first {
            assert_eq!(fs::read(&path).unwrap(), bytes, "{} changed between runs", path.display());
        }
    }

    #[test]
    fn failed_cell_does_not_abort_the_run() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        value["providers"] = serde_json::json!({
            "cold_replay": {"kind": "replay", "model_id": "m", "cache_dir": "cold_cache"}
        });
        value["cells"][1]["provider"] = "cold_replay".into();
        fs::write(&path, serde_json::to_string(&value).unwrap()).unwrap();

        let matrix = load_matrix(&path).unwrap();
        let report = run_matrix(&matrix, &TemplateSet::builtin()).unwrap();
        assert_eq!(report.cells[0].status, CellStatus::Ok);
        assert_eq!(report.cells[1].status, CellStatus::Failed);
        assert!(report.cells[1].error.as_ref().unwrap().contains("replay_miss"));

        let md = fs::read_to_string(matrix.output_dir.join("report.md")).unwrap();
        assert!(md.contains("FAILED"));
    }

    #[test]
    fn emitted_csv_reparses() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_matrix(dir.path());
        let matrix = load_matrix(&path).unwrap();
        run_matrix(&matrix, &TemplateSet::builtin()).unwrap();
        let text = fs::read_to_string(matrix.output_dir.join("zero_report.metrics.csv")).unwrap();
        let (header, rows) = parse_metrics_csv(&text).unwrap();
        assert_eq!(header, crate::metrics::CSV_HEADER.map(str::to_string).to_vec());
        assert_eq!(rows.len(), 4); // 3 instances + CORPUS
        assert_eq!(rows.last().unwrap()[0], "CORPUS");
    }
}
