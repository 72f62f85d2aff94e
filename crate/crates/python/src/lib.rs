//! Python bindings for the bugbrief pipeline: tokenization, chunk planning,
//! the summary metrics, and corpus-level summarize/evaluate entry points.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use bugbrief::chunking::{plan_chunks as plan, slice, SnapPolicy};
use bugbrief::corpus::{
    export_finetune_dataset, load_corpus, split_of, CorpusFormat, FinetuneVariant, Split,
};
use bugbrief::harness::evaluate_results;
use bugbrief::metrics::{
    bert_score as bert, rouge_l as rl, rouge_n as rn, semantic_sufficiency, MetricsSelection,
    OneHotEmbedder,
};
use bugbrief::pipeline::{Pipeline, PipelineConfig, ResultRecord};
use bugbrief::prompting::{InputCondition, Ordering, PromptStrategy, TemplateSet};
use bugbrief::provider::ProviderConfig;
use bugbrief::token;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Convert a serde_json value into native Python objects.
fn json_to_py<'py>(py: Python<'py>, value: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match value {
        serde_json::Value::Null => py.None().into_bound(py),
        serde_json::Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_pyobject(py)?.into_any()
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any()
            }
        }
        serde_json::Value::String(s) => s.into_pyobject(py)?.into_any(),
        serde_json::Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_any()
        }
        serde_json::Value::Object(map) => {
            let dict = PyDict::new(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

#[pyfunction]
fn tokenize_text(text: &str) -> Vec<String> {
    token::tokenize_text(text)
}

#[pyfunction]
fn tokenize_code(text: &str) -> Vec<String> {
    token::tokenize_code(text)
}

#[pyfunction]
fn detokenize(tokens: Vec<String>) -> String {
    token::detokenize(&tokens)
}

/// Plan contiguous chunks of at most `limit` tokens; returns (start, len)
/// pairs. `snap` is "none" or "line".
#[pyfunction]
#[pyo3(signature = (tokens, limit, snap = "line"))]
fn plan_chunks(tokens: Vec<String>, limit: usize, snap: &str) -> PyResult<Vec<(usize, usize)>> {
    if limit == 0 {
        return Err(value_err("limit must be at least 1"));
    }
    let snap = match snap {
        "none" => SnapPolicy::None,
        "line" => SnapPolicy::Line,
        other => return Err(value_err(format!("unknown snap policy {other}"))),
    };
    Ok(plan(&tokens, limit, snap).segments.iter().map(|s| (s.start, s.len)).collect())
}

/// Tokens of one planned chunk.
#[pyfunction]
#[pyo3(signature = (tokens, limit, m, snap = "line"))]
fn chunk_tokens(tokens: Vec<String>, limit: usize, m: usize, snap: &str) -> PyResult<Vec<String>> {
    let snap = match snap {
        "none" => SnapPolicy::None,
        "line" => SnapPolicy::Line,
        other => return Err(value_err(format!("unknown snap policy {other}"))),
    };
    let plan = plan(&tokens, limit, snap);
    Ok(slice(&tokens, &plan, m).map_err(value_err)?.to_vec())
}

#[pyfunction]
fn rouge_n(candidate: Vec<String>, reference: Vec<String>, n: usize) -> PyResult<(f64, f64, f64)> {
    if n == 0 {
        return Err(value_err("n must be at least 1"));
    }
    let prf = rn(&candidate, &reference, n);
    Ok((prf.precision, prf.recall, prf.f1))
}

#[pyfunction]
fn rouge_l(candidate: Vec<String>, reference: Vec<String>) -> (f64, f64, f64) {
    let prf = rl(&candidate, &reference);
    (prf.precision, prf.recall, prf.f1)
}

/// BERTScore over the one-hot stub embedder (exact token matching).
#[pyfunction]
fn bert_score_one_hot(candidate: Vec<String>, reference: Vec<String>) -> PyResult<(f64, f64, f64)> {
    let embedder = OneHotEmbedder::default();
    let prf = bert(&candidate, &reference, &embedder).map_err(value_err)?;
    Ok((prf.precision, prf.recall, prf.f1))
}

/// Cosine distance between the pooled input embedding (report then code)
/// and the pooled summary embedding, plus the d <= epsilon verdict.
#[pyfunction]
#[pyo3(signature = (report_tokens, code_tokens, summary_tokens, epsilon = 0.3))]
fn sufficiency_one_hot(
    report_tokens: Vec<String>,
    code_tokens: Vec<String>,
    summary_tokens: Vec<String>,
    epsilon: f64,
) -> PyResult<(f64, bool)> {
    let instance = bugbrief::corpus::BugInstance {
        bug_id: "py".to_string(),
        project: String::new(),
        report_tokens,
        code_artifacts: if code_tokens.is_empty() {
            vec![]
        } else {
            vec![bugbrief::corpus::CodeArtifact {
                kind: bugbrief::corpus::ArtifactKind::BuggyCode,
                tokens: code_tokens,
                source_path: None,
            }]
        },
        reference_summary: None,
        tracker_url: None,
    };
    let embedder = OneHotEmbedder::default();
    semantic_sufficiency(&instance, &summary_tokens, &embedder, epsilon).map_err(value_err)
}

/// Stable train/valid assignment of a bug id ("train" or "valid").
#[pyfunction]
fn finetune_split(bug_id: &str) -> &'static str {
    match split_of(bug_id) {
        Split::Train => "train",
        Split::Valid => "valid",
    }
}

#[allow(clippy::too_many_arguments)]
fn build_config(
    condition: &str,
    strategy: &str,
    k: usize,
    ordering: &str,
    chunk_limit: usize,
    provider: &str,
    cache_dir: Option<PathBuf>,
    exemplar_pool: Vec<String>,
) -> PyResult<PipelineConfig> {
    let provider_cfg = match provider {
        "mock" => {
            let mut cfg = ProviderConfig::mock();
            if let Some(dir) = cache_dir {
                cfg.cache_dir = dir;
            }
            cfg
        }
        "replay" => {
            let dir = cache_dir.ok_or_else(|| value_err("replay provider needs cache_dir"))?;
            ProviderConfig::replay(dir, "mock-extractive")
        }
        other => return Err(value_err(format!("unsupported provider {other} (mock or replay)"))),
    };
    let config = PipelineConfig {
        strategy: PromptStrategy::parse(strategy, k).map_err(value_err)?,
        condition: InputCondition::parse(condition).map_err(value_err)?,
        ordering: Ordering::parse(ordering).map_err(value_err)?,
        chunk_limit,
        chunk_snap: Default::default(),
        decoding: Default::default(),
        provider: provider_cfg,
        exemplar_pool,
    };
    config.validate().map_err(value_err)?;
    Ok(config)
}

/// Summarize every instance of a JSONL corpus; returns one dict per
/// instance with summary, code_summary, chunks, and prompt fingerprints.
#[pyfunction]
#[pyo3(signature = (
    corpus_path, condition = "report_only", strategy = "zero", k = 0,
    ordering = "report_first", chunk_limit = 1024, provider = "mock",
    cache_dir = None, exemplar_pool = vec![], parallelism = 1
))]
#[allow(clippy::too_many_arguments)]
fn summarize_corpus(
    py: Python<'_>,
    corpus_path: PathBuf,
    condition: &str,
    strategy: &str,
    k: usize,
    ordering: &str,
    chunk_limit: usize,
    provider: &str,
    cache_dir: Option<PathBuf>,
    exemplar_pool: Vec<String>,
    parallelism: usize,
) -> PyResult<Vec<Py<PyAny>>> {
    let corpus = load_corpus(&corpus_path, CorpusFormat::InstanceJsonl).map_err(runtime_err)?;
    let config = build_config(condition, strategy, k, ordering, chunk_limit, provider, cache_dir, exemplar_pool)?;
    let pipeline = Pipeline::new(config, TemplateSet::builtin(), Some(&corpus)).map_err(runtime_err)?;
    let outcome = pipeline.run_batch(&corpus, parallelism.max(1)).map_err(runtime_err)?;
    if let Some(failure) = outcome.failures.first() {
        if outcome.results.is_empty() {
            return Err(runtime_err(format!("{}: {}", failure.bug_id, failure.error)));
        }
    }
    let mut dicts = Vec::with_capacity(outcome.results.len());
    for result in &outcome.results {
        let record = ResultRecord::from(result);
        let value = serde_json::to_value(&record).map_err(runtime_err)?;
        dicts.push(json_to_py(py, &value)?.unbind());
    }
    Ok(dicts)
}

/// Score a results JSONL against a corpus; returns the metric report as a
/// dict (per_pair plus corpus aggregates).
#[pyfunction]
#[pyo3(signature = (corpus_path, results_path, epsilon = 0.3))]
fn evaluate_files(
    py: Python<'_>,
    corpus_path: PathBuf,
    results_path: PathBuf,
    epsilon: f64,
) -> PyResult<Py<PyAny>> {
    let corpus = load_corpus(&corpus_path, CorpusFormat::InstanceJsonl).map_err(runtime_err)?;
    let records = bugbrief::pipeline::load_results(&results_path).map_err(runtime_err)?;
    let embedder = OneHotEmbedder::default();
    let report = evaluate_results(&corpus, &records, MetricsSelection::default(), &embedder, epsilon)
        .map_err(runtime_err)?;
    let value = serde_json::to_value(&report).map_err(runtime_err)?;
    Ok(json_to_py(py, &value)?.unbind())
}

/// Export a fine-tune dataset ("br" or "brcs") and return the split counts.
#[pyfunction]
#[pyo3(signature = (corpus_path, out_path, variant = "br", code_summaries = None))]
fn export_finetune(
    corpus_path: PathBuf,
    out_path: PathBuf,
    variant: &str,
    code_summaries: Option<BTreeMap<String, String>>,
) -> PyResult<(usize, usize)> {
    let corpus = load_corpus(&corpus_path, CorpusFormat::InstanceJsonl).map_err(runtime_err)?;
    let variant = match variant {
        "br" | "br_only" => FinetuneVariant::BrOnly,
        "brcs" | "br_plus_cs" => FinetuneVariant::BrPlusCs,
        other => return Err(value_err(format!("unknown variant {other}"))),
    };
    let summaries: BTreeMap<String, Vec<String>> = code_summaries
        .unwrap_or_default()
        .into_iter()
        .map(|(id, text)| (id, token::tokenize_text(&text)))
        .collect();
    let records = export_finetune_dataset(&corpus, variant, &summaries, &out_path).map_err(runtime_err)?;
    let train = records.iter().filter(|r| r.split == Split::Train).count();
    Ok((train, records.len() - train))
}

#[pymodule]
fn bugbrief_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(tokenize_text, m)?)?;
    m.add_function(wrap_pyfunction!(tokenize_code, m)?)?;
    m.add_function(wrap_pyfunction!(detokenize, m)?)?;
    m.add_function(wrap_pyfunction!(plan_chunks, m)?)?;
    m.add_function(wrap_pyfunction!(chunk_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_n, m)?)?;
    m.add_function(wrap_pyfunction!(rouge_l, m)?)?;
    m.add_function(wrap_pyfunction!(bert_score_one_hot, m)?)?;
    m.add_function(wrap_pyfunction!(sufficiency_one_hot, m)?)?;
    m.add_function(wrap_pyfunction!(finetune_split, m)?)?;
    m.add_function(wrap_pyfunction!(summarize_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_files, m)?)?;
    m.add_function(wrap_pyfunction!(export_finetune, m)?)?;
    Ok(())
}
