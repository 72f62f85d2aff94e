//! `bugbrief` command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::{evaluate_results, load_matrix, make_embedder, run_matrix, CellStatus, HarnessError};
use crate::corpus::{
    export_finetune_dataset, load_corpus, save_corpus, CorpusFormat, FinetuneVariant, Split,
};
use crate::metrics::{Embedder, MetricsSelection, RemoteEmbedder};
use crate::pipeline::{load_results, save_results, Pipeline, PipelineConfig};
use crate::prompting::{InputCondition, Ordering, PromptStrategy, TemplateSet};
use crate::provider::{DecodingParams, ProviderConfig, ProviderKind};
use crate::token::{detokenize, tokenize_text};

pub const CACHE_DIR_ENV: &str = "BUGBRIEF_CACHE_DIR";

#[derive(Parser)]
#[command(name = "bugbrief", version, about = "Code-aware bug-report summarization pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest raw sources into an instance-JSONL corpus.
    Ingest {
        /// Source root: a Defects4J-style directory or an existing JSONL file.
        #[arg(long)]
        root: PathBuf,
        /// Source format: defects4j or instance_jsonl.
        #[arg(long, default_value = "defects4j")]
        format: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize one instance or a whole corpus.
    Summarize {
        #[arg(long)]
        corpus: PathBuf,
        /// Summarize only this bug id.
        #[arg(long)]
        bug_id: Option<String>,
        #[command(flatten)]
        pipeline: PipelineFlags,
        /// Write results JSONL here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score results against a corpus' reference summaries.
    Evaluate {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated subset of rouge1,rouge2,rougeL,bert.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        #[arg(long, default_value = "one_hot")]
        embedder: String,
        /// Endpoint for --embedder remote.
        #[arg(long)]
        embed_endpoint: Option<String>,
        #[arg(long, default_value = "embedding-model")]
        embed_model: String,
        #[arg(long, default_value = "")]
        embed_auth_env: String,
        /// Sufficiency threshold.
        #[arg(long, default_value_t = 0.3)]
        epsilon: f64,
        /// Defaults to <results>.metrics.csv.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// Defaults to <results>.metrics.json.
        #[arg(long)]
        out_json: Option<PathBuf>,
    },
    /// Run a declarative experiment matrix.
    Bench {
        matrix: PathBuf,
        #[arg(long)]
        template_dir: Option<PathBuf>,
    },
    /// Export a fine-tune dataset (one {input, target} record per instance).
    ExportFinetune {
        #[arg(long)]
        corpus: PathBuf,
        /// br (report only) or brcs (report plus code summary).
        #[arg(long)]
        variant: String,
        /// JSONL with per-bug code summaries ({"bug_id", "code_summary"|"summary"}).
        #[arg(long)]
        code_summaries: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Populate the completion cache for a corpus via the live provider.
    WarmCache {
        #[arg(long)]
        corpus: PathBuf,
        #[command(flatten)]
        pipeline: PipelineFlags,
    },
}

#[derive(Args)]
struct PipelineFlags {
    /// zero, one, or few.
    #[arg(long, default_value = "zero")]
    strategy: String,
    /// Demonstration count for --strategy few.
    #[arg(long, default_value_t = 0)]
    k: usize,
    /// report_only, report_plus_code, code_only, or report_plus_patch.
    #[arg(long, default_value = "report_only")]
    condition: String,
    /// report_first or code_first.
    #[arg(long, default_value = "report_first")]
    ordering: String,
    #[arg(long, default_value_t = 1024)]
    chunk_limit: usize,
    /// mock, replay, or http.
    #[arg(long, default_value = "mock")]
    provider: String,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    endpoint: Option<String>,
    /// Completion cache directory (default: $BUGBRIEF_CACHE_DIR or .bugbrief-cache).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "")]
    auth_env: String,
    /// Decoding parameters as JSON, e.g. '{"temperature":0.2,"max_new_tokens":128}'.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    template_dir: Option<PathBuf>,
    /// Corpus holding exemplar instances (defaults to --corpus).
    #[arg(long)]
    exemplar_corpus: Option<PathBuf>,
    /// Comma-separated bug ids reserved as demonstrations.
    #[arg(long, value_delimiter = ',')]
    exemplar_pool: Vec<String>,
    #[arg(long, default_value_t = 4)]
    parallelism: usize,
}

fn default_cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".bugbrief-cache"))
}

impl PipelineFlags {
    fn provider_config(&self) -> Result<ProviderConfig, HarnessError> {
        let kind = ProviderKind::parse(&self.provider).map_err(|e| HarnessError::Usage(e.to_string()))?;
        let cfg = match kind {
            ProviderKind::MockExtractive => {
                let mut cfg = ProviderConfig::mock();
                if let Some(dir) = &self.cache_dir {
                    cfg.cache_dir = dir.clone();
                }
                if let Some(model) = &self.model {
                    cfg.model_id = model.clone();
                }
                cfg
            }
            ProviderKind::Replay => {
                let dir = self.cache_dir.clone().unwrap_or_else(default_cache_dir);
                let model = self.model.clone().unwrap_or_else(|| "mock-extractive".to_string());
                ProviderConfig::replay(dir, model)
            }
            ProviderKind::HttpChat => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| HarnessError::Usage("--provider http requires --endpoint".to_string()))?;
                let model = self
                    .model
                    .clone()
                    .ok_or_else(|| HarnessError::Usage("--provider http requires --model".to_string()))?;
                let dir = self.cache_dir.clone().unwrap_or_else(default_cache_dir);
                let mut cfg = ProviderConfig::http(endpoint, model, dir);
                cfg.auth_env = self.auth_env.clone();
                cfg
            }
        };
        Ok(cfg)
    }

    fn to_config(&self) -> Result<(PipelineConfig, TemplateSet), HarnessError> {
        let strategy = PromptStrategy::parse(&self.strategy, self.k)
            .map_err(|e| HarnessError::Usage(e.to_string()))?;
        let condition =
            InputCondition::parse(&self.condition).map_err(|e| HarnessError::Usage(e.to_string()))?;
        let ordering = Ordering::parse(&self.ordering).map_err(|e| HarnessError::Usage(e.to_string()))?;
        let decoding = match &self.params {
            Some(json) => serde_json::from_str::<DecodingParams>(json)
                .map_err(|e| HarnessError::Usage(format!("--params: {e}")))?,
            None => DecodingParams::default(),
        };
        let templates = match &self.template_dir {
            Some(dir) => TemplateSet::from_dir(dir).map_err(|e| HarnessError::Usage(e.to_string()))?,
            None => TemplateSet::builtin(),
        };
        let config = PipelineConfig {
            strategy,
            condition,
            ordering,
            chunk_limit: self.chunk_limit,
            chunk_snap: Default::default(),
            decoding,
            provider: self.provider_config()?,
            exemplar_pool: self.exemplar_pool.clone(),
        };
        config.validate().map_err(|e| HarnessError::Usage(e.to_string()))?;
        Ok((config, templates))
    }
}

/// Entry point used by `main` and by tests; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(HarnessError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn execute(command: Command) -> Result<(), HarnessError> {
    match command {
        Command::Ingest { root, format, out } => ingest(&root, &format, &out),
        Command::Summarize { corpus, bug_id, pipeline, out } => summarize(&corpus, bug_id.as_deref(), &pipeline, out.as_deref()),
        Command::Evaluate {
            results,
            corpus,
            metrics,
            embedder,
            embed_endpoint,
            embed_model,
            embed_auth_env,
            epsilon,
            out_csv,
            out_json,
        } => cmd_evaluate(
            &results,
            &corpus,
            &metrics,
            &embedder,
            embed_endpoint.as_deref(),
            &embed_model,
            &embed_auth_env,
            epsilon,
            out_csv,
            out_json,
        ),
        Command::Bench { matrix, template_dir } => bench(&matrix, template_dir.as_deref()),
        Command::ExportFinetune { corpus, variant, code_summaries, out } => {
            export_finetune(&corpus, &variant, code_summaries.as_deref(), &out)
        }
        Command::WarmCache { corpus, pipeline } => warm_cache(&corpus, &pipeline),
    }
}

fn parse_format(name: &str) -> Result<CorpusFormat, HarnessError> {
    match name {
        "defects4j" | "defects4j_layout" => Ok(CorpusFormat::Defects4jLayout),
        "instance_jsonl" | "jsonl" => Ok(CorpusFormat::InstanceJsonl),
        other => Err(HarnessError::Usage(format!("unknown corpus format {other}"))),
    }
}

fn ingest(root: &Path, format: &str, out: &Path) -> Result<(), HarnessError> {
    let corpus = load_corpus(root, parse_format(format)?)?;
    save_corpus(&corpus, out)?;
    println!("ingested {} instances into {}", corpus.len(), out.display());
    Ok(())
}

fn summarize(
    corpus_path: &Path,
    bug_id: Option<&str>,
    flags: &PipelineFlags,
    out: Option<&Path>,
) -> Result<(), HarnessError> {
    let corpus = load_corpus(corpus_path, CorpusFormat::InstanceJsonl)?;
    let (config, templates) = flags.to_config()?;
    let exemplar_corpus = match &flags.exemplar_corpus {
        Some(path) => Some(load_corpus(path, CorpusFormat::InstanceJsonl)?),
        None => None,
    };
    let pipeline = Pipeline::new(config, templates, Some(exemplar_corpus.as_ref().unwrap_or(&corpus)))?;

    let results = match bug_id {
        Some(id) => {
            let instance = corpus
                .get(id)
                .ok_or_else(|| HarnessError::Usage(format!("bug {id} not found in corpus")))?;
            let result = pipeline.summarize(instance)?;
            println!("{}", detokenize(&result.final_summary));
            vec![result]
        }
        None => {
            let outcome = pipeline.run_batch(&corpus, flags.parallelism)?;
            for failure in &outcome.failures {
                eprintln!("warn: {}: {}", failure.bug_id, failure.error);
            }
            if outcome.results.is_empty() {
                return Err(HarnessError::Usage("every instance failed".to_string()));
            }
            for result in &outcome.results {
                println!("{}\t{}", result.bug_id, detokenize(&result.final_summary));
            }
            outcome.results
        }
    };
    if let Some(path) = out {
        save_results(&results, path)?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_evaluate(
    results_path: &Path,
    corpus_path: &Path,
    metric_names: &[String],
    embedder_name: &str,
    embed_endpoint: Option<&str>,
    embed_model: &str,
    embed_auth_env: &str,
    epsilon: f64,
    out_csv: Option<PathBuf>,
    out_json: Option<PathBuf>,
) -> Result<(), HarnessError> {
    let corpus = load_corpus(corpus_path, CorpusFormat::InstanceJsonl)?;
    let records = load_results(results_path)?;
    if records.is_empty() {
        return Err(HarnessError::Usage("results file is empty".to_string()));
    }
    let selection = if metric_names.is_empty() {
        MetricsSelection::default()
    } else {
        MetricsSelection::from_names(metric_names)
    };
    let embedder: Box<dyn Embedder> = if embedder_name == "remote" {
        let endpoint = embed_endpoint
            .ok_or_else(|| HarnessError::Usage("--embedder remote requires --embed-endpoint".to_string()))?;
        Box::new(RemoteEmbedder::new(endpoint, embed_model, embed_auth_env)?)
    } else {
        make_embedder(embedder_name)?
    };
    let report = evaluate_results(&corpus, &records, selection, embedder.as_ref(), epsilon)?;

    let csv_path = out_csv.unwrap_or_else(|| results_path.with_extension("metrics.csv"));
    let json_path = out_json.unwrap_or_else(|| results_path.with_extension("metrics.json"));
    std::fs::write(&csv_path, report.to_csv()?)?;
    std::fs::write(&json_path, report.to_json()?)?;

    if let Some(bert) = report.corpus.bert_macro {
        println!("bert_macro precision={:.4} recall={:.4} f1={:.4}", bert.precision, bert.recall, bert.f1);
    }
    if let Some(r1) = report.corpus.rouge1_micro {
        println!("rouge1_micro {r1:.4}");
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn bench(matrix_path: &Path, template_dir: Option<&Path>) -> Result<(), HarnessError> {
    let matrix = load_matrix(matrix_path)?;
    let templates = match template_dir {
        Some(dir) => TemplateSet::from_dir(dir).map_err(|e| HarnessError::Usage(e.to_string()))?,
        None => TemplateSet::builtin(),
    };
    let report = run_matrix(&matrix, &templates)?;
    for cell in &report.cells {
        match cell.status {
            CellStatus::Ok => println!("cell {}: ok", cell.label),
            CellStatus::Failed => {
                println!("cell {}: FAILED ({})", cell.label, cell.error.as_deref().unwrap_or("unknown"))
            }
        }
    }
    println!("config_hash {}", report.config_hash);
    println!("reports in {}", matrix.output_dir.display());
    Ok(())
}

fn export_finetune(
    corpus_path: &Path,
    variant_name: &str,
    code_summaries: Option<&Path>,
    out: &Path,
) -> Result<(), HarnessError> {
    let corpus = load_corpus(corpus_path, CorpusFormat::InstanceJsonl)?;
    let variant = match variant_name {
        "br" | "br_only" => FinetuneVariant::BrOnly,
        "brcs" | "br_plus_cs" => FinetuneVariant::BrPlusCs,
        other => return Err(HarnessError::Usage(format!("unknown variant {other} (expected br or brcs)"))),
    };
    let summaries = match code_summaries {
        Some(path) => load_code_summaries(path)?,
        None => BTreeMap::new(),
    };
    let records = export_finetune_dataset(&corpus, variant, &summaries, out)?;
    let train = records.iter().filter(|r| r.split == Split::Train).count();
    println!("wrote {} records ({} train / {} valid) to {}", records.len(), train, records.len() - train, out.display());
    Ok(())
}

/// Read per-bug code summaries from a results JSONL or a plain
/// `{"bug_id", "code_summary"}` JSONL.
fn load_code_summaries(path: &Path) -> Result<BTreeMap<String, Vec<String>>, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let mut summaries = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| HarnessError::Usage(format!("{} line {}: {e}", path.display(), idx + 1)))?;
        let bug_id = value["bug_id"]
            .as_str()
            .ok_or_else(|| HarnessError::Usage(format!("{} line {}: missing bug_id", path.display(), idx + 1)))?;
        let summary = value["code_summary"].as_str().or_else(|| value["summary"].as_str());
        if let Some(summary) = summary {
            summaries.insert(bug_id.to_string(), tokenize_text(summary));
        }
    }
    Ok(summaries)
}

fn warm_cache(corpus_path: &Path, flags: &PipelineFlags) -> Result<(), HarnessError> {
    let (config, templates) = flags.to_config()?;
    if config.provider.kind != ProviderKind::HttpChat {
        return Err(HarnessError::Usage("warm-cache requires --provider http".to_string()));
    }
    let corpus = load_corpus(corpus_path, CorpusFormat::InstanceJsonl)?;
    let exemplar_corpus = match &flags.exemplar_corpus {
        Some(path) => Some(load_corpus(path, CorpusFormat::InstanceJsonl)?),
        None => None,
    };
    let pipeline = Pipeline::new(config, templates, Some(exemplar_corpus.as_ref().unwrap_or(&corpus)))?;
    let outcome = pipeline.run_batch(&corpus, flags.parallelism)?;
    for failure in &outcome.failures {
        eprintln!("warn: {}: {}", failure.bug_id, failure.error);
    }
    let counts = pipeline.provider().source_counts();
    println!("live calls: {} (cache hits: {})", counts.live, counts.cache);
    Ok(())
}

// keep the wire type exported for other frontends
pub use crate::pipeline::ResultRecord as CliResultRecord;
