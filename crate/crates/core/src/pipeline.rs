//! End-to-end summarization: chunk summaries, a consolidated code summary,
//! then the final abstractive summary, under any input condition, section
//! ordering, and prompting strategy.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chunking::{plan_chunks, slice, ChunkError, SnapPolicy};
use crate::corpus::{BugInstance, Corpus};
use crate::prompting::{
    render_exemplar_input, select_code_tokens, Exemplar, InputCondition, Ordering, PromptError,
    PromptStrategy, TemplateSet,
};
use crate::provider::{DecodingParams, Provider, ProviderConfig, ProviderError};
use crate::token::{detokenize, tokenize_text};

/// Aggregate prompts may grow to this many times the chunk limit before the
/// run is aborted rather than silently overflowing a context window.
pub const AGGREGATE_CAP_FACTOR: usize = 8;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("empty_corpus")]
    EmptyCorpus,
    #[error("invalid pipeline config: {0}")]
    InvalidConfig(String),
    #[error("exemplar instance {bug_id} not found in the exemplar corpus")]
    ExemplarNotFound { bug_id: String },
    #[error("exemplar instance {bug_id} has no reference summary")]
    ExemplarMissingReference { bug_id: String },
    #[error("aggregate prompt has {got} tokens, over the hard cap of {cap}")]
    AggregateTooLarge { got: usize, cap: usize },
    #[error("[{stage}] {source}")]
    Provider { stage: &'static str, source: ProviderError },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Chunk(#[from] ChunkError),
}

impl PipelineError {
    pub fn is_replay_miss(&self) -> bool {
        matches!(self, PipelineError::Provider { source: ProviderError::ReplayMiss { .. }, .. })
    }
}

/// Everything one summarization run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub strategy: PromptStrategy,
    pub condition: InputCondition,
    pub ordering: Ordering,
    pub chunk_limit: usize,
    #[serde(default)]
    pub chunk_snap: SnapPolicy,
    #[serde(default)]
    pub decoding: DecodingParams,
    pub provider: ProviderConfig,
    /// Bug ids reserved as demonstrations; never summarized.
    #[serde(default)]
    pub exemplar_pool: Vec<String>,
}

impl PipelineConfig {
    pub fn mock(strategy: PromptStrategy, condition: InputCondition, ordering: Ordering) -> Self {
        Self {
            strategy,
            condition,
            ordering,
            chunk_limit: 1024,
            chunk_snap: SnapPolicy::default(),
            decoding: DecodingParams::default(),
            provider: ProviderConfig::mock(),
            exemplar_pool: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.chunk_limit == 0 {
            return Err(PipelineError::InvalidConfig("chunk_limit must be at least 1".into()));
        }
        self.strategy.validate()?;
        self.provider
            .validate()
            .map_err(|source| PipelineError::Provider { stage: "config", source })?;
        self.decoding
            .validate()
            .map_err(|source| PipelineError::Provider { stage: "config", source })?;
        if self.strategy.k > self.exemplar_pool.len() {
            return Err(PipelineError::InvalidConfig(format!(
                "strategy wants {} exemplars but the pool has {}",
                self.strategy.k,
                self.exemplar_pool.len()
            )));
        }
        Ok(())
    }
}

/// Output of [`Pipeline::summarize`] for one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryResult {
    pub bug_id: String,
    pub final_summary: Vec<String>,
    pub code_summary: Option<Vec<String>>,
    /// Per-segment summaries, in segment order.
    pub chunk_summaries: Vec<(usize, Vec<String>)>,
    /// Fingerprint of every prompt issued, in call order.
    pub prompts_used: Vec<String>,
    pub provenance: PipelineConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceFailure {
    pub bug_id: String,
    pub error: String,
    pub replay_miss: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchOutcome {
    /// Successful results, ordered by bug id.
    pub results: Vec<SummaryResult>,
    /// Per-instance failures, ordered by bug id; never fatal to the batch.
    pub failures: Vec<InstanceFailure>,
}

pub(crate) struct CodeSummaryOutcome {
    pub consolidated: Vec<String>,
    pub chunks: Vec<(usize, Vec<String>)>,
    pub fingerprints: Vec<String>,
}

/// A configured summarizer bound to one provider.
pub struct Pipeline {
    cfg: PipelineConfig,
    templates: TemplateSet,
    provider: Provider,
    exemplars: Vec<Exemplar>,
}

impl Pipeline {
    /// Build a pipeline, resolving the first `k` exemplar-pool instances
    /// from `exemplar_corpus` into rendered demonstrations.
    pub fn new(
        cfg: PipelineConfig,
        templates: TemplateSet,
        exemplar_corpus: Option<&Corpus>,
    ) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let provider = Provider::new(cfg.provider.clone())
            .map_err(|source| PipelineError::Provider { stage: "config", source })?;

        let mut exemplars = Vec::new();
        if cfg.strategy.k > 0 {
            let corpus = exemplar_corpus.ok_or_else(|| {
                PipelineError::InvalidConfig("one/few-shot strategies need an exemplar corpus".into())
            })?;
            for bug_id in cfg.exemplar_pool.iter().take(cfg.strategy.k) {
                let instance = corpus
                    .get(bug_id)
                    .ok_or_else(|| PipelineError::ExemplarNotFound { bug_id: bug_id.clone() })?;
                let reference = instance
                    .reference_summary
                    .as_ref()
                    .ok_or_else(|| PipelineError::ExemplarMissingReference { bug_id: bug_id.clone() })?;
                exemplars.push(Exemplar {
                    input: render_exemplar_input(instance, cfg.condition, cfg.ordering)?,
                    target: detokenize(reference),
                });
            }
        }
        Ok(Self { cfg, templates, provider, exemplars })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn provider(&self) -> &Provider {
        &self.provider
    }

    /// Chunk-summarize the instance's code and consolidate.
    ///
    /// Code at or under the chunk limit takes a single chunk call whose
    /// output is the consolidated summary directly; longer code takes one
    /// call per segment plus one aggregation call.
    pub(crate) fn summarize_code(&self, instance: &BugInstance) -> Result<CodeSummaryOutcome, PipelineError> {
        let code = select_code_tokens(instance, self.cfg.condition)?;
        let plan = plan_chunks(&code, self.cfg.chunk_limit, self.cfg.chunk_snap);
        let total = plan.segment_count();
        let report: &[String] =
            if self.cfg.condition.includes_report() { &instance.report_tokens } else { &[] };

        let mut chunks = Vec::with_capacity(total);
        let mut fingerprints = Vec::new();
        for m in 0..total {
            let chunk = slice(&code, &plan, m)?;
            let prompt = self.templates.build_chunk_prompt(report, chunk, m, total)?;
            let completion = self
                .provider
                .complete(&prompt, &self.cfg.decoding)
                .map_err(|source| PipelineError::Provider { stage: "chunk", source })?;
            fingerprints.push(prompt.fingerprint);
            chunks.push((m, tokenize_text(&completion.text)));
        }

        let consolidated = if total == 1 {
            chunks[0].1.clone()
        } else {
            let summaries: Vec<Vec<String>> = chunks.iter().map(|(_, s)| s.clone()).collect();
            let prompt = self.templates.build_aggregate_prompt(&summaries)?;
            let body_tokens = tokenize_text(&prompt.body).len();
            let cap = AGGREGATE_CAP_FACTOR * self.cfg.chunk_limit;
            if body_tokens > cap {
                return Err(PipelineError::AggregateTooLarge { got: body_tokens, cap });
            }
            let completion = self
                .provider
                .complete(&prompt, &self.cfg.decoding)
                .map_err(|source| PipelineError::Provider { stage: "aggregate", source })?;
            fingerprints.push(prompt.fingerprint);
            tokenize_text(&completion.text)
        };

        Ok(CodeSummaryOutcome { consolidated, chunks, fingerprints })
    }

    /// Produce the final abstractive summary for one instance.
    pub fn summarize(&self, instance: &BugInstance) -> Result<SummaryResult, PipelineError> {
        let (code_summary, chunk_summaries, mut fingerprints) = if self.cfg.condition.includes_code() {
            let outcome = self.summarize_code(instance)?;
            (Some(outcome.consolidated), outcome.chunks, outcome.fingerprints)
        } else {
            (None, Vec::new(), Vec::new())
        };

        let prompt = self.templates.build_final_prompt(
            instance,
            code_summary.as_deref(),
            self.cfg.strategy,
            self.cfg.condition,
            self.cfg.ordering,
            &self.exemplars,
        )?;
        let completion = self
            .provider
            .complete(&prompt, &self.cfg.decoding)
            .map_err(|source| PipelineError::Provider { stage: "final", source })?;
        fingerprints.push(prompt.fingerprint);

        Ok(SummaryResult {
            bug_id: instance.bug_id.clone(),
            final_summary: tokenize_text(&completion.text),
            code_summary,
            chunk_summaries,
            prompts_used: fingerprints,
            provenance: self.cfg.clone(),
        })
    }

    /// Summarize every non-exemplar instance, collecting per-instance
    /// failures instead of aborting. Results come back ordered by bug id
    /// whatever the completion order.
    pub fn run_batch(&self, corpus: &Corpus, parallelism: usize) -> Result<BatchOutcome, PipelineError> {
        if parallelism == 0 {
            return Err(PipelineError::InvalidConfig("parallelism must be at least 1".into()));
        }
        if corpus.is_empty() {
            return Err(PipelineError::EmptyCorpus);
        }
        let pool: BTreeSet<&str> = self.cfg.exemplar_pool.iter().map(String::as_str).collect();
        let targets: Vec<&BugInstance> =
            corpus.instances().iter().filter(|i| !pool.contains(i.bug_id.as_str())).collect();
        if targets.is_empty() {
            return Err(PipelineError::EmptyCorpus);
        }

        let next = AtomicUsize::new(0);
        let (tx, rx) = mpsc::channel::<(usize, Result<SummaryResult, PipelineError>)>();
        let workers = parallelism.min(targets.len());
        std::thread::scope(|scope| {
            for _ in 0..workers {
                let tx = tx.clone();
                let next = &next;
                let targets = &targets;
                scope.spawn(move || loop {
                    let i = next.fetch_add(1, AtomicOrdering::Relaxed);
                    if i >= targets.len() {
                        break;
                    }
                    let outcome = self.summarize(targets[i]);
                    if tx.send((i, outcome)).is_err() {
                        break;
                    }
                });
            }
            drop(tx);
        });

        let mut results = Vec::new();
        let mut failures = Vec::new();
        for (i, outcome) in rx {
            match outcome {
                Ok(result) => results.push(result),
                Err(err) => failures.push(InstanceFailure {
                    bug_id: targets[i].bug_id.clone(),
                    error: err.to_string(),
                    replay_miss: err.is_replay_miss(),
                }),
            }
        }
        results.sort_by(|a, b| a.bug_id.cmp(&b.bug_id));
        failures.sort_by(|a, b| a.bug_id.cmp(&b.bug_id));
        Ok(BatchOutcome { results, failures })
    }
}

/// Wire form of one [`SummaryResult`]: token sequences rendered back to
/// text, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub bug_id: String,
    pub summary: String,
    #[serde(default)]
    pub code_summary: Option<String>,
    #[serde(default)]
    pub chunks: Vec<String>,
    #[serde(default)]
    pub prompt_fingerprints: Vec<String>,
    pub config: PipelineConfig,
}

impl From<&SummaryResult> for ResultRecord {
    fn from(result: &SummaryResult) -> Self {
        Self {
            bug_id: result.bug_id.clone(),
            summary: detokenize(&result.final_summary),
            code_summary: result.code_summary.as_ref().map(|t| detokenize(t)),
            chunks: result.chunk_summaries.iter().map(|(_, t)| detokenize(t)).collect(),
            prompt_fingerprints: result.prompts_used.clone(),
            config: result.provenance.clone(),
        }
    }
}

pub fn save_results(results: &[SummaryResult], path: &std::path::Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut file = std::fs::File::create(path)?;
    for result in results {
        let record = ResultRecord::from(result);
        let line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
        writeln!(file, "{line}")?;
    }
    Ok(())
}

pub fn load_results(path: &std::path::Path) -> std::io::Result<Vec<ResultRecord>> {
    use std::io::BufRead;
    let file = std::fs::File::open(path)?;
    let mut records = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(std::io::Error::other)?);
    }
    Ok(records)
}
