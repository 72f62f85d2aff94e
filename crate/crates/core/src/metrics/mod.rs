//! Summary-quality metrics: clipped n-gram overlap, longest-common-
//! subsequence overlap, greedy max-cosine token matching over pluggable
//! embedders, and the input/summary semantic-sufficiency distance.

mod embed;
mod report;

pub use embed::{Embedder, HashedProjectionEmbedder, OneHotEmbedder, RemoteEmbedder};
pub use report::{
    evaluate, CorpusMetrics, EvalItem, MetricReport, MetricsSelection, PairMetrics, CSV_HEADER,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::BugInstance;
use crate::token::lowercase;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty_sequence: the {side} sequence has no tokens")]
    EmptySequence { side: &'static str },
    #[error("empty pair list")]
    EmptyPairList,
    #[error("embedder returned {got} vectors for {expected} tokens")]
    WrongEmbeddingCount { expected: usize, got: usize },
    #[error("one-hot vocabulary exceeded dimension {dim}")]
    VocabOverflow { dim: usize },
    #[error("remote embedder: {0}")]
    Remote(String),
    #[error("no candidate summary for bug {bug_id}")]
    MissingCandidate { bug_id: String },
    #[error("no reference summary for bug {bug_id}")]
    MissingReference { bug_id: String },
}

/// Precision / recall / F1 triple in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PRF {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl PRF {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }
}

/// Which ROUGE flavor a corpus-level aggregate is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RougeKind {
    N(usize),
    L,
}

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    if n >= 1 && tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

fn clipped_overlap(candidate: &[String], reference: &[String], n: usize) -> (usize, usize, usize) {
    let cand_counts = ngram_counts(candidate, n);
    let ref_counts = ngram_counts(reference, n);
    let clipped: usize = ref_counts
        .iter()
        .map(|(gram, &ref_count)| ref_count.min(cand_counts.get(gram).copied().unwrap_or(0)))
        .sum();
    let cand_total = candidate.len().saturating_sub(n - 1);
    let ref_total = reference.len().saturating_sub(n - 1);
    (clipped, cand_total, ref_total)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Clipped n-gram overlap. Recall follows the summed formula at a single
/// pair; precision divides the same numerator by the candidate's n-gram
/// count. Sequences shorter than `n` score zero.
pub fn rouge_n(candidate: &[String], reference: &[String], n: usize) -> PRF {
    assert!(n >= 1, "n-gram order must be at least 1");
    let (clipped, cand_total, ref_total) = clipped_overlap(candidate, reference, n);
    PRF::from_pr(ratio(clipped, cand_total), ratio(clipped, ref_total))
}

pub(crate) fn lcs_length(a: &[String], b: &[String]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    // one-row DP
    let mut prev = vec![0usize; b.len() + 1];
    let mut current = vec![0usize; b.len() + 1];
    for ai in a {
        for (j, bj) in b.iter().enumerate() {
            current[j + 1] = if ai == bj { prev[j] + 1 } else { current[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut current);
    }
    prev[b.len()]
}

/// Longest-common-subsequence overlap: recall divides the LCS by the
/// reference length, precision by the candidate length.
pub fn rouge_l(candidate: &[String], reference: &[String]) -> PRF {
    let lcs = lcs_length(candidate, reference);
    PRF::from_pr(ratio(lcs, candidate.len()), ratio(lcs, reference.len()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na < 1e-12 || nb < 1e-12 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Greedy max-cosine token matching: precision averages, over candidate
/// tokens, the best cosine against the reference embeddings; recall is the
/// symmetric direction.
pub fn bert_score(candidate: &[String], reference: &[String], embedder: &dyn Embedder) -> Result<PRF, MetricsError> {
    if candidate.is_empty() {
        return Err(MetricsError::EmptySequence { side: "candidate" });
    }
    if reference.is_empty() {
        return Err(MetricsError::EmptySequence { side: "reference" });
    }
    let cand_vecs = embedder.embed(candidate)?;
    let ref_vecs = embedder.embed(reference)?;
    if cand_vecs.len() != candidate.len() {
        return Err(MetricsError::WrongEmbeddingCount { expected: candidate.len(), got: cand_vecs.len() });
    }
    if ref_vecs.len() != reference.len() {
        return Err(MetricsError::WrongEmbeddingCount { expected: reference.len(), got: ref_vecs.len() });
    }

    // embeddings are unit-norm, so cosine is the dot product
    let best = |from: &[Vec<f64>], against: &[Vec<f64>]| -> f64 {
        from.iter()
            .map(|v| against.iter().map(|w| dot(v, w)).fold(f64::MIN, f64::max))
            .sum::<f64>()
            / from.len() as f64
    };
    Ok(PRF::from_pr(best(&cand_vecs, &ref_vecs), best(&ref_vecs, &cand_vecs)))
}

/// Micro aggregation over pairs of (candidate, reference): summed numerators
/// over summed denominators.
pub fn corpus_rouge(pairs: &[(Vec<String>, Vec<String>)], kind: RougeKind) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyPairList);
    }
    let mut numerator = 0usize;
    let mut denominator = 0usize;
    for (candidate, reference) in pairs {
        match kind {
            RougeKind::N(n) => {
                let (clipped, _, ref_total) = clipped_overlap(candidate, reference, n);
                numerator += clipped;
                denominator += ref_total;
            }
            RougeKind::L => {
                numerator += lcs_length(candidate, reference);
                denominator += reference.len();
            }
        }
    }
    Ok(ratio(numerator, denominator))
}

fn mean_pool(vectors: &[Vec<f64>]) -> Vec<f64> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let dim = vectors[0].len();
    let mut pooled = vec![0.0; dim];
    for v in vectors {
        for (p, x) in pooled.iter_mut().zip(v) {
            *p += x;
        }
    }
    for p in &mut pooled {
        *p /= vectors.len() as f64;
    }
    pooled
}

/// Cosine distance between the mean-pooled embedding of the instance's
/// report-then-code tokens and the mean-pooled embedding of the summary.
/// The summary is sufficient when the distance is at most `epsilon`.
pub fn semantic_sufficiency(
    instance: &BugInstance,
    summary: &[String],
    embedder: &dyn Embedder,
    epsilon: f64,
) -> Result<(f64, bool), MetricsError> {
    if summary.is_empty() {
        return Err(MetricsError::EmptySequence { side: "summary" });
    }
    let mut input = instance.report_tokens.clone();
    input.extend(instance.all_code_tokens());
    let input = lowercase(&input);
    let summary = lowercase(summary);

    let phi = mean_pool(&embedder.embed(&input)?);
    let psi = mean_pool(&embedder.embed(&summary)?);
    let distance = 1.0 - cosine(&phi, &psi);
    Ok((distance, distance <= epsilon))
}
