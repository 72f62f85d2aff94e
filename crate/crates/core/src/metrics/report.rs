//! Per-pair and corpus-level metric assembly plus JSON/CSV serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{
    bert_score, corpus_rouge, rouge_l, rouge_n, semantic_sufficiency, Embedder, MetricsError,
    RougeKind, PRF,
};
use crate::corpus::BugInstance;
use crate::token::lowercase;

/// Which metrics a run computes. Sufficiency rides along whenever an
/// embedder is available; it is a diagnostic, not a benchmark column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsSelection {
    pub rouge1: bool,
    pub rouge2: bool,
    pub rouge_l: bool,
    pub bert: bool,
}

impl Default for MetricsSelection {
    fn default() -> Self {
        Self { rouge1: true, rouge2: true, rouge_l: true, bert: true }
    }
}

impl MetricsSelection {
    /// Parse matrix-file names like `["rouge1", "bert"]`.
    pub fn from_names(names: &[String]) -> Self {
        let mut selection = Self { rouge1: false, rouge2: false, rouge_l: false, bert: false };
        for name in names {
            match name.as_str() {
                "rouge1" => selection.rouge1 = true,
                "rouge2" => selection.rouge2 = true,
                "rougeL" | "rouge_l" => selection.rouge_l = true,
                "bert" | "bertscore" => selection.bert = true,
                _ => {}
            }
        }
        selection
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PairMetrics {
    pub rouge1: Option<PRF>,
    pub rouge2: Option<PRF>,
    pub rouge_l: Option<PRF>,
    pub bert: Option<PRF>,
    pub sufficiency_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CorpusMetrics {
    /// Summed-numerator over summed-denominator aggregates.
    pub rouge1_micro: Option<f64>,
    pub rouge2_micro: Option<f64>,
    pub rouge_l_micro: Option<f64>,
    /// Arithmetic means of the per-pair values.
    pub rouge1_macro: Option<PRF>,
    pub rouge2_macro: Option<PRF>,
    pub rouge_l_macro: Option<PRF>,
    pub bert_macro: Option<PRF>,
    pub sufficiency_mean: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub embedder_id: String,
    pub per_pair: BTreeMap<String, PairMetrics>,
    pub corpus: CorpusMetrics,
}

/// One scored pair: candidate summary against the instance's reference.
pub struct EvalItem<'a> {
    pub instance: &'a BugInstance,
    pub candidate: &'a [String],
}

/// Score every item. Candidates and references are lowercased before
/// scoring; the sufficiency distance is computed against the instance's
/// report and code tokens.
pub fn evaluate(
    items: &[EvalItem<'_>],
    selection: MetricsSelection,
    embedder: &dyn Embedder,
    epsilon: f64,
) -> Result<MetricReport, MetricsError> {
    if items.is_empty() {
        return Err(MetricsError::EmptyPairList);
    }

    let mut per_pair = BTreeMap::new();
    let mut pairs = Vec::with_capacity(items.len());
    for item in items {
        let reference = item
            .instance
            .reference_summary
            .as_ref()
            .ok_or_else(|| MetricsError::MissingReference { bug_id: item.instance.bug_id.clone() })?;
        if item.candidate.is_empty() {
            return Err(MetricsError::MissingCandidate { bug_id: item.instance.bug_id.clone() });
        }
        let candidate = lowercase(item.candidate);
        let reference = lowercase(reference);

        let metrics = PairMetrics {
            rouge1: selection.rouge1.then(|| rouge_n(&candidate, &reference, 1)),
            rouge2: selection.rouge2.then(|| rouge_n(&candidate, &reference, 2)),
            rouge_l: selection.rouge_l.then(|| rouge_l(&candidate, &reference)),
            bert: if selection.bert {
                Some(bert_score(&candidate, &reference, embedder)?)
            } else {
                None
            },
            sufficiency_distance: Some(
                semantic_sufficiency(item.instance, &candidate, embedder, epsilon)?.0,
            ),
        };
        per_pair.insert(item.instance.bug_id.clone(), metrics);
        pairs.push((candidate, reference));
    }

    let values: Vec<&PairMetrics> = per_pair.values().collect();
    let corpus = CorpusMetrics {
        rouge1_micro: selection.rouge1.then(|| corpus_rouge(&pairs, RougeKind::N(1))).transpose()?,
        rouge2_micro: selection.rouge2.then(|| corpus_rouge(&pairs, RougeKind::N(2))).transpose()?,
        rouge_l_micro: selection.rouge_l.then(|| corpus_rouge(&pairs, RougeKind::L)).transpose()?,
        rouge1_macro: macro_mean(&values, |m| m.rouge1),
        rouge2_macro: macro_mean(&values, |m| m.rouge2),
        rouge_l_macro: macro_mean(&values, |m| m.rouge_l),
        bert_macro: macro_mean(&values, |m| m.bert),
        sufficiency_mean: {
            let ds: Vec<f64> = values.iter().filter_map(|m| m.sufficiency_distance).collect();
            (!ds.is_empty()).then(|| ds.iter().sum::<f64>() / ds.len() as f64)
        },
    };

    Ok(MetricReport { embedder_id: embedder.id().to_string(), per_pair, corpus })
}

fn macro_mean(values: &[&PairMetrics], pick: impl Fn(&PairMetrics) -> Option<PRF>) -> Option<PRF> {
    let picked: Vec<PRF> = values.iter().filter_map(|m| pick(m)).collect();
    if picked.is_empty() {
        return None;
    }
    let n = picked.len() as f64;
    Some(PRF {
        precision: picked.iter().map(|p| p.precision).sum::<f64>() / n,
        recall: picked.iter().map(|p| p.recall).sum::<f64>() / n,
        f1: picked.iter().map(|p| p.f1).sum::<f64>() / n,
    })
}

pub const CSV_HEADER: [&str; 18] = [
    "bug_id",
    "rouge1_p",
    "rouge1_r",
    "rouge1_f1",
    "rouge2_p",
    "rouge2_r",
    "rouge2_f1",
    "rougeL_p",
    "rougeL_r",
    "rougeL_f1",
    "bert_p",
    "bert_r",
    "bert_f1",
    "sufficiency_d",
    "rouge1_micro",
    "rouge2_micro",
    "rougeL_micro",
    "embedder",
];

fn fmt(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.6}")).unwrap_or_default()
}

fn prf_cells(prf: Option<PRF>) -> [String; 3] {
    [
        fmt(prf.map(|p| p.precision)),
        fmt(prf.map(|p| p.recall)),
        fmt(prf.map(|p| p.f1)),
    ]
}

impl MetricReport {
    /// One row per bug id plus a final `CORPUS` row carrying the macro means
    /// and the micro aggregates.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(CSV_HEADER)?;
        for (bug_id, m) in &self.per_pair {
            let mut row = vec![bug_id.clone()];
            row.extend(prf_cells(m.rouge1));
            row.extend(prf_cells(m.rouge2));
            row.extend(prf_cells(m.rouge_l));
            row.extend(prf_cells(m.bert));
            row.push(fmt(m.sufficiency_distance));
            row.extend([String::new(), String::new(), String::new()]);
            row.push(String::new());
            writer.write_record(&row)?;
        }
        let mut corpus_row = vec!["CORPUS".to_string()];
        corpus_row.extend(prf_cells(self.corpus.rouge1_macro));
        corpus_row.extend(prf_cells(self.corpus.rouge2_macro));
        corpus_row.extend(prf_cells(self.corpus.rouge_l_macro));
        corpus_row.extend(prf_cells(self.corpus.bert_macro));
        corpus_row.push(fmt(self.corpus.sufficiency_mean));
        corpus_row.push(fmt(self.corpus.rouge1_micro));
        corpus_row.push(fmt(self.corpus.rouge2_micro));
        corpus_row.push(fmt(self.corpus.rouge_l_micro));
        corpus_row.push(self.embedder_id.clone());
        writer.write_record(&corpus_row)?;
        let bytes = writer.into_inner().expect("vec writer");
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }
}
