//! Fine-tune dataset export: one `{input, target}` record per instance, in
//! two variants (report only, report plus consolidated code summary), split
//! 90/10 by a stable hash of the bug id.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{render_tokens, Corpus, CorpusError};
use crate::prompting::render_finetune_input;

/// Which inputs the exported records condition on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FinetuneVariant {
    /// Bug-report text only.
    BrOnly,
    /// Bug-report text plus the consolidated code summary.
    BrPlusCs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Valid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub bug_id: String,
    pub split: Split,
    pub input: String,
    pub target: String,
}

/// Train/validation assignment for a bug id.
///
/// Keyed by a hash of the id alone so the assignment never moves when other
/// instances are added, removed, or reordered. Roughly 10% of ids land in
/// the validation split.
pub fn split_of(bug_id: &str) -> Split {
    let digest = Sha256::digest(bug_id.as_bytes());
    let bucket = u64::from_be_bytes(digest[..8].try_into().expect("8 bytes")) % 10;
    if bucket == 9 {
        Split::Valid
    } else {
        Split::Train
    }
}

/// Export one fine-tune record per instance and write them as JSONL.
///
/// `code_summaries` maps bug ids to consolidated code-summary token
/// sequences; for [`FinetuneVariant::BrPlusCs`] every instance that has code
/// artifacts must have an entry.
pub fn export_finetune_dataset(
    corpus: &Corpus,
    variant: FinetuneVariant,
    code_summaries: &BTreeMap<String, Vec<String>>,
    out_path: &Path,
) -> Result<Vec<FinetuneRecord>, CorpusError> {
    let mut records = Vec::new();
    for inst in corpus.instances() {
        let reference = inst
            .reference_summary
            .as_ref()
            .ok_or_else(|| CorpusError::MissingReference { bug_id: inst.bug_id.clone() })?;

        let code_summary = match variant {
            FinetuneVariant::BrOnly => None,
            FinetuneVariant::BrPlusCs => {
                if inst.code_artifacts.is_empty() {
                    None
                } else {
                    Some(
                        code_summaries
                            .get(&inst.bug_id)
                            .ok_or_else(|| CorpusError::MissingCodeSummary { bug_id: inst.bug_id.clone() })?
                            .as_slice(),
                    )
                }
            }
        };

        records.push(FinetuneRecord {
            bug_id: inst.bug_id.clone(),
            split: split_of(&inst.bug_id),
            input: render_finetune_input(&inst.report_tokens, code_summary),
            target: render_tokens(reference),
        });
    }

    let mut file = fs::File::create(out_path)?;
    for record in &records {
        let line = serde_json::to_string(record)
            .map_err(|e| CorpusError::MalformedRecord { line: 0, msg: e.to_string() })?;
        writeln!(file, "{line}")?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{ArtifactKind, BugInstance, CodeArtifact};
    use crate::token::tokenize_text;

    fn instance(id: &str, with_code: bool, with_reference: bool) -> BugInstance {
        BugInstance {
            bug_id: id.to_string(),
            project: "p".to_string(),
            report_tokens: tokenize_text("Crash when saving a file."),
            code_artifacts: if with_code {
                vec![CodeArtifact {
                    kind: ArtifactKind::BuggyCode,
                    tokens: vec!["int".into(), "x".into(), ";".into()],
                    source_path: None,
                }]
            } else {
                vec![]
            },
            reference_summary: with_reference.then(|| tokenize_text("Saving crashes the app.")),
            tracker_url: None,
        }
    }

    #[test]
    fn split_is_stable_per_id() {
        for id in ["a", "bug-42", "lang-1"] {
            assert_eq!(split_of(id), split_of(id));
        }
    }

    #[test]
    fn br_only_has_no_code_summary_section() {
        let corpus = Corpus::new("c", vec![instance("a", true, true)], "t").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let records = export_finetune_dataset(&corpus, FinetuneVariant::BrOnly, &BTreeMap::new(), &dir.path().join("ft.jsonl")).unwrap();
        assert!(!records[0].input.contains("=== CODE SUMMARY ==="));
        assert!(records[0].input.contains("=== BUG REPORT ==="));
    }

    #[test]
    fn br_plus_cs_includes_code_summary_section() {
        let corpus = Corpus::new("c", vec![instance("a", true, true)], "t").unwrap();
        let mut summaries = BTreeMap::new();
        summaries.insert("a".to_string(), tokenize_text("Initializes x."));
        let dir = tempfile::tempdir().unwrap();
        let records =
            export_finetune_dataset(&corpus, FinetuneVariant::BrPlusCs, &summaries, &dir.path().join("ft.jsonl")).unwrap();
        assert!(records[0].input.contains("=== CODE SUMMARY ==="));
        assert!(records[0].input.contains("Initializes x."));
    }

    #[test]
    fn missing_reference_names_the_bug() {
        let corpus = Corpus::new("c", vec![instance("bug-7", false, false)], "t").unwrap();
        let dir = tempfile::tempdir().unwrap();
        match export_finetune_dataset(&corpus, FinetuneVariant::BrOnly, &BTreeMap::new(), &dir.path().join("ft.jsonl")) {
            Err(CorpusError::MissingReference { bug_id }) => assert_eq!(bug_id, "bug-7"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn missing_code_summary_names_the_bug() {
        let corpus = Corpus::new("c", vec![instance("bug-9", true, true)], "t").unwrap();
        let dir = tempfile::tempdir().unwrap();
        match export_finetune_dataset(&corpus, FinetuneVariant::BrPlusCs, &BTreeMap::new(), &dir.path().join("ft.jsonl")) {
            Err(CorpusError::MissingCodeSummary { bug_id }) => assert_eq!(bug_id, "bug-9"),
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn instances_without_code_need_no_summary_in_brcs() {
        let corpus = Corpus::new("c", vec![instance("a", false, true)], "t").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let records =
            export_finetune_dataset(&corpus, FinetuneVariant::BrPlusCs, &BTreeMap::new(), &dir.path().join("ft.jsonl")).unwrap();
        assert!(!records[0].input.contains("=== CODE SUMMARY ==="));
    }

    #[test]
    fn assignment_unchanged_by_other_instances() {
        let dir = tempfile::tempdir().unwrap();
        let small = Corpus::new("c", vec![instance("keep", true, true)], "t").unwrap();
        let mut summaries = BTreeMap::new();
        summaries.insert("keep".to_string(), vec!["s".to_string()]);
        let r1 = export_finetune_dataset(&small, FinetuneVariant::BrPlusCs, &summaries, &dir.path().join("a.jsonl")).unwrap();

        let big = Corpus::new(
            "c",
            vec![instance("keep", true, true), instance("other-1", false, true), instance("other-2", false, true)],
            "t",
        )
        .unwrap();
        let r2 = export_finetune_dataset(&big, FinetuneVariant::BrPlusCs, &summaries, &dir.path().join("b.jsonl")).unwrap();

        let split1 = r1.iter().find(|r| r.bug_id == "keep").unwrap().split;
        let split2 = r2.iter().find(|r| r.bug_id == "keep").unwrap().split;
        assert_eq!(split1, split2);
    }
}
