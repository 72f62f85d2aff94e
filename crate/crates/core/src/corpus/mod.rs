//! Ingestion and normalization of bug-report and code sources.
//!
//! Raw sources (tracker pages, plain text, code files, diffs, traces) are
//! normalized into [`BugInstance`]s: a report token sequence plus a list of
//! [`CodeArtifact`]s, optionally paired with a reference summary. Corpora are
//! persisted as JSONL or read from a Defects4J-style directory layout.

mod fetch;
mod finetune;
pub mod html;
mod io;

pub use fetch::fetch_source;
pub use finetune::{export_finetune_dataset, split_of, FinetuneRecord, FinetuneVariant, Split};
pub use io::{load_corpus, save_corpus, CorpusFormat};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::token::{self, tokenize_code, tokenize_text};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("undecodable content from {origin}")]
    Undecodable { origin: String },
    #[error("empty_after_cleaning: {origin} produced no text and no code blocks")]
    EmptyAfterCleaning { origin: String },
    #[error("no_textual_source: bug {bug_id} has no report text")]
    NoTextualSource { bug_id: String },
    #[error("all sources rejected for bug {bug_id}: {detail}")]
    AllSourcesRejected { bug_id: String, detail: String },
    #[error("duplicate bug_id {bug_id}")]
    DuplicateBugId { bug_id: String },
    #[error("malformed record at line {line}: {msg}")]
    MalformedRecord { line: usize, msg: String },
    #[error("missing reference summary for bug {bug_id}")]
    MissingReference { bug_id: String },
    #[error("missing code summary for bug {bug_id} (required for br_plus_cs)")]
    MissingCodeSummary { bug_id: String },
    #[error("empty bug_id")]
    EmptyBugId,
    #[error("http_status({status}) from {url}")]
    HttpStatus { status: u16, url: String },
    #[error("network error for {url}: {msg}")]
    Network { url: String, msg: String },
    #[error("timeout fetching {url}")]
    Timeout { url: String },
    #[error("invalid url {url}")]
    InvalidUrl { url: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What a raw source claims to be before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    TrackerHtml,
    PlainText,
    CodeFile,
    Diff,
    StackTrace,
}

/// One raw input file or fetched page, prior to normalization.
#[derive(Debug, Clone)]
pub struct RawSource {
    pub bug_id: String,
    pub kind: SourceKind,
    pub content: Vec<u8>,
    /// URL or file path this came from.
    pub origin: String,
}

impl RawSource {
    pub fn new(bug_id: impl Into<String>, kind: SourceKind, content: impl Into<Vec<u8>>, origin: impl Into<String>) -> Self {
        Self { bug_id: bug_id.into(), kind, content: content.into(), origin: origin.into() }
    }
}

/// Classified kind of a code artifact attached to a bug.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArtifactKind {
    BuggyCode,
    PatchCode,
    Diff,
    StackTrace,
    InlineBlock,
}

impl ArtifactKind {
    /// Merge order inside a [`BugInstance`].
    pub fn rank(self) -> u8 {
        match self {
            ArtifactKind::BuggyCode => 0,
            ArtifactKind::PatchCode => 1,
            ArtifactKind::Diff => 2,
            ArtifactKind::StackTrace => 3,
            ArtifactKind::InlineBlock => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::BuggyCode => "buggy_code",
            ArtifactKind::PatchCode => "patch_code",
            ArtifactKind::Diff => "diff",
            ArtifactKind::StackTrace => "stack_trace",
            ArtifactKind::InlineBlock => "inline_block",
        }
    }
}

/// One normalized code artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeArtifact {
    pub kind: ArtifactKind,
    pub tokens: Vec<String>,
    pub source_path: Option<String>,
}

/// One bug: normalized report tokens, code artifacts, optional reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BugInstance {
    pub bug_id: String,
    pub project: String,
    pub report_tokens: Vec<String>,
    pub code_artifacts: Vec<CodeArtifact>,
    pub reference_summary: Option<Vec<String>>,
    pub tracker_url: Option<String>,
}

impl BugInstance {
    /// All code tokens in artifact order (used by the sufficiency check).
    pub fn all_code_tokens(&self) -> Vec<String> {
        self.code_artifacts.iter().flat_map(|a| a.tokens.iter().cloned()).collect()
    }
}

/// An ordered, duplicate-free collection of bug instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub name: String,
    instances: Vec<BugInstance>,
    pub provenance: String,
}

impl Corpus {
    /// Build a corpus; instances are sorted by `bug_id` and duplicates rejected.
    pub fn new(name: impl Into<String>, mut instances: Vec<BugInstance>, provenance: impl Into<String>) -> Result<Self, CorpusError> {
        instances.sort_by(|a, b| a.bug_id.cmp(&b.bug_id));
        let mut seen = BTreeSet::new();
        for inst in &instances {
            if inst.bug_id.is_empty() {
                return Err(CorpusError::EmptyBugId);
            }
            if !seen.insert(inst.bug_id.clone()) {
                return Err(CorpusError::DuplicateBugId { bug_id: inst.bug_id.clone() });
            }
        }
        Ok(Self { name: name.into(), instances, provenance: provenance.into() })
    }

    pub fn instances(&self) -> &[BugInstance] {
        &self.instances
    }

    pub fn get(&self, bug_id: &str) -> Option<&BugInstance> {
        self.instances.iter().find(|i| i.bug_id == bug_id)
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// Knobs for [`normalize`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NormalizationConfig {
    /// Lift fenced / `<pre>` / `<code>` regions out as inline-block artifacts.
    pub extract_code_blocks: bool,
    /// Apply Unicode NFC to cleaned text.
    pub nfc: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        Self { extract_code_blocks: true, nfc: true }
    }
}

/// Normalize one raw source into report tokens plus extracted code artifacts.
///
/// Textual sources (`tracker_html`, `plain_text`) yield report tokens with
/// code regions removed and returned as `inline_block` artifacts. Code-kind
/// sources yield no report tokens and a single classified artifact.
pub fn normalize(raw: &RawSource, rules: &NormalizationConfig) -> Result<(Vec<String>, Vec<CodeArtifact>), CorpusError> {
    let content = decode_utf8(raw)?;

    let (text, blocks) = match raw.kind {
        SourceKind::TrackerHtml => {
            let cleaned = html::clean_html(&content);
            if rules.extract_code_blocks {
                (cleaned.text, cleaned.code_blocks)
            } else {
                // fold code regions back into the text stream
                let mut text = cleaned.text;
                for block in cleaned.code_blocks {
                    text.push('\n');
                    text.push_str(&block);
                }
                (text, Vec::new())
            }
        }
        SourceKind::PlainText => {
            if rules.extract_code_blocks {
                extract_fenced_blocks(&content)
            } else {
                (content.replace("```", " "), Vec::new())
            }
        }
        SourceKind::CodeFile | SourceKind::Diff | SourceKind::StackTrace => {
            (String::new(), vec![content])
        }
    };

    let text = if rules.nfc { text.nfc().collect::<String>() } else { text };
    let report_tokens = tokenize_text(&text);

    let mut artifacts = Vec::new();
    for block in blocks {
        let block = if rules.nfc { block.nfc().collect::<String>() } else { block };
        let tokens = tokenize_code(&block);
        if tokens.is_empty() {
            continue;
        }
        let kind = match raw.kind {
            SourceKind::TrackerHtml | SourceKind::PlainText => ArtifactKind::InlineBlock,
            _ => classify_artifact(raw, hint_from_origin(&raw.origin)),
        };
        let source_path = match raw.kind {
            SourceKind::TrackerHtml | SourceKind::PlainText => None,
            _ => Some(raw.origin.clone()),
        };
        artifacts.push(CodeArtifact { kind, tokens, source_path });
    }

    if report_tokens.is_empty() && artifacts.is_empty() {
        return Err(CorpusError::EmptyAfterCleaning { origin: raw.origin.clone() });
    }
    Ok((report_tokens, artifacts))
}

fn decode_utf8(raw: &RawSource) -> Result<String, CorpusError> {
    let bytes = raw.content.strip_prefix(b"\xef\xbb\xbf").unwrap_or(&raw.content);
    std::str::from_utf8(bytes)
        .map(|s| s.replace('\0', ""))
        .map_err(|_| CorpusError::Undecodable { origin: raw.origin.clone() })
}

/// Pull ``` fenced blocks out of plain text.
fn extract_fenced_blocks(content: &str) -> (String, Vec<String>) {
    let mut text = String::new();
    let mut blocks = Vec::new();
    let mut current: Option<String> = None;
    for line in content.lines() {
        if line.trim_start().starts_with("```") {
            match current.take() {
                Some(block) => {
                    if !block.trim().is_empty() {
                        blocks.push(block);
                    }
                }
                None => current = Some(String::new()),
            }
            continue;
        }
        match &mut current {
            Some(block) => {
                block.push_str(line);
                block.push('\n');
            }
            None => {
                text.push_str(line);
                text.push('\n');
            }
        }
    }
    // unterminated fence: keep what was collected
    if let Some(block) = current {
        if !block.trim().is_empty() {
            blocks.push(block);
        }
    }
    (text, blocks)
}

/// Decide what kind of code artifact a raw source holds.
///
/// Diff headers win, then a majority of `at pkg.Class.method(File:line)`
/// lines, otherwise the caller's hint.
pub fn classify_artifact(raw: &RawSource, hint: ArtifactKind) -> ArtifactKind {
    match raw.kind {
        SourceKind::Diff => return ArtifactKind::Diff,
        SourceKind::StackTrace => return ArtifactKind::StackTrace,
        _ => {}
    }
    let content = String::from_utf8_lossy(&raw.content);
    classify_content(&content, hint)
}

pub(crate) fn classify_content(content: &str, hint: ArtifactKind) -> ArtifactKind {
    let mut has_minus = false;
    let mut has_plus = false;
    let mut non_empty = 0usize;
    let mut frame_lines = 0usize;
    for line in content.lines() {
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        non_empty += 1;
        if line.starts_with("--- ") {
            has_minus = true;
        }
        if line.starts_with("+++ ") {
            has_plus = true;
        }
        if line.starts_with("@@") {
            return ArtifactKind::Diff;
        }
        if is_frame_line(trimmed) {
            frame_lines += 1;
        }
    }
    if has_minus && has_plus {
        return ArtifactKind::Diff;
    }
    if non_empty > 0 && frame_lines * 2 > non_empty {
        return ArtifactKind::StackTrace;
    }
    hint
}

/// `at com.example.Foo.bar(Foo.java:42)`-shaped line.
fn is_frame_line(line: &str) -> bool {
    let Some(rest) = line.strip_prefix("at ") else { return false };
    let rest = rest.trim_start();
    match (rest.find('('), rest.rfind(')')) {
        (Some(open), Some(close)) if open > 0 && close > open => {
            rest[..open].chars().all(|c| c.is_alphanumeric() || matches!(c, '.' | '$' | '_' | '<' | '>'))
        }
        _ => false,
    }
}

/// Default artifact hint for a code file, derived from its path.
pub fn hint_from_origin(origin: &str) -> ArtifactKind {
    let patchy = origin
        .split(['/', '\\'])
        .any(|part| part == "patch" || part == "patches" || part.starts_with("patch."));
    if patchy {
        ArtifactKind::PatchCode
    } else {
        ArtifactKind::BuggyCode
    }
}

/// Assemble one [`BugInstance`] from its raw sources.
///
/// Sources are normalized in order; report tokens concatenate across textual
/// sources and artifacts are merged by kind (buggy, patch, diff, trace,
/// inline) keeping source order within a kind.
pub fn build_instance(
    bug_id: &str,
    project: &str,
    sources: &[RawSource],
    reference: Option<&str>,
    rules: &NormalizationConfig,
) -> Result<BugInstance, CorpusError> {
    if bug_id.is_empty() {
        return Err(CorpusError::EmptyBugId);
    }
    let mut report_tokens = Vec::new();
    let mut artifacts: Vec<CodeArtifact> = Vec::new();
    let mut tracker_url = None;
    let mut rejections = Vec::new();
    let mut accepted = 0usize;

    for raw in sources {
        match normalize(raw, rules) {
            Ok((tokens, blocks)) => {
                accepted += 1;
                report_tokens.extend(tokens);
                artifacts.extend(blocks);
                if tracker_url.is_none()
                    && raw.kind == SourceKind::TrackerHtml
                    && raw.origin.starts_with("http")
                {
                    tracker_url = Some(raw.origin.clone());
                }
            }
            Err(err) => rejections.push(err.to_string()),
        }
    }

    if accepted == 0 && !sources.is_empty() {
        return Err(CorpusError::AllSourcesRejected {
            bug_id: bug_id.to_string(),
            detail: rejections.join("; "),
        });
    }
    if report_tokens.is_empty() {
        return Err(CorpusError::NoTextualSource { bug_id: bug_id.to_string() });
    }

    artifacts.sort_by_key(|a| a.kind.rank());

    let reference_summary = reference
        .map(tokenize_text)
        .filter(|tokens| !tokens.is_empty());

    Ok(BugInstance {
        bug_id: bug_id.to_string(),
        project: project.to_string(),
        report_tokens,
        code_artifacts: artifacts,
        reference_summary,
        tracker_url,
    })
}

/// Render tokens as text for storage (inverse of load-time tokenization).
pub fn render_tokens(tokens: &[String]) -> String {
    token::detokenize(tokens)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn html_source(body: &str) -> RawSource {
        RawSource::new("bug-1", SourceKind::TrackerHtml, body.as_bytes().to_vec(), "https://tracker/bug-1")
    }

    #[test]
    fn normalize_strips_markup() {
        let (tokens, blocks) =
            normalize(&html_source("<p>App <b>crashes</b> on save</p>"), &NormalizationConfig::default()).unwrap();
        assert_eq!(tokens, vec!["App", "crashes", "on", "save"]);
        assert!(blocks.is_empty());
    }

    #[test]
    fn normalize_extracts_pre_blocks() {
        let (tokens, blocks) =
            normalize(&html_source("text <pre>int x=0;</pre> more"), &NormalizationConfig::default()).unwrap();
        assert_eq!(tokens, vec!["text", "more"]);
        assert_eq!(blocks.len(), 1);
        assert_eq!(blocks[0].kind, ArtifactKind::InlineBlock);
        assert_eq!(blocks[0].tokens, vec!["int", "x", "=", "0", ";"]);
    }

    #[test]
    fn normalize_rejects_empty_input() {
        let err = normalize(&html_source(""), &NormalizationConfig::default()).unwrap_err();
        assert!(matches!(err, CorpusError::EmptyAfterCleaning { .. }), "{err}");
    }

    #[test]
    fn normalize_rejects_invalid_utf8() {
        let raw = RawSource::new("bug-1", SourceKind::PlainText, vec![0xff, 0xfe, 0x00, 0x80], "x.txt");
        assert!(matches!(normalize(&raw, &NormalizationConfig::default()), Err(CorpusError::Undecodable { .. })));
    }

    #[test]
    fn normalize_is_deterministic() {
        let raw = html_source("<p>Some &amp; report <code>a+b</code> text</p>");
        let first = normalize(&raw, &NormalizationConfig::default()).unwrap();
        let second = normalize(&raw, &NormalizationConfig::default()).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn extraction_removes_block_tokens_from_text() {
        let (tokens, blocks) =
            normalize(&html_source("before <pre>UNIQUEMARKER</pre> after"), &NormalizationConfig::default()).unwrap();
        assert!(!tokens.iter().any(|t| t == "UNIQUEMARKER"));
        assert!(blocks[0].tokens.iter().any(|t| t == "UNIQUEMARKER"));
    }

    #[test]
    fn plain_text_fences_become_blocks() {
        let raw = RawSource::new("b", SourceKind::PlainText, "intro\n```\nx = 1;\n```\noutro\n".as_bytes().to_vec(), "r.md");
        let (tokens, blocks) = normalize(&raw, &NormalizationConfig::default()).unwrap();
        assert_eq!(tokens, vec!["intro", "outro"]);
        assert_eq!(blocks[0].tokens, vec!["x", "=", "1", ";", "\n"]);
    }

    #[test]
    fn classify_detects_diff_headers() {
        let raw = RawSource::new("b", SourceKind::CodeFile, b"--- a/X\n+++ b/X\n ctx".to_vec(), "f.diff");
        assert_eq!(classify_artifact(&raw, ArtifactKind::BuggyCode), ArtifactKind::Diff);
    }

    #[test]
    fn classify_detects_stack_trace_majority() {
        let mut lines: Vec<String> =
            (0..8).map(|i| format!("at com.example.Foo.bar(Foo.java:{i})")).collect();
        lines.push("Exception in thread main".to_string());
        lines.push("caused by something".to_string());
        let raw = RawSource::new("b", SourceKind::CodeFile, lines.join("\n").into_bytes(), "t.txt");
        assert_eq!(classify_artifact(&raw, ArtifactKind::BuggyCode), ArtifactKind::StackTrace);
    }

    #[test]
    fn classify_falls_back_to_hint() {
        let raw = RawSource::new("b", SourceKind::CodeFile, b"int add(int a, int b) { return a + b; }".to_vec(), "f.java");
        assert_eq!(classify_artifact(&raw, ArtifactKind::BuggyCode), ArtifactKind::BuggyCode);
        assert_eq!(classify_artifact(&raw, ArtifactKind::PatchCode), ArtifactKind::PatchCode);
    }

    #[test]
    fn build_instance_merges_and_orders_artifacts() {
        let sources = vec![
            RawSource::new("bug-1", SourceKind::TrackerHtml, b"<p>report <pre>inline();</pre></p>".to_vec(), "https://t/1"),
            RawSource::new("bug-1", SourceKind::Diff, b"--- a/X\n+++ b/X\n-old\n+new".to_vec(), "fix.diff"),
        ];
        let inst = build_instance("bug-1", "demo", &sources, None, &NormalizationConfig::default()).unwrap();
        assert_eq!(inst.report_tokens, vec!["report"]);
        let kinds: Vec<_> = inst.code_artifacts.iter().map(|a| a.kind).collect();
        assert_eq!(kinds, vec![ArtifactKind::Diff, ArtifactKind::InlineBlock]);
        assert_eq!(inst.tracker_url.as_deref(), Some("https://t/1"));
    }

    #[test]
    fn build_instance_requires_text() {
        let sources = vec![RawSource::new("bug-1", SourceKind::CodeFile, b"int x;".to_vec(), "a.java")];
        let err = build_instance("bug-1", "demo", &sources, None, &NormalizationConfig::default()).unwrap_err();
        assert!(matches!(err, CorpusError::NoTextualSource { .. }), "{err}");
    }

    #[test]
    fn build_instance_reports_total_rejection() {
        let sources = vec![RawSource::new("bug-1", SourceKind::PlainText, b"".to_vec(), "empty.txt")];
        let err = build_instance("bug-1", "demo", &sources, None, &NormalizationConfig::default()).unwrap_err();
        assert!(matches!(err, CorpusError::AllSourcesRejected { .. }), "{err}");
    }

    #[test]
    fn build_instance_tokenizes_reference() {
        let sources = vec![html_source("<p>report text</p>")];
        let inst =
            build_instance("bug-1", "demo", &sources, Some("Crash on save."), &NormalizationConfig::default()).unwrap();
        assert_eq!(inst.reference_summary.unwrap(), vec!["Crash", "on", "save", "."]);
    }

    #[test]
    fn corpus_sorts_and_rejects_duplicates() {
        let mk = |id: &str| BugInstance {
            bug_id: id.to_string(),
            project: "p".to_string(),
            report_tokens: vec!["x".to_string()],
            code_artifacts: vec![],
            reference_summary: None,
            tracker_url: None,
        };
        let corpus = Corpus::new("c", vec![mk("b"), mk("a")], "test").unwrap();
        assert_eq!(corpus.instances()[0].bug_id, "a");
        assert!(matches!(
            Corpus::new("c", vec![mk("a"), mk("a")], "test"),
            Err(CorpusError::DuplicateBugId { .. })
        ));
    }

    #[test]
    fn hint_from_origin_detects_patch_dirs() {
        assert_eq!(hint_from_origin("bugs/lang-1/patch/Foo.src"), ArtifactKind::PatchCode);
        assert_eq!(hint_from_origin("bugs/lang-1/buggy/Foo.src"), ArtifactKind::BuggyCode);
    }
}
