//! Deterministic prompt rendering.
//!
//! Every model input is a system text plus a body made of delimited sections:
//! `=== NAME ===` headers for report/code/exemplar sections and
//! `--- PART m ---` headers inside aggregation prompts. Exemplar content is
//! indented two spaces so only top-level headers parse as sections, which
//! keeps the grammar unambiguous however many demonstrations are attached.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{ArtifactKind, BugInstance};
use crate::token::detokenize;

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("exemplar count mismatch: strategy wants {expected}, got {got}")]
    ExemplarCountMismatch { expected: usize, got: usize },
    #[error("exemplar has an empty input or target")]
    EmptyExemplar,
    #[error("no_matching_artifacts: condition {condition} selects no code from this instance")]
    NoMatchingArtifacts { condition: InputCondition },
    #[error("empty chunk")]
    EmptyChunk,
    #[error("aggregation_bypassed: {got} summaries, caller must skip aggregation below 2")]
    AggregationBypassed { got: usize },
    #[error("code summary supplied but condition {condition} takes no code")]
    UnexpectedCodeSummary { condition: InputCondition },
    #[error("strategy {mode:?} requires k = {expected}, got {got}")]
    InconsistentStrategy { mode: PromptMode, expected: usize, got: usize },
    #[error("unknown {what}: {value}")]
    UnknownName { what: &'static str, value: String },
    #[error("template io: {0}")]
    TemplateIo(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptMode {
    ZeroShot,
    OneShot,
    FewShot,
}

/// Prompting strategy: zero/one/few-shot plus the demonstration count `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptStrategy {
    pub mode: PromptMode,
    pub k: usize,
}

impl PromptStrategy {
    pub fn zero_shot() -> Self {
        Self { mode: PromptMode::ZeroShot, k: 0 }
    }

    pub fn one_shot() -> Self {
        Self { mode: PromptMode::OneShot, k: 1 }
    }

    pub fn few_shot(k: usize) -> Result<Self, PromptError> {
        if k == 0 {
            return Err(PromptError::InconsistentStrategy { mode: PromptMode::FewShot, expected: 1, got: 0 });
        }
        Ok(Self { mode: PromptMode::FewShot, k })
    }

    pub fn validate(&self) -> Result<(), PromptError> {
        let ok = match self.mode {
            PromptMode::ZeroShot => self.k == 0,
            PromptMode::OneShot => self.k == 1,
            PromptMode::FewShot => self.k >= 1,
        };
        if ok {
            Ok(())
        } else {
            let expected = match self.mode {
                PromptMode::ZeroShot => 0,
                _ => 1,
            };
            Err(PromptError::InconsistentStrategy { mode: self.mode, expected, got: self.k })
        }
    }

    /// Parse a CLI/matrix name like `zero`, `one_shot`, or `few`.
    pub fn parse(name: &str, k: usize) -> Result<Self, PromptError> {
        match name {
            "zero" | "zero_shot" => Ok(Self::zero_shot()),
            "one" | "one_shot" => Ok(Self::one_shot()),
            "few" | "few_shot" => Self::few_shot(k),
            other => Err(PromptError::UnknownName { what: "strategy", value: other.to_string() }),
        }
    }
}

/// Which modalities feed the final prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputCondition {
    ReportOnly,
    ReportPlusCode,
    CodeOnly,
    ReportPlusPatch,
}

impl InputCondition {
    pub fn includes_report(self) -> bool {
        !matches!(self, InputCondition::CodeOnly)
    }

    pub fn includes_code(self) -> bool {
        !matches!(self, InputCondition::ReportOnly)
    }

    /// Whether an artifact kind feeds this condition's code section.
    pub fn selects(self, kind: ArtifactKind) -> bool {
        match self {
            InputCondition::ReportOnly => false,
            InputCondition::ReportPlusPatch => kind == ArtifactKind::PatchCode,
            InputCondition::ReportPlusCode | InputCondition::CodeOnly => kind != ArtifactKind::PatchCode,
        }
    }

    pub fn parse(name: &str) -> Result<Self, PromptError> {
        match name {
            "report_only" => Ok(Self::ReportOnly),
            "report_plus_code" => Ok(Self::ReportPlusCode),
            "code_only" => Ok(Self::CodeOnly),
            "report_plus_patch" => Ok(Self::ReportPlusPatch),
            other => Err(PromptError::UnknownName { what: "condition", value: other.to_string() }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InputCondition::ReportOnly => "report_only",
            InputCondition::ReportPlusCode => "report_plus_code",
            InputCondition::CodeOnly => "code_only",
            InputCondition::ReportPlusPatch => "report_plus_patch",
        }
    }
}

impl fmt::Display for InputCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Whether the report or the code section comes first in the body.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ordering {
    ReportFirst,
    CodeFirst,
}

impl Ordering {
    pub fn parse(name: &str) -> Result<Self, PromptError> {
        match name {
            "report_first" => Ok(Self::ReportFirst),
            "code_first" => Ok(Self::CodeFirst),
            other => Err(PromptError::UnknownName { what: "ordering", value: other.to_string() }),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ordering::ReportFirst => "report_first",
            Ordering::CodeFirst => "code_first",
        }
    }
}

impl fmt::Display for Ordering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Pipeline stage a prompt belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStage {
    Chunk,
    Aggregate,
    Final,
}

/// One demonstration pair for one/few-shot prompting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    /// Rendered body of the demonstration input.
    pub input: String,
    /// Its reference summary.
    pub target: String,
}

/// A fully rendered model input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub system_text: String,
    pub body: String,
    pub strategy: PromptStrategy,
    pub condition: InputCondition,
    pub ordering: Ordering,
    pub stage: PromptStage,
    /// Content hash over system text, body, and the structural fields.
    pub fingerprint: String,
}

impl Prompt {
    fn assemble(
        system_text: String,
        body: String,
        strategy: PromptStrategy,
        condition: InputCondition,
        ordering: Ordering,
        stage: PromptStage,
    ) -> Self {
        let mut hasher = Sha256::new();
        for field in [
            system_text.as_str(),
            body.as_str(),
            &format!("{:?}:{}", strategy.mode, strategy.k),
            condition.as_str(),
            ordering.as_str(),
            &format!("{stage:?}"),
        ] {
            hasher.update(field.as_bytes());
            hasher.update([0x1f]);
        }
        let fingerprint = hex(&hasher.finalize());
        Self { system_text, body, strategy, condition, ordering, stage, fingerprint }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub const SECTION_BUG_REPORT: &str = "BUG REPORT";
pub const SECTION_CODE: &str = "CODE";
pub const SECTION_CODE_SUMMARY: &str = "CODE SUMMARY";
pub const SECTION_EXAMPLE: &str = "EXAMPLE";
pub const SECTION_EXAMPLE_SUMMARY: &str = "EXAMPLE SUMMARY";

fn section_header(name: &str) -> String {
    format!("=== {name} ===")
}

fn part_header(index_1based: usize) -> String {
    format!("--- PART {index_1based} ---")
}

/// Marker appended when a report is cut at the truncation cap.
pub const TRUNCATION_MARKER: &str = "…";

/// System-text templates plus rendering knobs. The built-in wording ships
/// with the crate; a directory of `*.txt` files can override any of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub final_system: String,
    pub chunk_system: String,
    pub aggregate_system: String,
    /// Chunk prompts keep at most this many report tokens.
    pub report_cap: usize,
}

impl Default for TemplateSet {
    fn default() -> Self {
        Self::builtin()
    }
}

impl TemplateSet {
    pub fn builtin() -> Self {
        Self {
            final_system: include_str!("../templates/final_system.txt").trim_end().to_string(),
            chunk_system: include_str!("../templates/chunk_system.txt").trim_end().to_string(),
            aggregate_system: include_str!("../templates/aggregate_system.txt").trim_end().to_string(),
            report_cap: 2000,
        }
    }

    /// Override built-in templates with files from `dir` when present
    /// (`final_system.txt`, `chunk_system.txt`, `aggregate_system.txt`).
    pub fn from_dir(dir: &Path) -> Result<Self, PromptError> {
        let mut set = Self::builtin();
        for (name, slot) in [
            ("final_system.txt", &mut set.final_system),
            ("chunk_system.txt", &mut set.chunk_system),
            ("aggregate_system.txt", &mut set.aggregate_system),
        ] {
            let path = dir.join(name);
            if path.is_file() {
                *slot = std::fs::read_to_string(&path)?.trim_end().to_string();
            }
        }
        Ok(set)
    }

    /// Final-stage prompt: exemplar blocks (in caller order) followed by the
    /// target block whose sections follow `ordering`. The code section holds
    /// the consolidated summary when one is given, otherwise the raw
    /// artifact tokens selected by `condition`.
    pub fn build_final_prompt(
        &self,
        instance: &BugInstance,
        code_summary: Option<&[String]>,
        strategy: PromptStrategy,
        condition: InputCondition,
        ordering: Ordering,
        exemplars: &[Exemplar],
    ) -> Result<Prompt, PromptError> {
        strategy.validate()?;
        if exemplars.len() != strategy.k {
            return Err(PromptError::ExemplarCountMismatch { expected: strategy.k, got: exemplars.len() });
        }
        if code_summary.is_some() && !condition.includes_code() {
            return Err(PromptError::UnexpectedCodeSummary { condition });
        }

        let mut body = String::new();
        for ex in exemplars {
            if ex.input.is_empty() || ex.target.is_empty() {
                return Err(PromptError::EmptyExemplar);
            }
            body.push_str(&section_header(SECTION_EXAMPLE));
            body.push('\n');
            body.push_str(&indent(&ex.input));
            body.push_str(&section_header(SECTION_EXAMPLE_SUMMARY));
            body.push('\n');
            body.push_str(&indent(&ex.target));
        }

        let code_section = if condition.includes_code() {
            Some(match code_summary {
                Some(summary) => (SECTION_CODE_SUMMARY, detokenize(summary)),
                None => (SECTION_CODE, detokenize(&select_code_tokens(instance, condition)?)),
            })
        } else {
            None
        };
        body.push_str(&render_target_block(
            condition.includes_report().then(|| detokenize(&instance.report_tokens)),
            code_section,
            ordering,
        ));

        Ok(Prompt::assemble(self.final_system.clone(), body, strategy, condition, ordering, PromptStage::Final))
    }

    /// Chunk-stage prompt over one code segment. The report section is
    /// truncated at `report_cap` tokens; an empty report (code-only runs)
    /// omits the section entirely.
    pub fn build_chunk_prompt(
        &self,
        report_tokens: &[String],
        chunk: &[String],
        m: usize,
        total: usize,
    ) -> Result<Prompt, PromptError> {
        if chunk.is_empty() {
            return Err(PromptError::EmptyChunk);
        }
        let mut body = String::new();
        if !report_tokens.is_empty() {
            body.push_str(&section_header(SECTION_BUG_REPORT));
            body.push('\n');
            body.push_str(&truncated_report(report_tokens, self.report_cap));
            body.push('\n');
        }
        body.push_str(&section_header(&format!("CODE CHUNK {}/{}", m + 1, total)));
        body.push('\n');
        body.push_str(&detokenize(chunk));
        body.push('\n');

        let system = fill(&self.chunk_system, &[("part", (m + 1).to_string()), ("total", total.to_string())]);
        let condition = if report_tokens.is_empty() { InputCondition::CodeOnly } else { InputCondition::ReportPlusCode };
        Ok(Prompt::assemble(system, body, PromptStrategy::zero_shot(), condition, Ordering::ReportFirst, PromptStage::Chunk))
    }

    /// Aggregation prompt over two or more chunk summaries. Parts are listed
    /// under `--- PART m ---` headers; a trailing manifest line records the
    /// byte length of every part so the body re-parses even when a summary
    /// contains delimiter-lookalike text.
    pub fn build_aggregate_prompt(&self, chunk_summaries: &[Vec<String>]) -> Result<Prompt, PromptError> {
        if chunk_summaries.len() < 2 {
            return Err(PromptError::AggregationBypassed { got: chunk_summaries.len() });
        }
        let mut body = String::new();
        let mut lengths = Vec::new();
        for (i, summary) in chunk_summaries.iter().enumerate() {
            let content = detokenize(summary);
            body.push_str(&part_header(i + 1));
            body.push('\n');
            lengths.push(content.len().to_string());
            body.push_str(&content);
            body.push('\n');
        }
        body.push_str(&format!("--- MANIFEST {} {} ---", chunk_summaries.len(), lengths.join(" ")));
        body.push('\n');

        Ok(Prompt::assemble(
            self.aggregate_system.clone(),
            body,
            PromptStrategy::zero_shot(),
            InputCondition::CodeOnly,
            Ordering::ReportFirst,
            PromptStage::Aggregate,
        ))
    }
}

fn truncated_report(report_tokens: &[String], cap: usize) -> String {
    if report_tokens.len() > cap {
        let mut text = detokenize(&report_tokens[..cap]);
        text.push(' ');
        text.push_str(TRUNCATION_MARKER);
        text
    } else {
        detokenize(report_tokens)
    }
}

fn render_target_block(report: Option<String>, code: Option<(&str, String)>, ordering: Ordering) -> String {
    let report_section = report.map(|text| (SECTION_BUG_REPORT, text));
    let ordered = match ordering {
        Ordering::ReportFirst => [report_section, code],
        Ordering::CodeFirst => [code, report_section],
    };
    let mut out = String::new();
    for (name, content) in ordered.into_iter().flatten() {
        out.push_str(&section_header(name));
        out.push('\n');
        out.push_str(&content);
        out.push('\n');
    }
    out
}

/// Concatenate the instance's artifacts selected by `condition` into one
/// code token sequence. Multiple artifacts are joined with a
/// `// ---- file: <path>` separator line.
pub fn select_code_tokens(instance: &BugInstance, condition: InputCondition) -> Result<Vec<String>, PromptError> {
    let selected: Vec<_> = instance.code_artifacts.iter().filter(|a| condition.selects(a.kind)).collect();
    if selected.is_empty() {
        return Err(PromptError::NoMatchingArtifacts { condition });
    }
    let mut tokens = Vec::new();
    for (i, artifact) in selected.iter().enumerate() {
        if i > 0 {
            let label = artifact.source_path.clone().unwrap_or_else(|| format!("<{}>", artifact.kind.as_str()));
            tokens.extend(["\n", "//", "----", "file:"].map(String::from));
            tokens.push(label);
            tokens.push("\n".to_string());
        }
        tokens.extend(artifact.tokens.iter().cloned());
    }
    Ok(tokens)
}

/// Exemplar input body: the target block this instance would get under the
/// same condition and ordering, with raw code (never a summary).
pub fn render_exemplar_input(instance: &BugInstance, condition: InputCondition, ordering: Ordering) -> Result<String, PromptError> {
    let code_section = if condition.includes_code() {
        Some((SECTION_CODE, detokenize(&select_code_tokens(instance, condition)?)))
    } else {
        None
    };
    Ok(render_target_block(
        condition.includes_report().then(|| detokenize(&instance.report_tokens)),
        code_section,
        ordering,
    ))
}

/// Input field of a fine-tune record: bug report section, optionally
/// followed by the consolidated code summary section.
pub fn render_finetune_input(report_tokens: &[String], code_summary: Option<&[String]>) -> String {
    render_target_block(
        Some(detokenize(report_tokens)),
        code_summary.map(|s| (SECTION_CODE_SUMMARY, detokenize(s))),
        Ordering::ReportFirst,
    )
}

fn indent(text: &str) -> String {
    let mut out = String::new();
    for line in text.lines() {
        out.push_str("  ");
        out.push_str(line);
        out.push('\n');
    }
    out
}

fn fill(template: &str, vars: &[(&str, String)]) -> String {
    let mut out = template.to_string();
    for (name, value) in vars {
        out = out.replace(&format!("{{{name}}}"), value);
    }
    out
}

/// One flush-left section of a prompt body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    pub name: String,
    pub content: String,
}

/// Split a body into flush-left `=== NAME ===` / `--- NAME ---` sections.
/// Indented exemplar content stays inside its enclosing section.
pub fn parse_sections(body: &str) -> Vec<Section> {
    let mut sections = Vec::new();
    let mut current: Option<Section> = None;
    for line in body.lines() {
        let name = line
            .strip_prefix("=== ")
            .and_then(|r| r.strip_suffix(" ==="))
            .or_else(|| line.strip_prefix("--- ").and_then(|r| r.strip_suffix(" ---")));
        if let Some(name) = name {
            if let Some(section) = current.take() {
                sections.push(section);
            }
            current = Some(Section { name: name.to_string(), content: String::new() });
        } else if let Some(section) = &mut current {
            section.content.push_str(line);
            section.content.push('\n');
        }
    }
    if let Some(section) = current.take() {
        sections.push(section);
    }
    sections
}

/// Recover the exact part contents of an aggregation body via its manifest
/// line. Returns `None` when the body is not a well-formed aggregate prompt.
pub fn parse_aggregate_parts(body: &str) -> Option<Vec<String>> {
    let manifest_line = body.lines().rev().find(|l| !l.is_empty())?;
    let inner = manifest_line.strip_prefix("--- MANIFEST ")?.strip_suffix(" ---")?;
    let mut fields = inner.split(' ');
    let count: usize = fields.next()?.parse().ok()?;
    let lengths: Vec<usize> = fields.map(|f| f.parse().ok()).collect::<Option<_>>()?;
    if lengths.len() != count {
        return None;
    }

    let mut parts = Vec::with_capacity(count);
    let mut rest = body;
    for (i, len) in lengths.iter().enumerate() {
        let header = format!("{}\n", part_header(i + 1));
        let at = rest.find(&header)?;
        let content_start = at + header.len();
        if content_start + len > rest.len() {
            return None;
        }
        parts.push(rest[content_start..content_start + len].to_string());
        rest = &rest[content_start + len..];
    }
    Some(parts)
}
