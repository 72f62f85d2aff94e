//! Corpus persistence: instance JSONL and the Defects4J-style directory
//! layout.
//!
//! JSONL stores raw text per field; tokenization happens on load, so
//! `load(save(c))` reproduces the in-memory corpus exactly.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    build_instance, render_tokens, ArtifactKind, BugInstance, CodeArtifact, Corpus, CorpusError,
    NormalizationConfig, RawSource, SourceKind,
};
use crate::token::{tokenize_code, tokenize_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    InstanceJsonl,
    Defects4jLayout,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceRecord {
    bug_id: String,
    #[serde(default)]
    project: String,
    report_text: String,
    #[serde(default)]
    artifacts: Vec<ArtifactRecord>,
    #[serde(default)]
    reference_summary: Option<String>,
    #[serde(default)]
    tracker_url: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArtifactRecord {
    kind: ArtifactKind,
    text: String,
    #[serde(default)]
    source_path: Option<String>,
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let mut out = Vec::new();
    for inst in corpus.instances() {
        let record = InstanceRecord {
            bug_id: inst.bug_id.clone(),
            project: inst.project.clone(),
            report_text: render_tokens(&inst.report_tokens),
            artifacts: inst
                .code_artifacts
                .iter()
                .map(|a| ArtifactRecord {
                    kind: a.kind,
                    text: render_tokens(&a.tokens),
                    source_path: a.source_path.clone(),
                })
                .collect(),
            reference_summary: inst.reference_summary.as_ref().map(|t| render_tokens(t)),
            tracker_url: inst.tracker_url.clone(),
        };
        let line = serde_json::to_string(&record)
            .map_err(|e| CorpusError::MalformedRecord { line: 0, msg: e.to_string() })?;
        out.push(line);
    }
    let mut file = fs::File::create(path)?;
    for line in out {
        writeln!(file, "{line}")?;
    }
    Ok(())
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Corpus, CorpusError> {
    match format {
        CorpusFormat::InstanceJsonl => load_jsonl(path),
        CorpusFormat::Defects4jLayout => load_defects4j(path),
    }
}

fn load_jsonl(path: &Path) -> Result<Corpus, CorpusError> {
    let file = fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut instances = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord = serde_json::from_str(&line)
            .map_err(|e| CorpusError::MalformedRecord { line: line_no, msg: e.to_string() })?;
        if record.bug_id.is_empty() {
            return Err(CorpusError::MalformedRecord { line: line_no, msg: "bug_id is empty".to_string() });
        }
        let report_tokens = tokenize_text(&record.report_text);
        if report_tokens.is_empty() {
            return Err(CorpusError::MalformedRecord { line: line_no, msg: "report_text has no tokens".to_string() });
        }
        let mut code_artifacts = Vec::new();
        for art in record.artifacts {
            let tokens = tokenize_code(&art.text);
            if tokens.is_empty() {
                return Err(CorpusError::MalformedRecord {
                    line: line_no,
                    msg: "artifact text has no tokens".to_string(),
                });
            }
            code_artifacts.push(CodeArtifact { kind: art.kind, tokens, source_path: art.source_path });
        }
        instances.push(BugInstance {
            bug_id: record.bug_id,
            project: record.project,
            report_tokens,
            code_artifacts,
            reference_summary: record.reference_summary.map(|s| tokenize_text(&s)).filter(|t| !t.is_empty()),
            tracker_url: record.tracker_url,
        });
    }
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Corpus::new(name, instances, format!("loaded from {}", path.display()))
}

/// Load `<root>/<bug_id>/report.html` plus `buggy/*.src`, `patch/*.src`, and
/// an optional `summary.txt` per bug directory.
fn load_defects4j(root: &Path) -> Result<Corpus, CorpusError> {
    let mut dirs: Vec<_> = fs::read_dir(root)?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_dir())
        .map(|e| e.path())
        .collect();
    dirs.sort();

    let rules = NormalizationConfig::default();
    let mut instances = Vec::new();
    for dir in dirs {
        let bug_id = dir.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let project = bug_id.split('-').next().unwrap_or(&bug_id).to_string();
        let mut sources = Vec::new();

        let report = dir.join("report.html");
        if report.is_file() {
            sources.push(RawSource::new(&bug_id, SourceKind::TrackerHtml, fs::read(&report)?, report.display().to_string()));
        }
        for sub in ["buggy", "patch"] {
            let sub_dir = dir.join(sub);
            if !sub_dir.is_dir() {
                continue;
            }
            let mut files: Vec<_> = fs::read_dir(&sub_dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            for file in files {
                sources.push(RawSource::new(&bug_id, SourceKind::CodeFile, fs::read(&file)?, file.display().to_string()));
            }
        }
        let reference = match fs::read_to_string(dir.join("summary.txt")) {
            Ok(s) => Some(s),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
            Err(e) => return Err(e.into()),
        };

        instances.push(build_instance(&bug_id, &project, &sources, reference.as_deref(), &rules)?);
    }
    let name = root.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Corpus::new(name, instances, format!("defects4j layout at {}", root.display()))
}
