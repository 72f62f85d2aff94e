//! Partitioning of over-long code token sequences into contiguous,
//! length-bounded segments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::token::NEWLINE_TOKEN;

#[derive(Debug, Error)]
pub enum ChunkError {
    #[error("segment_out_of_range: index {index} but plan has {segments} segments")]
    SegmentOutOfRange { index: usize, segments: usize },
    #[error("plan covers {plan_tokens} tokens but sequence has {actual_tokens}")]
    PlanMismatch { plan_tokens: usize, actual_tokens: usize },
}

/// How cut points are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SnapPolicy {
    /// Cut every `limit` tokens exactly; segment count is `ceil(n / limit)`.
    None,
    /// Move each cut back to the nearest newline token within `limit / 8`
    /// tokens, so segments end at line boundaries where possible.
    #[default]
    Line,
}

/// One contiguous segment of a token sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub len: usize,
}

/// A contiguous, exact partition of `[0, total_tokens)` into segments of at
/// most `limit` tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkPlan {
    pub total_tokens: usize,
    pub limit: usize,
    pub segments: Vec<Segment>,
}

impl ChunkPlan {
    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }
}

/// Plan a partition of `code_tokens` into segments of at most `limit` tokens.
///
/// Empty input yields an empty plan. `limit` must be at least 1.
pub fn plan_chunks(code_tokens: &[String], limit: usize, snap: SnapPolicy) -> ChunkPlan {
    assert!(limit >= 1, "chunk limit must be at least 1");
    let total = code_tokens.len();
    let mut segments = Vec::new();
    let mut start = 0;
    while start < total {
        let hard_end = (start + limit).min(total);
        let end = match snap {
            SnapPolicy::None => hard_end,
            SnapPolicy::Line if hard_end == total => hard_end,
            SnapPolicy::Line => snap_to_line(code_tokens, start, hard_end, limit / 8),
        };
        segments.push(Segment { start, len: end - start });
        start = end;
    }
    ChunkPlan { total_tokens: total, limit, segments }
}

/// Move `hard_end` back to just after the nearest newline token within
/// `window` tokens, never emptying the segment.
fn snap_to_line(tokens: &[String], start: usize, hard_end: usize, window: usize) -> usize {
    let lowest = hard_end.saturating_sub(window).max(start + 1);
    let mut end = hard_end;
    while end >= lowest {
        if tokens[end - 1] == NEWLINE_TOKEN {
            return end;
        }
        end -= 1;
    }
    hard_end
}

/// Borrow the tokens of segment `m`.
pub fn slice<'a>(code_tokens: &'a [String], plan: &ChunkPlan, m: usize) -> Result<&'a [String], ChunkError> {
    if plan.total_tokens != code_tokens.len() {
        return Err(ChunkError::PlanMismatch { plan_tokens: plan.total_tokens, actual_tokens: code_tokens.len() });
    }
    let segment = plan
        .segments
        .get(m)
        .ok_or(ChunkError::SegmentOutOfRange { index: m, segments: plan.segments.len() })?;
    Ok(&code_tokens[segment.start..segment.start + segment.len])
}
