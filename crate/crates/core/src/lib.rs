//! Code-aware abstractive bug-report summarization.
//!
//! The crate ingests bug reports and their associated code, renders
//! structured prompts (hierarchically chunk-summarizing long code), drives a
//! pluggable completion backend with a record/replay cache, and scores
//! summaries with ROUGE-1/2/L and BERTScore. The `bugbrief` binary exposes
//! the whole flow as subcommands; see the README for usage.

pub mod chunking;
pub mod corpus;
pub mod harness;
pub mod metrics;
pub mod pipeline;
pub mod prompting;
pub mod provider;
pub mod token;
