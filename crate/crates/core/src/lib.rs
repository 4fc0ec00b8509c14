//! Iterative refinement of natural-language software requirements.
//!
//! A requirement is judged against the nine well-formed-requirement
//! characteristics ([`evaluator`]), clarifying questions are generated for
//! whatever it lacks ([`clarifier`]), answered from stakeholders or from a
//! document index ([`ragstore`]), and the requirement is rewritten into an
//! approved sentence pattern ([`rewriter`]). [`orchestrator`] drives the
//! loop until a quality gate passes.
//!
//! Every model call goes through [`gateway`], which also ships a
//! deterministic offline backend so the whole pipeline runs without a
//! network.
//!
//! ```
//! use reqrefine::{compute_quality, evaluator, Requirement, RequirementId};
//! use reqrefine::gateway::HeuristicBackend;
//!
//! let backend = HeuristicBackend::default();
//! let req = Requirement::authored(
//!     RequirementId::new("r1"),
//!     "The system shall export the report in CSV format within 5 seconds.",
//! )?;
//! let report = evaluator::evaluate(&req, &backend, false)?;
//! assert_eq!(compute_quality(&report).to_string(), "100.0");
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod characteristic;
pub mod clarifier;
pub mod evaluator;
pub mod gateway;
pub mod metric;
pub mod orchestrator;
pub mod prompting;
pub mod ragstore;
pub mod requirement;
pub mod rewriter;

pub use characteristic::{Characteristic, CharacteristicReport, Verdict};
pub use metric::{aggregate_quality, compute_quality, unfulfilled, AggregateScore, QualityScore};
pub use requirement::{Origin, Requirement, RequirementId};

/// Errors raised by the domain types.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid requirement: {0}")]
    InvalidRequirement(String),
    #[error("unknown characteristic `{0}`")]
    UnknownCharacteristic(String),
    #[error("invalid report: {0}")]
    InvalidReport(String),
    #[error("invalid score: {0}")]
    InvalidScore(String),
    #[error("no scores to aggregate")]
    NothingToAggregate,
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/quality.md")]
    mod quality {}
    #[doc = include_str!("../../../book/src/prompts.md")]
    mod prompts {}
    #[doc = include_str!("../../../book/src/backends.md")]
    mod backends {}
    #[doc = include_str!("../../../book/src/patterns.md")]
    mod patterns {}
    #[doc = include_str!("../../../book/src/retrieval.md")]
    mod retrieval {}
    #[doc = include_str!("../../../book/src/sessions.md")]
    mod sessions {}
}
