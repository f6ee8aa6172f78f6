//! Span-interaction explanations for sequence-pair classifiers.
//!
//! The crate covers the full loop: ingesting human span-interaction
//! annotations, measuring inter-annotator agreement, extracting interaction
//! explanations from a model's attention via directed Louvain community
//! detection, and scoring any explanation with perturbation-based
//! faithfulness metrics (AOPC comprehensiveness / sufficiency, post-hoc
//! accuracy).
//!
//! Models are reached through the [`oracle`] protocol; [`oracle::MockOracle`]
//! is a deterministic in-process backend.

pub mod dataset;
pub mod graph;
pub mod community;
pub mod agreement;
pub mod heads;
pub mod oracle;
pub mod eval;
