//! Perturbation-based faithfulness of span-interaction explanations.
//!
//! A [`TokenSelection`] is removed from or kept in an instance and the
//! model's probability for its original prediction is compared. Baselines
//! draw random selections shaped like the source spans. [`evaluate_dataset`]
//! scores a whole corpus and aggregates by label, type, level and metric.

mod baseline;
mod perturb;
mod report;
mod run;
mod score;

pub use baseline::{sample_baseline, sample_baseline_with, BaselineSample, BaselineSpec, Histogram, MAX_RESAMPLES};
pub use perturb::{perturb, BaselineKind, EmptyPart, PerturbMode, Perturbed, SelectionSource, TokenSelection};
pub use report::{aggregate, pool_cells, rank_types, Cell, EvalReport, Failure, Metric, RankRow, UnitScores, ALL_LABELS};
pub use run::{evaluate_dataset, score_units, EvalConfig, EvalInput, PerturbUnit, EXTRACTED};
pub use score::{
    aopc_curve, aopc_single, original_prediction, pairs_fit, pha, reference_class, top_k_selection, AopcCurve,
    EvalRecord, Original, PhaReference, PhaResult,
};
