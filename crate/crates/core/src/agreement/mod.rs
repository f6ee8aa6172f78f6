//! Inter-annotator span matching and agreement statistics.

pub mod kappa;
pub mod matching;
pub mod summary;

pub use kappa::{fleiss_kappa, group_kappa, type_table, KappaError};
pub use matching::{match_interactions, relaxed_match, GroupMember, MatchGroup, MatchMode};
pub use summary::{
    agreement_report, corpus_groups, summarize, AgreementReport, AgreementRow, CorpusSummary, TypeLevelStat,
    KAPPA_RATERS,
};
