//! Supervised construction of the random projection layer: the block
//! acceptance criteria and the exact ridge update used when a block is
//! appended.

mod construct;
mod criterion;
mod gram;

pub use construct::{
    construct, initial_residual, Construction, ConstructionConfig, ConstructionLog, ConstructionRecord, Strategy,
    TerminationReason,
};
pub use criterion::{evaluate_mgsm, evaluate_scsm, Aggregation, ColumnTerms, CriterionReport};
pub use gram::{CandidateEval, GramState, DEFAULT_REFACTOR_EVERY};
