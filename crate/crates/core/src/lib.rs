//! Guided random projection layers for exemplar-free class-incremental
//! learning.
//!
//! Random sigmoid hidden units are sampled in blocks and accepted only when
//! they shrink the ridge residual on the first task by a guaranteed factor
//! (checked through the Schur complement of the augmented Gram matrix).
//! Later tasks update the ridge classifier on the frozen features with exact
//! recursive least squares. Greedy single-unit selection and unguided
//! random initialization are available as baselines.

pub mod cil;
pub mod cli;
pub mod error;
pub mod io;
pub mod metrics;
pub mod numerics;
pub mod pipeline;
pub mod rpl;
pub mod supervisory;
pub mod verify;

pub use error::{Error, Result};
