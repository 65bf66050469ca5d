//! Residual statistics, Strehl ratio, flop accounting and empirical
//! structure functions.

mod flops;
mod stats;
mod structure;

pub use flops::{flop_report, FlopCategory, FlopCounter, FlopModel, FlopReport};
pub use stats::{residual_stats, strehl, ResidualStats};
pub use structure::{empirical_structure_function, RadialBin, StructureEstimate};
