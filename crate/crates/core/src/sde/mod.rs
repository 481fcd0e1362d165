//! Seeded forward simulation under reference and Girsanov-tilted measures.

pub mod ensemble;
pub mod simulate;
pub mod stats;
pub mod streams;

pub use ensemble::PathEnsemble;
pub use simulate::{
    conditional_subensemble, girsanov_log_weight, simulate_paths, ConstantControl, ControlField,
    LawSource, SimulationMeasure,
};
pub use stats::{moment_estimate, Statistic};
pub use streams::RngSpec;
