use thiserror::Error;

/// Errors shared by the model types and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("empty ensemble")]
    EmptyEnsemble,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("length mismatch: left has {left} entries, right has {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("time {0} is not on the grid")]
    OffGrid(f64),

    #[error("state exploded on path {path} at step {step}")]
    PathExploded { path: usize, step: usize },

    #[error("regression design is rank deficient (condition number {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("saddle-point condition violated: gap {gap:.6e} exceeds tolerance {tolerance:.6e} at step {step}")]
    IsaacsViolation {
        gap: f64,
        tolerance: f64,
        step: usize,
    },

    #[error("moment order violated: second moment {s2} below squared mean {mu_sq}")]
    MomentOrder { s2: f64, mu_sq: f64 },

    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
