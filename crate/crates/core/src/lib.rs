//! Numerical solvers for time-inconsistent stochastic differential games
//! with mean-variance preferences, their zero-sum specialisation, and their
//! McKean-Vlasov mean-field limits.
//!
//! The equilibrium notion is the sub-game-perfect one: a strategy profile no
//! player, nor any future self of a player, can improve by more than
//! `epsilon * l` over a deviation window of length `l`. Equilibria are
//! characterised by coupled quadratic BSDE systems, solved here by
//! regression Monte Carlo with a fixed-point iteration on the control field,
//! and the mean-field counterpart by iterating on the law flow. Closed-form
//! linear-quadratic solutions serve as oracles throughout.
//!
//! Everything is generic over the working scalar ([`Real`]: `f32` or `f64`);
//! the `*64` aliases at the crate root fix the default choice.

pub mod convergence;
pub mod error;
pub mod lq;
pub mod meanfield;
pub mod metrics;
pub mod model;
pub mod nplayer;
pub mod presets;
pub mod quad;
pub mod regression;
pub mod scalar;
pub mod sde;
pub mod zerosum;

pub use error::{Error, Result};
pub use scalar::Real;

/// Default-precision aliases.
pub type GameSpec64 = model::GameSpec<f64>;
pub type ControlSet64 = model::ControlSet<f64>;
pub type TimeGrid64 = model::TimeGrid<f64>;
pub type EmpiricalMeasure64 = model::EmpiricalMeasure<f64>;
pub type LQParams64 = lq::LQParams<f64>;
pub type PathEnsemble64 = sde::PathEnsemble<f64>;
pub type EquilibriumSolution64 = nplayer::EquilibriumSolution<f64>;
pub type MeanFieldSolution64 = meanfield::MeanFieldSolution<f64>;
