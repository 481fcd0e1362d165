//! Domain types shared by every solver: control sets, time grids, empirical
//! measures, game coefficients and the Hamiltonian algebra.

pub mod control;
pub mod grid;
pub mod hamiltonian;
pub mod measure;
pub mod spec;

pub use control::ControlSet;
pub use grid::TimeGrid;
pub use hamiltonian::{
    argmax_control, fixed_point_residual, hamiltonian_i, optimality_gap, AlephFn, AlephInput,
    HamiltonianInput, HamiltonianSweepState,
};
pub use measure::EmpiricalMeasure;
pub use spec::{DeclaredBounds, GFunction, GameSpec, GameSpecBuilder, InitialLaw};
