//! Euler–Maruyama forward simulation of the controlled state processes.
//!
//! Under the tilted measure the drift is applied directly,
//! `X_{k+1} = X_k + sigma (b dt + dW)`; under the reference measure the
//! state diffuses driftless and the stochastic-exponential log-weight
//! `sum_k (b_k . dW_k - |b_k|^2 dt / 2)` is accumulated per path, so tilted
//! expectations can be recovered by importance weighting.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EmpiricalMeasure, GameSpec, InitialLaw, TimeGrid};
use crate::scalar::{real, Real};
use crate::sde::ensemble::PathEnsemble;
use crate::sde::streams::RngSpec;

/// Abort threshold on the state magnitude.
const EXPLOSION_GUARD: f64 = 1e8;

/// Which measure the paths are drawn under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimulationMeasure {
    /// Driftless dynamics plus accumulated Girsanov log-weights.
    Reference,
    /// Drift-added dynamics; increments are Brownian under the tilted measure.
    Tilted,
}

/// Where the measure argument of the coefficients comes from.
pub enum LawSource<'a, T> {
    /// Empirical law of the players within each path (finite-player game).
    WithinPath,
    /// Externally supplied flow, one measure per step (mean-field game).
    Flow(&'a [EmpiricalMeasure<T>]),
}

/// Feedback control field evaluated per (step, states-of-one-path).
pub trait ControlField<T>: Send + Sync {
    fn evaluate(&self, step: usize, t: T, states: &[T], out: &mut [T]);
}

/// Constant control for every player.
pub struct ConstantControl<T>(pub T);

impl<T: Real> ControlField<T> for ConstantControl<T> {
    fn evaluate(&self, _step: usize, _t: T, _states: &[T], out: &mut [T]) {
        out.fill(self.0);
    }
}

impl<T, F> ControlField<T> for F
where
    T: Real,
    F: Fn(usize, T, &[T], &mut [T]) + Send + Sync,
{
    fn evaluate(&self, step: usize, t: T, states: &[T], out: &mut [T]) {
        self(step, t, states, out)
    }
}

struct PathData<T> {
    states: Vec<T>,
    increments: Vec<T>,
    controls: Vec<T>,
    log_weight: T,
}

/// Start of one path: either the configured initial law or a shared prefix
/// copied from a pivot path.
enum PathStart<'a, T> {
    Initial,
    Prefix {
        states: &'a [Vec<T>],
        increments: &'a [Vec<T>],
        controls: &'a [Vec<T>],
        from_step: usize,
    },
}

#[allow(clippy::too_many_arguments)]
fn simulate_one_path<T: Real>(
    spec: &GameSpec<T>,
    grid: &TimeGrid<T>,
    field: &dyn ControlField<T>,
    law: &LawSource<T>,
    measure: SimulationMeasure,
    rng_spec: &RngSpec,
    path: usize,
    start: &PathStart<T>,
) -> Result<PathData<T>>
where
    StandardNormal: Distribution<T>,
{
    let n_players = spec.num_players();
    let n_steps = grid.steps();
    let dt = grid.dt();
    let sqrt_dt = dt.sqrt();
    let half = real::<T>(0.5);
    let guard = real::<T>(EXPLOSION_GUARD);

    let mut rngs: Vec<_> = (0..n_players)
        .map(|i| rng_spec.stream(path, i, n_players))
        .collect();

    let mut states = vec![T::zero(); n_players * (n_steps + 1)];
    let mut increments = vec![T::zero(); n_players * n_steps];
    let mut controls = vec![T::zero(); n_players * n_steps];
    let mut log_weight = T::zero();

    let first_step = match start {
        PathStart::Initial => {
            for (i, rng) in rngs.iter_mut().enumerate() {
                states[i * (n_steps + 1)] = match spec.initial {
                    InitialLaw::Dirac(x0) => x0,
                    InitialLaw::Normal { mean, sd } => {
                        let z: T = rng.sample(StandardNormal);
                        mean + sd * z
                    }
                };
            }
            0
        }
        PathStart::Prefix {
            states: pre_states,
            increments: pre_inc,
            controls: pre_ctrl,
            from_step,
        } => {
            for i in 0..n_players {
                for k in 0..=*from_step {
                    states[i * (n_steps + 1) + k] = pre_states[i][k];
                }
                for k in 0..*from_step {
                    increments[i * n_steps + k] = pre_inc[i][k];
                    controls[i * n_steps + k] = pre_ctrl[i][k];
                }
            }
            *from_step
        }
    };

    let mut current = vec![T::zero(); n_players];
    let mut ctrl_buf = vec![T::zero(); n_players];
    let mut scratch_law = EmpiricalMeasure::new(vec![(T::zero(), T::zero()); n_players])
        .expect("players >= 1");

    for k in first_step..n_steps {
        let t = grid.time(k);
        for i in 0..n_players {
            current[i] = states[i * (n_steps + 1) + k];
        }
        field.evaluate(k, t, &current, &mut ctrl_buf);
        let law_k: &EmpiricalMeasure<T> = match law {
            LawSource::WithinPath => {
                for i in 0..n_players {
                    scratch_law.set_atom(i, current[i], ctrl_buf[i]);
                }
                &scratch_law
            }
            LawSource::Flow(flow) => &flow[k],
        };
        for i in 0..n_players {
            let x = current[i];
            let a = ctrl_buf[i];
            let sigma = (spec.sigma)(t, x);
            let b = (spec.drift_b)(t, x, law_k, a);
            let z: T = rngs[i].sample(StandardNormal);
            let dw = sqrt_dt * z;
            let next = match measure {
                SimulationMeasure::Tilted => x + sigma * (b * dt + dw),
                SimulationMeasure::Reference => {
                    log_weight += b * dw - half * b * b * dt;
                    x + sigma * dw
                }
            };
            if !next.is_finite() || next.abs() > guard {
                return Err(Error::PathExploded { path, step: k });
            }
            states[i * (n_steps + 1) + k + 1] = next;
            increments[i * n_steps + k] = dw;
            controls[i * n_steps + k] = a;
        }
    }

    Ok(PathData {
        states,
        increments,
        controls,
        log_weight,
    })
}

fn assemble<T: Real>(
    grid: &TimeGrid<T>,
    num_players: usize,
    seed: u64,
    paths: Vec<PathData<T>>,
) -> PathEnsemble<T> {
    let num_paths = paths.len();
    let n = grid.steps();
    let mut states = Vec::with_capacity(num_paths * num_players * (n + 1));
    let mut increments = Vec::with_capacity(num_paths * num_players * n);
    let mut controls = Vec::with_capacity(num_paths * num_players * n);
    let mut log_weights = Vec::with_capacity(num_paths);
    for p in paths {
        states.extend_from_slice(&p.states);
        increments.extend_from_slice(&p.increments);
        controls.extend_from_slice(&p.controls);
        log_weights.push(p.log_weight);
    }
    PathEnsemble {
        grid: *grid,
        num_paths,
        num_players,
        states,
        increments,
        controls,
        log_weights,
        seed,
    }
}

/// Simulates `num_paths` joint trajectories of all players.
pub fn simulate_paths<T: Real>(
    spec: &GameSpec<T>,
    grid: &TimeGrid<T>,
    field: &dyn ControlField<T>,
    law: LawSource<T>,
    num_paths: usize,
    rng: &RngSpec,
    measure: SimulationMeasure,
) -> Result<PathEnsemble<T>>
where
    StandardNormal: Distribution<T>,
{
    if num_paths == 0 {
        return Err(Error::EmptyEnsemble);
    }
    if let LawSource::Flow(flow) = &law {
        if flow.len() < grid.steps() {
            return Err(Error::LengthMismatch {
                left: flow.len(),
                right: grid.steps(),
            });
        }
    }
    let data: Result<Vec<PathData<T>>> = (0..num_paths)
        .into_par_iter()
        .map(|p| simulate_one_path(spec, grid, field, &law, measure, rng, p, &PathStart::Initial))
        .collect();
    Ok(assemble(grid, spec.num_players(), rng.seed, data?))
}

/// Re-simulates from the time-`u_step` state of one pivot path with fresh
/// streams: every returned path shares the pivot's prefix and diverges
/// afterwards. Girsanov log-weights restart at the conditioning time.
#[allow(clippy::too_many_arguments)]
pub fn conditional_subensemble<T: Real>(
    spec: &GameSpec<T>,
    base: &PathEnsemble<T>,
    u_step: usize,
    pivot: usize,
    field: &dyn ControlField<T>,
    law: LawSource<T>,
    num_paths: usize,
    rng: &RngSpec,
    measure: SimulationMeasure,
) -> Result<PathEnsemble<T>>
where
    StandardNormal: Distribution<T>,
{
    let grid = *base.grid();
    if u_step > grid.steps() {
        return Err(Error::OffGrid(u_step as f64));
    }
    let n_players = base.num_players();
    let prefix_states: Vec<Vec<T>> = (0..n_players)
        .map(|i| (0..=u_step).map(|k| base.state(pivot, i, k)).collect())
        .collect();
    let prefix_inc: Vec<Vec<T>> = (0..n_players)
        .map(|i| (0..u_step).map(|k| base.increment(pivot, i, k)).collect())
        .collect();
    let prefix_ctrl: Vec<Vec<T>> = (0..n_players)
        .map(|i| (0..u_step).map(|k| base.control(pivot, i, k)).collect())
        .collect();
    let start = PathStart::Prefix {
        states: &prefix_states,
        increments: &prefix_inc,
        controls: &prefix_ctrl,
        from_step: u_step,
    };
    let data: Result<Vec<PathData<T>>> = (0..num_paths)
        .into_par_iter()
        .map(|p| simulate_one_path(spec, &grid, field, &law, measure, rng, p, &start))
        .collect();
    Ok(assemble(&grid, n_players, rng.seed, data?))
}

/// Log of the stochastic exponential along one path:
/// `sum_k (b_k . dW_k - |b_k|^2 dt / 2)`.
pub fn girsanov_log_weight<T: Real>(b: &[T], dw: &[T], dt: T) -> Result<T> {
    if b.len() != dw.len() {
        return Err(Error::LengthMismatch {
            left: b.len(),
            right: dw.len(),
        });
    }
    let half = real::<T>(0.5);
    Ok(b.iter()
        .zip(dw.iter())
        .fold(T::zero(), |acc, (&bk, &dwk)| acc + bk * dwk - half * bk * bk * dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ControlSet;

    fn driftless_spec(x0: f64) -> GameSpec<f64> {
        GameSpec::builder(1)
            .sigma(|_, _| 0.0)
            .drift(|_, _, _, a| a)
            .control_set(ControlSet::symmetric(2.0, 5).unwrap())
            .horizon(1.0)
            .initial(InitialLaw::Dirac(x0))
            .build()
            .unwrap()
    }

    #[test]
    fn zero_sigma_freezes_every_path() {
        let spec = driftless_spec(1.5);
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let ens = simulate_paths(
            &spec,
            &grid,
            &ConstantControl(0.7),
            LawSource::WithinPath,
            32,
            &RngSpec::new(1),
            SimulationMeasure::Tilted,
        )
        .unwrap();
        for p in 0..32 {
            for k in 0..=10 {
                assert_eq!(ens.state(p, 0, k), 1.5);
            }
        }
    }

    #[test]
    fn same_seed_reproduces_bitwise() {
        let spec = GameSpec::builder(2)
            .sigma(|_, _| 1.0)
            .drift(|_, _, _, a| a)
            .control_set(ControlSet::symmetric(2.0, 5).unwrap())
            .horizon(1.0)
            .initial(InitialLaw::Normal { mean: 0.0, sd: 1.0 })
            .build()
            .unwrap();
        let grid = TimeGrid::new(1.0, 16).unwrap();
        let run = || {
            simulate_paths(
                &spec,
                &grid,
                &ConstantControl(0.3),
                LawSource::WithinPath,
                64,
                &RngSpec::new(42),
                SimulationMeasure::Tilted,
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn girsanov_weight_formula_points() {
        assert_eq!(girsanov_log_weight(&[0.0f64; 4], &[0.1; 4], 0.25).unwrap(), 0.0);
        let one = girsanov_log_weight(&[0.5f64], &[0.0], 1.0).unwrap();
        assert_eq!(one, -0.125);
        assert!(girsanov_log_weight(&[0.5f64], &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn conditioning_at_terminal_time_freezes_paths() {
        let spec = GameSpec::builder(1)
            .sigma(|_, _| 1.0)
            .drift(|_, _, _, a| a)
            .control_set(ControlSet::symmetric(2.0, 5).unwrap())
            .horizon(1.0)
            .initial(InitialLaw::Dirac(0.0))
            .build()
            .unwrap();
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let base = simulate_paths(
            &spec,
            &grid,
            &ConstantControl(0.0),
            LawSource::WithinPath,
            4,
            &RngSpec::new(5),
            SimulationMeasure::Tilted,
        )
        .unwrap();
        let sub = conditional_subensemble(
            &spec,
            &base,
            8,
            2,
            &ConstantControl(0.0),
            LawSource::WithinPath,
            16,
            &RngSpec::new(5).with_epoch(1),
            SimulationMeasure::Tilted,
        )
        .unwrap();
        for p in 0..16 {
            for k in 0..=8 {
                assert_eq!(sub.state(p, 0, k), base.state(2, 0, k));
            }
        }
    }
}
