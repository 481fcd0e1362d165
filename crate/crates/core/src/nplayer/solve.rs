//! Regression Monte Carlo solve of the coupled BSDE system with a damped
//! Picard iteration on the equilibrium control field.
//!
//! Each outer iteration re-simulates the tilted ensemble under the current
//! feedback field (with common random numbers across iterations), runs one
//! full backward sweep, and moves the field toward the pathwise Hamiltonian
//! maximiser. After the loop a final sweep under the returned field makes
//! the reported solution consistent with it.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{argmax_control, optimality_gap, AlephInput, GameSpec, HamiltonianInput, TimeGrid};
use crate::nplayer::backward::{backward_step, terminal_values, StepValues};
use crate::nplayer::policy::ControlPolicy;
use crate::nplayer::solution::{ConvergenceReport, EquilibriumSolution};
use crate::regression::{regress, RegressionBasis};
use crate::scalar::{real_usize, Real};
use crate::sde::{simulate_paths, LawSource, PathEnsemble, RngSpec, SimulationMeasure};

/// Damped fixed-point iteration settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardConfig<T> {
    pub max_iters: usize,
    /// Damping weight on the new maximiser, in (0, 1].
    pub damping: T,
    /// Sup-norm tolerance on the control-field change.
    pub tol: T,
}

impl<T: Real> Default for PicardConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 20,
            damping: crate::scalar::real(0.5),
            tol: crate::scalar::real(1e-3),
        }
    }
}

/// Monte Carlo and regression budget of one solve.
#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    pub num_paths: usize,
    pub basis: RegressionBasis<T>,
    pub picard: PicardConfig<T>,
    pub rng: RngSpec,
    /// Paths sampled when evaluating fixed-point residuals.
    pub residual_sample: usize,
}

impl<T: Real> SolveOptions<T> {
    pub fn new(num_paths: usize, basis: RegressionBasis<T>, rng: RngSpec) -> Self {
        Self {
            num_paths,
            basis,
            picard: PicardConfig::default(),
            rng,
            residual_sample: 256,
        }
    }
}

/// Full sweep arrays over all nodes.
pub(crate) struct SweepData<T> {
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub mstar: Vec<T>,
    pub nstar: Vec<T>,
    pub zm: Vec<T>,
    pub zn: Vec<T>,
}

pub(crate) fn backward_sweep<T: Real>(
    spec: &GameSpec<T>,
    ens: &PathEnsemble<T>,
    basis: &RegressionBasis<T>,
) -> Result<SweepData<T>> {
    let m = ens.num_paths();
    let np = ens.num_players();
    let n = ens.grid().steps();
    let nodes = n + 1;

    let mut data = SweepData {
        y: vec![T::zero(); m * np * nodes],
        z: vec![T::zero(); m * np * np * n],
        mstar: vec![T::zero(); m * np * nodes],
        nstar: vec![T::zero(); m * nodes],
        zm: vec![T::zero(); m * np * np * n],
        zn: vec![T::zero(); m * np * n],
    };

    let (mut y_next, mut m_next, mut n_next) = terminal_values(spec, ens);
    write_node(&mut data, ens, n, &y_next, &m_next, &n_next);

    for k in (0..n).rev() {
        let step = backward_step(
            spec,
            ens,
            basis,
            k,
            StepValues {
                y: &y_next,
                mstar: &m_next,
                nstar: &n_next,
            },
        )?;
        write_node(&mut data, ens, k, &step.y, &step.mstar, &step.nstar);
        for p in 0..m {
            for i in 0..np {
                for col in 0..np {
                    let src = (p * np + i) * np + col;
                    let dst = ((p * np + i) * np + col) * n + k;
                    data.z[dst] = step.z[src];
                    data.zm[dst] = step.zm[src];
                }
                data.zn[(p * np + i) * n + k] = step.zn[p * np + i];
            }
        }
        y_next = step.y;
        m_next = step.mstar;
        n_next = step.nstar;
    }
    Ok(data)
}

fn write_node<T: Real>(
    data: &mut SweepData<T>,
    ens: &PathEnsemble<T>,
    node: usize,
    y: &[T],
    mstar: &[T],
    nstar: &[T],
) {
    let m = ens.num_paths();
    let np = ens.num_players();
    let nodes = ens.grid().steps() + 1;
    for p in 0..m {
        for i in 0..np {
            data.y[(p * np + i) * nodes + node] = y[p * np + i];
            data.mstar[(p * np + i) * nodes + node] = mstar[p * np + i];
        }
        data.nstar[p * nodes + node] = nstar[p];
    }
}

/// Per-path rows of the sweep at one step, in the layout the Hamiltonian
/// helpers expect.
struct PathRows<T> {
    states: Vec<T>,
    controls: Vec<T>,
    z: Vec<Vec<T>>,
    zm: Vec<Vec<T>>,
    zn: Vec<T>,
    m_star: Vec<T>,
    n_star: T,
}

fn gather_rows<T: Real>(
    ens: &PathEnsemble<T>,
    data: &SweepData<T>,
    p: usize,
    k: usize,
) -> PathRows<T> {
    let np = ens.num_players();
    let n = ens.grid().steps();
    let nodes = n + 1;
    let mut rows = PathRows {
        states: Vec::with_capacity(np),
        controls: Vec::with_capacity(np),
        z: Vec::with_capacity(np),
        zm: Vec::with_capacity(np),
        zn: Vec::with_capacity(np),
        m_star: Vec::with_capacity(np),
        n_star: data.nstar[p * nodes + k],
    };
    for i in 0..np {
        rows.states.push(ens.state(p, i, k));
        rows.controls.push(ens.control(p, i, k));
        rows.m_star.push(data.mstar[(p * np + i) * nodes + k]);
        rows.zn.push(data.zn[(p * np + i) * n + k]);
        let mut z_row = Vec::with_capacity(np);
        let mut zm_row = Vec::with_capacity(np);
        for col in 0..np {
            z_row.push(data.z[((p * np + i) * np + col) * n + k]);
            zm_row.push(data.zm[((p * np + i) * np + col) * n + k]);
        }
        rows.z.push(z_row);
        rows.zm.push(zm_row);
    }
    rows
}

/// Fits the pathwise Hamiltonian maximisers into a feedback field.
fn fit_maximiser_policy<T: Real>(
    spec: &GameSpec<T>,
    ens: &PathEnsemble<T>,
    data: &SweepData<T>,
    basis: &RegressionBasis<T>,
) -> Result<ControlPolicy<T>> {
    let m = ens.num_paths();
    let np = ens.num_players();
    let n = ens.grid().steps();
    let mut policy = ControlPolicy::zero(*basis, spec.control_set, n, np);

    for k in 0..n {
        let t = ens.grid().time(k);
        // Maximiser targets, parallel over paths.
        let targets: Result<Vec<Vec<T>>> = (0..m)
            .into_par_iter()
            .map(|p| {
                let rows = gather_rows(ens, data, p, k);
                let mut per_player = Vec::with_capacity(np);
                for i in 0..np {
                    let aleph = match &spec.aleph {
                        Some(f) => f(&AlephInput {
                            t,
                            player: i,
                            states: &rows.states,
                            z: &rows.z,
                            zm: &rows.zm,
                            zn: &rows.zn,
                        }),
                        None => T::zero(),
                    };
                    let input = HamiltonianInput {
                        t,
                        player: i,
                        states: &rows.states,
                        z_row: &rows.z[i],
                        m_star: rows.m_star[i],
                        n_star: rows.n_star,
                        zm_row: &rows.zm[i],
                        zn_row: &rows.zn,
                        control: rows.controls[i],
                        others: &rows.controls,
                        aleph,
                    };
                    per_player.push(argmax_control(spec, &input)?);
                }
                Ok(per_player)
            })
            .collect();
        let targets = targets?;

        for i in 0..np {
            let cols = basis.pair_len();
            let mut flat = Vec::with_capacity(m * cols);
            let mut buf = Vec::with_capacity(cols);
            let mut ys = Vec::with_capacity(m);
            for (p, per_player) in targets.iter().enumerate() {
                let mut s = T::zero();
                for j in 0..np {
                    s += ens.state(p, j, k);
                }
                let xbar = s / real_usize(np);
                basis.pair_features(ens.state(p, i, k), xbar, &mut buf);
                flat.extend_from_slice(&buf);
                ys.push(per_player[i]);
            }
            let fit = regress(&flat, m, cols, &ys, basis.ridge())?;
            policy.coefficients[k][i] = fit.coefficients;
        }
    }
    Ok(policy)
}

/// Deterministic residual sample: evenly spaced path indices.
fn sample_paths(total: usize, sample: usize) -> Vec<usize> {
    let take = sample.min(total).max(1);
    (0..take).map(|j| j * total / take).collect()
}

/// Mean per-(step, player) optimality gaps and their overall max.
fn residual_profile<T: Real>(
    spec: &GameSpec<T>,
    ens: &PathEnsemble<T>,
    data: &SweepData<T>,
    sample: usize,
) -> Result<(Vec<T>, T)> {
    let np = ens.num_players();
    let n = ens.grid().steps();
    let paths = sample_paths(ens.num_paths(), sample);
    let mut by_step = vec![T::zero(); n * np];
    let mut overall = T::zero();
    for k in 0..n {
        let t = ens.grid().time(k);
        let gaps: Result<Vec<Vec<T>>> = paths
            .par_iter()
            .map(|&p| {
                let rows = gather_rows(ens, data, p, k);
                let mut per_player = Vec::with_capacity(np);
                for i in 0..np {
                    let input = HamiltonianInput {
                        t,
                        player: i,
                        states: &rows.states,
                        z_row: &rows.z[i],
                        m_star: rows.m_star[i],
                        n_star: rows.n_star,
                        zm_row: &rows.zm[i],
                        zn_row: &rows.zn,
                        control: rows.controls[i],
                        others: &rows.controls,
                        aleph: T::zero(),
                    };
                    per_player.push(optimality_gap(spec, &input)?);
                }
                Ok(per_player)
            })
            .collect();
        let gaps = gaps?;
        for i in 0..np {
            let mut s = T::zero();
            for row in &gaps {
                s += row[i];
                if row[i] > overall {
                    overall = row[i];
                }
            }
            by_step[k * np + i] = s / real_usize(paths.len());
        }
    }
    Ok((by_step, overall))
}

/// Sup-distance between two fields evaluated on the ensemble's states.
fn policy_distance<T: Real>(
    a: &ControlPolicy<T>,
    b: &ControlPolicy<T>,
    ens: &PathEnsemble<T>,
) -> T {
    let np = ens.num_players();
    let n = ens.grid().steps();
    (0..ens.num_paths())
        .into_par_iter()
        .map(|p| {
            let mut worst = T::zero();
            for k in 0..n {
                let mut s = T::zero();
                for j in 0..np {
                    s += ens.state(p, j, k);
                }
                let xbar = s / real_usize(np);
                for i in 0..np {
                    let x = ens.state(p, i, k);
                    let d = (a.control(k, i, x, xbar) - b.control(k, i, x, xbar)).abs();
                    if d > worst {
                        worst = d;
                    }
                }
            }
            worst
        })
        .reduce(T::zero, T::max)
}

/// Solves the coupled system for the sub-game-perfect equilibrium.
///
/// Non-convergence of the Picard iteration is reported in the returned
/// [`ConvergenceReport`], not as an error.
pub fn solve_nplayer<T: Real>(
    spec: &GameSpec<T>,
    grid: &TimeGrid<T>,
    opts: &SolveOptions<T>,
) -> Result<EquilibriumSolution<T>>
where
    StandardNormal: Distribution<T>,
{
    let n = grid.steps();
    let basis = opts.basis;
    if opts.num_paths < 2 * basis.pair_len() * n {
        return Err(Error::InvalidSpec(format!(
            "need at least {} paths for {} basis functions on {} steps",
            2 * basis.pair_len() * n,
            basis.pair_len(),
            n
        )));
    }
    let theta = opts.picard.damping;
    if !(theta > T::zero()) || theta > T::one() {
        return Err(Error::InvalidSpec("picard damping must lie in (0, 1]".into()));
    }

    let mut policy = ControlPolicy::zero(basis, spec.control_set, n, spec.num_players());
    let mut change_trace = Vec::new();
    let mut residual_trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..opts.picard.max_iters {
        let ens = simulate_paths(
            spec,
            grid,
            &policy,
            LawSource::WithinPath,
            opts.num_paths,
            &opts.rng,
            SimulationMeasure::Tilted,
        )?;
        let data = backward_sweep(spec, &ens, &basis)?;
        let (_, res_max) = residual_profile(spec, &ens, &data, opts.residual_sample.min(64))?;
        residual_trace.push(res_max);

        let fitted = fit_maximiser_policy(spec, &ens, &data, &basis)?;
        let mut updated = policy.clone();
        updated.blend_from(&fitted, theta);
        let change = policy_distance(&updated, &policy, &ens);
        change_trace.push(change);
        policy = updated;
        iterations += 1;
        if change < opts.picard.tol {
            converged = true;
            break;
        }
    }

    // Final sweep under the returned field keeps the reported solution
    // consistent with it (and with re-simulations at the same seed).
    let ens = simulate_paths(
        spec,
        grid,
        &policy,
        LawSource::WithinPath,
        opts.num_paths,
        &opts.rng,
        SimulationMeasure::Tilted,
    )?;
    let data = backward_sweep(spec, &ens, &basis)?;
    let (residual_by_step, res_max) = residual_profile(spec, &ens, &data, opts.residual_sample)?;
    residual_trace.push(res_max);

    Ok(EquilibriumSolution {
        grid: *grid,
        num_paths: opts.num_paths,
        num_players: spec.num_players(),
        y: data.y,
        z: data.z,
        mstar: data.mstar,
        nstar: data.nstar,
        zm: data.zm,
        zn: data.zn,
        residual_by_step,
        policy,
        ensemble: ens,
        report: ConvergenceReport {
            iterations,
            converged,
            control_change_trace: change_trace,
            residual_trace,
        },
    })
}
