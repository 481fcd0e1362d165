use crate::error::{Error, Result};
use crate::model::TimeGrid;
use crate::nplayer::policy::ControlPolicy;
use crate::scalar::Real;
use crate::sde::PathEnsemble;

/// Picard iteration outcome.
#[derive(Debug, Clone)]
pub struct ConvergenceReport<T> {
    pub iterations: usize,
    pub converged: bool,
    /// Sup-distance between successive control fields, one entry per sweep.
    pub control_change_trace: Vec<T>,
    /// Max sampled Hamiltonian fixed-point residual, one entry per sweep.
    pub residual_trace: Vec<T>,
}

/// Grid-indexed pathwise solution of the coupled BSDE system together with
/// the equilibrium control field and the final ensemble it was solved on.
///
/// Layout: `y`/`mstar` per (path, player, node 0..=n); `z`/`zm` per
/// (path, player, column-player, step 0..n); `zn` per (path, column-player,
/// step); `nstar` per (path, node); residuals per (step, player), averaged
/// over the sampled paths of the final sweep.
#[derive(Debug, Clone)]
pub struct EquilibriumSolution<T> {
    pub(crate) grid: TimeGrid<T>,
    pub(crate) num_paths: usize,
    pub(crate) num_players: usize,
    pub(crate) y: Vec<T>,
    pub(crate) z: Vec<T>,
    pub(crate) mstar: Vec<T>,
    pub(crate) nstar: Vec<T>,
    pub(crate) zm: Vec<T>,
    pub(crate) zn: Vec<T>,
    pub(crate) residual_by_step: Vec<T>,
    pub policy: ControlPolicy<T>,
    pub ensemble: PathEnsemble<T>,
    pub report: ConvergenceReport<T>,
}

impl<T: Real> EquilibriumSolution<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    #[inline]
    pub fn y(&self, path: usize, player: usize, node: usize) -> T {
        self.y[(path * self.num_players + player) * (self.grid.steps() + 1) + node]
    }

    #[inline]
    pub fn m_star(&self, path: usize, player: usize, node: usize) -> T {
        self.mstar[(path * self.num_players + player) * (self.grid.steps() + 1) + node]
    }

    #[inline]
    pub fn n_star(&self, path: usize, node: usize) -> T {
        self.nstar[path * (self.grid.steps() + 1) + node]
    }

    #[inline]
    pub fn z(&self, path: usize, player: usize, col: usize, step: usize) -> T {
        let n = self.num_players;
        self.z[((path * n + player) * n + col) * self.grid.steps() + step]
    }

    #[inline]
    pub fn zm(&self, path: usize, player: usize, col: usize, step: usize) -> T {
        let n = self.num_players;
        self.zm[((path * n + player) * n + col) * self.grid.steps() + step]
    }

    #[inline]
    pub fn zn(&self, path: usize, col: usize, step: usize) -> T {
        self.zn[(path * self.num_players + col) * self.grid.steps() + step]
    }

    /// Equilibrium control applied on `[t_step, t_{step+1})`.
    #[inline]
    pub fn control(&self, path: usize, player: usize, step: usize) -> T {
        self.ensemble.control(path, player, step)
    }

    /// Mean sampled per-player optimality gap at a step, from the final sweep.
    pub fn residual(&self, step: usize, player: usize) -> T {
        self.residual_by_step[step * self.num_players + player]
    }

    /// Pathwise value process of one player at a grid time.
    pub fn value_process(&self, player: usize, u: T) -> Result<Vec<T>> {
        let node = self.grid.index_of(u)?;
        if player >= self.num_players {
            return Err(Error::DimensionMismatch(format!("player {player}")));
        }
        Ok((0..self.num_paths).map(|p| self.y(p, player, node)).collect())
    }

    /// Writes the per-step summary CSV:
    /// `t,player,mean_Y,mean_alpha,fixed_point_residual,mstar_bound_slack`.
    pub fn write_step_csv<W: std::io::Write>(&self, phi1_bound: T, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,player,mean_Y,mean_alpha,fixed_point_residual,mstar_bound_slack")?;
        let paths = self.num_paths;
        for k in 0..self.grid.steps() {
            let t = self.grid.time(k);
            for i in 0..self.num_players {
                let mean_y = (0..paths).map(|p| self.y(p, i, k)).sum::<T>()
                    / crate::scalar::real_usize(paths);
                let mean_a = (0..paths).map(|p| self.control(p, i, k)).sum::<T>()
                    / crate::scalar::real_usize(paths);
                let sup_m = (0..paths)
                    .map(|p| self.m_star(p, i, k).abs())
                    .fold(T::zero(), T::max);
                writeln!(
                    w,
                    "{:.12e},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                    t.to_f64().unwrap_or(f64::NAN),
                    i,
                    mean_y.to_f64().unwrap_or(f64::NAN),
                    mean_a.to_f64().unwrap_or(f64::NAN),
                    self.residual(k, i).to_f64().unwrap_or(f64::NAN),
                    (phi1_bound - sup_m).to_f64().unwrap_or(f64::NAN),
                )?;
            }
        }
        Ok(())
    }
}
