//! One backward step of the coupled BSDE system.
//!
//! Conditional expectations are polynomial ridge regressions in each
//! player's own state and the cross-player mean state. The martingale
//! integrands are extracted by the increment representation
//! `Z_k = E[(V_{k+1} - E[V_{k+1}|basis]) dW_k | basis] / dt`; centring the
//! target before multiplying by the increment leaves the estimand unchanged
//! and removes the dominant variance term.

use crate::error::{Error, Result};
use crate::model::{EmpiricalMeasure, GameSpec};
use crate::regression::{regress, RegressionBasis, RegressionFit};
use crate::scalar::{real_usize, Real};
use crate::sde::PathEnsemble;

/// Values at node `k + 1`, flattened per (path, player) (`nstar` per path).
pub struct StepValues<'a, T> {
    pub y: &'a [T],
    pub mstar: &'a [T],
    pub nstar: &'a [T],
}

/// Values produced at node `k`: `y`, `mstar` per (path, player), `nstar`
/// per path, `z`/`zm` per (path, player, column), `zn` per (path, column).
pub struct BackwardStep<T> {
    pub y: Vec<T>,
    pub z: Vec<T>,
    pub mstar: Vec<T>,
    pub nstar: Vec<T>,
    pub zm: Vec<T>,
    pub zn: Vec<T>,
}

/// Terminal data `Y_n = g + G(phi1, phi2)`, `M*_n = phi1`, `N*_n = phi2`,
/// all pathwise; the law arguments are the within-path terminal state laws.
pub fn terminal_values<T: Real>(
    spec: &GameSpec<T>,
    ens: &PathEnsemble<T>,
) -> (Vec<T>, Vec<T>, Vec<T>) {
    let m = ens.num_paths();
    let n_players = ens.num_players();
    let n = ens.grid().steps();
    let mut y = vec![T::zero(); m * n_players];
    let mut mstar = vec![T::zero(); m * n_players];
    let mut nstar = vec![T::zero(); m];
    let mut states = Vec::with_capacity(n_players);
    for p in 0..m {
        ens.gather_states(p, n, &mut states);
        let law = EmpiricalMeasure::from_states(&states).expect("players >= 1");
        let phi2 = (spec.phi2)(&law);
        nstar[p] = phi2;
        for i in 0..n_players {
            let x = states[i];
            let phi1 = (spec.phi1)(x);
            y[p * n_players + i] = (spec.terminal_g)(x, &law) + (spec.big_g.value)(phi1, phi2);
            mstar[p * n_players + i] = phi1;
        }
    }
    (y, mstar, nstar)
}

/// Regression design of one player at one node.
struct Design<T> {
    flat: Vec<T>,
    rows: usize,
    cols: usize,
    ridge: T,
}

impl<T: Real> Design<T> {
    fn fit(&self, targets: &[T]) -> Result<RegressionFit<T>> {
        regress(&self.flat, self.rows, self.cols, targets, self.ridge)
    }
}

fn pair_design<T: Real>(
    basis: &RegressionBasis<T>,
    xs: &[T],
    xbars: &[T],
) -> Design<T> {
    let rows = xs.len();
    let cols = basis.pair_len();
    let mut flat = Vec::with_capacity(rows * cols);
    let mut buf = Vec::with_capacity(cols);
    for (&x, &xb) in xs.iter().zip(xbars.iter()) {
        basis.pair_features(x, xb, &mut buf);
        flat.extend_from_slice(&buf);
    }
    Design {
        flat,
        rows,
        cols,
        ridge: basis.ridge(),
    }
}

fn mean_design<T: Real>(basis: &RegressionBasis<T>, xbars: &[T]) -> Design<T> {
    let rows = xbars.len();
    let cols = basis.single_len();
    let mut flat = Vec::with_capacity(rows * cols);
    let mut buf = Vec::with_capacity(cols);
    for &xb in xbars.iter() {
        basis.single_features(xb, &mut buf);
        flat.extend_from_slice(&buf);
    }
    Design {
        flat,
        rows,
        cols,
        ridge: basis.ridge(),
    }
}

/// Computes node-`k` values from node-`k+1` values on the given ensemble.
/// The driver's running reward is evaluated at the controls stored in the
/// ensemble (the field the paths were simulated under).
pub fn backward_step<T: Real>(
    spec: &GameSpec<T>,
    ens: &PathEnsemble<T>,
    basis: &RegressionBasis<T>,
    k: usize,
    next: StepValues<T>,
) -> Result<BackwardStep<T>> {
    let m = ens.num_paths();
    let n_players = ens.num_players();
    let dt = ens.grid().dt();
    let t = ens.grid().time(k);
    let half = crate::scalar::real::<T>(0.5);

    // Per-path states and their cross-player means at node k.
    let mut xs = vec![T::zero(); m * n_players];
    let mut xbars = vec![T::zero(); m];
    for p in 0..m {
        let mut s = T::zero();
        for i in 0..n_players {
            let x = ens.state(p, i, k);
            xs[p * n_players + i] = x;
            s += x;
        }
        xbars[p] = s / real_usize(n_players);
    }

    let mut z = vec![T::zero(); m * n_players * n_players];
    let mut zm = vec![T::zero(); m * n_players * n_players];
    let mut zn = vec![T::zero(); m * n_players];
    let mut y = vec![T::zero(); m * n_players];
    let mut mstar = vec![T::zero(); m * n_players];

    // Shared martingale component: regression on symmetric features.
    let nstar_design = mean_design(basis, &xbars);
    let nstar_fit = nstar_design.fit(next.nstar)?;
    let nstar: Vec<T> = nstar_fit.fitted.clone();
    let n_centered: Vec<T> = (0..m).map(|p| next.nstar[p] - nstar_fit.fitted[p]).collect();

    let mut cond_y = vec![T::zero(); m * n_players];

    for i in 0..n_players {
        let xs_i: Vec<T> = (0..m).map(|p| xs[p * n_players + i]).collect();
        let design = pair_design(basis, &xs_i, &xbars);

        let y_next: Vec<T> = (0..m).map(|p| next.y[p * n_players + i]).collect();
        let m_next: Vec<T> = (0..m).map(|p| next.mstar[p * n_players + i]).collect();
        let y_fit = design.fit(&y_next)?;
        let m_fit = design.fit(&m_next)?;

        for p in 0..m {
            cond_y[p * n_players + i] = y_fit.fitted[p];
            mstar[p * n_players + i] = m_fit.fitted[p];
        }

        let mut target = vec![T::zero(); m];
        for col in 0..n_players {
            for p in 0..m {
                let dw = ens.increment(p, col, k);
                target[p] = (y_next[p] - y_fit.fitted[p]) * dw / dt;
            }
            let fit = design.fit(&target)?;
            for p in 0..m {
                z[(p * n_players + i) * n_players + col] = fit.fitted[p];
            }
            for p in 0..m {
                let dw = ens.increment(p, col, k);
                target[p] = (m_next[p] - m_fit.fitted[p]) * dw / dt;
            }
            let fit_m = design.fit(&target)?;
            for p in 0..m {
                zm[(p * n_players + i) * n_players + col] = fit_m.fitted[p];
            }
        }

        // Column-player design for the shared martingale integrand.
        if i == 0 {
            for col in 0..n_players {
                let xs_col: Vec<T> = (0..m).map(|p| xs[p * n_players + col]).collect();
                let col_design = pair_design(basis, &xs_col, &xbars);
                for p in 0..m {
                    let dw = ens.increment(p, col, k);
                    target[p] = n_centered[p] * dw / dt;
                }
                let fit_n = col_design.fit(&target)?;
                for p in 0..m {
                    zn[p * n_players + col] = fit_n.fitted[p];
                }
            }
        }
    }

    // Driver assembly.
    let mut law = EmpiricalMeasure::new(vec![(T::zero(), T::zero()); n_players])
        .expect("players >= 1");
    for p in 0..m {
        for i in 0..n_players {
            law.set_atom(i, xs[p * n_players + i], ens.control(p, i, k));
        }
        let n_k = nstar[p];
        for i in 0..n_players {
            let m_k = mstar[p * n_players + i];
            let dmm = (spec.big_g.dmm)(m_k, n_k);
            let dmn = (spec.big_g.dmn)(m_k, n_k);
            let dnn = (spec.big_g.dnn)(m_k, n_k);
            let mut s_mm = T::zero();
            let mut s_mn = T::zero();
            let mut s_nn = T::zero();
            for col in 0..n_players {
                let zm_v = zm[(p * n_players + i) * n_players + col];
                let zn_v = zn[p * n_players + col];
                s_mm += zm_v * zm_v;
                s_mn += zm_v * zn_v;
                s_nn += zn_v * zn_v;
            }
            let f_val = (spec.running_f)(t, xs[p * n_players + i], &law, ens.control(p, i, k));
            let driver = f_val - dmn * s_mn - half * (dmm * s_mm + dnn * s_nn);
            let value = cond_y[p * n_players + i] + dt * driver;
            if !value.is_finite() {
                return Err(Error::NonFinite("backward step"));
            }
            y[p * n_players + i] = value;
        }
    }

    Ok(BackwardStep {
        y,
        z,
        mstar,
        nstar,
        zm,
        zn,
    })
}
