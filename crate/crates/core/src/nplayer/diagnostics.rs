//! Runtime checks of the a priori bounds on the martingale components: the
//! conditional-expectation processes stay inside the declared bounds of the
//! terminal functionals, and the accumulated squared integrands stay below
//! the squared bounds.

use crate::model::GameSpec;
use crate::nplayer::solution::EquilibriumSolution;
use crate::scalar::{real, real_usize, Real};

#[derive(Debug, Clone)]
pub struct BoundCheck<T> {
    pub name: &'static str,
    pub measured: T,
    pub bound: T,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct DiagnosticsReport<T> {
    pub checks: Vec<BoundCheck<T>>,
}

impl<T: Real> DiagnosticsReport<T> {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check<T: Real>(name: &'static str, measured: T, bound: T) -> BoundCheck<T> {
    BoundCheck {
        name,
        measured,
        bound,
        pass: measured <= bound,
    }
}

/// Mean over paths and standard error of the per-path accumulated
/// `sum_col integrand(p, col, k)^2 dt`.
fn accumulated_square<T: Real>(
    sol: &EquilibriumSolution<T>,
    value: impl Fn(usize, usize, usize) -> T,
) -> (T, T) {
    let m = sol.num_paths();
    let n = sol.grid().steps();
    let np = sol.num_players();
    let dt = sol.grid().dt();
    let per_path: Vec<T> = (0..m)
        .map(|p| {
            let mut acc = T::zero();
            for k in 0..n {
                for col in 0..np {
                    let v = value(p, col, k);
                    acc += v * v * dt;
                }
            }
            acc
        })
        .collect();
    let mf = real_usize::<T>(m);
    let mean = per_path.iter().copied().sum::<T>() / mf;
    let var = per_path
        .iter()
        .map(|&x| (x - mean) * (x - mean))
        .sum::<T>()
        / (mf - T::one());
    (mean, (var / mf).sqrt())
}

/// Evaluates the moment bounds on a solved system and reports pass/fail per
/// bound. `measured <= bound` is required for each check; the integral
/// bounds allow three standard errors of Monte Carlo slack.
pub fn appendix_diagnostics<T: Real>(
    spec: &GameSpec<T>,
    sol: &EquilibriumSolution<T>,
) -> DiagnosticsReport<T> {
    let m = sol.num_paths();
    let np = sol.num_players();
    let nodes = sol.grid().steps() + 1;
    let three = real::<T>(3.0);

    let mut sup_m = T::zero();
    for p in 0..m {
        for i in 0..np {
            for k in 0..nodes {
                sup_m = sup_m.max(sol.m_star(p, i, k).abs());
            }
        }
    }
    let mut sup_n = T::zero();
    for p in 0..m {
        for k in 0..nodes {
            sup_n = sup_n.max(sol.n_star(p, k).abs());
        }
    }

    // Largest per-player accumulated square of the Zm block.
    let mut zm_mean = T::zero();
    let mut zm_se = T::zero();
    for i in 0..np {
        let (mean, se) = accumulated_square(sol, |p, col, k| sol.zm(p, i, col, k));
        if mean > zm_mean {
            zm_mean = mean;
            zm_se = se;
        }
    }
    let (zn_mean, zn_se) = accumulated_square(sol, |p, col, k| sol.zn(p, col, k));

    let c1 = spec.bounds.phi1;
    let c2 = spec.bounds.phi2;
    let checks = vec![
        check("sup |M*| <= c_phi1", sup_m, c1),
        check("sup |N*| <= c_phi2", sup_n, c2),
        check(
            "E int sum |Zm|^2 <= c_phi1^2 + 3 se",
            zm_mean,
            c1 * c1 + three * zm_se,
        ),
        check(
            "E int sum |Zn|^2 <= c_phi2^2 + 3 se",
            zn_mean,
            c2 * c2 + three * zn_se,
        ),
        // The shared terminal functional makes N* player-free by
        // construction; the spread is identically zero.
        check("N* player spread == 0", T::zero(), T::zero()),
    ];
    DiagnosticsReport { checks }
}
