//! Closed-form solutions of the linear-quadratic games, used as oracles by
//! the Monte Carlo solvers and by the convergence experiments.
//!
//! Two two-player examples share the driftless state `dX = sigma dW` under
//! the reference measure with controlled drift `sigma a`; the representative
//! mean-reverting family adds `b = a - k x`, running rewards
//! `-a^2/2 + kappa_1 mean(X) + kappa_2 mean(a)` and terminal reward
//! `x - gamma/2 x^2` plus `gamma/2 E[x]^2`.

use crate::error::{Error, Result};
use crate::quad::simpson;
use crate::scalar::{real, real_usize, Real};

/// Parameters of the linear-quadratic families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LQParams<T> {
    pub sigma: T,
    pub gamma: T,
    pub horizon: T,
    /// Mean-reversion rate of the representative family.
    pub k: T,
    /// Weight of the state interaction term.
    pub kappa1: T,
    /// Weight of the control interaction term.
    pub kappa2: T,
    /// Half width of the control interval.
    pub control_bound: T,
    pub num_players: usize,
}

impl<T: Real> LQParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > T::zero()) || !(self.horizon > T::zero()) || !(self.control_bound > T::zero())
        {
            return Err(Error::InvalidSpec(
                "sigma, horizon and the control bound must be positive".into(),
            ));
        }
        if self.num_players == 0 {
            return Err(Error::InvalidSpec("num_players must be >= 1".into()));
        }
        Ok(())
    }

    fn check_time(&self, t: T) -> Result<()> {
        self.validate()?;
        if t > self.horizon {
            return Err(Error::OffGrid(t.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(())
    }

    pub fn project(&self, a: T) -> T {
        let b = self.control_bound;
        if a > b {
            b
        } else if a < -b {
            -b
        } else {
            a
        }
    }
}

/// Pointwise solution of the first two-player example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ex1Solution<T> {
    pub y: T,
    pub z_own: T,
    pub z_cross: T,
    pub m_star: T,
    pub zm_own: T,
    pub alpha: T,
}

/// First two-player example: `Y = x + sigma^2/2 (1-gamma)(T-t)`,
/// equilibrium `sigma/2`.
pub fn ex1_solution<T: Real>(p: &LQParams<T>, t: T, x: T) -> Result<Ex1Solution<T>> {
    p.check_time(t)?;
    let half = real::<T>(0.5);
    let tau = p.horizon - t;
    let s2 = p.sigma * p.sigma;
    Ok(Ex1Solution {
        y: x + half * s2 * (T::one() - p.gamma) * tau,
        z_own: p.sigma,
        z_cross: T::zero(),
        m_star: x + half * s2 * tau,
        zm_own: p.sigma,
        alpha: half * p.sigma,
    })
}

/// Value of the McKean-Vlasov formulation of the first example as a function
/// of the state law's mean and second moment:
/// `v = mu - gamma/2 s2 + gamma/2 mu^2 + sigma^2/2 (1-gamma)(T-t)`.
pub fn ex1_mkv_value<T: Real>(p: &LQParams<T>, t: T, mu: T, s2: T) -> Result<T> {
    p.check_time(t)?;
    if s2 < mu * mu {
        return Err(Error::MomentOrder {
            s2: s2.to_f64().unwrap_or(f64::NAN),
            mu_sq: (mu * mu).to_f64().unwrap_or(f64::NAN),
        });
    }
    let half = real::<T>(0.5);
    Ok(mu - half * p.gamma * s2
        + half * p.gamma * mu * mu
        + half * p.sigma * p.sigma * (T::one() - p.gamma) * (p.horizon - t))
}

/// Pointwise solution of the second two-player example.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ex2Solution<T> {
    pub y: T,
    pub z_own: T,
    pub m_star: T,
    pub alpha: T,
}

/// Second two-player example: `Y = x - sigma^2/2 (1+gamma)(T-t)`,
/// equilibrium `-sigma`.
pub fn ex2_solution<T: Real>(p: &LQParams<T>, t: T, x: T) -> Result<Ex2Solution<T>> {
    p.check_time(t)?;
    let half = real::<T>(0.5);
    let tau = p.horizon - t;
    let s2 = p.sigma * p.sigma;
    Ok(Ex2Solution {
        y: x - half * s2 * (T::one() + p.gamma) * tau,
        z_own: p.sigma,
        m_star: x - s2 * tau,
        alpha: -p.sigma,
    })
}

/// Which auxiliary ODE of the representative game to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtaKind {
    /// Intercept of the value function.
    EtaN,
    /// Intercept of the auxiliary expectation process.
    EtaMN,
}

/// Reading of the quadratic risk term in the mean-field intercept integrand.
/// The two differ in whether the exponential is evaluated at the integration
/// variable or at the outer time; the integration-variable reading is the
/// large-population limit of the finite-player ODE and is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EtaReading {
    #[default]
    IntegrationVariable,
    OuterTime,
}

/// Right-hand side of the finite-player intercept ODEs.
fn eta_rhs<T: Real>(p: &LQParams<T>, kind: EtaKind, s: T) -> T {
    let half = real::<T>(0.5);
    let n = real_usize::<T>(p.num_players);
    let e = (p.sigma * p.k * (s - p.horizon)).exp();
    let one_minus = T::one() - e;
    let own = p.sigma * e + p.kappa1 / (p.k * n) * one_minus + p.kappa2 / n;
    match kind {
        EtaKind::EtaN => {
            let weight = T::one() - half / n;
            -(own * (half * p.sigma * e + (p.kappa1 / p.k * one_minus + p.kappa2) * weight))
                + half * p.gamma * p.sigma * p.sigma * e * e
        }
        EtaKind::EtaMN => -(p.sigma * own * e),
    }
}

/// Intercept `eta(t)` of the finite-player value functions, integrated from
/// the terminal condition `eta(T) = 0` with composite Simpson quadrature.
pub fn rep_eta<T: Real>(p: &LQParams<T>, t: T, kind: EtaKind, panels: usize) -> Result<T> {
    p.check_time(t)?;
    if panels < 10 {
        return Err(Error::InvalidSpec("quadrature needs at least 10 panels".into()));
    }
    // eta(t) = -int_t^T eta'(s) ds.
    Ok(-simpson(|s| eta_rhs(p, kind, s), t, p.horizon, panels))
}

/// Pointwise finite-player solution of the representative game for player 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepNPlayerSolution<T> {
    pub value: T,
    pub value_aux: T,
    pub alpha: T,
    pub z_own: T,
    pub z_cross: T,
    pub zm_own: T,
}

/// Finite-player closed form of the representative game at states `x`.
pub fn rep_nplayer<T: Real>(
    p: &LQParams<T>,
    t: T,
    x: &[T],
    panels: usize,
) -> Result<RepNPlayerSolution<T>> {
    p.check_time(t)?;
    if x.len() != p.num_players {
        return Err(Error::DimensionMismatch(format!(
            "expected {} states, got {}",
            p.num_players,
            x.len()
        )));
    }
    let n = real_usize::<T>(p.num_players);
    let e = (p.sigma * p.k * (t - p.horizon)).exp();
    let one_minus = T::one() - e;
    let sum: T = x.iter().copied().sum();
    let eta_n = rep_eta(p, t, EtaKind::EtaN, panels)?;
    let eta_mn = rep_eta(p, t, EtaKind::EtaMN, panels)?;
    let cross = p.kappa1 / (p.k * n) * one_minus;
    Ok(RepNPlayerSolution {
        value: e * x[0] + cross / p.sigma * sum + eta_n,
        value_aux: e * x[0] + eta_mn,
        alpha: p.project(p.sigma * e + cross + p.kappa2 / n),
        z_own: p.sigma * e + cross,
        z_cross: cross,
        zm_own: p.sigma * e,
    })
}

/// Pointwise mean-field solution of the representative game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepMeanFieldSolution<T> {
    pub y: T,
    pub m_star: T,
    pub z: T,
    pub zm: T,
    pub alpha: T,
    pub eta: T,
}

/// Intercept of the mean-field value, `eta(t; x)`: the interaction term
/// reads the conditional mean path started from `x` at `t`, exactly as the
/// closed form is stated.
pub fn rep_meanfield_eta<T: Real>(
    p: &LQParams<T>,
    t: T,
    x: T,
    reading: EtaReading,
    panels: usize,
) -> Result<T> {
    p.check_time(t)?;
    let half = real::<T>(0.5);
    let sk = p.sigma * p.k;
    let horizon = p.horizon;
    let gamma_term_at_t = half * p.gamma * p.sigma * p.sigma * (real::<T>(2.0) * sk * (t - horizon)).exp();
    Ok(simpson(
        |s: T| {
            let e_s = (sk * (s - horizon)).exp();
            let own = p.sigma * e_s * (half * p.sigma * e_s + p.kappa2);
            let cond_mean = (-sk * (s - t)).exp() * x
                + half * p.sigma / p.k * (e_s - (-sk * (s + horizon - t - t)).exp());
            let risk = match reading {
                EtaReading::IntegrationVariable => {
                    half * p.gamma * p.sigma * p.sigma * e_s * e_s
                }
                EtaReading::OuterTime => gamma_term_at_t,
            };
            own + p.kappa1 * cond_mean - risk
        },
        t,
        horizon,
        panels,
    ))
}

/// Mean-field closed form of the representative game.
pub fn rep_meanfield<T: Real>(
    p: &LQParams<T>,
    t: T,
    x: T,
    reading: EtaReading,
    panels: usize,
) -> Result<RepMeanFieldSolution<T>> {
    p.check_time(t)?;
    let half = real::<T>(0.5);
    let sk = p.sigma * p.k;
    let e = (sk * (t - p.horizon)).exp();
    let eta = rep_meanfield_eta(p, t, x, reading, panels)?;
    Ok(RepMeanFieldSolution {
        y: e * x + eta,
        m_star: e * x + half * p.sigma / p.k * (T::one() - e * e),
        z: p.sigma * e,
        zm: p.sigma * e,
        alpha: p.project(p.sigma * e),
        eta,
    })
}

/// Shape of the convergence bound, `c (1/N + 1/N^2)`.
pub fn rep_convergence_bound<T: Real>(c: T, n: usize) -> T {
    let n = real_usize::<T>(n);
    c * (T::one() / n + T::one() / (n * n))
}

/// Moments of the mean-reverting equilibrium state process
/// `dX = sigma (alpha(t) - k X) dt + sigma dW` with `alpha(t) = sigma e^{sigma k (t-T)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuMoments<T> {
    pub params: LQParams<T>,
    pub x0: T,
}

impl<T: Real> OuMoments<T> {
    pub fn new(params: LQParams<T>, x0: T) -> Self {
        Self { params, x0 }
    }

    /// Conditional mean of `X_t` given `X_u = x`.
    pub fn cond_mean(&self, u: T, x: T, t: T) -> T {
        let p = &self.params;
        let sk = p.sigma * p.k;
        let half = real::<T>(0.5);
        (-sk * (t - u)).exp() * x
            + half * p.sigma / p.k
                * ((sk * (t - p.horizon)).exp() - (-sk * (t + p.horizon - u - u)).exp())
    }

    /// Conditional variance of `X_t` given any state at `u`.
    pub fn cond_var(&self, u: T, t: T) -> T {
        let p = &self.params;
        let sk = p.sigma * p.k;
        let half = real::<T>(0.5);
        half * p.sigma / p.k * (T::one() - (-real::<T>(2.0) * sk * (t - u)).exp())
    }

    pub fn mean(&self, t: T) -> T {
        self.cond_mean(T::zero(), self.x0, t)
    }

    pub fn var(&self, t: T) -> T {
        self.cond_var(T::zero(), t)
    }

    /// Equilibrium feedback control, constant in the state.
    pub fn control(&self, t: T) -> T {
        let p = &self.params;
        p.project(p.sigma * (p.sigma * p.k * (t - p.horizon)).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(gamma: f64) -> LQParams<f64> {
        LQParams {
            sigma: 1.0,
            gamma,
            horizon: 1.0,
            k: 1.0,
            kappa1: 0.0,
            kappa2: 0.0,
            control_bound: 10.0,
            num_players: 2,
        }
    }

    #[test]
    fn ex1_risk_neutralised_value_is_the_state() {
        let s = ex1_solution(&params(1.0), 0.3, 1.7).unwrap();
        assert_eq!(s.y, 1.7);
    }

    #[test]
    fn ex1_printed_point_values() {
        let s = ex1_solution(&params(0.0), 0.0, 2.0).unwrap();
        assert_eq!(s.y, 2.5);
        assert_eq!(s.m_star, 2.5);
        assert_eq!(s.alpha, 0.5);
    }

    #[test]
    fn ex1_terminal_values_collapse_to_state() {
        let s = ex1_solution(&params(0.5), 1.0, 0.4).unwrap();
        assert_eq!(s.y, 0.4);
        assert_eq!(s.m_star, 0.4);
        assert!(ex1_solution(&params(0.5), 1.1, 0.0).is_err());
    }

    #[test]
    fn ex1_mkv_dirac_matches_game_value() {
        let p = params(0.7);
        for (t, x) in [(0.0, 0.5), (0.4, -1.2)] {
            let v = ex1_mkv_value(&p, t, x, x * x).unwrap();
            let y = ex1_solution(&p, t, x).unwrap().y;
            assert!((v - y).abs() < 1e-14);
        }
    }

    #[test]
    fn ex1_mkv_point_value_and_moment_guard() {
        let p = LQParams { gamma: 2.0, ..params(0.0) };
        let v = ex1_mkv_value(&p, 0.0, 0.0, 1.0).unwrap();
        assert!((v - (-1.5)).abs() < 1e-14);
        assert!(ex1_mkv_value(&p, 0.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn ex1_mkv_gamma_zero_drops_variance_term() {
        let p = params(0.0);
        let v = ex1_mkv_value(&p, 0.25, 0.3, 5.0).unwrap();
        assert!((v - (0.3 + 0.5 * 0.75)).abs() < 1e-14);
    }

    #[test]
    fn ex2_point_values() {
        let p = params(1.0);
        let s = ex2_solution(&p, 0.0, 0.0).unwrap();
        assert_eq!(s.y, -1.0);
        assert_eq!(s.m_star, -1.0);
        assert_eq!(s.alpha, -1.0);
        let terminal = ex2_solution(&p, 1.0, 0.8).unwrap();
        assert_eq!(terminal.y, 0.8);
    }

    #[test]
    fn eta_vanishes_when_terms_cancel() {
        // kappa = 0, gamma = 1: the own term -sigma^2/2 e^2 cancels the risk
        // term gamma sigma^2/2 e^2 identically, at any player count.
        for n in [2usize, 7, 64] {
            let p = LQParams {
                num_players: n,
                ..params(1.0)
            };
            for t in [0.0, 0.4, 0.9] {
                let v = rep_eta(&p, t, EtaKind::EtaN, 512).unwrap();
                assert!(v.abs() < 1e-14, "eta {v} at N={n} t={t}");
            }
        }
    }

    #[test]
    fn eta_matches_exact_antiderivative_without_interaction() {
        // kappa = 0: eta^N(t) = sigma (1-gamma) (1 - e^{2 sigma k (t-T)}) / (4k)
        // in the limit; at finite N the own-rate factor keeps the same form
        // because the kappa terms vanish, leaving
        // (sigma^2/2 - gamma sigma^2/2) int e^{2 sigma k (s-T)} ds.
        let p = params(0.0);
        let exact = (1.0 - (-2.0f64).exp()) / 4.0;
        let v = rep_eta(&p, 0.0, EtaKind::EtaN, 512).unwrap();
        assert!((v - exact).abs() < 1e-10, "eta {v} vs {exact}");
        assert!((exact - 0.21616617919084682).abs() < 1e-15);
    }

    #[test]
    fn eta_refines_under_panel_doubling() {
        let p = LQParams {
            kappa1: 0.5,
            kappa2: 0.3,
            num_players: 4,
            ..params(0.5)
        };
        let coarse = rep_eta(&p, 0.0, EtaKind::EtaN, 256).unwrap();
        let fine = rep_eta(&p, 0.0, EtaKind::EtaN, 512).unwrap();
        assert!(((coarse - fine) / fine).abs() < 1e-8);
    }

    #[test]
    fn rep_nplayer_terminal_and_no_interaction_limits() {
        let p = LQParams {
            kappa1: 0.5,
            kappa2: 0.3,
            num_players: 4,
            ..params(0.5)
        };
        let s = rep_nplayer(&p, 1.0, &[0.1, 0.2, 0.3, 0.4], 512).unwrap();
        assert!((s.alpha - p.project(1.0 + 0.3 / 4.0)).abs() < 1e-14);
        assert_eq!(s.z_own, 1.0);
        assert_eq!(s.zm_own, 1.0);

        let free = LQParams {
            kappa1: 0.0,
            kappa2: 0.0,
            ..p
        };
        let s0 = rep_nplayer(&free, 0.25, &[0.0; 4], 512).unwrap();
        let e = (0.25f64 - 1.0).exp();
        assert!((s0.alpha - e).abs() < 1e-14);
        assert_eq!(s0.z_cross, 0.0);
    }

    #[test]
    fn rep_nplayer_value_at_origin_reduces_to_eta() {
        let p = params(0.0);
        let s = rep_nplayer(&p, 0.0, &[0.0, 0.0], 512).unwrap();
        assert!((s.value - 0.21616617919084682).abs() < 1e-10);
    }

    #[test]
    fn rep_meanfield_terminal_identity_and_aux_moment() {
        let p = params(0.5);
        let s = rep_meanfield(&p, 1.0, 0.7, EtaReading::default(), 512).unwrap();
        assert_eq!(s.y, 0.7);
        assert_eq!(s.m_star, 0.7);

        let s0 = rep_meanfield(&p, 0.0, 0.0, EtaReading::default(), 512).unwrap();
        let exact = 0.5 * (1.0 - (-2.0f64).exp());
        assert!((s0.m_star - exact).abs() < 1e-14);
        assert!((exact - 0.43233235838169365).abs() < 1e-15);
    }

    #[test]
    fn rep_meanfield_drift_only_intercept_vanishes_for_unit_gamma() {
        // kappa = 0, gamma = 1 under the integration-variable reading: the
        // own term sigma^2/2 e^{2..} cancels against the risk term.
        let p = LQParams { gamma: 1.0, ..params(0.0) };
        let s = rep_meanfield(&p, 0.3, 2.0, EtaReading::IntegrationVariable, 512).unwrap();
        assert!(s.eta.abs() < 1e-12);
        let e = (0.3f64 - 1.0).exp();
        assert!((s.y - e * 2.0).abs() < 1e-12);
    }

    #[test]
    fn eta_readings_differ_unless_projection_trivial() {
        let p = LQParams { gamma: 1.0, ..params(0.0) };
        let a = rep_meanfield_eta(&p, 0.3, 0.0, EtaReading::IntegrationVariable, 512).unwrap();
        let b = rep_meanfield_eta(&p, 0.3, 0.0, EtaReading::OuterTime, 512).unwrap();
        assert!((a - b).abs() > 1e-3);
    }

    #[test]
    fn convergence_bound_shape() {
        assert_eq!(rep_convergence_bound(2.0f64, 1), 4.0);
        assert!(rep_convergence_bound(2.0f64, 1_000_000) < 3e-6);
    }

    #[test]
    fn equilibrium_alpha_converges_to_meanfield_control_at_explicit_rate() {
        // Before projection: |alpha^N - alpha| <= (|kappa1|/k + |kappa2|)/N.
        let base = LQParams {
            kappa1: 0.5,
            kappa2: 0.5,
            control_bound: 1e6,
            ..params(0.5)
        };
        for n in [2usize, 4, 8, 16, 32, 64, 128] {
            let p = LQParams {
                num_players: n,
                ..base
            };
            let bound = (0.5 / p.k + 0.5) / n as f64;
            for t in [0.0, 0.33, 0.8, 1.0] {
                let s = rep_nplayer(&p, t, &vec![0.0; n], 512).unwrap();
                let mf = OuMoments::new(p, 0.0).control(t);
                assert!(
                    (s.alpha - mf).abs() <= bound + 1e-12,
                    "N={n} t={t}: {} vs {}",
                    s.alpha,
                    mf
                );
            }
        }
    }

    #[test]
    fn ou_moments_match_classical_formulas() {
        let p = LQParams {
            kappa1: 0.0,
            kappa2: 0.0,
            ..params(0.0)
        };
        let ou = OuMoments::new(p, 1.0);
        // At t = T the conditional-mean formula evaluates the equilibrium
        // pull towards sigma/2k (1 - e^{2 sigma k (t-T)}) plus decay of x0.
        let m = ou.mean(1.0);
        let exact = (-1.0f64).exp() + 0.5 * (1.0 - (-2.0f64).exp());
        assert!((m - exact).abs() < 1e-14);
        let v = ou.var(1.0);
        assert!((v - 0.5 * (1.0 - (-2.0f64).exp())).abs() < 1e-14);
    }
}
