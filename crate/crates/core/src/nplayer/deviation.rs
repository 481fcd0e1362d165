//! Monte Carlo test of the equilibrium property: a spike deviation over a
//! short window must not improve the deviating player's payoff by more than
//! `epsilon * window`.

use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::{EmpiricalMeasure, GameSpec};
use crate::nplayer::policy::SpikedPolicy;
use crate::nplayer::solution::EquilibriumSolution;
use crate::scalar::{real_usize, Real};
use crate::sde::{conditional_subensemble, LawSource, PathEnsemble, RngSpec, SimulationMeasure};

/// Monte Carlo budget of one deviation test.
#[derive(Debug, Clone, Copy)]
pub struct DeviationConfig<T> {
    pub paths_per_pivot: usize,
    pub pivots: usize,
    pub epsilon: T,
    pub rng: RngSpec,
}

/// Estimated payoff gap `J(equilibrium) - J(deviation)` with its standard
/// error; the test passes when `gap >= -(epsilon * window + 3 se)`.
#[derive(Debug, Clone, Copy)]
pub struct DeviationReport<T> {
    pub gap: T,
    pub se: T,
    pub window: T,
    pub threshold: T,
    pub pass: bool,
}

/// Payoff of `player` from `from_step` on, estimated on an ensemble:
/// running rewards plus terminal reward, then the nonlinearity applied to
/// the estimated conditional expectations. The standard error is a
/// jackknife over paths through the full composition.
pub fn estimate_payoff<T: Real>(
    spec: &GameSpec<T>,
    ens: &PathEnsemble<T>,
    from_step: usize,
    player: usize,
) -> (T, T) {
    let m = ens.num_paths();
    let np = ens.num_players();
    let n = ens.grid().steps();
    let dt = ens.grid().dt();

    // Per-path components: integral of f plus terminal g, phi1, phi2.
    let mut base = vec![T::zero(); m];
    let mut phi1 = vec![T::zero(); m];
    let mut phi2 = vec![T::zero(); m];
    let mut law = EmpiricalMeasure::new(vec![(T::zero(), T::zero()); np]).expect("players >= 1");
    let mut states = Vec::with_capacity(np);
    for p in 0..m {
        let mut acc = T::zero();
        for k in from_step..n {
            let t = ens.grid().time(k);
            for i in 0..np {
                law.set_atom(i, ens.state(p, i, k), ens.control(p, i, k));
            }
            acc += dt * (spec.running_f)(t, ens.state(p, player, k), &law, ens.control(p, player, k));
        }
        ens.gather_states(p, n, &mut states);
        let terminal_law = EmpiricalMeasure::from_states(&states).expect("players >= 1");
        base[p] = acc + (spec.terminal_g)(states[player], &terminal_law);
        phi1[p] = (spec.phi1)(states[player]);
        phi2[p] = (spec.phi2)(&terminal_law);
    }

    let mf = real_usize::<T>(m);
    let sum_base: T = base.iter().copied().sum();
    let sum_p1: T = phi1.iter().copied().sum();
    let sum_p2: T = phi2.iter().copied().sum();
    let payoff = sum_base / mf + (spec.big_g.value)(sum_p1 / mf, sum_p2 / mf);
    if m < 2 {
        return (payoff, T::zero());
    }

    let m1 = mf - T::one();
    let mut reps = Vec::with_capacity(m);
    for j in 0..m {
        let b = (sum_base - base[j]) / m1;
        let p1 = (sum_p1 - phi1[j]) / m1;
        let p2 = (sum_p2 - phi2[j]) / m1;
        reps.push(b + (spec.big_g.value)(p1, p2));
    }
    let mean_rep = reps.iter().copied().sum::<T>() / mf;
    let ss = reps
        .iter()
        .map(|&r| (r - mean_rep) * (r - mean_rep))
        .sum::<T>();
    let se = (m1 / mf * ss).sqrt();
    (payoff, se)
}

/// Tests the spike deviation `deviation` of player 0 on
/// `[t_step, t_step + window_steps)` against the solved equilibrium field.
///
/// Both payoffs are re-simulated from shared pivot prefixes with identical
/// random streams, so a zero deviation yields a gap of exactly zero.
pub fn epsilon_deviation_test<T: Real>(
    spec: &GameSpec<T>,
    sol: &EquilibriumSolution<T>,
    t_step: usize,
    window_steps: usize,
    deviation: T,
    cfg: &DeviationConfig<T>,
) -> Result<DeviationReport<T>>
where
    StandardNormal: Distribution<T>,
{
    let n = sol.grid().steps();
    let until = (t_step + window_steps).min(n);
    let total = sol.num_paths();
    let pivots = cfg.pivots.min(total).max(1);

    let mut gaps = Vec::with_capacity(pivots);
    let mut paired_se = T::zero();
    for j in 0..pivots {
        let pivot = j * total / pivots;
        let rng = cfg.rng.with_epoch(cfg.rng.epoch + 1 + j as u64);
        let eq_ens = conditional_subensemble(
            spec,
            &sol.ensemble,
            t_step,
            pivot,
            &sol.policy,
            LawSource::WithinPath,
            cfg.paths_per_pivot,
            &rng,
            SimulationMeasure::Tilted,
        )?;
        let spiked = SpikedPolicy {
            base: &sol.policy,
            player: 0,
            from_step: t_step,
            until_step: until,
            control: deviation,
        };
        let dev_ens = conditional_subensemble(
            spec,
            &sol.ensemble,
            t_step,
            pivot,
            &spiked,
            LawSource::WithinPath,
            cfg.paths_per_pivot,
            &rng,
            SimulationMeasure::Tilted,
        )?;
        let (j_eq, se_eq) = estimate_payoff(spec, &eq_ens, t_step, 0);
        let (j_dev, se_dev) = estimate_payoff(spec, &dev_ens, t_step, 0);
        gaps.push(j_eq - j_dev);
        paired_se = (se_eq * se_eq + se_dev * se_dev).sqrt();
    }

    let pf = real_usize::<T>(pivots);
    let gap = gaps.iter().copied().sum::<T>() / pf;
    let se = if pivots >= 2 {
        let ss = gaps.iter().map(|&g| (g - gap) * (g - gap)).sum::<T>() / (pf - T::one());
        (ss / pf).sqrt()
    } else {
        paired_se
    };
    let window = real_usize::<T>(until - t_step) * sol.grid().dt();
    let threshold = -(cfg.epsilon * window + crate::scalar::real::<T>(3.0) * se);
    Ok(DeviationReport {
        gap,
        se,
        window,
        threshold,
        pass: gap >= threshold,
    })
}
