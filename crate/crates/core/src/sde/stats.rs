//! Weighted ensemble statistics with jackknife standard errors.

use crate::error::{Error, Result};
use crate::scalar::{real_usize, Real};
use crate::sde::ensemble::PathEnsemble;

/// Statistic of one (player, step) marginal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Variance,
    SupNorm,
}

/// Weighted sample statistic plus jackknife standard error. Weights are
/// `exp(log_weight)` per path, so reference-measure ensembles estimate
/// tilted-measure quantities; tilted ensembles have unit weights and the
/// estimate reduces to the plain sample statistic.
pub fn moment_estimate<T: Real>(
    ens: &PathEnsemble<T>,
    statistic: Statistic,
    player: usize,
    step: usize,
) -> Result<(T, T)> {
    if player >= ens.num_players() || step > ens.grid().steps() {
        return Err(Error::DimensionMismatch(format!(
            "player {player} step {step} outside ensemble"
        )));
    }
    let m = ens.num_paths();
    let xs: Vec<T> = (0..m).map(|p| ens.state(p, player, step)).collect();
    let ws: Vec<T> = (0..m).map(|p| ens.log_weight(p).exp()).collect();
    let estimate = evaluate(statistic, &xs, &ws, None);
    if m < 2 {
        return Ok((estimate, T::zero()));
    }
    // Jackknife: leave-one-out replicates.
    let mut replicates = Vec::with_capacity(m);
    for j in 0..m {
        replicates.push(evaluate(statistic, &xs, &ws, Some(j)));
    }
    let mf = real_usize::<T>(m);
    let mean_rep = replicates.iter().copied().sum::<T>() / mf;
    let ss = replicates
        .iter()
        .map(|&r| (r - mean_rep) * (r - mean_rep))
        .sum::<T>();
    let se = ((mf - T::one()) / mf * ss).sqrt();
    Ok((estimate, se))
}

fn evaluate<T: Real>(statistic: Statistic, xs: &[T], ws: &[T], skip: Option<usize>) -> T {
    match statistic {
        Statistic::Mean => {
            let (sw, swx) = fold2(xs, ws, skip);
            swx / sw
        }
        Statistic::Variance => {
            let (sw, swx) = fold2(xs, ws, skip);
            let mean = swx / sw;
            let mut acc = T::zero();
            for (j, (&x, &w)) in xs.iter().zip(ws.iter()).enumerate() {
                if Some(j) != skip {
                    acc += w * (x - mean) * (x - mean);
                }
            }
            acc / sw
        }
        Statistic::SupNorm => {
            let mut sup = T::zero();
            for (j, &x) in xs.iter().enumerate() {
                if Some(j) != skip && x.abs() > sup {
                    sup = x.abs();
                }
            }
            sup
        }
    }
}

fn fold2<T: Real>(xs: &[T], ws: &[T], skip: Option<usize>) -> (T, T) {
    let mut sw = T::zero();
    let mut swx = T::zero();
    for (j, (&x, &w)) in xs.iter().zip(ws.iter()).enumerate() {
        if Some(j) != skip {
            sw += w;
            swx += w * x;
        }
    }
    (sw, swx)
}
