use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::measure::EmpiricalMeasure;
use crate::model::spec::GameSpec;
use crate::scalar::Real;

/// Inputs available to the interaction functional fed into an explicit
/// maximiser: the full cross-player rows of the current sweep.
pub struct AlephInput<'a, T> {
    pub t: T,
    pub player: usize,
    pub states: &'a [T],
    pub z: &'a [Vec<T>],
    pub zm: &'a [Vec<T>],
    pub zn: &'a [T],
}

/// Interaction functional `AlephInput -> real`; defaults to zero when absent.
pub type AlephFn<T> = Arc<dyn for<'a> Fn(&AlephInput<'a, T>) -> T + Send + Sync>;

/// Arguments of one player's Hamiltonian at a single (time, path) point.
///
/// `others` is the full control vector; the entry of `player` is ignored and
/// replaced by `control` wherever the candidate enters.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianInput<'a, T> {
    pub t: T,
    pub player: usize,
    pub states: &'a [T],
    pub z_row: &'a [T],
    pub m_star: T,
    pub n_star: T,
    pub zm_row: &'a [T],
    pub zn_row: &'a [T],
    pub control: T,
    pub others: &'a [T],
    /// Value of the interaction functional, forwarded to the explicit
    /// maximiser when one is configured. Zero when unused.
    pub aleph: T,
}

impl<'a, T: Real> HamiltonianInput<'a, T> {
    fn validate(&self, spec: &GameSpec<T>) -> Result<()> {
        let n = spec.num_players();
        if self.states.len() != n
            || self.z_row.len() != n
            || self.zm_row.len() != n
            || self.zn_row.len() != n
            || self.others.len() != n
            || self.player >= n
        {
            return Err(Error::DimensionMismatch(format!(
                "expected {} players, got states={} z={} zm={} zn={} controls={} player={}",
                n,
                self.states.len(),
                self.z_row.len(),
                self.zm_row.len(),
                self.zn_row.len(),
                self.others.len(),
                self.player
            )));
        }
        Ok(())
    }

    fn base_law(&self) -> EmpiricalMeasure<T> {
        let atoms = self
            .states
            .iter()
            .zip(self.others.iter())
            .map(|(&x, &a)| (x, a))
            .collect();
        EmpiricalMeasure::new(atoms).expect("players >= 1")
    }
}

/// Part of the Hamiltonian that varies with the candidate control: the own
/// reward-plus-drift term and, when the drift reads the law, the
/// cross-player drift terms.
fn control_dependent_value<T: Real>(
    spec: &GameSpec<T>,
    input: &HamiltonianInput<T>,
    law: &mut EmpiricalMeasure<T>,
    a: T,
) -> T {
    let i = input.player;
    let x_i = input.states[i];
    law.set_atom(i, x_i, a);
    let mut value = (spec.running_f)(input.t, x_i, law, a)
        + input.z_row[i] * (spec.drift_b)(input.t, x_i, law, a);
    if spec.drift_law_dependent() {
        for (l, (&x_l, &e_l)) in input.states.iter().zip(input.others.iter()).enumerate() {
            if l != i {
                value = value + input.z_row[l] * (spec.drift_b)(input.t, x_l, law, e_l);
            }
        }
    }
    value
}

/// Part independent of the candidate: the quadratic martingale penalties
/// and, for law-independent drifts, the cross-player drift terms.
fn control_free_value<T: Real>(
    spec: &GameSpec<T>,
    input: &HamiltonianInput<T>,
    law: &EmpiricalMeasure<T>,
) -> T {
    let half = crate::scalar::real::<T>(0.5);
    let dmm = (spec.big_g.dmm)(input.m_star, input.n_star);
    let dmn = (spec.big_g.dmn)(input.m_star, input.n_star);
    let dnn = (spec.big_g.dnn)(input.m_star, input.n_star);
    let mut sum_mm = T::zero();
    let mut sum_mn = T::zero();
    let mut sum_nn = T::zero();
    for l in 0..input.zm_row.len() {
        sum_mm += input.zm_row[l] * input.zm_row[l];
        sum_mn += input.zm_row[l] * input.zn_row[l];
        sum_nn += input.zn_row[l] * input.zn_row[l];
    }
    let mut value = -half * dmm * sum_mm - dmn * sum_mn - half * dnn * sum_nn;
    if !spec.drift_law_dependent() {
        let i = input.player;
        for (l, (&x_l, &e_l)) in input.states.iter().zip(input.others.iter()).enumerate() {
            if l != i {
                value = value + input.z_row[l] * (spec.drift_b)(input.t, x_l, law, e_l);
            }
        }
    }
    value
}

/// One player's Hamiltonian: reward plus drift terms evaluated at the
/// empirical law with the candidate control patched in, minus the quadratic
/// penalties from the second derivatives of `G`.
pub fn hamiltonian_i<T: Real>(spec: &GameSpec<T>, input: &HamiltonianInput<T>) -> Result<T> {
    input.validate(spec)?;
    let mut law = input.base_law();
    let a_part = control_dependent_value(spec, input, &mut law, input.control);
    let free_part = control_free_value(spec, input, &law);
    let value = a_part + free_part;
    if !value.is_finite() {
        return Err(Error::NonFinite("hamiltonian"));
    }
    Ok(value)
}

/// Maximising control of one player's Hamiltonian.
///
/// Uses the explicit maximiser when the spec provides one, otherwise scans
/// the control grid; ties break toward the smaller control. The result
/// always lies in the control interval.
pub fn argmax_control<T: Real>(spec: &GameSpec<T>, input: &HamiltonianInput<T>) -> Result<T> {
    input.validate(spec)?;
    if let Some(lambda) = &spec.lambda_max {
        let i = input.player;
        let state_law = EmpiricalMeasure::from_states(input.states)?;
        let a = lambda(
            input.t,
            input.states[i],
            &state_law,
            input.z_row[i],
            input.zm_row[i],
            input.zn_row[i],
            input.aleph,
        );
        return Ok(spec.control_set.project(a));
    }
    let mut law = input.base_law();
    let mut best_a = spec.control_set.lower();
    let mut best_v = T::neg_infinity();
    for a in spec.control_set.grid() {
        let v = control_dependent_value(spec, input, &mut law, a);
        if v > best_v {
            best_v = v;
            best_a = a;
        }
    }
    if !best_v.is_finite() {
        return Err(Error::NonFinite("hamiltonian grid scan"));
    }
    Ok(best_a)
}

/// One player's optimality gap: `sup_a H^i(a) - H^i(control)`, the sup taken
/// over the control grid together with `control` itself. Nonnegative; zero
/// exactly when `control` maximises the Hamiltonian on the grid.
pub fn optimality_gap<T: Real>(spec: &GameSpec<T>, input: &HamiltonianInput<T>) -> Result<T> {
    input.validate(spec)?;
    let mut law = input.base_law();
    let at_chosen = control_dependent_value(spec, input, &mut law, input.control);
    let mut sup = at_chosen;
    for a in spec.control_set.grid() {
        let v = control_dependent_value(spec, input, &mut law, a);
        if v > sup {
            sup = v;
        }
    }
    if !sup.is_finite() {
        return Err(Error::NonFinite("hamiltonian grid scan"));
    }
    Ok(sup - at_chosen)
}

/// Full per-player rows of one sweep point, used to test membership in the
/// fixed-point set.
#[derive(Debug, Clone, Copy)]
pub struct HamiltonianSweepState<'a, T> {
    pub t: T,
    pub states: &'a [T],
    pub controls: &'a [T],
    pub z: &'a [Vec<T>],
    pub m_star: &'a [T],
    pub n_star: &'a [T],
    pub zm: &'a [Vec<T>],
    pub zn: &'a [T],
}

/// Worst per-player optimality gap of a control vector:
/// `max_i [ sup_a H^i(a) - H^i(e^i) ]` with the sup taken over the control
/// grid together with `e^i` itself, so the result is nonnegative and
/// vanishes exactly when every component maximises its own Hamiltonian on
/// the grid.
pub fn fixed_point_residual<T: Real>(
    spec: &GameSpec<T>,
    state: &HamiltonianSweepState<T>,
) -> Result<T> {
    let n = spec.num_players();
    if state.controls.len() != n || state.z.len() != n || state.zm.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "expected {} players in sweep state",
            n
        )));
    }
    let mut worst = T::zero();
    for i in 0..n {
        let input = HamiltonianInput {
            t: state.t,
            player: i,
            states: state.states,
            z_row: &state.z[i],
            m_star: state.m_star[i],
            n_star: state.n_star[i],
            zm_row: &state.zm[i],
            zn_row: state.zn,
            control: state.controls[i],
            others: state.controls,
            aleph: T::zero(),
        };
        let gap = optimality_gap(spec, &input)?;
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::control::ControlSet;
    use crate::model::spec::GFunction;

    fn quadratic_spec(grid_points: usize) -> GameSpec<f64> {
        // f = -a^2, b = a: concave driver with maximiser z/2.
        GameSpec::builder(2)
            .sigma(|_, _| 1.0)
            .drift(|_, _, _, a| a)
            .running(|_, _, _, a| -a * a)
            .control_set(ControlSet::new(-1.0, 1.0, grid_points).unwrap())
            .horizon(1.0)
            .drift_law_dependent(false)
            .build()
            .unwrap()
    }

    fn input<'a>(
        states: &'a [f64],
        z_row: &'a [f64],
        zm_row: &'a [f64],
        zn_row: &'a [f64],
        others: &'a [f64],
        control: f64,
    ) -> HamiltonianInput<'a, f64> {
        HamiltonianInput {
            t: 0.0,
            player: 0,
            states,
            z_row,
            m_star: 0.0,
            n_star: 0.0,
            zm_row,
            zn_row,
            control,
            others,
            aleph: 0.0,
        }
    }

    #[test]
    fn zero_z_blocks_leave_only_running_reward() {
        let spec = GameSpec::<f64>::builder(2)
            .sigma(|_, _| 1.0)
            .drift(|_, _, _, a| a)
            .running(|_, _, _, a| 3.0 - a * a)
            .big_g(GFunction::half_gamma_m_squared(2.0))
            .control_set(ControlSet::new(-1.0, 1.0, 5).unwrap())
            .horizon(1.0)
            .build()
            .unwrap();
        let z = [0.0, 0.0];
        let h = hamiltonian_i(&spec, &input(&[0.0, 0.0], &z, &z, &z, &[0.5, 0.5], 0.5)).unwrap();
        assert!((h - (3.0 - 0.25)).abs() < 1e-14);
    }

    #[test]
    fn quadratic_penalty_enters_with_its_own_sign() {
        // dmm = gamma, zm = (sigma, 0): the penalty is -gamma sigma^2 / 2.
        let spec = GameSpec::<f64>::builder(2)
            .sigma(|_, _| 1.0)
            .drift(|_, _, _, a| a)
            .running(|_, _, _, _| 0.0)
            .big_g(GFunction::half_gamma_m_squared(0.8))
            .control_set(ControlSet::new(-1.0, 1.0, 5).unwrap())
            .horizon(1.0)
            .build()
            .unwrap();
        let sigma = 1.7;
        let z = [0.0, 0.0];
        let zm = [sigma, 0.0];
        let zn = [0.0, 0.0];
        let h = hamiltonian_i(&spec, &input(&[0.0, 0.0], &z, &zm, &zn, &[0.0, 0.0], 0.0)).unwrap();
        assert!((h - (-0.4 * sigma * sigma)).abs() < 1e-14);
    }

    #[test]
    fn grid_argmax_snaps_concave_maximiser_to_nearest_point() {
        // maximiser of -a^2 + z a is z/2 = 0.3; grid {-1,-0.5,0,0.5,1} -> 0.5.
        let spec = quadratic_spec(5);
        let z = [0.6, 0.0];
        let zeros = [0.0, 0.0];
        let inp = input(&[0.0, 0.0], &z, &zeros, &zeros, &[0.0, 0.0], 0.0);
        assert_eq!(argmax_control(&spec, &inp).unwrap(), 0.5);
    }

    #[test]
    fn argmax_matches_exhaustive_rescan_of_full_hamiltonian() {
        let spec = quadratic_spec(41);
        let mut rng = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            rng ^= rng << 13;
            rng ^= rng >> 7;
            rng ^= rng << 17;
            (rng >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
        };
        for _ in 0..100 {
            let states = [next(), next()];
            let z = [next() * 2.0, next() * 2.0];
            let zm = [next(), next()];
            let zn = [0.0, 0.0];
            let others = [next(), next()];
            let inp = input(&states, &z, &zm, &zn, &others, 0.0);
            let fast = argmax_control(&spec, &inp).unwrap();
            let mut best_a = f64::NEG_INFINITY;
            let mut best_v = f64::NEG_INFINITY;
            for a in spec.control_set.grid() {
                let mut candidate = inp;
                candidate.control = a;
                let v = hamiltonian_i(&spec, &candidate).unwrap();
                if v > best_v {
                    best_v = v;
                    best_a = a;
                }
            }
            assert_eq!(fast, best_a);
        }
    }

    #[test]
    fn residual_vanishes_at_argmax_sweep_and_flags_perturbations() {
        let spec = quadratic_spec(41);
        let states = [0.2, -0.4];
        let z = vec![vec![0.6, 0.0], vec![0.0, 0.6]];
        let zm = vec![vec![0.0, 0.0], vec![0.0, 0.0]];
        let zn = vec![0.0, 0.0];
        let m = [0.0, 0.0];
        let nstar = [0.0, 0.0];
        let mut controls = vec![0.0, 0.0];
        for i in 0..2 {
            let inp = HamiltonianInput {
                t: 0.0,
                player: i,
                states: &states,
                z_row: &z[i],
                m_star: 0.0,
                n_star: 0.0,
                zm_row: &zm[i],
                zn_row: &zn,
                control: 0.0,
                others: &controls.clone(),
                aleph: 0.0,
            };
            controls[i] = argmax_control(&spec, &inp).unwrap();
        }
        let sweep = HamiltonianSweepState {
            t: 0.0,
            states: &states,
            controls: &controls,
            z: &z,
            m_star: &m,
            n_star: &nstar,
            zm: &zm,
            zn: &zn,
        };
        let r = fixed_point_residual(&spec, &sweep).unwrap();
        assert_eq!(r, 0.0);

        let perturbed = vec![controls[0] + 0.5, controls[1]];
        let sweep2 = HamiltonianSweepState {
            controls: &perturbed,
            ..sweep
        };
        assert!(fixed_point_residual(&spec, &sweep2).unwrap() > 0.0);
    }

    #[test]
    fn explicit_maximiser_takes_priority_and_is_projected() {
        let spec = GameSpec::<f64>::builder(2)
            .sigma(|_, _| 1.0)
            .drift(|_, _, _, a| a)
            .running(|_, _, _, a| -a * a)
            .lambda_max(|_, _, _, z, _, _, aleph| z + aleph)
            .control_set(ControlSet::new(-1.0, 1.0, 5).unwrap())
            .horizon(1.0)
            .build()
            .unwrap();
        let z = [0.8, 0.0];
        let zeros = [0.0, 0.0];
        let mut inp = input(&[0.0, 0.0], &z, &zeros, &zeros, &[0.0, 0.0], 0.0);
        inp.aleph = 0.1;
        assert!((argmax_control(&spec, &inp).unwrap() - 0.9).abs() < 1e-14);
        inp.aleph = 5.0;
        assert_eq!(argmax_control(&spec, &inp).unwrap(), 1.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = quadratic_spec(5);
        let z = [0.0];
        let zeros = [0.0];
        let inp = input(&[0.0], &z, &zeros, &zeros, &[0.0], 0.0);
        assert!(hamiltonian_i(&spec, &inp).is_err());
    }
}
