use crate::model::ControlSet;
use crate::regression::RegressionBasis;
use crate::scalar::{real_usize, Real};
use crate::sde::ControlField;

/// Feedback control field: per step and player, polynomial coefficients over
/// the pair features (own state, cross-player mean state), projected onto
/// the control set at evaluation time.
///
/// Coefficients live in the raw feature space, so damped Picard updates can
/// blend two policies coefficient-wise.
#[derive(Debug, Clone)]
pub struct ControlPolicy<T> {
    pub basis: RegressionBasis<T>,
    pub control_set: ControlSet<T>,
    /// `[step][player][feature]`.
    pub coefficients: Vec<Vec<Vec<T>>>,
}

impl<T: Real> ControlPolicy<T> {
    /// All-zero policy (the projected zero control).
    pub fn zero(
        basis: RegressionBasis<T>,
        control_set: ControlSet<T>,
        steps: usize,
        players: usize,
    ) -> Self {
        Self {
            basis,
            control_set,
            coefficients: vec![vec![vec![T::zero(); basis.pair_len()]; players]; steps],
        }
    }

    pub fn control(&self, step: usize, player: usize, x: T, xbar: T) -> T {
        let mut buf = Vec::with_capacity(self.basis.pair_len());
        self.basis.pair_features(x, xbar, &mut buf);
        let raw = self.coefficients[step][player]
            .iter()
            .zip(buf.iter())
            .fold(T::zero(), |acc, (&c, &f)| acc + c * f);
        self.control_set.project(raw)
    }

    /// `theta * new + (1 - theta) * self`, coefficient-wise.
    pub fn blend_from(&mut self, new: &Self, theta: T) {
        let one_minus = T::one() - theta;
        for (steps_old, steps_new) in self.coefficients.iter_mut().zip(new.coefficients.iter()) {
            for (c_old, c_new) in steps_old.iter_mut().zip(steps_new.iter()) {
                for (a, &b) in c_old.iter_mut().zip(c_new.iter()) {
                    *a = one_minus * *a + theta * b;
                }
            }
        }
    }
}

impl<T: Real> ControlField<T> for ControlPolicy<T> {
    fn evaluate(&self, step: usize, _t: T, states: &[T], out: &mut [T]) {
        let xbar = states.iter().copied().sum::<T>() / real_usize(states.len());
        let mut buf = Vec::with_capacity(self.basis.pair_len());
        for (i, o) in out.iter_mut().enumerate() {
            self.basis.pair_features(states[i], xbar, &mut buf);
            let raw = self.coefficients[step][i]
                .iter()
                .zip(buf.iter())
                .fold(T::zero(), |acc, (&c, &f)| acc + c * f);
            *o = self.control_set.project(raw);
        }
    }
}

/// A base policy with one player's control overridden by a constant on a
/// window of steps; the spike deviation of the equilibrium test.
pub struct SpikedPolicy<'a, T> {
    pub base: &'a ControlPolicy<T>,
    pub player: usize,
    pub from_step: usize,
    pub until_step: usize,
    pub control: T,
}

impl<'a, T: Real> ControlField<T> for SpikedPolicy<'a, T> {
    fn evaluate(&self, step: usize, t: T, states: &[T], out: &mut [T]) {
        self.base.evaluate(step, t, states, out);
        if step >= self.from_step && step < self.until_step {
            out[self.player] = self.base.control_set.project(self.control);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blending_is_linear_in_coefficients() {
        let basis = RegressionBasis::new(1, 0.0).unwrap();
        let cs = ControlSet::symmetric(10.0, 5).unwrap();
        let mut a = ControlPolicy::zero(basis, cs, 2, 1);
        let mut b = ControlPolicy::zero(basis, cs, 2, 1);
        a.coefficients[0][0] = vec![1.0, 2.0];
        b.coefficients[0][0] = vec![3.0, 6.0];
        a.blend_from(&b, 0.5);
        assert_eq!(a.coefficients[0][0], vec![2.0, 4.0]);
        assert_eq!(a.control(0, 0, 1.0, 1.0), 6.0);
    }

    #[test]
    fn spike_overrides_only_its_window() {
        let basis = RegressionBasis::new(0, 0.0).unwrap();
        let cs = ControlSet::symmetric(1.0, 5).unwrap();
        let base = ControlPolicy::zero(basis, cs, 4, 2);
        let spiked = SpikedPolicy {
            base: &base,
            player: 1,
            from_step: 1,
            until_step: 3,
            control: 0.7,
        };
        let mut out = vec![0.0; 2];
        for step in 0..4 {
            spiked.evaluate(step, 0.0, &[0.0, 0.0], &mut out);
            let expect = if (1..3).contains(&step) { 0.7 } else { 0.0 };
            assert_eq!(out[1], expect, "step {step}");
            assert_eq!(out[0], 0.0);
        }
    }
}
