use crate::error::{Error, Result};
use crate::scalar::{real_usize, Real};

/// Uniform-weight empirical measure over (state, control) atoms.
///
/// Laws over path space are reduced to the current state value, so an atom is
/// a pair of scalars. State-only laws carry zero in the control slot.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<T> {
    atoms: Vec<(T, T)>,
}

impl<T: Real> EmpiricalMeasure<T> {
    pub fn new(atoms: Vec<(T, T)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptyEnsemble);
        }
        Ok(Self { atoms })
    }

    /// Law of states only; control coordinates are set to zero.
    pub fn from_states(states: &[T]) -> Result<Self> {
        Self::new(states.iter().map(|&x| (x, T::zero())).collect())
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    /// Replaces atom `i`; used to patch a candidate control into a law
    /// without reallocating.
    pub(crate) fn set_atom(&mut self, i: usize, state: T, control: T) {
        self.atoms[i] = (state, control);
    }

    /// Mean of `f(state, control)` under the measure.
    pub fn mean_of(&self, f: impl Fn(T, T) -> T) -> T {
        let sum = self
            .atoms
            .iter()
            .map(|&(x, a)| f(x, a))
            .fold(T::zero(), |acc, v| acc + v);
        sum / real_usize(self.atoms.len())
    }

    pub fn mean_state(&self) -> T {
        self.mean_of(|x, _| x)
    }

    pub fn mean_control(&self) -> T {
        self.mean_of(|_, a| a)
    }

    pub fn states(&self) -> impl Iterator<Item = T> + '_ {
        self.atoms.iter().map(|&(x, _)| x)
    }

    pub fn controls(&self) -> impl Iterator<Item = T> + '_ {
        self.atoms.iter().map(|&(_, a)| a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom_is_a_dirac() {
        let m = EmpiricalMeasure::new(vec![(0.0f64, 0.3)]).unwrap();
        assert_eq!(m.mean_state(), 0.0);
        assert_eq!(m.mean_control(), 0.3);
    }

    #[test]
    fn duplicated_atoms_leave_moments_unchanged() {
        let one = EmpiricalMeasure::new(vec![(0.0f64, 0.3)]).unwrap();
        let two = EmpiricalMeasure::new(vec![(0.0, 0.3), (0.0, 0.3)]).unwrap();
        assert_eq!(one.mean_state(), two.mean_state());
        assert_eq!(one.mean_of(|x, a| x * x + a), two.mean_of(|x, a| x * x + a));
    }

    #[test]
    fn first_marginal_mean_is_arithmetic() {
        let m = EmpiricalMeasure::new(vec![(0.0f64, 0.0), (2.0, 0.0)]).unwrap();
        assert_eq!(m.mean_state(), 1.0);
    }

    #[test]
    fn empty_list_is_rejected() {
        assert!(matches!(
            EmpiricalMeasure::<f64>::new(vec![]),
            Err(Error::EmptyEnsemble)
        ));
    }
}
