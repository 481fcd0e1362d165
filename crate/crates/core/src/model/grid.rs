use crate::error::{Error, Result};
use crate::scalar::{real_usize, Real};

/// Uniform time grid `t_k = k T / n` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid<T> {
    horizon: T,
    steps: usize,
}

impl<T: Real> TimeGrid<T> {
    pub fn new(horizon: T, steps: usize) -> Result<Self> {
        if !(horizon > T::zero()) || !horizon.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidSpec("time grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    /// Number of steps `n`; the grid has `n + 1` nodes.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> T {
        self.horizon / real_usize::<T>(self.steps)
    }

    /// `t_k`, exact at both endpoints.
    #[inline]
    pub fn time(&self, k: usize) -> T {
        debug_assert!(k <= self.steps);
        if k == self.steps {
            self.horizon
        } else {
            self.dt() * real_usize::<T>(k)
        }
    }

    pub fn times(&self) -> impl Iterator<Item = T> + '_ {
        (0..=self.steps).map(move |k| self.time(k))
    }

    /// Index of a grid time, or an error if `t` is more than `dt * 1e-9`
    /// away from every node.
    pub fn index_of(&self, t: T) -> Result<usize> {
        let ratio = t / self.dt();
        let k = ratio.round();
        let tol = crate::scalar::real::<T>(1e-9);
        if (ratio - k).abs() > tol || k < T::zero() || k > real_usize(self.steps) {
            return Err(Error::OffGrid(t.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(k.to_usize().expect("grid index fits usize"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_uniform_and_hits_endpoints() {
        let g = TimeGrid::new(1.0f64, 4).unwrap();
        let ts: Vec<f64> = g.times().collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.dt(), 0.25);
    }

    #[test]
    fn index_lookup_rejects_off_grid_times() {
        let g = TimeGrid::new(1.0f64, 4).unwrap();
        assert_eq!(g.index_of(0.5).unwrap(), 2);
        assert!(g.index_of(0.3).is_err());
    }

    #[test]
    fn rejects_empty_grid() {
        assert!(TimeGrid::new(1.0f64, 0).is_err());
        assert!(TimeGrid::new(0.0f64, 3).is_err());
    }
}
