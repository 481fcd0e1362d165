use crate::error::{Error, Result};
use crate::scalar::{real_usize, Real};

/// Compact control interval `[lower, upper]` with a uniform grid used for
/// Hamiltonian maximisation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSet<T> {
    lower: T,
    upper: T,
    grid_points: usize,
}

impl<T: Real> ControlSet<T> {
    pub fn new(lower: T, upper: T, grid_points: usize) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::InvalidSpec(format!(
                "control set requires lower < upper, got [{lower}, {upper}]"
            )));
        }
        if grid_points < 2 {
            return Err(Error::InvalidSpec(format!(
                "control grid needs at least 2 points, got {grid_points}"
            )));
        }
        if !lower.is_finite() || !upper.is_finite() {
            return Err(Error::InvalidSpec("control bounds must be finite".into()));
        }
        Ok(Self {
            lower,
            upper,
            grid_points,
        })
    }

    /// Symmetric interval `[-bound, bound]`.
    pub fn symmetric(bound: T, grid_points: usize) -> Result<Self> {
        Self::new(-bound, bound, grid_points)
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    pub fn grid_points(&self) -> usize {
        self.grid_points
    }

    /// Projection onto the interval (clamp). Idempotent and 1-Lipschitz.
    #[inline]
    pub fn project(&self, a: T) -> T {
        if a < self.lower {
            self.lower
        } else if a > self.upper {
            self.upper
        } else {
            a
        }
    }

    /// Uniform grid spacing.
    pub fn spacing(&self) -> T {
        (self.upper - self.lower) / real_usize::<T>(self.grid_points - 1)
    }

    /// The `i`-th grid point; endpoints included.
    #[inline]
    pub fn grid_point(&self, i: usize) -> T {
        debug_assert!(i < self.grid_points);
        if i + 1 == self.grid_points {
            self.upper
        } else {
            self.lower + self.spacing() * real_usize::<T>(i)
        }
    }

    pub fn grid(&self) -> impl Iterator<Item = T> + '_ {
        (0..self.grid_points).map(move |i| self.grid_point(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set() -> ControlSet<f64> {
        ControlSet::new(-2.0, 2.0, 5).unwrap()
    }

    #[test]
    fn projection_clamps_at_boundaries() {
        assert_eq!(set().project(3.0), 2.0);
        assert_eq!(set().project(0.5), 0.5);
        assert_eq!(set().project(-5.0), -2.0);
    }

    #[test]
    fn projection_is_idempotent() {
        let cs = set();
        for a in [-10.0, -2.0, -0.3, 0.0, 1.9, 2.0, 7.0] {
            assert_eq!(cs.project(cs.project(a)), cs.project(a));
        }
    }

    #[test]
    fn grid_covers_endpoints_uniformly() {
        let pts: Vec<f64> = set().grid().collect();
        assert_eq!(pts, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
    }

    #[test]
    fn rejects_degenerate_intervals() {
        assert!(ControlSet::new(1.0, 1.0, 5).is_err());
        assert!(ControlSet::new(-1.0, 1.0, 1).is_err());
    }
}
