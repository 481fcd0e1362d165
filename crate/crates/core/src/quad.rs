//! Composite Simpson quadrature.

use crate::scalar::{real, real_usize, Real};

/// Integrates `f` over `[a, b]` with `panels` Simpson panels (fourth-order).
/// `panels` is rounded up to at least one.
pub fn simpson<T: Real>(f: impl Fn(T) -> T, a: T, b: T, panels: usize) -> T {
    if a == b {
        return T::zero();
    }
    let panels = panels.max(1);
    let h = (b - a) / real_usize(panels);
    let half = h * real(0.5);
    let mut sum = f(a) + f(b);
    let four = real::<T>(4.0);
    let two = real::<T>(2.0);
    for j in 0..panels {
        let left = a + h * real_usize(j);
        sum = sum + four * f(left + half);
        if j > 0 {
            sum = sum + two * f(left);
        }
    }
    sum * h / real(6.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_polynomials_are_exact() {
        let v = simpson(|x: f64| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1);
        assert!((v - (4.0 - 4.0 + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn exponential_converges_at_fourth_order() {
        let exact = (1.0f64).exp() - 1.0;
        let e8 = (simpson(|x: f64| x.exp(), 0.0, 1.0, 8) - exact).abs();
        let e16 = (simpson(|x: f64| x.exp(), 0.0, 1.0, 16) - exact).abs();
        let ratio = e8 / e16;
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn empty_interval_is_zero() {
        assert_eq!(simpson(|x: f64| x.exp(), 1.5, 1.5, 16), 0.0);
    }
}
