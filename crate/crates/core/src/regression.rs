//! Global polynomial ridge regression, the conditional-expectation estimator
//! of the backward solvers (Longstaff–Schwartz style).
//!
//! Columns other than the intercept are standardised before solving and
//! near-constant columns are dropped, so degenerate designs (all paths at the
//! same state, as at the initial step) fall back to the sample mean instead
//! of a shrunk intercept.

use crate::error::{Error, Result};
use crate::scalar::{real, real_usize, Real};

/// Condition-number ceiling beyond which the solve refuses.
const CONDITION_LIMIT: f64 = 1e10;
/// Relative column spread below which a feature is treated as constant.
const DEGENERATE_COLUMN: f64 = 1e-12;

/// Polynomial basis in the own state and the cross-player mean state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressionBasis<T> {
    degree: usize,
    ridge: T,
}

impl<T: Real> RegressionBasis<T> {
    pub fn new(degree: usize, ridge: T) -> Result<Self> {
        if degree > 3 {
            return Err(Error::InvalidSpec(format!(
                "basis degree must be 0..=3, got {degree}"
            )));
        }
        if ridge < T::zero() {
            return Err(Error::InvalidSpec("ridge must be nonnegative".into()));
        }
        Ok(Self { degree, ridge })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn ridge(&self) -> T {
        self.ridge
    }

    /// Number of pair features: monomials `x^a xbar^b` with `a + b <= degree`.
    pub fn pair_len(&self) -> usize {
        (self.degree + 1) * (self.degree + 2) / 2
    }

    /// Number of single-state features: `1, x, ..., x^degree`.
    pub fn single_len(&self) -> usize {
        self.degree + 1
    }

    /// Writes the pair features of one observation into `out`.
    pub fn pair_features(&self, x: T, xbar: T, out: &mut Vec<T>) {
        out.clear();
        for total in 0..=self.degree {
            for a in (0..=total).rev() {
                let b = total - a;
                out.push(x.powi(a as i32) * xbar.powi(b as i32));
            }
        }
    }

    /// Writes the single-state features of one observation into `out`.
    pub fn single_features(&self, x: T, out: &mut Vec<T>) {
        out.clear();
        for a in 0..=self.degree {
            out.push(x.powi(a as i32));
        }
    }
}

/// Result of one ridge fit. Coefficients are reported in the original
/// feature space (dropped columns get zero), so predictions are plain dot
/// products with raw features and fits can be blended linearly.
#[derive(Debug, Clone)]
pub struct RegressionFit<T> {
    pub coefficients: Vec<T>,
    pub fitted: Vec<T>,
    /// Standard errors of the coefficients, where defined.
    pub std_errors: Vec<T>,
    pub condition: f64,
}

impl<T: Real> RegressionFit<T> {
    pub fn predict(&self, features: &[T]) -> T {
        self.coefficients
            .iter()
            .zip(features.iter())
            .fold(T::zero(), |acc, (&c, &f)| acc + c * f)
    }
}

/// Ridge least squares of `targets` on a row-major design matrix whose
/// first column is the intercept. `rows * cols` must equal `design.len()`.
pub fn regress<T: Real>(
    design: &[T],
    rows: usize,
    cols: usize,
    targets: &[T],
    ridge: T,
) -> Result<RegressionFit<T>> {
    if rows * cols != design.len() || targets.len() != rows {
        return Err(Error::DimensionMismatch(format!(
            "design {}x{} with {} entries and {} targets",
            rows,
            cols,
            design.len(),
            targets.len()
        )));
    }
    if rows <= cols {
        return Err(Error::InvalidSpec(format!(
            "need more samples than basis functions: {rows} <= {cols}"
        )));
    }

    // Column statistics; column 0 is the intercept.
    let mut means = vec![T::zero(); cols];
    let mut sds = vec![T::zero(); cols];
    for j in 1..cols {
        let mut s = T::zero();
        for r in 0..rows {
            s += design[r * cols + j];
        }
        means[j] = s / real_usize(rows);
        let mut ss = T::zero();
        for r in 0..rows {
            let d = design[r * cols + j] - means[j];
            ss += d * d;
        }
        sds[j] = (ss / real_usize(rows)).sqrt();
    }
    let kept: Vec<usize> = (1..cols)
        .filter(|&j| sds[j] > real::<T>(DEGENERATE_COLUMN) * (T::one() + means[j].abs()))
        .collect();
    let b = kept.len() + 1; // intercept plus kept columns

    // Standardised Gram matrix and right-hand side.
    let z = |r: usize, jj: usize| -> T {
        if jj == 0 {
            T::one()
        } else {
            let j = kept[jj - 1];
            (design[r * cols + j] - means[j]) / sds[j]
        }
    };
    let mut gram = vec![T::zero(); b * b];
    let mut rhs = vec![T::zero(); b];
    for r in 0..rows {
        for p in 0..b {
            let zp = z(r, p);
            rhs[p] += zp * targets[r];
            for q in p..b {
                gram[p * b + q] += zp * z(r, q);
            }
        }
    }
    let mf = real_usize::<T>(rows);
    for p in 0..b {
        for q in p..b {
            let v = gram[p * b + q] / mf;
            gram[p * b + q] = v;
            gram[q * b + p] = v;
        }
        rhs[p] /= mf;
        gram[p * b + p] += ridge;
    }

    let chol = Cholesky::decompose(&gram, b).ok_or_else(|| Error::RankDeficient {
        condition: f64::INFINITY,
    })?;
    let condition = chol.condition_estimate(&gram);
    if condition > CONDITION_LIMIT {
        return Err(Error::RankDeficient { condition });
    }
    let mut coef_std = rhs.clone();
    chol.solve(&mut coef_std);

    // Back to the original feature space.
    let mut coefficients = vec![T::zero(); cols];
    let mut intercept = coef_std[0];
    for (jj, &j) in kept.iter().enumerate() {
        let c = coef_std[jj + 1] / sds[j];
        coefficients[j] = c;
        intercept = intercept - c * means[j];
    }
    coefficients[0] = intercept;

    let mut fitted = vec![T::zero(); rows];
    let mut rss = T::zero();
    for r in 0..rows {
        let mut v = T::zero();
        for p in 0..b {
            v += coef_std[p] * z(r, p);
        }
        fitted[r] = v;
        let e = targets[r] - v;
        rss += e * e;
        if !v.is_finite() {
            return Err(Error::NonFinite("regression fit"));
        }
    }

    // Coefficient standard errors from sigma^2 (Z'Z)^-1, mapped back.
    let dof = rows.saturating_sub(b).max(1);
    let sigma2 = rss / real_usize(dof);
    let mut std_errors = vec![T::zero(); cols];
    for p in 0..b {
        let mut e = vec![T::zero(); b];
        e[p] = T::one();
        chol.solve(&mut e);
        let var = sigma2 * e[p] / mf;
        let se = var.max(T::zero()).sqrt();
        if p == 0 {
            std_errors[0] = se;
        } else {
            let j = kept[p - 1];
            std_errors[j] = se / sds[j];
        }
    }

    Ok(RegressionFit {
        coefficients,
        fitted,
        std_errors,
        condition,
    })
}

/// Dense lower-triangular Cholesky factor of a small SPD matrix.
struct Cholesky<T> {
    l: Vec<T>,
    n: usize,
}

impl<T: Real> Cholesky<T> {
    fn decompose(a: &[T], n: usize) -> Option<Self> {
        let mut l = vec![T::zero(); n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if s <= T::zero() {
                        return None;
                    }
                    l[i * n + i] = s.sqrt();
                } else {
                    l[i * n + j] = s / l[j * n + j];
                }
            }
        }
        Some(Self { l, n })
    }

    fn solve(&self, rhs: &mut [T]) {
        let n = self.n;
        for i in 0..n {
            let mut s = rhs[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * rhs[k];
            }
            rhs[i] = s / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = rhs[i];
            for k in i + 1..n {
                s = s - self.l[k * n + i] * rhs[k];
            }
            rhs[i] = s / self.l[i * n + i];
        }
    }

    /// Largest/smallest eigenvalue ratio via power and inverse iteration.
    fn condition_estimate(&self, a: &[T]) -> f64 {
        let n = self.n;
        if n == 1 {
            return 1.0;
        }
        let mut v = vec![T::one(); n];
        let mut lambda_max = T::one();
        for _ in 0..30 {
            let mut w = vec![T::zero(); n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += a[i * n + j] * v[j];
                }
            }
            let norm = w.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
            if norm == T::zero() {
                break;
            }
            lambda_max = norm;
            for i in 0..n {
                v[i] = w[i] / norm;
            }
        }
        let mut u = vec![T::one(); n];
        let mut inv_norm = T::one();
        for _ in 0..30 {
            let mut w = u.clone();
            self.solve(&mut w);
            let norm = w.iter().fold(T::zero(), |acc, &x| acc + x * x).sqrt();
            if norm == T::zero() {
                break;
            }
            inv_norm = norm;
            for i in 0..n {
                u[i] = w[i] / norm;
            }
        }
        let lambda_min = T::one() / inv_norm;
        (lambda_max / lambda_min).to_f64().unwrap_or(f64::INFINITY)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn design_from(features: &[Vec<f64>]) -> (Vec<f64>, usize, usize) {
        let rows = features.len();
        let cols = features[0].len();
        let mut flat = Vec::with_capacity(rows * cols);
        for r in features {
            flat.extend_from_slice(r);
        }
        (flat, rows, cols)
    }

    #[test]
    fn target_in_span_is_reproduced_exactly() {
        let basis = RegressionBasis::new(2, 0.0).unwrap();
        let xs: Vec<f64> = (0..64).map(|i| -1.0 + i as f64 / 32.0).collect();
        let mut rows = Vec::new();
        let mut buf = Vec::new();
        for &x in &xs {
            basis.single_features(x, &mut buf);
            rows.push(buf.clone());
        }
        let (flat, m, b) = design_from(&rows);
        // target = x exactly
        let fit = regress(&flat, m, b, &xs, 0.0).unwrap();
        for (f, x) in fit.fitted.iter().zip(xs.iter()) {
            assert!((f - x).abs() < 1e-10);
        }
        // target = x^2 exactly
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let fit = regress(&flat, m, b, &sq, 0.0).unwrap();
        for (f, y) in fit.fitted.iter().zip(sq.iter()) {
            assert!((f - y).abs() < 1e-10);
        }
    }

    #[test]
    fn noisy_slope_is_recovered_within_three_se() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let m = 10_000;
        let mut flat = Vec::with_capacity(2 * m);
        let mut y = Vec::with_capacity(m);
        for _ in 0..m {
            let x: f64 = rng.sample::<f64, _>(StandardNormal);
            let eps: f64 = rng.sample::<f64, _>(StandardNormal);
            flat.push(1.0);
            flat.push(x);
            y.push(2.0 * x + eps);
        }
        let fit = regress(&flat, m, 2, &y, 0.0).unwrap();
        let slope = fit.coefficients[1];
        let se = fit.std_errors[1];
        assert!(se > 0.0 && se < 0.05);
        assert!((slope - 2.0).abs() <= 3.0 * se, "slope {slope} se {se}");
    }

    #[test]
    fn degenerate_column_falls_back_to_sample_mean() {
        // Every x identical: the fit must return the target mean, not a
        // ridge-shrunk value.
        let m = 32;
        let mut flat = Vec::new();
        for _ in 0..m {
            flat.extend_from_slice(&[1.0, 0.7, 0.49]);
        }
        let y: Vec<f64> = (0..m).map(|i| 3.0 + (i % 2) as f64).collect();
        let fit = regress(&flat, m, 3, &y, 1e-8).unwrap();
        let mean = y.iter().sum::<f64>() / m as f64;
        assert!((fit.coefficients[0] + 0.7 * fit.coefficients[1] - mean).abs() < 1e-12);
        assert_eq!(fit.coefficients[1], 0.0);
        assert_eq!(fit.coefficients[2], 0.0);
    }

    #[test]
    fn duplicated_column_without_ridge_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = 64;
        let mut flat = Vec::new();
        let mut y = Vec::new();
        for _ in 0..m {
            let x: f64 = rng.sample::<f64, _>(StandardNormal);
            flat.extend_from_slice(&[1.0, x, x]);
            y.push(x);
        }
        let err = regress(&flat, m, 3, &y, 0.0).unwrap_err();
        match err {
            Error::RankDeficient { condition } => assert!(condition > 1e10),
            other => panic!("unexpected error {other:?}"),
        }
        // A positive ridge makes the same design solvable.
        assert!(regress(&flat, m, 3, &y, 1e-6).is_ok());
    }

    #[test]
    fn pair_feature_count_matches_layout() {
        let basis = RegressionBasis::<f64>::new(2, 0.0).unwrap();
        let mut buf = Vec::new();
        basis.pair_features(2.0, 3.0, &mut buf);
        assert_eq!(buf.len(), basis.pair_len());
        assert_eq!(buf, vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn more_features_than_samples_is_refused() {
        let flat = vec![1.0f64; 6];
        assert!(regress(&flat, 2, 3, &[1.0, 2.0], 0.0).is_err());
    }
}
