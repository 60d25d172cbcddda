//! Small least-squares fits shared by the kernel and decay experiments.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition numbers above this are reported as ill-conditioned.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub rms: f64,
    /// Ratio of extreme singular values of the column-scaled design matrix.
    pub condition: f64,
}

/// Least squares for `y ≈ Σ_k c_k basis_k(x)`, solved by SVD.
pub fn linear_least_squares(rows: &[Vec<f64>], y: &[f64]) -> Result<LinearFit> {
    let m = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    if m < n || n == 0 || y.len() != m {
        return Err(Error::IllConditionedFit(format!(
            "{m} samples for {n} unknowns"
        )));
    }
    let a = DMatrix::from_fn(m, n, |i, j| rows[i][j]);
    if a.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::IllConditionedFit("non-finite sample".into()));
    }
    // scale columns so the condition number reflects the fit, not the units
    let scales: Vec<f64> = (0..n)
        .map(|j| a.column(j).norm().max(f64::MIN_POSITIVE))
        .collect();
    let scaled = DMatrix::from_fn(m, n, |i, j| a[(i, j)] / scales[j]);
    let b = DVector::from_column_slice(y);
    let svd = scaled.clone().svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition > MAX_CONDITION {
        return Err(Error::IllConditionedFit(format!(
            "condition number {condition:e}"
        )));
    }
    let sol = svd
        .solve(&b, smax * 1e-14)
        .map_err(|e| Error::IllConditionedFit(e.to_string()))?;
    let coefficients: Vec<f64> = (0..n).map(|j| sol[j] / scales[j]).collect();
    let resid = &scaled * &sol - &b;
    Ok(LinearFit {
        coefficients,
        rms: (resid.norm_squared() / m as f64).sqrt(),
        condition,
    })
}

/// Ordinary straight-line fit `y ≈ c₀ + c₁ x`.
pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![1.0, v]).collect();
    linear_least_squares(&rows, y)
}

/// Golden-section minimisation of a unimodal `f` on `[lo, hi]`.
pub fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_quadratic() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![1.0, x, x * x]).collect();
        let y: Vec<f64> = xs.iter().map(|&x| 2.0 - 3.0 * x + 0.5 * x * x).collect();
        let fit = linear_least_squares(&rows, &y).unwrap();
        for (c, e) in fit.coefficients.iter().zip([2.0, -3.0, 0.5]) {
            assert!((c - e).abs() < 1e-12);
        }
        assert!(fit.rms < 1e-12);
    }

    #[test]
    fn rejects_degenerate_design() {
        let rows = vec![vec![1.0, 1.0]; 5];
        assert!(matches!(
            linear_least_squares(&rows, &[1.0; 5]),
            Err(Error::IllConditionedFit(_))
        ));
        assert!(linear_least_squares(&[vec![1.0, 2.0]], &[1.0]).is_err());
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let x = golden_min(|x| (x - 1.3).powi(2), 0.0, 2.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-8);
    }
}
