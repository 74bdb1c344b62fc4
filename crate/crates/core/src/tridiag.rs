//! Thomas elimination for tridiagonal and periodic (cyclic) tridiagonal systems.
//!
//! Both solvers assume diagonal dominance (by rows or by columns), which is
//! what the implicit viscous and velocity-space operators produce. Under that
//! assumption every pivot is positive, so a non-positive pivot is reported as
//! a breakdown instead of being pivoted around.

use crate::error::{Error, Result};

/// Solves `lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k]` in place.
///
/// `lower[0]` and `upper[n-1]` are ignored. `scratch` must have length `n`.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    scratch: &mut [f64],
    stage: &'static str,
) -> Result<()> {
    let n = rhs.len();
    debug_assert!(lower.len() == n && diag.len() == n && upper.len() == n && scratch.len() == n);
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag[0];
    if !(pivot > 0.0) {
        return Err(Error::SolverBreakdown { stage, row: 0, pivot });
    }
    scratch[0] = upper[0] / pivot;
    rhs[0] /= pivot;
    for k in 1..n {
        pivot = diag[k] - lower[k] * scratch[k - 1];
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::SolverBreakdown { stage, row: k, pivot });
        }
        scratch[k] = upper[k] / pivot;
        rhs[k] = (rhs[k] - lower[k] * rhs[k - 1]) / pivot;
    }
    for k in (0..n - 1).rev() {
        rhs[k] -= scratch[k] * rhs[k + 1];
    }
    Ok(())
}

/// Periodic variant: `lower[0]` couples row 0 to `x[n-1]` and `upper[n-1]`
/// couples row `n-1` to `x[0]`. Uses the Sherman-Morrison correction.
pub fn solve_cyclic_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &mut [f64],
    stage: &'static str,
) -> Result<()> {
    let n = rhs.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!(
            "cyclic tridiagonal system needs at least 3 rows, got {n}"
        )));
    }
    let alpha = upper[n - 1];
    let beta = lower[0];
    // gamma = -diag[0] keeps the modified diagonal away from cancellation.
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= alpha * beta / gamma;

    let mut scratch = vec![0.0; n];
    solve_tridiagonal(lower, &d, upper, rhs, &mut scratch, stage)?;

    let mut z = vec![0.0; n];
    z[0] = gamma;
    z[n - 1] = alpha;
    solve_tridiagonal(lower, &d, upper, &mut z, &mut scratch, stage)?;

    let num = rhs[0] + beta * rhs[n - 1] / gamma;
    let den = 1.0 + z[0] + beta * z[n - 1] / gamma;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::SolverBreakdown {
            stage,
            row: n - 1,
            pivot: den,
        });
    }
    let factor = num / den;
    for (x, zk) in rhs.iter_mut().zip(&z) {
        *x -= factor * zk;
    }
    Ok(())
}
