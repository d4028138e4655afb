//! Thomas algorithm for tridiagonal systems.

use crate::error::{Error, Result};

/// Solves `A x = rhs` where `A` has sub-diagonal `lower` (`lower[i]` sits
/// in row `i + 1`), main diagonal `diag` and super-diagonal `upper`
/// (`upper[i]` sits in row `i`).
///
/// No pivoting; intended for the diagonally dominant matrices produced by
/// the implicit schemes.
pub fn solve(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(n > 0 && rhs.len() == n && lower.len() + 1 == n && upper.len() + 1 == n);

    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot == 0.0 || !pivot.is_finite() {
        return Err(Error::Singular { row: 0 });
    }
    if n > 1 {
        c[0] = upper[0] / pivot;
    }
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Singular { row: i });
        }
        if i + 1 < n {
            c[i] = upper[i] / pivot;
        }
        d[i] = (rhs[i] - lower[i - 1] * d[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}
