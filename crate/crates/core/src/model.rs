//! Pointwise economics of the market: demand coefficients, the effective
//! demand intercept, the Hamiltonian and the extraction drift.
//!
//! With remaining mass `eta` and aggregate `Q = int u_x m dx`, every producer
//! faces the same intercept `f = a(eta) + c(eta) pbar`. Solvers only ever use
//! the division-free form `f = (2 + eps Q) / (2 + eps eta)`; the market price
//! `pbar` itself is a diagnostic, undefined once the market is empty.

use crate::error::{Error, Result};
use crate::grid::{gradient, trapezoid, Field, Grid, ScalarPath};

/// Below this mass the market price is not reported.
pub const ETA_FLOOR: f64 = 1e-10;

fn check_eta(eta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&eta) {
        Ok(())
    } else {
        Err(Error::Domain(format!("remaining mass eta = {eta} outside [0, 1]")))
    }
}

/// Own-price demand intercept `a(eta) = 1 / (1 + eps eta)`.
pub fn coeff_a(eta: f64, epsilon: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(1.0 / (1.0 + epsilon * eta))
}

/// Cross-price coefficient `c(eta) = eps eta / (1 + eps eta)`.
pub fn coeff_c(eta: f64, epsilon: f64) -> Result<f64> {
    check_eta(eta)?;
    Ok(1.0 - coeff_a(eta, epsilon)?)
}

/// Effective intercept `a + c pbar`, written without dividing by `eta`.
pub fn intercept_f(eta: f64, q: f64, epsilon: f64) -> f64 {
    (2.0 + epsilon * q) / (2.0 + epsilon * eta)
}

/// Market price `pbar = (a + Q / eta) / (2 - c)`; `None` below [`ETA_FLOOR`].
pub fn market_price(eta: f64, q: f64, epsilon: f64) -> Option<f64> {
    if !(eta >= ETA_FLOOR) {
        return None;
    }
    let a = 1.0 / (1.0 + epsilon * eta);
    // 1 - a cancels badly for small eps * eta
    let c = epsilon * eta * a;
    Some((a + q / eta) / (2.0 - c))
}

/// `H = (f - u_x)^2 / 4`.
#[inline]
pub fn hamiltonian(f: f64, ux: f64) -> f64 {
    let g = drift(f, ux);
    g * g
}

/// Optimal extraction rate `G = (f - u_x) / 2`.
#[inline]
pub fn drift(f: f64, ux: f64) -> f64 {
    0.5 * (f - ux)
}

/// Nash price `p* = (f + u_x) / 2`.
#[inline]
pub fn equilibrium_price(f: f64, ux: f64) -> f64 {
    0.5 * (f + ux)
}

/// Time paths derived from a `(u, m)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingPaths {
    pub eta: ScalarPath,
    pub q: ScalarPath,
    pub f: ScalarPath,
    pub pbar: Vec<Option<f64>>,
}

/// `eta = int m`, `Q = int u_x m`, `f` and `pbar` at every time node.
pub fn coupling_paths(u: &Field, m: &Field, grid: &Grid, epsilon: f64) -> Result<CouplingPaths> {
    u.check_grid(grid)?;
    m.check_grid(grid)?;
    let nt = grid.nt;
    let mut eta = Vec::with_capacity(nt + 1);
    let mut q = Vec::with_capacity(nt + 1);
    let mut weighted = vec![0.0; grid.nx + 1];
    for n in 0..=nt {
        let m_n = m.slice(n);
        let ux = gradient(u.slice(n), grid.dx);
        for ((w, d), mi) in weighted.iter_mut().zip(&ux).zip(m_n) {
            *w = d * mi;
        }
        eta.push(trapezoid(m_n, grid.dx));
        q.push(trapezoid(&weighted, grid.dx));
    }
    let f = eta
        .iter()
        .zip(&q)
        .map(|(&e, &qq)| intercept_f(e, qq, epsilon))
        .collect();
    let pbar = eta
        .iter()
        .zip(&q)
        .map(|(&e, &qq)| market_price(e, qq, epsilon))
        .collect();
    Ok(CouplingPaths {
        eta: ScalarPath(eta),
        q: ScalarPath(q),
        f: ScalarPath(f),
        pbar,
    })
}
