//! Backward solver for the value equation
//!
//! ```text
//! u_t + (sigma^2 / 2) u_xx - r u + tau (f(t) - u_x)^2 / 4 = 0,
//! u(t, 0) = 0,  u_x(t, L) = 0,  u(T, x) = tau uT(x)
//! ```
//!
//! with the intercept path `f` frozen. Each backward Euler step is a
//! nonlinear tridiagonal system solved by damped Newton. The gradient inside
//! the Hamiltonian is upwinded by the sign of the extraction drift
//! `(f - u_x) / 2`: backward differences where producers extract, forward
//! differences where the drift is negative, and zero where both one-sided
//! drifts vanish. The Neumann end uses a reflected ghost node.

use crate::error::{Error, Result};
use crate::grid::{Discretization, Field, Grid, ScalarPath};
use crate::params::ModelParams;
use crate::tridiag;

/// Number of step halvings tried before a Newton update is taken as is.
const MAX_HALVINGS: usize = 10;

/// Upwinded Hamiltonian at one node from the two one-sided slopes.
///
/// Returns `(H, dH/d(backward slope), dH/d(forward slope))`.
#[inline]
pub fn upwind_hamiltonian(f: f64, slope_back: f64, slope_fwd: f64) -> (f64, f64, f64) {
    let g_back = 0.5 * (f - slope_back);
    let g_fwd = 0.5 * (f - slope_fwd);
    let extract = g_back.max(0.0);
    let inject = (-g_fwd).max(0.0);
    if extract >= inject {
        (extract * extract, -extract, 0.0)
    } else {
        (inject * inject, 0.0, inject)
    }
}

/// One backward-Euler HJB step with fixed coefficients.
#[derive(Debug, Clone)]
pub struct HjbScheme<'g> {
    grid: &'g Grid,
    half_sigma2: f64,
    r: f64,
    /// Multiplier of the Hamiltonian (the homotopy parameter tau).
    scale: f64,
    newton_tol: f64,
    newton_max: usize,
}

impl<'g> HjbScheme<'g> {
    pub fn new(params: &ModelParams, disc: &Discretization, grid: &'g Grid, tau: f64) -> Self {
        Self {
            grid,
            half_sigma2: 0.5 * params.sigma * params.sigma,
            r: params.r,
            scale: tau,
            newton_tol: disc.newton_tol,
            newton_max: disc.newton_max,
        }
    }

    /// Residual of the step equation at nodes `1..=nx`, optionally with
    /// the tridiagonal Jacobian `(lower, diag, upper)`.
    fn assemble(
        &self,
        u: &[f64],
        u_next: &[f64],
        f_n: f64,
        source: Option<&[f64]>,
        jacobian: Option<(&mut [f64], &mut [f64], &mut [f64])>,
    ) -> Vec<f64> {
        let n = self.grid.nx;
        let dx = self.grid.dx;
        let dt = self.grid.dt;
        let diff = self.half_sigma2 / (dx * dx);
        let mut res = vec![0.0; n];
        let mut jac = jacobian;
        for i in 1..=n {
            let left = u[i - 1];
            let right = if i < n { u[i + 1] } else { u[n - 1] };
            let ui = u[i];
            let (h, dh_back, dh_fwd) = upwind_hamiltonian(f_n, (ui - left) / dx, (right - ui) / dx);
            let s = source.map_or(0.0, |s| s[i]);
            res[i - 1] = (u_next[i] - ui) / dt + diff * (left - 2.0 * ui + right) - self.r * ui
                + self.scale * h
                + s;

            if let Some((lower, diag, upper)) = jac.as_mut() {
                let d_left = diff - self.scale * dh_back / dx;
                let d_right = diff + self.scale * dh_fwd / dx;
                diag[i - 1] = -1.0 / dt - 2.0 * diff - self.r
                    + self.scale * (dh_back - dh_fwd) / dx;
                if i > 1 {
                    lower[i - 2] = d_left;
                }
                if i < n {
                    upper[i - 1] = d_right;
                } else {
                    // ghost u_{n+1} = u_{n-1}
                    lower[n - 2] = d_left + d_right;
                }
            }
        }
        res
    }

    /// Step residual (max norm) of a candidate earlier slice.
    pub fn residual_norm(&self, u: &[f64], u_next: &[f64], f_n: f64, source: Option<&[f64]>) -> f64 {
        max_abs(&self.assemble(u, u_next, f_n, source, None))
    }

    /// Solves for the slice one step earlier than `u_next`.
    pub fn step(&self, u_next: &[f64], f_n: f64, source: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.grid.nx;
        assert_eq!(u_next.len(), n + 1);
        let mut u = u_next.to_vec();
        u[0] = 0.0;
        let mut lower = vec![0.0; n - 1];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n - 1];

        let mut res = self.assemble(&u, u_next, f_n, source, Some((&mut lower, &mut diag, &mut upper)));
        let mut res_norm = max_abs(&res);
        for _ in 0..self.newton_max {
            res.iter_mut().for_each(|v| *v = -*v);
            let delta = tridiag::solve(&lower, &diag, &upper, &res)?;
            let update = max_abs(&delta);

            let mut lambda = 1.0;
            let mut trial = u.clone();
            for halving in 0..=MAX_HALVINGS {
                for (t, (ui, d)) in trial[1..].iter_mut().zip(u[1..].iter().zip(&delta)) {
                    *t = ui + lambda * d;
                }
                res = self.assemble(&trial, u_next, f_n, source, Some((&mut lower, &mut diag, &mut upper)));
                let trial_norm = max_abs(&res);
                if trial_norm < res_norm || halving == MAX_HALVINGS || update <= self.newton_tol {
                    res_norm = trial_norm;
                    break;
                }
                lambda *= 0.5;
            }
            u = trial;
            if update <= self.newton_tol {
                return Ok(u);
            }
        }
        Err(Error::NewtonFailed {
            iterations: self.newton_max,
            residual: res_norm,
        })
    }

    /// Full backward sweep from `terminal`, using `f[n]` and the source row
    /// `n` when stepping from node `n + 1` to node `n`.
    pub fn sweep(&self, terminal: &[f64], f: &ScalarPath, source: Option<&Field>) -> Result<Field> {
        let grid = self.grid;
        if f.len() != grid.nt + 1 {
            return Err(Error::Shape(format!("f has {} nodes, grid has {}", f.len(), grid.nt + 1)));
        }
        if let Some(s) = source {
            s.check_grid(grid)?;
        }
        let mut u = Field::zeros(grid);
        let mut next = terminal.to_vec();
        next[0] = 0.0;
        u.set_slice(grid.nt, &next);
        for n in (0..grid.nt).rev() {
            let slice = self
                .step(&next, f[n], source.map(|s| s.slice(n)))
                .map_err(|e| Error::Step {
                    solver: "HJB",
                    node: n,
                    source: Box::new(e),
                })?;
            u.set_slice(n, &slice);
            next = slice;
        }
        Ok(u)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a: f64, x| a.max(x.abs()))
}

/// Value function for a frozen intercept path, with terminal data `tau uT`
/// and Hamiltonian scaled by `tau`.
pub fn solve_hjb(
    f: &ScalarPath,
    params: &ModelParams,
    disc: &Discretization,
    grid: &Grid,
    tau: f64,
) -> Result<Field> {
    if f.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("intercept path f is not finite".into()));
    }
    let terminal: Vec<f64> = params
        .terminal_value(grid)?
        .iter()
        .map(|v| tau * v)
        .collect();
    HjbScheme::new(params, disc, grid, tau).sweep(&terminal, f, None)
}
