//! Single-equation runs against closed-form solutions, and observed orders.
//!
//! * Value equation: `u = phi(t) sin(k x)` with `k = pi / (2L)`, intercept
//!   `f = 1`, and the source that makes it exact. With `phi = T - t` the
//!   backward Euler step has no time truncation error, so the error is
//!   purely spatial; `phi = exp(T - t) - 1` exposes the time error.
//! * Density equation: zero drift from `m0 = sin(k x)`, exact solution
//!   `exp(-sigma^2 k^2 t / 2) sin(k x)`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::Result;
use crate::fp;
use crate::grid::{Discretization, Field, Grid, ScalarPath};
use crate::hjb::HjbScheme;
use crate::model::hamiltonian;
use crate::params::ModelParams;

/// Max-norm error of one run and the reference bound `5 (dt + dx^2) scale`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorSample {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    pub error: f64,
    pub scale: f64,
    pub bound: f64,
}

impl ErrorSample {
    fn new(grid: &Grid, error: f64, scale: f64) -> Self {
        Self {
            nx: grid.nx,
            nt: grid.nt,
            dx: grid.dx,
            dt: grid.dt,
            error,
            scale,
            bound: 5.0 * (grid.dt + grid.dx * grid.dx) * scale,
        }
    }

    pub fn within_bound(&self) -> bool {
        self.error <= self.bound
    }
}

/// `log2(e_k / e_{k+1})` for consecutive dyadic levels.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

fn wavenumber(params: &ModelParams) -> f64 {
    0.5 * PI / params.length
}

fn sup_error(computed: &Field, exact: &Field) -> f64 {
    computed.sup_distance(exact)
}

/// Time factor of the manufactured value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeProfile {
    /// `T - t`
    Linear,
    /// `exp(T - t) - 1`
    Exponential,
}

impl TimeProfile {
    /// `(phi(t), phi'(t))`
    fn eval(self, t: f64, horizon: f64) -> (f64, f64) {
        match self {
            TimeProfile::Linear => (horizon - t, -1.0),
            TimeProfile::Exponential => {
                let e = (horizon - t).exp();
                (e - 1.0, -e)
            }
        }
    }

    fn max_abs(self, horizon: f64) -> f64 {
        self.eval(0.0, horizon).0.abs()
    }
}

/// Exact field `phi(t) sin(k x)` on `grid`.
pub fn manufactured_value(params: &ModelParams, grid: &Grid, profile: TimeProfile) -> Field {
    let k = wavenumber(params);
    let horizon = params.horizon;
    Field::from_fn(grid, |t, x| profile.eval(t, horizon).0 * (k * x).sin())
}

/// Source making [`manufactured_value`] solve the value equation with `f = 1`.
pub fn manufactured_source(params: &ModelParams, grid: &Grid, profile: TimeProfile) -> Field {
    let k = wavenumber(params);
    let half_sigma2 = 0.5 * params.sigma * params.sigma;
    let (horizon, r) = (params.horizon, params.r);
    Field::from_fn(grid, |t, x| {
        let (phi, dphi) = profile.eval(t, horizon);
        let s = (k * x).sin();
        let u = phi * s;
        let u_t = dphi * s;
        let u_x = phi * k * (k * x).cos();
        let u_xx = -k * k * u;
        -(u_t + half_sigma2 * u_xx - r * u + hamiltonian(1.0, u_x))
    })
}

/// Error of the value solver on the manufactured case; the scale is
/// `max |u|`.
pub fn hjb_manufactured(params: &ModelParams, nx: usize, nt: usize, profile: TimeProfile) -> Result<ErrorSample> {
    params.validate_scalars()?;
    let disc = Discretization::with_size(nx, nt);
    let grid = Grid::new(params.length, params.horizon, nx, nt)?;
    let exact = manufactured_value(params, &grid, profile);
    let source = manufactured_source(params, &grid, profile);
    let f = ScalarPath::constant(&grid, 1.0);
    let u = HjbScheme::new(params, &disc, &grid, 1.0).sweep(exact.slice(nt), &f, Some(&source))?;
    Ok(ErrorSample::new(&grid, sup_error(&u, &exact), profile.max_abs(params.horizon)))
}

/// Exact decaying mode `exp(-sigma^2 k^2 t / 2) sin(k x)` on `grid`.
pub fn eigenmode(params: &ModelParams, grid: &Grid) -> Field {
    let k = wavenumber(params);
    let rate = 0.5 * params.sigma * params.sigma * k * k;
    Field::from_fn(grid, |t, x| (-rate * t).exp() * (k * x).sin())
}

/// Error of the density solver with zero drift on the decaying mode.
pub fn fp_eigenfunction(params: &ModelParams, nx: usize, nt: usize) -> Result<ErrorSample> {
    params.validate_scalars()?;
    let grid = Grid::new(params.length, params.horizon, nx, nt)?;
    let exact = eigenmode(params, &grid);
    let m = fp::sweep(exact.slice(0), &Field::zeros(&grid), params.sigma, &grid)?;
    Ok(ErrorSample::new(&grid, sup_error(&m, &exact), 1.0))
}
