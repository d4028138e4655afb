//! Forward solver for the density equation
//!
//! ```text
//! m_t - (sigma^2 / 2) m_xx - (G m)_x = 0,
//! m(t, 0) = 0,  (sigma^2 / 2) m_x(t, L) + G m(t, L) = 0,  m(0, x) = tau m0(x)
//! ```
//!
//! in conservative form `m_t + F_x = 0` with flux `F = -(sigma^2/2) m_x - G m`.
//! The scheme is vertex-centred finite volumes: node `i` owns the cell
//! `[x_{i-1/2}, x_{i+1/2}]` (half a cell at `x = L`), the advective flux is
//! upwinded by the sign of the transport velocity `-G`, the flux through
//! `x = L` is zero, and mass reaching the Dirichlet node at `x = 0` leaves
//! the domain. Time stepping is backward Euler, so each step is one
//! tridiagonal M-matrix solve and preserves nonnegativity for any `dt`.
//!
//! Remaining mass is the trapezoid integral of the slice, which coincides
//! with the sum of cell masses; hence `eta_{n+1} - eta_n = -dt * outflow`
//! where `outflow` is [`boundary_outflow`] evaluated at the new slice.

use crate::error::{Error, Result};
use crate::grid::{gradient, Field, Grid, ScalarPath};
use crate::model::drift;
use crate::params::ModelParams;
use crate::tridiag;

/// Roundoff negatives above this magnitude are kept so scheme bugs show.
pub const CLIP_THRESHOLD: f64 = 1e-14;

#[inline]
fn interface_drift(g: &[f64], i: usize) -> f64 {
    0.5 * (g[i] + g[i + 1])
}

/// Flux `F_{i+1/2}` between nodes `i` and `i + 1`.
#[inline]
fn interface_flux(m: &[f64], g: &[f64], i: usize, diff: f64) -> f64 {
    let gi = interface_drift(g, i);
    -diff * (m[i + 1] - m[i]) - gi.max(0.0) * m[i + 1] - gi.min(0.0) * m[i]
}

/// Rate at which mass leaves through `x = 0`, i.e. `-F_{1/2}`.
///
/// Nonnegative whenever `m >= 0` and `m(0) = 0`.
pub fn boundary_outflow(m: &[f64], g_vec: &[f64], sigma: f64, dx: f64) -> f64 {
    let diff = 0.5 * sigma * sigma / dx;
    -interface_flux(m, g_vec, 0, diff)
}

/// One implicit step for the density with nodal drift `g_vec`.
pub fn fp_step(m_curr: &[f64], g_vec: &[f64], sigma: f64, grid: &Grid) -> Result<Vec<f64>> {
    let n = grid.nx;
    assert!(m_curr.len() == n + 1 && g_vec.len() == n + 1);
    let dx = grid.dx;
    let dt = grid.dt;
    let diff = 0.5 * sigma * sigma / dx;

    // Unknowns are nodes 1..=n; node 0 is held at zero.
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n];
    let mut upper = vec![0.0; n - 1];
    let mut rhs = vec![0.0; n];
    for i in 1..=n {
        let volume = if i < n { dx } else { 0.5 * dx };
        let k = i - 1;
        diag[k] = volume / dt;
        rhs[k] = volume / dt * m_curr[i];

        // + F_{i+1/2}
        if i < n {
            let gr = interface_drift(g_vec, i);
            diag[k] += diff - gr.min(0.0);
            upper[k] = -diff - gr.max(0.0);
        }
        // - F_{i-1/2}
        let gl = interface_drift(g_vec, i - 1);
        diag[k] += diff + gl.max(0.0);
        if i > 1 {
            lower[k - 1] = -diff + gl.min(0.0);
        }
    }
    let inner = tridiag::solve(&lower, &diag, &upper, &rhs)?;
    let mut m_new = Vec::with_capacity(n + 1);
    m_new.push(0.0);
    m_new.extend(inner.into_iter().map(|v| if v < 0.0 && v > -CLIP_THRESHOLD { 0.0 } else { v }));
    Ok(m_new)
}

/// Forward sweep with a prescribed drift field: the step into node `n + 1`
/// uses row `n + 1` of `drift_field`.
pub fn sweep(initial: &[f64], drift_field: &Field, sigma: f64, grid: &Grid) -> Result<Field> {
    drift_field.check_grid(grid)?;
    let mut m = Field::zeros(grid);
    let mut curr = initial.to_vec();
    curr[0] = 0.0;
    m.set_slice(0, &curr);
    for n in 0..grid.nt {
        let next = fp_step(&curr, drift_field.slice(n + 1), sigma, grid).map_err(|e| Error::Step {
            solver: "FP",
            node: n + 1,
            source: Box::new(e),
        })?;
        m.set_slice(n + 1, &next);
        curr = next;
    }
    Ok(m)
}

/// Nodal drift `tau G(f(t_n), u_x(t_n, x))` for every time node.
pub fn drift_field(u: &Field, f: &ScalarPath, grid: &Grid, tau: f64) -> Result<Field> {
    u.check_grid(grid)?;
    if f.len() != grid.nt + 1 {
        return Err(Error::Shape(format!("f has {} nodes, grid has {}", f.len(), grid.nt + 1)));
    }
    let mut g = Field::zeros(grid);
    for n in 0..=grid.nt {
        let row: Vec<f64> = gradient(u.slice(n), grid.dx)
            .into_iter()
            .map(|ux| tau * drift(f[n], ux))
            .collect();
        g.set_slice(n, &row);
    }
    Ok(g)
}

/// Density driven by the optimal extraction of `u`, started from `tau m0`.
pub fn solve_fp(
    u: &Field,
    f: &ScalarPath,
    params: &ModelParams,
    grid: &Grid,
    tau: f64,
) -> Result<Field> {
    let initial: Vec<f64> = params
        .initial_density(grid)?
        .iter()
        .map(|v| tau * v)
        .collect();
    if initial.iter().any(|v| *v < 0.0) {
        return Err(Error::invalid("m0", "initial density must be nonnegative"));
    }
    let g = drift_field(u, f, grid, tau)?;
    sweep(&initial, &g, params.sigma, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trapezoid;
    use std::f64::consts::PI;

    fn grid(nx: usize, nt: usize) -> Grid {
        Grid::new(1.0, 1.0, nx, nt).unwrap()
    }

    fn half_sine(g: &Grid) -> Vec<f64> {
        g.x.iter().map(|x| (0.5 * PI * x).sin()).collect()
    }

    #[test]
    fn zero_density_stays_zero() {
        let g = grid(10, 4);
        let drift: Vec<f64> = g.x.iter().map(|x| 3.0 * x - 1.0).collect();
        let m = fp_step(&[0.0; 11], &drift, 0.5, &g).unwrap();
        assert!(m.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn mass_deficit_is_diffusive_outflow_when_drift_points_inward() {
        // With G <= 0 at x = 0 the upwind value there is m_0 = 0, so the
        // whole outflow is (sigma^2/2) m_1 / dx.
        let g = grid(40, 20);
        let sigma = 0.7;
        let m0: Vec<f64> = g.x.iter().map(|x| 30.0 * x * x * (1.0 - x) * (1.0 - x)).collect();
        let drift: Vec<f64> = g.x.iter().map(|x| -0.3 + 0.5 * x).collect();
        let m1 = fp_step(&m0, &drift, sigma, &g).unwrap();
        let before = trapezoid(&m0, g.dx);
        let after = trapezoid(&m1, g.dx);
        let deficit = before - after;
        let diffusive = g.dt * 0.5 * sigma * sigma * (m1[1] - m1[0]) / g.dx;
        assert!(deficit >= 0.0);
        assert!((deficit - diffusive).abs() <= 1e-14 * before);
    }

    #[test]
    fn mass_identity_holds_for_any_drift() {
        let g = grid(32, 16);
        let sigma = 0.4;
        let mut m: Vec<f64> = g.x.iter().map(|x| 30.0 * x * x * (1.0 - x) * (1.0 - x)).collect();
        let drift: Vec<f64> = g.x.iter().map(|x| (7.0 * x).sin()).collect();
        for _ in 0..16 {
            let next = fp_step(&m, &drift, sigma, &g).unwrap();
            let jump = trapezoid(&next, g.dx) - trapezoid(&m, g.dx);
            let outflow = boundary_outflow(&next, &drift, sigma, g.dx);
            assert!(outflow >= 0.0);
            assert!((jump + g.dt * outflow).abs() <= 1e-14);
            m = next;
        }
    }

    #[test]
    fn strong_drift_keeps_density_nonnegative() {
        let g = grid(20, 4);
        let m0: Vec<f64> = g.x.iter().map(|x| 30.0 * x * x * (1.0 - x) * (1.0 - x)).collect();
        for scale in [-50.0, 50.0] {
            let drift: Vec<f64> = g.x.iter().map(|x| scale * (x - 0.5)).collect();
            let m1 = fp_step(&m0, &drift, 0.1, &g).unwrap();
            assert!(m1.iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn pure_diffusion_tracks_decaying_mode() {
        let (nx, nt) = (64, 2000);
        let g = grid(nx, nt);
        let sigma = 0.5;
        let rate = sigma * sigma * PI * PI / 8.0;
        let m = sweep(&half_sine(&g), &Field::zeros(&g), sigma, &g).unwrap();
        let mut err: f64 = 0.0;
        for n in 0..=nt {
            for (i, x) in g.x.iter().enumerate() {
                let exact = (-rate * g.t[n]).exp() * (0.5 * PI * x).sin();
                err = err.max((m.get(n, i) - exact).abs());
            }
        }
        assert!(err <= 5.0 * (g.dt + g.dx * g.dx), "err {err}");
    }

    #[test]
    fn flat_value_gives_decaying_nonnegative_density() {
        // u constant in x and eps = 0: G = 1/2 everywhere
        let g = grid(50, 50);
        let params = ModelParams { epsilon: 0.0, ..ModelParams::default() };
        let u = Field::from_fn(&g, |t, _| 1.0 - t);
        let f = ScalarPath::constant(&g, 1.0);
        let m = solve_fp(&u, &f, &params, &g, 1.0).unwrap();
        assert!(m.min() >= 0.0);
        let mass: Vec<f64> = (0..=g.nt).map(|n| trapezoid(m.slice(n), g.dx)).collect();
        assert!((mass[0] - 1.0).abs() < 1e-14);
        assert!(mass.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn zero_initial_density_gives_zero_field() {
        let g = grid(10, 5);
        let params = ModelParams { m0: crate::params::Profile::ZERO, ..ModelParams::default() };
        let u = Field::from_fn(&g, |_, x| x);
        let m = solve_fp(&u, &ScalarPath::constant(&g, 1.0), &params, &g, 1.0).unwrap();
        assert_eq!(m.max_abs(), 0.0);
    }

    #[test]
    fn no_flux_through_right_end() {
        // Without the absorbing end contributing (m tiny near 0), mass is
        // conserved to roundoff: only F_{1/2} can change it.
        let g = grid(30, 10);
        let m0: Vec<f64> = g.x.iter().map(|x| if *x > 0.6 { (x - 0.6).powi(2) } else { 0.0 }).collect();
        let drift = vec![-1.0; 31];
        let m1 = fp_step(&m0, &drift, 0.05, &g).unwrap();
        let outflow = boundary_outflow(&m1, &drift, 0.05, g.dx);
        let jump = trapezoid(&m1, g.dx) - trapezoid(&m0, g.dx);
        assert!((jump + g.dt * outflow).abs() < 1e-15);
    }
}
