//! Self-consistent `(u, m)` pairs.
//!
//! The two equations only see each other through the time paths
//! `(Q, eta)`, so the fixed-point unknown is that pair of paths rather than
//! the fields. One pass of the map solves the value equation with the
//! intercept built from the current paths, then the density equation driven
//! by the resulting extraction, and reads off new paths. Paths are relaxed
//! with the damping factor; the residual is the sup-norm change of the map
//! output between consecutive passes (against the initial guess on the
//! first pass).
//!
//! The homotopy parameter `tau` scales the Hamiltonian, the drift and both
//! boundary data. At `tau = 0` the map is identically zero.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fp::solve_fp;
use crate::grid::{build_grid, Discretization, Field, Grid, ScalarPath};
use crate::hjb::solve_hjb;
use crate::model::{coupling_paths, intercept_f, CouplingPaths};
use crate::params::ModelParams;

/// A computed equilibrium together with its iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub params: ModelParams,
    pub grid: Grid,
    pub u: Field,
    pub m: Field,
    pub eta: ScalarPath,
    pub q: ScalarPath,
    pub f: ScalarPath,
    pub pbar: Vec<Option<f64>>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub tau_final: f64,
    pub converged: bool,
}

impl Solution {
    /// Assembles a solution from externally computed fields; paths are
    /// recomputed from the fields.
    pub fn from_fields(params: ModelParams, grid: Grid, u: Field, m: Field, tau: f64) -> Result<Self> {
        let CouplingPaths { eta, q, f, pbar } = coupling_paths(&u, &m, &grid, params.epsilon)?;
        Ok(Self {
            params,
            grid,
            u,
            m,
            eta,
            q,
            f,
            pbar,
            iterations: 0,
            residual_history: Vec::new(),
            tau_final: tau,
            converged: true,
        })
    }

    pub fn last_residual(&self) -> Option<f64> {
        self.residual_history.last().copied()
    }
}

fn sup_change(new: &CouplingPaths, q_old: &[f64], eta_old: &[f64]) -> f64 {
    new.q
        .values()
        .iter()
        .zip(q_old)
        .zip(new.eta.values().iter().zip(eta_old))
        .map(|((qn, qo), (en, eo))| (qn - qo).abs() + (en - eo).abs())
        .fold(0.0, f64::max)
}

/// Damped fixed-point iteration for the tau-scaled system.
///
/// The initial `eta` path is the constant `tau` (the mass of `tau m0`).
/// Non-convergence is reported through `Solution::converged`, not as an
/// error.
pub fn picard_solve(
    params: &ModelParams,
    disc: &Discretization,
    q_init: &ScalarPath,
    tau: f64,
) -> Result<Solution> {
    let grid = build_grid(params, disc)?;
    params.validate(&grid)?;
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::invalid("tau", format!("must lie in [0, 1], got {tau}")));
    }
    if q_init.len() != grid.nt + 1 || q_init.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("Q_init", format!("need {} finite values", grid.nt + 1)));
    }
    picard_on_grid(params, disc, &grid, q_init, tau)
}

fn picard_on_grid(
    params: &ModelParams,
    disc: &Discretization,
    grid: &Grid,
    q_init: &ScalarPath,
    tau: f64,
) -> Result<Solution> {
    let theta = disc.damping;
    let mut q = q_init.values().to_vec();
    let mut eta = vec![tau; grid.nt + 1];
    let mut prev_q = q.clone();
    let mut prev_eta = eta.clone();
    let mut history = Vec::new();

    let mut iteration = 0;
    loop {
        iteration += 1;
        let f = ScalarPath(
            eta.iter()
                .zip(&q)
                .map(|(&e, &qq)| intercept_f(e, qq, params.epsilon))
                .collect(),
        );
        let pass = || -> Result<(Field, Field, CouplingPaths)> {
            let u = solve_hjb(&f, params, disc, grid, tau)?;
            let m = solve_fp(&u, &f, params, grid, tau)?;
            let paths = coupling_paths(&u, &m, grid, params.epsilon)?;
            Ok((u, m, paths))
        };
        let (u, m, paths) = pass().map_err(|e| Error::Picard {
            iteration,
            source: Box::new(e),
        })?;

        let residual = sup_change(&paths, &prev_q, &prev_eta);
        history.push(residual);
        let converged = residual <= disc.picard_tol;
        if converged || iteration >= disc.picard_max {
            let CouplingPaths { eta, q, f, pbar } = paths;
            return Ok(Solution {
                params: params.clone(),
                grid: grid.clone(),
                u,
                m,
                eta,
                q,
                f,
                pbar,
                iterations: iteration,
                residual_history: history,
                tau_final: tau,
                converged,
            });
        }

        for (x, new) in q.iter_mut().zip(paths.q.values()) {
            *x = (1.0 - theta) * *x + theta * new;
        }
        for (x, new) in eta.iter_mut().zip(paths.eta.values()) {
            *x = (1.0 - theta) * *x + theta * new;
        }
        prev_q = paths.q.0;
        prev_eta = paths.eta.0;
    }
}

/// Runs [`picard_solve`] along the continuation schedule, warm-starting
/// each stage from the previous stage's `Q`. Stops at the first stage that
/// fails to converge and returns it.
pub fn continuation_solve(params: &ModelParams, disc: &Discretization) -> Result<Solution> {
    continuation_from(params, disc, None)
}

/// As [`continuation_solve`], with an explicit initial guess for the first
/// stage (zero otherwise).
pub fn continuation_from(
    params: &ModelParams,
    disc: &Discretization,
    q_init: Option<&ScalarPath>,
) -> Result<Solution> {
    let grid = build_grid(params, disc)?;
    params.validate(&grid)?;
    let mut q = q_init
        .cloned()
        .unwrap_or_else(|| ScalarPath::constant(&grid, 0.0));
    if q.len() != grid.nt + 1 {
        return Err(Error::invalid("Q_init", format!("need {} values", grid.nt + 1)));
    }
    let mut last = None;
    for &tau in &disc.continuation {
        let stage = picard_on_grid(params, disc, &grid, &q, tau)?;
        if !stage.converged {
            return Ok(stage);
        }
        q = stage.q.clone();
        last = Some(stage);
    }
    Ok(last.expect("validated schedule is nonempty"))
}

/// Sup-norm distances between two equilibria computed from different
/// initial guesses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub u_gap: f64,
    pub m_gap: f64,
    pub q_gap: f64,
    pub converged_a: bool,
    pub converged_b: bool,
    pub iterations_a: usize,
    pub iterations_b: usize,
}

impl UniquenessReport {
    pub fn both_converged(&self) -> bool {
        self.converged_a && self.converged_b
    }
}

/// Solves the full system twice (concurrently) from `q_init_a` and
/// `q_init_b` and reports the gaps between the results.
pub fn uniqueness_experiment(
    params: &ModelParams,
    disc: &Discretization,
    q_init_a: &ScalarPath,
    q_init_b: &ScalarPath,
) -> Result<UniquenessReport> {
    let (a, b) = rayon::join(
        || picard_solve(params, disc, q_init_a, 1.0),
        || picard_solve(params, disc, q_init_b, 1.0),
    );
    let (a, b) = (a?, b?);
    Ok(UniquenessReport {
        u_gap: a.u.sup_distance(&b.u),
        m_gap: a.m.sup_distance(&b.m),
        q_gap: a.q.sup_distance(&b.q),
        converged_a: a.converged,
        converged_b: b.converged,
        iterations_a: a.iterations,
        iterations_b: b.iterations,
    })
}
