//! Command-line workflows: solve, audit, sweep and convergence study.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::audit::{
    audit_all, energy_identity_residual, gradient_extremes, nonlocal_identity_residual, AuditReport,
};
use crate::config::RunConfig;
use crate::coupling::{continuation_from, uniqueness_experiment, Solution};
use crate::error::{Error, Result};
use crate::grid::{build_grid, Discretization, ScalarPath};
use crate::io;
use crate::params::ModelParams;
use crate::verification::{fp_eigenfunction, hjb_manufactured, observed_orders, ErrorSample, TimeProfile};

/// How a run ended; drives the process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Passed,
    NotConverged,
    AuditFailed,
}

impl Status {
    pub fn of(converged: bool, audit_passed: bool) -> Self {
        match (converged, audit_passed) {
            (false, _) => Status::NotConverged,
            (true, false) => Status::AuditFailed,
            (true, true) => Status::Passed,
        }
    }

    /// 0 passed, 2 not converged, 3 audit failed; errors exit with 1.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Passed => 0,
            Status::NotConverged => 2,
            Status::AuditFailed => 3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub status: Status,
    pub converged: bool,
    pub iterations: usize,
    pub tau_final: f64,
    pub final_residual: Option<f64>,
    pub residual_history: Vec<f64>,
    pub eta_final: f64,
    pub params: ModelParams,
    pub discretization: Discretization,
    pub grid: GridSummary,
    pub audit: AuditReport,
}

impl SolveReport {
    pub fn new(sol: &Solution, disc: &Discretization, audit: AuditReport) -> Self {
        Self {
            status: Status::of(sol.converged, audit.passed),
            converged: sol.converged,
            iterations: sol.iterations,
            tau_final: sol.tau_final,
            final_residual: sol.last_residual(),
            residual_history: sol.residual_history.clone(),
            eta_final: sol.eta[sol.grid.nt],
            params: sol.params.clone(),
            discretization: disc.clone(),
            grid: GridSummary {
                nx: sol.grid.nx,
                nt: sol.grid.nt,
                dx: sol.grid.dx,
                dt: sol.grid.dt,
            },
            audit,
        }
    }
}

fn prepare_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    if !out.is_dir() {
        return Err(Error::io(
            out,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    Ok(())
}

/// Solves with the configured initial guess and continuation schedule.
pub fn solve(config: &RunConfig) -> Result<Solution> {
    let grid = build_grid(&config.params, &config.disc)?;
    let q = ScalarPath::constant(&grid, config.run.initial_q);
    continuation_from(&config.params, &config.disc, Some(&q))
}

/// Solves, audits and writes `u.csv`, `m.csv`, `paths.csv` and
/// `report.json` (last) into `out`.
pub fn run_solve(config: &RunConfig, out: &Path) -> Result<(Solution, SolveReport)> {
    config.validate()?;
    prepare_dir(out)?;
    let sol = solve(config)?;
    let report = SolveReport::new(&sol, &config.disc, audit_all(&sol));
    io::write_field(&out.join("u.csv"), &sol.grid, &sol.u)?;
    io::write_field(&out.join("m.csv"), &sol.grid, &sol.m)?;
    io::write_paths(&out.join("paths.csv"), &sol)?;
    io::write_json(&out.join("report.json"), &report)?;
    Ok((sol, report))
}

/// Audits an externally computed field pair on the configured grid.
pub fn run_audit(config: &RunConfig, u_path: &Path, m_path: &Path, out: Option<&Path>) -> Result<AuditReport> {
    config.validate()?;
    let grid = build_grid(&config.params, &config.disc)?;
    let u = io::read_field(u_path)?;
    let m = io::read_field(m_path)?;
    u.check_grid(&grid)?;
    m.check_grid(&grid)?;
    let sol = Solution::from_fields(config.params.clone(), grid, u.field, m.field, 1.0)?;
    let report = audit_all(&sol);
    if let Some(out) = out {
        prepare_dir(out)?;
        io::write_json(&out.join("audit.json"), &report)?;
    }
    Ok(report)
}

/// One line of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub eta_final: f64,
    pub max_f: f64,
    pub max_u_x: f64,
    pub uniqueness_gap: Option<f64>,
    pub error: Option<String>,
}

impl SweepRow {
    fn failed(value: f64, err: Error) -> Self {
        Self {
            value,
            converged: false,
            iterations: 0,
            eta_final: f64::NAN,
            max_f: f64::NAN,
            max_u_x: f64::NAN,
            uniqueness_gap: None,
            error: Some(err.to_string()),
        }
    }

    pub fn ok(&self) -> bool {
        self.error.is_none() && self.converged
    }
}

fn sweep_one(config: &RunConfig, param: &str, value: f64) -> Result<SweepRow> {
    let mut c = config.clone();
    c.set_param(param, value)?;
    c.validate()?;
    let sol = solve(&c)?;
    let uniqueness_gap = if c.run.uniqueness {
        let grid = &sol.grid;
        let [a, b] = c.run.uniqueness_q;
        let rep = uniqueness_experiment(
            &c.params,
            &c.disc,
            &ScalarPath::constant(grid, a),
            &ScalarPath::constant(grid, b),
        )?;
        Some(rep.u_gap.max(rep.m_gap))
    } else {
        None
    };
    Ok(SweepRow {
        value,
        converged: sol.converged,
        iterations: sol.iterations,
        eta_final: sol.eta[sol.grid.nt],
        max_f: sol.f.values().iter().copied().fold(f64::NEG_INFINITY, f64::max),
        max_u_x: gradient_extremes(&sol).0,
        uniqueness_gap,
        error: None,
    })
}

/// One independent solve per value of `param` (`epsilon` or `sigma`);
/// failures are recorded per row. Writes `summary.csv` into `out`.
pub fn run_sweep(config: &RunConfig, param: &str, values: &[f64], out: &Path) -> Result<Vec<SweepRow>> {
    if !matches!(param, "epsilon" | "sigma") {
        return Err(Error::Config(format!("cannot sweep `{param}` (expected epsilon or sigma)")));
    }
    if values.is_empty() {
        return Err(Error::Config("empty value list".into()));
    }
    prepare_dir(out)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| sweep_one(config, param, v).unwrap_or_else(|e| SweepRow::failed(v, e)))
        .collect();
    let fmt_opt = |v: Option<f64>| v.map(io::format_float).unwrap_or_default();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            let ok = r.error.is_none();
            vec![
                io::format_float(r.value),
                r.converged.to_string(),
                r.iterations.to_string(),
                fmt_opt(ok.then_some(r.eta_final)),
                fmt_opt(ok.then_some(r.max_f)),
                fmt_opt(ok.then_some(r.max_u_x)),
                fmt_opt(r.uniqueness_gap),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    io::write_table(
        &out.join("summary.csv"),
        &[param, "converged", "iterations", "eta_T", "max_f", "max_u_x", "uniqueness_gap", "error"],
        &table,
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct Study {
    pub nx: Vec<usize>,
    pub nt: Vec<usize>,
    pub values: Vec<f64>,
    pub orders: Vec<f64>,
}

impl Study {
    fn from_samples(samples: &[ErrorSample]) -> Self {
        let values: Vec<f64> = samples.iter().map(|s| s.error).collect();
        Self {
            nx: samples.iter().map(|s| s.nx).collect(),
            nt: samples.iter().map(|s| s.nt).collect(),
            orders: observed_orders(&values),
            values,
        }
    }

    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Contents of `orders.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub levels: usize,
    pub converged: Vec<bool>,
    /// Value solver, `(nx, nt)` refined together.
    pub hjb_manufactured: Study,
    /// Value solver, fine fixed `nx`, refined `nt`.
    pub hjb_temporal: Study,
    /// Density solver, `(nx, nt)` refined together.
    pub fp_eigenfunction: Study,
    /// Density solver, `nt` refined four times per level.
    pub fp_spatial: Study,
    pub energy_residual: Study,
    pub nonlocal_residual: Study,
}

fn dyadic(levels: usize, base: usize, factor: usize) -> Vec<usize> {
    (0..levels).map(|k| base * factor.pow(k as u32)).collect()
}

fn sample_study(
    sizes: &[(usize, usize)],
    run: impl Fn(usize, usize) -> Result<ErrorSample> + Sync,
) -> Result<Study> {
    let samples: Vec<ErrorSample> = sizes
        .par_iter()
        .map(|&(nx, nt)| run(nx, nt))
        .collect::<Result<_>>()?;
    Ok(Study::from_samples(&samples))
}

/// Solves on `(Nx, Nt), (2Nx, 2Nt), ...` and reports observed orders.
pub fn convergence_study(config: &RunConfig, levels: usize) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::Config(format!("need at least 2 levels, got {levels}")));
    }
    config.validate()?;
    let p = &config.params;
    let (nx0, nt0) = (config.disc.nx, config.disc.nt);
    let nx = dyadic(levels, nx0, 2);
    let nt = dyadic(levels, nt0, 2);
    let together: Vec<(usize, usize)> = nx.iter().copied().zip(nt.iter().copied()).collect();

    let coupled: Vec<Solution> = together
        .par_iter()
        .map(|&(nx, nt)| {
            let mut c = config.clone();
            c.disc.nx = nx;
            c.disc.nt = nt;
            solve(&c)
        })
        .collect::<Result<_>>()?;
    let residual_study = |f: fn(&Solution) -> f64| {
        let values: Vec<f64> = coupled.iter().map(|s| f(s).abs()).collect();
        Study {
            nx: nx.clone(),
            nt: nt.clone(),
            orders: observed_orders(&values),
            values,
        }
    };

    let fine_nx = 2 * nx[levels - 1];
    let temporal: Vec<(usize, usize)> = (0..levels)
        .map(|k| (fine_nx, (nt0 >> 3).max(4) << k))
        .collect();
    let fp_spatial: Vec<(usize, usize)> = (0..levels).map(|k| (nx[k], nt0 * 4usize.pow(k as u32))).collect();

    Ok(ConvergenceReport {
        levels,
        converged: coupled.iter().map(|s| s.converged).collect(),
        hjb_manufactured: sample_study(&together, |nx, nt| hjb_manufactured(p, nx, nt, TimeProfile::Linear))?,
        hjb_temporal: sample_study(&temporal, |nx, nt| hjb_manufactured(p, nx, nt, TimeProfile::Exponential))?,
        fp_eigenfunction: sample_study(&together, |nx, nt| fp_eigenfunction(p, nx, nt))?,
        fp_spatial: sample_study(&fp_spatial, |nx, nt| fp_eigenfunction(p, nx, nt))?,
        energy_residual: residual_study(energy_identity_residual),
        nonlocal_residual: residual_study(nonlocal_identity_residual),
    })
}

/// [`convergence_study`] written to `orders.json` in `out`.
pub fn run_convergence(config: &RunConfig, levels: usize, out: &Path) -> Result<ConvergenceReport> {
    if levels < 2 {
        return Err(Error::Config(format!("need at least 2 levels, got {levels}")));
    }
    prepare_dir(out)?;
    let report = convergence_study(config, levels)?;
    io::write_json(&out.join("orders.json"), &report)?;
    Ok(report)
}
