//! Command-line front end.
//!
//! Exit status: 0 converged and audit passed, 1 error, 2 not converged,
//! 3 converged but the audit failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bertrand_mfg::config::{load_config, RunConfig};
use bertrand_mfg::runner::{self, Status};
use bertrand_mfg::{Error, Result};

#[derive(Parser)]
#[command(name = "bertrand-mfg", version, about = "Solve and audit the Bertrand/Cournot mean field game system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the coupled system, audit it and write u.csv, m.csv, paths.csv, report.json.
    Solve {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Audit externally supplied fields on the configured grid.
    Audit {
        /// Value field in the u.csv layout.
        u: PathBuf,
        /// Density field in the m.csv layout.
        m: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Also write audit.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// One solve per parameter value; writes summary.csv.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// epsilon or sigma
        #[arg(long)]
        param: String,
        /// Comma-separated values, e.g. 0,0.1,0.3
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
    },
    /// Dyadic refinement study; writes orders.json.
    Convergence {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
}

fn config_from(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => load_config(p),
        None => Ok(RunConfig::default()),
    }
}

fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Solve { config, out } => {
            let c = config_from(config.as_deref())?;
            let (sol, report) = runner::run_solve(&c, &out)?;
            println!(
                "converged: {} after {} iterations (residual {:.3e}); audit: {}",
                sol.converged,
                sol.iterations,
                sol.last_residual().unwrap_or(f64::NAN),
                if report.audit.passed { "pass" } else { "FAIL" }
            );
            for name in report.audit.failed() {
                println!("  failed check: {name}");
            }
            println!("wrote {}", out.display());
            Ok(report.status)
        }
        Command::Audit { u, m, config, out } => {
            let c = config_from(config.as_deref())?;
            let report = runner::run_audit(&c, &u, &m, out.as_deref())?;
            for check in &report.checks {
                println!("{:<16} {}", check.name, if check.passed { "pass" } else { "FAIL" });
                if let Some(d) = &check.detail {
                    println!("  {d}");
                }
            }
            Ok(Status::of(true, report.passed))
        }
        Command::Sweep { config, out, param, values } => {
            let c = config_from(config.as_deref())?;
            let rows = runner::run_sweep(&c, &param, &values, &out)?;
            for r in &rows {
                match &r.error {
                    Some(e) => println!("{param} = {}: error: {e}", r.value),
                    None => println!(
                        "{param} = {}: converged {} in {} iterations, eta(T) = {:.6}",
                        r.value, r.converged, r.iterations, r.eta_final
                    ),
                }
            }
            println!("wrote {}", out.join("summary.csv").display());
            Ok(Status::of(rows.iter().all(|r| r.ok()), true))
        }
        Command::Convergence { config, out, levels } => {
            let c = config_from(config.as_deref())?;
            let r = runner::run_convergence(&c, levels, &out)?;
            let show = |name: &str, orders: &[f64]| {
                let list: Vec<String> = orders.iter().map(|o| format!("{o:.3}")).collect();
                println!("{name:<18} orders [{}]", list.join(", "));
            };
            show("hjb_manufactured", &r.hjb_manufactured.orders);
            show("hjb_temporal", &r.hjb_temporal.orders);
            show("fp_eigenfunction", &r.fp_eigenfunction.orders);
            show("fp_spatial", &r.fp_spatial.orders);
            show("energy_residual", &r.energy_residual.orders);
            show("nonlocal_residual", &r.nonlocal_residual.orders);
            println!("wrote {}", out.join("orders.json").display());
            Ok(Status::of(r.converged.iter().all(|&b| b), true))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(status) => ExitCode::from(status.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::Io { .. }) {
                eprintln!("  (no report was written)");
            }
            ExitCode::from(1)
        }
    }
}
