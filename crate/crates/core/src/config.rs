//! Run configuration files.
//!
//! TOML with four optional sections; every key is optional and unknown keys
//! are rejected.
//!
//! ```toml
//! [model]
//! epsilon = 0.3
//! sigma = 0.5
//! r = 0.1
//! L = 1.0
//! T = 1.0
//! m0 = "quartic-bump"     # or a list of nx + 1 samples
//! uT = "sine-squared"     # "half-sine", "zero", or a list of samples
//!
//! [grid]
//! nx = 200
//! nt = 400
//!
//! [solver]
//! newton_tol = 1e-11
//! newton_max = 50
//! picard_tol = 1e-8
//! picard_max = 500
//! damping = 0.5
//! continuation = [1.0]
//!
//! [run]
//! initial_q = 0.0
//! uniqueness = false
//! uniqueness_q = [0.0, 1.0]
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_grid, Discretization};
use crate::params::{ModelParams, Profile};

/// Options of a run beyond the model and the discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    /// Constant initial guess for the aggregate `Q`.
    pub initial_q: f64,
    /// Whether sweeps also run the two-start uniqueness experiment.
    pub uniqueness: bool,
    /// The two constant initial guesses of that experiment.
    pub uniqueness_q: [f64; 2],
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            initial_q: 0.0,
            uniqueness: false,
            uniqueness_q: [0.0, 1.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub disc: Discretization,
    pub run: RunOptions,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelSection {
    epsilon: Option<f64>,
    sigma: Option<f64>,
    r: Option<f64>,
    #[serde(rename = "L")]
    length: Option<f64>,
    #[serde(rename = "T")]
    horizon: Option<f64>,
    m0: Option<Profile>,
    #[serde(rename = "uT")]
    u_terminal: Option<Profile>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSection {
    nx: Option<usize>,
    nt: Option<usize>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolverSection {
    newton_tol: Option<f64>,
    newton_max: Option<usize>,
    picard_tol: Option<f64>,
    picard_max: Option<usize>,
    damping: Option<f64>,
    continuation: Option<Vec<f64>>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    model: ModelSection,
    #[serde(default)]
    grid: GridSection,
    #[serde(default)]
    solver: SolverSection,
    #[serde(default)]
    run: RunOptions,
}

impl RunConfig {
    /// Parses and validates configuration text; `origin` names the source
    /// in error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            message: e.to_string().trim_end().to_string(),
        })?;
        let d = Self::default();
        let m = file.model;
        let s = file.solver;
        let config = Self {
            params: ModelParams {
                epsilon: m.epsilon.unwrap_or(d.params.epsilon),
                sigma: m.sigma.unwrap_or(d.params.sigma),
                r: m.r.unwrap_or(d.params.r),
                length: m.length.unwrap_or(d.params.length),
                horizon: m.horizon.unwrap_or(d.params.horizon),
                m0: m.m0.unwrap_or(d.params.m0),
                u_terminal: m.u_terminal.unwrap_or(d.params.u_terminal),
            },
            disc: Discretization {
                nx: file.grid.nx.unwrap_or(d.disc.nx),
                nt: file.grid.nt.unwrap_or(d.disc.nt),
                newton_tol: s.newton_tol.unwrap_or(d.disc.newton_tol),
                newton_max: s.newton_max.unwrap_or(d.disc.newton_max),
                picard_tol: s.picard_tol.unwrap_or(d.disc.picard_tol),
                picard_max: s.picard_max.unwrap_or(d.disc.picard_max),
                damping: s.damping.unwrap_or(d.disc.damping),
                continuation: s.continuation.unwrap_or(d.disc.continuation),
            },
            run: file.run,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.disc.validate()?;
        let grid = build_grid(&self.params, &self.disc)?;
        self.params.validate(&grid)?;
        if !self.run.initial_q.is_finite() || self.run.uniqueness_q.iter().any(|q| !q.is_finite()) {
            return Err(Error::invalid("run", "initial guesses must be finite"));
        }
        Ok(())
    }

    /// Sets a scalar model parameter by its configuration name.
    pub fn set_param(&mut self, name: &str, value: f64) -> Result<()> {
        let p = &mut self.params;
        match name {
            "epsilon" => p.epsilon = value,
            "sigma" => p.sigma = value,
            "r" => p.r = value,
            "L" => p.length = value,
            "T" => p.horizon = value,
            other => {
                return Err(Error::Config(format!(
                    "unknown parameter `{other}` (expected epsilon, sigma, r, L or T)"
                )))
            }
        }
        Ok(())
    }

    /// Serializes to the file format accepted by [`RunConfig::parse`].
    pub fn to_toml(&self) -> String {
        let p = &self.params;
        let d = &self.disc;
        let file = ConfigFile {
            model: ModelSection {
                epsilon: Some(p.epsilon),
                sigma: Some(p.sigma),
                r: Some(p.r),
                length: Some(p.length),
                horizon: Some(p.horizon),
                m0: Some(p.m0.clone()),
                u_terminal: Some(p.u_terminal.clone()),
            },
            grid: GridSection {
                nx: Some(d.nx),
                nt: Some(d.nt),
            },
            solver: SolverSection {
                newton_tol: Some(d.newton_tol),
                newton_max: Some(d.newton_max),
                picard_tol: Some(d.picard_tol),
                picard_max: Some(d.picard_max),
                damping: Some(d.damping),
                continuation: Some(d.continuation.clone()),
            },
            run: self.run.clone(),
        };
        toml::to_string(&file).expect("configuration is always representable")
    }
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    RunConfig::parse(&text, path)
}
