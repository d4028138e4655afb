//! Model data: the scalar coefficients and the initial/terminal profiles.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{gradient, trapezoid, Grid};

/// A function of capacity `x` on `[0, L]`, either a named built-in or
/// explicit samples on the grid nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Named(BuiltinProfile),
    Sampled(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BuiltinProfile {
    /// `30 x^2 (L - x)^2 / L^5`, a probability density with
    /// `m(0) = m(L) = m'(L) = 0`.
    QuarticBump,
    /// `0.5 sin^2(pi x / (2L))`, nonnegative, nondecreasing, zero at 0 and
    /// flat at L.
    SineSquared,
    /// `sin(pi x / (2L))`, the slowest decaying heat mode for a Dirichlet
    /// left end and a Neumann right end. Not a probability density.
    HalfSine,
    Zero,
}

impl BuiltinProfile {
    pub fn eval(self, x: f64, length: f64) -> f64 {
        match self {
            BuiltinProfile::QuarticBump => {
                let y = length - x;
                30.0 * x * x * y * y / length.powi(5)
            }
            BuiltinProfile::SineSquared => {
                let s = (PI * x / (2.0 * length)).sin();
                0.5 * s * s
            }
            BuiltinProfile::HalfSine => (PI * x / (2.0 * length)).sin(),
            BuiltinProfile::Zero => 0.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BuiltinProfile::QuarticBump => "quartic-bump",
            BuiltinProfile::SineSquared => "sine-squared",
            BuiltinProfile::HalfSine => "half-sine",
            BuiltinProfile::Zero => "zero",
        }
    }
}

impl Profile {
    pub const QUARTIC_BUMP: Profile = Profile::Named(BuiltinProfile::QuarticBump);
    pub const SINE_SQUARED: Profile = Profile::Named(BuiltinProfile::SineSquared);
    pub const HALF_SINE: Profile = Profile::Named(BuiltinProfile::HalfSine);
    pub const ZERO: Profile = Profile::Named(BuiltinProfile::Zero);

    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Profile::Named(b) => Ok(grid.x.iter().map(|&x| b.eval(x, grid.length())).collect()),
            Profile::Sampled(v) if v.len() == grid.nx + 1 => {
                if v.iter().any(|s| !s.is_finite()) {
                    return Err(Error::Shape("profile samples must be finite".into()));
                }
                Ok(v.clone())
            }
            Profile::Sampled(v) => Err(Error::Shape(format!(
                "profile has {} samples, grid has {} nodes",
                v.len(),
                grid.nx + 1
            ))),
        }
    }
}

/// Scalar data of the problem plus the two boundary profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Competition parameter; 0 is monopoly.
    pub epsilon: f64,
    pub sigma: f64,
    /// Discount rate.
    pub r: f64,
    /// Capacity cap `L`.
    pub length: f64,
    /// Horizon `T`.
    pub horizon: f64,
    pub m0: Profile,
    pub u_terminal: Profile,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            epsilon: 0.3,
            sigma: 0.5,
            r: 0.1,
            length: 1.0,
            horizon: 1.0,
            m0: Profile::QUARTIC_BUMP,
            u_terminal: Profile::SINE_SQUARED,
        }
    }
}

/// Relative tolerance for checking sampled profiles.
const SAMPLE_TOL: f64 = 1e-8;

impl ModelParams {
    pub fn validate_scalars(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid(
                "sigma",
                format!("must be > 0 (only the parabolic case sigma > 0 is supported), got {}", self.sigma),
            ));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::invalid("L", format!("must be > 0, got {}", self.length)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::invalid("T", format!("must be > 0, got {}", self.horizon)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("epsilon", format!("must be >= 0, got {}", self.epsilon)));
        }
        if !(self.r >= 0.0 && self.r.is_finite()) {
            return Err(Error::invalid("r", format!("must be >= 0, got {}", self.r)));
        }
        Ok(())
    }

    /// Full check of the data against the standing assumptions: `m0` a
    /// probability density vanishing at both ends with zero slope at `L`,
    /// `uT` nonnegative, nondecreasing, zero at 0 and flat at `L`.
    ///
    /// Built-in profiles satisfy these in closed form (`quartic-bump` for
    /// `m0`; `sine-squared`, `half-sine` or `zero` for `uT`); sampled profiles are checked
    /// on the grid with tolerance `1e-8 (1 + max|sample|)`, plus an
    /// `O(dx^2)` allowance for the one-sided slope at `L`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        self.validate_scalars()?;
        match &self.m0 {
            Profile::Named(BuiltinProfile::QuarticBump) => {}
            Profile::Named(other) => {
                return Err(Error::invalid(
                    "m0",
                    format!("`{}` is not a probability density satisfying the boundary conditions", other.name()),
                ))
            }
            Profile::Sampled(_) => check_density_samples(&self.m0.sample(grid)?, grid)?,
        }
        match &self.u_terminal {
            Profile::Named(BuiltinProfile::SineSquared | BuiltinProfile::HalfSine | BuiltinProfile::Zero) => {}
            Profile::Named(other) => {
                return Err(Error::invalid(
                    "uT",
                    format!("`{}` does not satisfy uT(0) = uT'(L) = 0", other.name()),
                ))
            }
            Profile::Sampled(_) => check_terminal_samples(&self.u_terminal.sample(grid)?, grid)?,
        }
        Ok(())
    }

    /// `m0` on the grid, rescaled so that its trapezoid mass is exactly 1.
    ///
    /// Profiles with zero mass are returned unscaled.
    pub fn initial_density(&self, grid: &Grid) -> Result<Vec<f64>> {
        let mut m0 = self.m0.sample(grid)?;
        let mass = trapezoid(&m0, grid.dx);
        if mass > 0.0 {
            m0.iter_mut().for_each(|v| *v /= mass);
        }
        Ok(m0)
    }

    pub fn terminal_value(&self, grid: &Grid) -> Result<Vec<f64>> {
        self.u_terminal.sample(grid)
    }
}

fn slope_tolerance(samples: &[f64], grid: &Grid) -> f64 {
    let mag = samples.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let l = grid.length();
    SAMPLE_TOL * (1.0 + mag) + 100.0 * (mag / l) * (grid.dx / l).powi(2)
}

fn check_density_samples(m0: &[f64], grid: &Grid) -> Result<()> {
    let mag = m0.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let tol = SAMPLE_TOL * (1.0 + mag);
    if let Some((i, v)) = m0.iter().enumerate().find(|(_, v)| **v < -tol) {
        return Err(Error::invalid("m0", format!("negative sample {v} at node {i}")));
    }
    let n = grid.nx;
    if m0[0].abs() > tol || m0[n].abs() > tol {
        return Err(Error::invalid("m0", "must vanish at x = 0 and x = L"));
    }
    let mass = trapezoid(m0, grid.dx);
    if (mass - 1.0).abs() > tol {
        return Err(Error::invalid("m0", format!("integral is {mass}, expected 1")));
    }
    let slope = gradient(m0, grid.dx)[n];
    if slope.abs() > slope_tolerance(m0, grid) {
        return Err(Error::invalid("m0", format!("slope at x = L is {slope}, expected 0")));
    }
    Ok(())
}

fn check_terminal_samples(ut: &[f64], grid: &Grid) -> Result<()> {
    let mag = ut.iter().fold(0.0, |a: f64, v| a.max(v.abs()));
    let tol = SAMPLE_TOL * (1.0 + mag);
    let n = grid.nx;
    if ut[0].abs() > tol {
        return Err(Error::invalid("uT", format!("uT(0) = {}, expected 0", ut[0])));
    }
    if let Some((i, v)) = ut.iter().enumerate().find(|(_, v)| **v < -tol) {
        return Err(Error::invalid("uT", format!("negative sample {v} at node {i}")));
    }
    if let Some(i) = ut.windows(2).position(|w| w[1] < w[0] - tol) {
        return Err(Error::invalid("uT", format!("decreases between nodes {i} and {}", i + 1)));
    }
    let slope = gradient(ut, grid.dx)[n];
    if slope.abs() > slope_tolerance(ut, grid) {
        return Err(Error::invalid("uT", format!("slope at x = L is {slope}, expected 0")));
    }
    Ok(())
}
