//! Uniform space-time grids, sampled fields and the discrete calculus shared
//! by the solvers and the auditor.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Grid sizes and iteration controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    /// Number of space intervals; nodes are `x_i = i L / nx`.
    pub nx: usize,
    /// Number of time steps; nodes are `t_n = n T / nt`.
    pub nt: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
    pub picard_tol: f64,
    pub picard_max: usize,
    /// Relaxation factor of the fixed-point update, in (0, 1].
    pub damping: f64,
    /// Homotopy schedule for tau, nondecreasing in [0, 1]; the last value is
    /// the problem actually solved.
    pub continuation: Vec<f64>,
}

impl Default for Discretization {
    fn default() -> Self {
        Self {
            nx: 200,
            nt: 400,
            newton_tol: 1e-11,
            newton_max: 50,
            picard_tol: 1e-8,
            picard_max: 500,
            damping: 0.5,
            continuation: vec![1.0],
        }
    }
}

impl Discretization {
    pub fn with_size(nx: usize, nt: usize) -> Self {
        Self {
            nx,
            nt,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 {
            return Err(Error::invalid("nx", format!("need at least 4 intervals, got {}", self.nx)));
        }
        if self.nt < 2 {
            return Err(Error::invalid("nt", format!("need at least 2 steps, got {}", self.nt)));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol.is_finite()) {
            return Err(Error::invalid("newton_tol", "must be positive"));
        }
        if self.newton_max == 0 {
            return Err(Error::invalid("newton_max", "must be positive"));
        }
        if !(self.picard_tol > 0.0 && self.picard_tol.is_finite()) {
            return Err(Error::invalid("picard_tol", "must be positive"));
        }
        if self.picard_max == 0 {
            return Err(Error::invalid("picard_max", "must be positive"));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::invalid("damping", format!("must lie in (0, 1], got {}", self.damping)));
        }
        validate_schedule(&self.continuation)
    }
}

fn validate_schedule(schedule: &[f64]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::invalid("continuation", "schedule is empty"));
    }
    if schedule.iter().any(|tau| !(0.0..=1.0).contains(tau)) {
        return Err(Error::invalid("continuation", "values must lie in [0, 1]"));
    }
    if schedule.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("continuation", "schedule must be nondecreasing"));
    }
    Ok(())
}

/// Uniform tensor grid on `[0, T] x [0, L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub nt: usize,
    pub dx: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

impl Grid {
    pub fn new(length: f64, horizon: f64, nx: usize, nt: usize) -> Result<Self> {
        if nx == 0 || nt == 0 {
            return Err(Error::Config(format!("grid sizes must be positive (nx={nx}, nt={nt})")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("L", "must be positive"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("T", "must be positive"));
        }
        Ok(Self {
            nx,
            nt,
            dx: length / nx as f64,
            dt: horizon / nt as f64,
            x: uniform_nodes(length, nx),
            t: uniform_nodes(horizon, nt),
        })
    }

    pub fn length(&self) -> f64 {
        self.x[self.nx]
    }

    pub fn horizon(&self) -> f64 {
        self.t[self.nt]
    }

    /// Dyadic refinement in both variables.
    pub fn refined(&self) -> Self {
        Self::new(self.length(), self.horizon(), 2 * self.nx, 2 * self.nt)
            .expect("refinement of a valid grid")
    }
}

fn uniform_nodes(extent: f64, intervals: usize) -> Vec<f64> {
    let mut nodes: Vec<f64> = (0..=intervals)
        .map(|i| extent * i as f64 / intervals as f64)
        .collect();
    nodes[0] = 0.0;
    nodes[intervals] = extent;
    nodes
}

/// Grid for a validated problem.
pub fn build_grid(params: &ModelParams, disc: &Discretization) -> Result<Grid> {
    disc.validate()?;
    params.validate_scalars()?;
    Grid::new(params.length, params.horizon, disc.nx, disc.nt)
}

/// A scalar function sampled on the space-time grid, rows indexed by time.
#[derive(Debug, Clone, PartialEq)]
pub struct Field(Array2<f64>);

impl Field {
    pub fn zeros(grid: &Grid) -> Self {
        Field(Array2::zeros((grid.nt + 1, grid.nx + 1)))
    }

    pub fn from_array(values: Array2<f64>) -> Result<Self> {
        if let Some(((n, i), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite entry {v} at (t node {n}, x node {i})")));
        }
        Ok(Field(values.as_standard_layout().into_owned()))
    }

    /// Builds a field by evaluating `value(t, x)` at every node.
    pub fn from_fn(grid: &Grid, value: impl Fn(f64, f64) -> f64) -> Self {
        Field(Array2::from_shape_fn((grid.nt + 1, grid.nx + 1), |(n, i)| {
            value(grid.t[n], grid.x[i])
        }))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let width = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::Shape("ragged rows".into()));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), width), flat)
            .map_err(|e| Error::Shape(e.to_string()))?;
        Self::from_array(values)
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.0.dim() != (grid.nt + 1, grid.nx + 1) {
            return Err(Error::Shape(format!(
                "field has shape {:?}, grid needs ({}, {})",
                self.0.dim(),
                grid.nt + 1,
                grid.nx + 1
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.0
    }

    pub fn n_times(&self) -> usize {
        self.0.nrows()
    }

    /// Space slice at time node `n`.
    pub fn slice(&self, n: usize) -> &[f64] {
        self.0
            .row(n)
            .to_slice()
            .expect("fields are stored in standard layout")
    }

    pub fn set_slice(&mut self, n: usize, values: &[f64]) {
        self.0.row_mut(n).assign(&ArrayView1::from(values));
    }

    pub fn get(&self, n: usize, i: usize) -> f64 {
        self.0[[n, i]]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Sup-norm distance between two fields of identical shape.
    pub fn sup_distance(&self, other: &Field) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()))
    }
}

/// A scalar function of time sampled on the time nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPath(pub Vec<f64>);

impl ScalarPath {
    pub fn constant(grid: &Grid, value: f64) -> Self {
        ScalarPath(vec![value; grid.nt + 1])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &ScalarPath) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .fold(0.0, |acc: f64, (a, b)| acc.max((a - b).abs()))
    }
}

impl std::ops::Index<usize> for ScalarPath {
    type Output = f64;

    fn index(&self, n: usize) -> &f64 {
        &self.0[n]
    }
}

/// Composite trapezoid rule on uniformly spaced samples.
pub fn trapezoid(profile: &[f64], dx: f64) -> f64 {
    assert!(profile.len() >= 2, "trapezoid needs at least two samples");
    let n = profile.len() - 1;
    let interior: f64 = profile[1..n].iter().sum();
    dx * (interior + 0.5 * (profile[0] + profile[n]))
}

/// Second-order first derivative: central in the interior, three-point
/// one-sided at both ends. Exact for quadratics.
pub fn gradient(profile: &[f64], dx: f64) -> Vec<f64> {
    assert!(profile.len() >= 3, "gradient needs at least three samples");
    let n = profile.len() - 1;
    let mut out = vec![0.0; n + 1];
    out[0] = (-3.0 * profile[0] + 4.0 * profile[1] - profile[2]) / (2.0 * dx);
    for i in 1..n {
        out[i] = (profile[i + 1] - profile[i - 1]) / (2.0 * dx);
    }
    out[n] = (3.0 * profile[n] - 4.0 * profile[n - 1] + profile[n - 2]) / (2.0 * dx);
    out
}

/// Second-order one-sided second derivative at the right end.
pub fn second_derivative_right(profile: &[f64], dx: f64) -> f64 {
    assert!(profile.len() >= 4, "need at least four samples");
    let n = profile.len() - 1;
    (2.0 * profile[n] - 5.0 * profile[n - 1] + 4.0 * profile[n - 2] - profile[n - 3]) / (dx * dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn grid_spacing_and_nodes() {
        let g = Grid::new(1.0, 1.0, 4, 2).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.dt, 0.5);
        assert_eq!(g.x, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.t, vec![0.0, 0.5, 1.0]);

        let g = Grid::new(2.0, 1.0, 8, 4).unwrap();
        assert_eq!(g.dx, 0.25);
        assert_eq!(g.dt, 0.25);
    }

    #[test]
    fn grid_endpoints_are_exact() {
        let g = Grid::new(0.7, 1.3, 37, 91).unwrap();
        assert_eq!(g.x[0], 0.0);
        assert_eq!(g.x[37], 0.7);
        assert_eq!(g.t[91], 1.3);
        assert!(g.x.windows(2).all(|w| w[1] > w[0]));
        assert!(g.t.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn zero_intervals_rejected() {
        assert!(matches!(Grid::new(1.0, 1.0, 0, 4), Err(Error::Config(_))));
        let disc = Discretization::with_size(0, 4);
        assert!(build_grid(&ModelParams::default(), &disc).is_err());
    }

    #[test]
    fn discretization_limits() {
        assert!(Discretization::with_size(3, 10).validate().is_err());
        assert!(Discretization::with_size(4, 1).validate().is_err());
        let mut d = Discretization::default();
        d.damping = 0.0;
        assert!(d.validate().is_err());
        d.damping = 1.0;
        d.continuation = vec![0.5, 0.25, 1.0];
        assert!(d.validate().is_err());
        d.continuation = vec![];
        assert!(d.validate().is_err());
        d.continuation = vec![0.0, 1.5];
        assert!(d.validate().is_err());
        d.continuation = vec![0.0, 0.5];
        d.validate().unwrap();
        d.continuation = vec![0.0, 0.5, 1.0];
        d.validate().unwrap();
    }

    #[test]
    fn trapezoid_examples() {
        assert_eq!(trapezoid(&[1.0; 5], 0.25), 1.0);
        let g = Grid::new(1.0, 1.0, 4, 2).unwrap();
        assert_eq!(trapezoid(&g.x, g.dx), 0.5);

        let g = Grid::new(1.0, 1.0, 100, 2).unwrap();
        let sq: Vec<f64> = g.x.iter().map(|x| x * x).collect();
        // antiderivative x^3/3 on [0, 1]
        assert_abs_diff_eq!(trapezoid(&sq, g.dx), 1.0 / 3.0, epsilon = 1e-4);
    }

    #[test]
    fn gradient_examples() {
        let g = Grid::new(1.0, 1.0, 10, 2).unwrap();
        let lin: Vec<f64> = g.x.iter().map(|x| 2.0 * x).collect();
        for d in gradient(&lin, g.dx) {
            assert_abs_diff_eq!(d, 2.0, epsilon = 1e-12);
        }
        let sq: Vec<f64> = g.x.iter().map(|x| x * x).collect();
        for (d, x) in gradient(&sq, g.dx).iter().zip(&g.x) {
            assert_abs_diff_eq!(*d, 2.0 * x, epsilon = 1e-12);
        }
        assert!(gradient(&[5.0; 11], g.dx).iter().all(|d| *d == 0.0));
    }

    #[test]
    fn right_second_derivative_is_exact_for_cubics() {
        let g = Grid::new(1.0, 1.0, 10, 2).unwrap();
        let cubic: Vec<f64> = g.x.iter().map(|x| x * x * x - x * x).collect();
        assert_abs_diff_eq!(second_derivative_right(&cubic, g.dx), 4.0, epsilon = 1e-9);
    }

    #[test]
    fn gradient_then_trapezoid_recovers_increment() {
        // p(0) = 0 and p'(1) = 0
        for nx in [20usize, 40, 80] {
            let g = Grid::new(1.0, 1.0, nx, 2).unwrap();
            let p: Vec<f64> = g.x.iter().map(|x| x * x * (1.0 - 2.0 * x / 3.0)).collect();
            let integral = trapezoid(&gradient(&p, g.dx), g.dx);
            assert!((integral - (p[nx] - p[0])).abs() <= 2.0 * g.dx * g.dx);
        }
    }

    #[test]
    fn field_shape_checks() {
        let g = Grid::new(1.0, 1.0, 4, 2).unwrap();
        let f = Field::zeros(&g);
        f.check_grid(&g).unwrap();
        let other = Grid::new(1.0, 1.0, 5, 2).unwrap();
        assert!(f.check_grid(&other).is_err());
        assert!(Field::from_rows(&[vec![1.0, f64::NAN]]).is_err());
    }

    proptest! {
        #[test]
        fn trapezoid_is_linear(
            a in proptest::collection::vec(-10.0f64..10.0, 6),
            b in proptest::collection::vec(-10.0f64..10.0, 6),
            alpha in -3.0f64..3.0,
        ) {
            let combo: Vec<f64> = a.iter().zip(&b).map(|(p, q)| alpha * p + q).collect();
            let lhs = trapezoid(&combo, 0.2);
            let rhs = alpha * trapezoid(&a, 0.2) + trapezoid(&b, 0.2);
            prop_assert!((lhs - rhs).abs() <= 1e-11 * (1.0 + lhs.abs()));
        }

        #[test]
        fn gradient_of_constant_vanishes(c in -1e3f64..1e3, n in 3usize..40) {
            let g = gradient(&vec![c; n], 0.1);
            prop_assert!(g[1..n - 1].iter().all(|d| *d == 0.0));
            prop_assert!(g.iter().all(|d| d.abs() <= 1e-12 * c.abs()));
        }
    }
}
