//! Invariant and estimate checks on a computed `(u, m)` pair.
//!
//! Every check is a pure function of a [`Solution`] and an
//! [`AuditTolerances`]; the solution is never modified. Estimates with
//! non-explicit constants are recorded as finite quantities here and
//! compared across resolutions by [`refinement_study`].
//!
//! Scheme-dependent tolerances are `tol_scheme = 10 (dt + dx^2) |u|_inf`.

use serde::Serialize;

use crate::coupling::Solution;
use crate::grid::{gradient, second_derivative_right, trapezoid};
use crate::model::{drift, hamiltonian};

/// How a metric is judged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `value <= bound + tolerance`
    AtMost,
    /// `value >= bound - tolerance`
    AtLeast,
    /// `|value - bound| <= tolerance`
    Within,
    /// Only required to be finite.
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    pub bound: Option<f64>,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Metric {
    fn new(name: &str, value: f64, bound: Option<f64>, tolerance: f64, comparison: Comparison) -> Self {
        let passed = value.is_finite()
            && match (comparison, bound) {
                (Comparison::Finite, _) => true,
                (_, None) => false,
                (Comparison::AtMost, Some(b)) => value <= b + tolerance,
                (Comparison::AtLeast, Some(b)) => value >= b - tolerance,
                (Comparison::Within, Some(b)) => (value - b).abs() <= tolerance,
            };
        Self {
            name: name.to_string(),
            value,
            bound,
            tolerance,
            comparison,
            passed,
        }
    }

    pub fn at_most(name: &str, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, value, Some(bound), tolerance, Comparison::AtMost)
    }

    pub fn at_least(name: &str, value: f64, bound: f64, tolerance: f64) -> Self {
        Self::new(name, value, Some(bound), tolerance, Comparison::AtLeast)
    }

    pub fn within(name: &str, value: f64, target: f64, tolerance: f64) -> Self {
        Self::new(name, value, Some(target), tolerance, Comparison::Within)
    }

    pub fn finite(name: &str, value: f64) -> Self {
        Self::new(name, value, None, 0.0, Comparison::Finite)
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub metrics: Vec<Metric>,
    /// Where the first violation occurred, if any.
    pub detail: Option<String>,
}

impl CheckRecord {
    fn new(name: &str, metrics: Vec<Metric>, detail: Option<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: metrics.iter().all(|m| m.passed),
            metrics,
            detail,
        }
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.metric(name).map(|m| m.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl AuditReport {
    pub fn from_checks(checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { checks, passed }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditTolerances {
    /// Lower bound allowed for `m` and for `m_x(t, 0)`.
    pub density_floor: f64,
    /// Mass at `t = 0` and per-step mass increase.
    pub mass: f64,
    /// Factor in `tol_scheme = factor (dt + dx^2) |u|_inf`.
    pub scheme_factor: f64,
    /// Largest accepted `|energy residual| / (dt + dx)`.
    pub energy_constant: f64,
}

impl Default for AuditTolerances {
    fn default() -> Self {
        Self {
            density_floor: 1e-12,
            mass: 1e-10,
            scheme_factor: 10.0,
            energy_constant: 10.0,
        }
    }
}

impl AuditTolerances {
    pub fn scheme(&self, sol: &Solution) -> f64 {
        let g = &sol.grid;
        self.scheme_factor * (g.dt + g.dx * g.dx) * sol.u.max_abs()
    }
}

/// Trapezoid in time of per-node values.
fn time_integral(values: &[f64], dt: f64) -> f64 {
    trapezoid(values, dt)
}

fn argmin(sol_field: &crate::grid::Field) -> (usize, usize, f64) {
    let v = sol_field.values();
    let mut best = (0, 0, f64::INFINITY);
    for ((n, i), &x) in v.indexed_iter() {
        if x < best.2 || x.is_nan() {
            best = (n, i, x);
        }
    }
    best
}

/// `m >= -density_floor`, `u >= -tol_scheme` and
/// `u >= e^{-rT} min u(T) - tol_scheme`.
pub fn check_positivity(sol: &Solution, tol: &AuditTolerances) -> CheckRecord {
    let scheme = tol.scheme(sol);
    let (mn, mi, m_min) = argmin(&sol.m);
    let (un, ui, u_min) = argmin(&sol.u);
    let terminal_min = sol
        .u
        .slice(sol.grid.nt)
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let floor = (-sol.params.r * sol.grid.horizon()).exp() * terminal_min;
    let metrics = vec![
        Metric::at_least("min_m", m_min, 0.0, tol.density_floor),
        Metric::at_least("min_u", u_min, 0.0, scheme),
        Metric::at_least("min_u_vs_discounted_terminal", u_min, floor, scheme),
    ];
    let detail = if !metrics[0].passed {
        Some(format!("m = {m_min:e} at time node {mn}, space node {mi}"))
    } else if !(metrics[1].passed && metrics[2].passed) {
        Some(format!("u = {u_min:e} at time node {un}, space node {ui}"))
    } else {
        None
    };
    CheckRecord::new("positivity", metrics, detail)
}

/// `eta(0) = tau`, `eta` nonincreasing and inside `[0, 1]`.
pub fn check_mass(sol: &Solution, tol: &AuditTolerances) -> CheckRecord {
    let eta = sol.eta.values();
    let mut worst_rise = 0.0_f64;
    let mut rise_at = None;
    for (n, w) in eta.windows(2).enumerate() {
        let rise = w[1] - w[0];
        if rise > worst_rise {
            worst_rise = rise;
            rise_at = Some(n + 1);
        }
    }
    let lo = eta.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let metrics = vec![
        Metric::within("eta_initial", eta[0], sol.tau_final, tol.mass),
        Metric::at_most("max_step_increase", worst_rise, 0.0, tol.mass),
        Metric::at_least("min_eta", lo, 0.0, tol.mass),
        Metric::at_most("max_eta", hi, 1.0, tol.mass),
        Metric::finite("eta_final", eta[eta.len() - 1]),
    ];
    let detail = match rise_at {
        Some(n) if !metrics[1].passed => Some(format!("mass increases into time node {n}")),
        _ => None,
    };
    CheckRecord::new("mass", metrics, detail)
}

/// Residual of the discrete energy identity
/// `int u(T) m(T) - int u(0) m(0) - r intint u m + intint m H + intint m u_x G`
/// (with `H` and `G` scaled by tau).
pub fn energy_identity_residual(sol: &Solution) -> f64 {
    let g = &sol.grid;
    let tau = sol.tau_final;
    let mut um = Vec::with_capacity(g.nt + 1);
    let mut dissipation = Vec::with_capacity(g.nt + 1);
    let mut prod = vec![0.0; g.nx + 1];
    let mut diss = vec![0.0; g.nx + 1];
    for n in 0..=g.nt {
        let u = sol.u.slice(n);
        let m = sol.m.slice(n);
        let ux = gradient(u, g.dx);
        let f = sol.f[n];
        for i in 0..=g.nx {
            prod[i] = u[i] * m[i];
            diss[i] = tau * m[i] * (hamiltonian(f, ux[i]) + ux[i] * drift(f, ux[i]));
        }
        um.push(trapezoid(&prod, g.dx));
        dissipation.push(trapezoid(&diss, g.dx));
    }
    um[g.nt] - um[0] - sol.params.r * time_integral(&um, g.dt) + time_integral(&dissipation, g.dt)
}

/// `intint m u_x^2`.
pub fn dissipation_integral(sol: &Solution) -> f64 {
    let g = &sol.grid;
    let mut per_node = Vec::with_capacity(g.nt + 1);
    let mut w = vec![0.0; g.nx + 1];
    for n in 0..=g.nt {
        let ux = gradient(sol.u.slice(n), g.dx);
        for ((wi, d), mi) in w.iter_mut().zip(&ux).zip(sol.m.slice(n)) {
            *wi = mi * d * d;
        }
        per_node.push(trapezoid(&w, g.dx));
    }
    time_integral(&per_node, g.dt)
}

/// The explicit right-hand side `(2+eps)(1+eps)T + 4(2+eps) max u(T)`.
pub fn energy_bound(sol: &Solution) -> f64 {
    let eps = sol.params.epsilon;
    let terminal_max = sol
        .u
        .slice(sol.grid.nt)
        .iter()
        .copied()
        .fold(0.0, f64::max);
    (2.0 + eps) * (1.0 + eps) * sol.grid.horizon() + 4.0 * (2.0 + eps) * terminal_max
}

pub fn check_energy(sol: &Solution, tol: &AuditTolerances) -> CheckRecord {
    let g = &sol.grid;
    let residual = energy_identity_residual(sol).abs();
    let h = g.dt + g.dx;
    let bound = energy_bound(sol);
    let metrics = vec![
        Metric::at_most("identity_residual", residual, tol.energy_constant * h, 0.0),
        Metric::finite("residual_constant", residual / h),
        Metric::at_most("dissipation", dissipation_integral(sol), bound, 0.0),
    ];
    CheckRecord::new("energy", metrics, None)
}

/// `u_x >= -tol_scheme`, `m_x(t, 0) >= -density_floor`,
/// `u_xx(t, L) <= tol_scheme`.
pub fn check_signs(sol: &Solution, tol: &AuditTolerances) -> CheckRecord {
    let g = &sol.grid;
    let scheme = tol.scheme(sol);
    let mut ux_min = (f64::INFINITY, 0, 0);
    let mut mx0_min = (f64::INFINITY, 0);
    let mut uxx_max = (f64::NEG_INFINITY, 0);
    for n in 0..=g.nt {
        let ux = gradient(sol.u.slice(n), g.dx);
        for (i, &d) in ux.iter().enumerate() {
            if d < ux_min.0 {
                ux_min = (d, n, i);
            }
        }
        let mx0 = gradient(sol.m.slice(n), g.dx)[0];
        if mx0 < mx0_min.0 {
            mx0_min = (mx0, n);
        }
        let uxx = second_derivative_right(sol.u.slice(n), g.dx);
        if uxx > uxx_max.0 {
            uxx_max = (uxx, n);
        }
    }
    let metrics = vec![
        Metric::at_least("min_u_x", ux_min.0, 0.0, scheme),
        Metric::at_least("min_m_x_left", mx0_min.0, 0.0, tol.density_floor),
        Metric::at_most("max_u_xx_right", uxx_max.0, 0.0, scheme),
    ];
    let detail = if !metrics[0].passed {
        Some(format!("u_x = {:e} at time node {}, space node {}", ux_min.0, ux_min.1, ux_min.2))
    } else if !metrics[1].passed {
        Some(format!("m_x(t, 0) = {:e} at time node {}", mx0_min.0, mx0_min.1))
    } else if !metrics[2].passed {
        Some(format!("u_xx(t, L) = {:e} at time node {}", uxx_max.0, uxx_max.1))
    } else {
        None
    };
    CheckRecord::new("signs", metrics, detail)
}

fn boundary_terms(sol: &Solution) -> Vec<f64> {
    let g = &sol.grid;
    let half_sigma2 = 0.5 * sol.params.sigma * sol.params.sigma;
    (0..=g.nt)
        .map(|n| {
            let u = sol.u.slice(n);
            let m = sol.m.slice(n);
            let ux0 = gradient(u, g.dx)[0];
            let mx0 = gradient(m, g.dx)[0];
            let uxx_l = second_derivative_right(u, g.dx);
            -half_sigma2 * (ux0 * mx0 + uxx_l * m[g.nx])
        })
        .collect()
}

/// Sup over time nodes of the integrated flux identity
/// `e^{-rt} Q(t) - Q(0) = int_0^t e^{-rs} B(s) ds` with
/// `B = -(sigma^2/2) [u_x(t,0) m_x(t,0) + u_xx(t,L) m(t,L)]`.
pub fn nonlocal_identity_residual(sol: &Solution) -> f64 {
    let g = &sol.grid;
    let r = sol.params.r;
    let b = boundary_terms(sol);
    let q = sol.q.values();
    let discounted = |n: usize, v: f64| (-r * g.t[n]).exp() * v;
    let mut integral = 0.0;
    let mut worst = 0.0_f64;
    for n in 0..g.nt {
        integral += 0.5 * g.dt * (discounted(n, b[n]) + discounted(n + 1, b[n + 1]));
        worst = worst.max((discounted(n + 1, q[n + 1]) - q[0] - integral).abs());
    }
    worst
}

/// Sup over steps of the differenced identity `Q' - r Q = B`. Dominated by
/// the corner layers at `t = 0` and `t = T`.
pub fn nonlocal_pointwise_residual(sol: &Solution) -> f64 {
    let g = &sol.grid;
    let b = boundary_terms(sol);
    let q = sol.q.values();
    (0..g.nt)
        .map(|n| {
            let lhs = (q[n + 1] - q[n]) / g.dt - sol.params.r * 0.5 * (q[n] + q[n + 1]);
            (lhs - 0.5 * (b[n] + b[n + 1])).abs()
        })
        .fold(0.0, f64::max)
}

pub fn check_nonlocal(sol: &Solution, _tol: &AuditTolerances) -> CheckRecord {
    let metrics = vec![
        Metric::finite("max_abs_q", sol.q.max_abs()),
        Metric::finite("identity_residual", nonlocal_identity_residual(sol)),
        Metric::finite("pointwise_residual", nonlocal_pointwise_residual(sol)),
        Metric::finite("max_abs_f", sol.f.max_abs()),
    ];
    CheckRecord::new("nonlocal", metrics, None)
}

/// `intint m_x^2 / (m + 1)`.
pub fn entropy_integral(sol: &Solution) -> f64 {
    let g = &sol.grid;
    let mut per_node = Vec::with_capacity(g.nt + 1);
    let mut w = vec![0.0; g.nx + 1];
    for n in 0..=g.nt {
        let m = sol.m.slice(n);
        let mx = gradient(m, g.dx);
        for ((wi, d), mi) in w.iter_mut().zip(&mx).zip(m) {
            *wi = d * d / (mi + 1.0);
        }
        per_node.push(trapezoid(&w, g.dx));
    }
    time_integral(&per_node, g.dt)
}

pub fn check_entropy(sol: &Solution, _tol: &AuditTolerances) -> CheckRecord {
    CheckRecord::new("entropy", vec![Metric::finite("integral", entropy_integral(sol))], None)
}

/// Largest discrete `u_x` overall and on the parabolic boundary
/// (`t = T`, `x = 0`, `x = L`).
pub fn gradient_extremes(sol: &Solution) -> (f64, f64) {
    let g = &sol.grid;
    let mut interior = f64::NEG_INFINITY;
    let mut boundary = 0.0_f64;
    for n in 0..=g.nt {
        let ux = gradient(sol.u.slice(n), g.dx);
        interior = ux.iter().copied().fold(interior, f64::max);
        boundary = boundary.max(ux[0].abs()).max(ux[g.nx].abs());
        if n == g.nt {
            boundary = ux.iter().fold(boundary, |b, d| b.max(d.abs()));
        }
    }
    (interior, boundary)
}

/// `max u_x` against the maximum principle for `u_x`.
pub fn check_gradient_bound(sol: &Solution, tol: &AuditTolerances) -> CheckRecord {
    let (max_ux, boundary) = gradient_extremes(sol);
    let metrics = vec![
        Metric::at_most("max_u_x", max_ux, boundary, tol.scheme(sol)),
        Metric::finite("max_boundary_u_x", boundary),
    ];
    CheckRecord::new("gradient_bound", metrics, None)
}

pub fn audit_with(sol: &Solution, tol: &AuditTolerances) -> AuditReport {
    let checks: [fn(&Solution, &AuditTolerances) -> CheckRecord; 7] = [
        check_positivity,
        check_mass,
        check_energy,
        check_signs,
        check_nonlocal,
        check_entropy,
        check_gradient_bound,
    ];
    AuditReport::from_checks(checks.iter().map(|c| c(sol, tol)).collect())
}

pub fn audit_all(sol: &Solution) -> AuditReport {
    audit_with(sol, &AuditTolerances::default())
}

/// Required improvement and allowed drift between two resolutions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementTolerances {
    pub energy_ratio: f64,
    pub nonlocal_ratio: f64,
    pub q_change: f64,
    pub f_change: f64,
    pub gradient_change: f64,
    pub entropy_change: f64,
}

impl Default for RefinementTolerances {
    fn default() -> Self {
        Self {
            energy_ratio: 1.7,
            nonlocal_ratio: 1.5,
            q_change: 0.1,
            f_change: 0.1,
            gradient_change: 0.1,
            entropy_change: 0.2,
        }
    }
}

fn relative_change(coarse: f64, fine: f64) -> f64 {
    if coarse == fine {
        0.0
    } else {
        (fine - coarse).abs() / coarse.abs().max(fine.abs())
    }
}

fn ratio(coarse: f64, fine: f64) -> f64 {
    if fine == 0.0 {
        f64::INFINITY
    } else {
        coarse / fine
    }
}

/// Compares a solution with one computed on a refined grid.
pub fn refinement_study(coarse: &Solution, fine: &Solution, tol: &RefinementTolerances) -> CheckRecord {
    let energy = ratio(
        energy_identity_residual(coarse).abs(),
        energy_identity_residual(fine).abs(),
    );
    let nonlocal = ratio(nonlocal_identity_residual(coarse), nonlocal_identity_residual(fine));
    let metrics = vec![
        Metric::at_least("energy_residual_ratio", energy, tol.energy_ratio, 0.0),
        Metric::at_least("nonlocal_residual_ratio", nonlocal, tol.nonlocal_ratio, 0.0),
        Metric::at_most(
            "max_abs_q_change",
            relative_change(coarse.q.max_abs(), fine.q.max_abs()),
            tol.q_change,
            0.0,
        ),
        Metric::at_most(
            "max_abs_f_change",
            relative_change(coarse.f.max_abs(), fine.f.max_abs()),
            tol.f_change,
            0.0,
        ),
        Metric::at_most(
            "max_u_x_change",
            relative_change(gradient_extremes(coarse).0, gradient_extremes(fine).0),
            tol.gradient_change,
            0.0,
        ),
        Metric::at_most(
            "entropy_change",
            relative_change(entropy_integral(coarse), entropy_integral(fine)),
            tol.entropy_change,
            0.0,
        ),
    ];
    CheckRecord::new("refinement", metrics, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{continuation_solve, picard_solve};
    use crate::fp;
    use crate::grid::{build_grid, Discretization, Field, Grid, ScalarPath};
    use crate::hjb::HjbScheme;
    use crate::params::ModelParams;
    use std::f64::consts::PI;

    fn zero_solution() -> Solution {
        let p = ModelParams::default();
        let d = Discretization::with_size(20, 20);
        let g = build_grid(&p, &d).unwrap();
        picard_solve(&p, &d, &ScalarPath::constant(&g, 0.0), 0.0).unwrap()
    }

    fn default_solution(nx: usize, nt: usize) -> Solution {
        continuation_solve(&ModelParams::default(), &Discretization::with_size(nx, nt)).unwrap()
    }

    #[test]
    fn zero_solution_passes_with_exact_values() {
        let s = zero_solution();
        let rep = audit_all(&s);
        assert!(rep.passed, "{:?}", rep.failed());
        let pos = rep.check("positivity").unwrap();
        assert_eq!(pos.value("min_m"), Some(0.0));
        assert_eq!(pos.value("min_u"), Some(0.0));
        assert_eq!(energy_identity_residual(&s), 0.0);
        assert_eq!(dissipation_integral(&s), 0.0);
        assert_eq!(nonlocal_identity_residual(&s), 0.0);
        assert_eq!(entropy_integral(&s), 0.0);
        assert_eq!(gradient_extremes(&s), (0.0, 0.0));
        let signs = rep.check("signs").unwrap();
        assert_eq!(signs.value("min_u_x"), Some(0.0));
        assert_eq!(signs.value("max_u_xx_right"), Some(0.0));
    }

    #[test]
    fn default_run_passes() {
        let s = default_solution(50, 100);
        let rep = audit_all(&s);
        assert!(rep.passed, "{:?}", rep.failed());
        let e = rep.check("energy").unwrap().metric("dissipation").unwrap();
        assert!(e.value < e.bound.unwrap());
    }

    #[test]
    fn planted_negative_density_is_located() {
        let mut s = default_solution(20, 20);
        s.m.values_mut()[[7, 4]] = -1e-3;
        let rep = audit_all(&s);
        assert!(!rep.passed);
        assert!(rep.failed().contains(&"positivity"));
        let detail = rep.check("positivity").unwrap().detail.clone().unwrap();
        assert!(detail.contains("time node 7") && detail.contains("space node 4"), "{detail}");
    }

    #[test]
    fn planted_mass_increase_fails() {
        let mut s = default_solution(20, 20);
        s.eta.0[5] = s.eta.0[4] + 1e-6;
        let rec = check_mass(&s, &AuditTolerances::default());
        assert!(!rec.passed);
        assert!(rec.detail.unwrap().contains("time node 5"));
    }

    #[test]
    fn constant_in_time_density_passes_monotonicity() {
        let p = ModelParams::default();
        let g = Grid::new(1.0, 1.0, 20, 10).unwrap();
        let m0 = p.initial_density(&g).unwrap();
        let m = Field::from_rows(&vec![m0; 11]).unwrap();
        let s = Solution::from_fields(p, g.clone(), Field::zeros(&g), m, 1.0).unwrap();
        let rec = check_mass(&s, &AuditTolerances::default());
        assert!(rec.passed);
        assert_eq!(rec.value("max_step_increase"), Some(0.0));
    }

    #[test]
    fn pure_diffusion_mass_follows_mode_decay() {
        let (nx, nt) = (64, 1000);
        let g = Grid::new(1.0, 1.0, nx, nt).unwrap();
        let p = ModelParams::default();
        let mode: Vec<f64> = g.x.iter().map(|x| (0.5 * PI * x).sin()).collect();
        let mass = crate::grid::trapezoid(&mode, g.dx);
        let initial: Vec<f64> = mode.iter().map(|v| v / mass).collect();
        let m = fp::sweep(&initial, &Field::zeros(&g), p.sigma, &g).unwrap();
        let s = Solution::from_fields(p.clone(), g.clone(), Field::zeros(&g), m, 1.0).unwrap();
        let rec = check_mass(&s, &AuditTolerances::default());
        assert!(rec.passed, "{rec:?}");
        let rate = p.sigma * p.sigma * PI * PI / 8.0;
        let expected = (-rate).exp();
        assert!((s.eta[nt] - expected).abs() <= 5.0 * (g.dt + g.dx * g.dx));
    }

    #[test]
    fn pure_diffusion_entropy_matches_closed_form_integrand() {
        let (nx, nt) = (64, 1000);
        let g = Grid::new(1.0, 1.0, nx, nt).unwrap();
        let p = ModelParams::default();
        let rate = p.sigma * p.sigma * PI * PI / 8.0;
        let initial: Vec<f64> = g.x.iter().map(|x| (0.5 * PI * x).sin()).collect();
        let m = fp::sweep(&initial, &Field::zeros(&g), p.sigma, &g).unwrap();
        let s = Solution::from_fields(p, g.clone(), Field::zeros(&g), m, 1.0).unwrap();
        let exact = Field::from_fn(&g, |t, x| {
            let a = (-rate * t).exp();
            let mx = a * 0.5 * PI * (0.5 * PI * x).cos();
            mx * mx / (a * (0.5 * PI * x).sin() + 1.0)
        });
        let per_node: Vec<f64> = (0..=nt).map(|n| crate::grid::trapezoid(exact.slice(n), g.dx)).collect();
        let oracle = crate::grid::trapezoid(&per_node, g.dt);
        assert!((entropy_integral(&s) - oracle).abs() <= 5.0 * (g.dt + g.dx * g.dx), "{} {oracle}", entropy_integral(&s));
    }

    #[test]
    fn decreasing_terminal_data_breaks_gradient_sign() {
        let p = ModelParams::default();
        let d = Discretization::with_size(40, 40);
        let g = build_grid(&p, &d).unwrap();
        let terminal: Vec<f64> = g.x.iter().map(|x| 0.5 * (0.5 * PI * x).sin() * (1.0 - x)).collect();
        let f = ScalarPath::constant(&g, 1.0);
        let u = HjbScheme::new(&p, &d, &g, 1.0).sweep(&terminal, &f, None).unwrap();
        let m = fp::solve_fp(&u, &f, &p, &g, 1.0).unwrap();
        let s = Solution::from_fields(p, g, u, m, 1.0).unwrap();
        let rec = check_signs(&s, &AuditTolerances::default());
        assert!(!rec.passed);
        assert!(rec.detail.unwrap().starts_with("u_x"));
    }

    #[test]
    fn zero_intercept_gradient_respects_maximum_principle() {
        let p = ModelParams::default();
        let d = Discretization::with_size(80, 80);
        let g = build_grid(&p, &d).unwrap();
        let f = ScalarPath::constant(&g, 0.0);
        let u = crate::hjb::solve_hjb(&f, &p, &d, &g, 1.0).unwrap();
        let m = fp::solve_fp(&u, &f, &p, &g, 1.0).unwrap();
        let s = Solution::from_fields(p, g.clone(), u, m, 1.0).unwrap();
        let tol = AuditTolerances::default();
        let rec = check_gradient_bound(&s, &tol);
        assert!(rec.passed, "{rec:?}");
        // the boundary maximum is the terminal slope pi/4 at x = L/2
        let (max_ux, _) = gradient_extremes(&s);
        let terminal_max = crate::grid::gradient(s.u.slice(g.nt), g.dx)
            .into_iter()
            .fold(0.0, f64::max);
        assert!(max_ux <= terminal_max + tol.scheme(&s));
        assert!((terminal_max - PI / 4.0).abs() < 1e-3);
    }

    #[test]
    fn monopoly_paths_are_reproducible() {
        let mut p = ModelParams::default();
        p.epsilon = 0.0;
        let d = Discretization::with_size(30, 30);
        let a = continuation_solve(&p, &d).unwrap();
        let b = continuation_solve(&p, &d).unwrap();
        assert_eq!(a.q, b.q);
        assert_eq!(nonlocal_identity_residual(&a), nonlocal_identity_residual(&b));
    }

    #[test]
    fn refinement_pair_decays() {
        let coarse = default_solution(25, 50);
        let fine = default_solution(50, 100);
        let rec = refinement_study(&coarse, &fine, &RefinementTolerances::default());
        assert!(rec.passed, "{rec:?}");
    }

    #[test]
    fn identical_solutions_show_no_change() {
        let s = default_solution(20, 20);
        let rec = refinement_study(&s, &s, &RefinementTolerances::default());
        assert_eq!(rec.value("max_abs_q_change"), Some(0.0));
        assert_eq!(rec.value("energy_residual_ratio"), Some(1.0));
        assert!(!rec.passed);
    }

    #[test]
    fn metric_comparisons() {
        assert!(Metric::at_most("a", 1.0, 1.0, 0.0).passed);
        assert!(!Metric::at_most("a", 1.1, 1.0, 0.05).passed);
        assert!(Metric::at_least("a", 0.96, 1.0, 0.05).passed);
        assert!(Metric::within("a", 1.04, 1.0, 0.05).passed);
        assert!(!Metric::finite("a", f64::NAN).passed);
        assert!(!Metric::at_most("a", f64::NAN, 1.0, 0.0).passed);
    }
}
