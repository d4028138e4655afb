//! Finite-difference solver for the Bertrand/Cournot mean field game of
//! exhaustible-resource producers, together with an auditor that checks the
//! a priori estimates such a solution must satisfy.
//!
//! The system couples a backward Hamilton-Jacobi-Bellman equation for the
//! producer value `u(t, x)` with a forward Fokker-Planck equation for the
//! producer density `m(t, x)`. The coupling is nonlocal: both equations see
//! the population only through the remaining mass `eta(t)` and the
//! aggregate `Q(t) = int u_x m dx`.
//!
//! Module map:
//!
//! * [`grid`], [`params`]: grids, sampled fields and model data.
//! * [`model`]: pointwise economic coefficients, Hamiltonian and drift.
//! * [`hjb`], [`fp`]: the two single-equation solvers.
//! * [`coupling`]: damped fixed-point iteration and tau-continuation.
//! * [`audit`]: invariant and estimate checks on a computed solution.
//! * [`config`], [`io`], [`runner`]: configuration, persistence and the
//!   command-line workflows.

pub mod audit;
pub mod config;
pub mod coupling;
pub mod error;
pub mod fp;
pub mod grid;
pub mod hjb;
pub mod io;
pub mod model;
pub mod params;
pub mod runner;
pub mod tridiag;
pub mod verification;

pub use error::{Error, Result};
pub use grid::{Discretization, Field, Grid, ScalarPath};
pub use params::{ModelParams, Profile};
