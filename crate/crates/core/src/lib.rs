//! Riemann-invariant simulation of the damped wave equation
//!
//! ```text
//! z_tt - z_xx + a(x) z_t = 0 on (0, 1),  z(t, 0) = z(t, 1) = 0
//! ```
//!
//! together with its `L^p` energy functionals, a fixed-point reference
//! solver, decay diagnostics and executable checks of the convex
//! inequalities behind the decay estimates.

pub mod analysis;
pub mod dalembert;
pub mod energy;
mod error;
pub mod ineq;
pub mod quad;
pub mod riemann;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    build_cutoffs, init_state, make_grid, sample_damping, CutoffTriple, DampingBound,
    DampingProfile, DampingSpec, Grid, InitialData, Interval, PExponent, RiemannState,
};
