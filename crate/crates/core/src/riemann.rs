//! Characteristic solver for the Riemann-invariant system
//!
//! ```text
//! rho_t - rho_x = -a(x) (rho - xi) / 2
//! xi_t  + xi_x  =  a(x) (rho - xi) / 2
//! rho - xi = 0 at x = 0 and x = 1
//! ```
//!
//! One step of size `dt = dx` is relaxation over `dt/2`, exact transport over
//! one cell, then relaxation over `dt/2`. Relaxation solves the local ODE
//! exactly: `rho + xi` is frozen and `rho - xi` decays like `exp(-a t)`.
//! Transport shifts `rho` one node to the left and `xi` one node to the
//! right; the wall values come from reflecting the outgoing invariant, which
//! is the same as shifting the odd/even 2-periodic extension of the solution.

use crate::error::Result;
use crate::types::{init_state, DampingProfile, Grid, InitialData, RiemannState};

/// Recorded states of a simulation.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub grid: Grid,
    pub damping: DampingProfile,
    pub record_stride: usize,
    /// States at step indices `0, stride, 2 stride, ...`.
    pub states: Vec<RiemannState>,
    /// Last computed state, recorded or not.
    pub final_state: RiemannState,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn t_end(&self) -> f64 {
        self.final_state.t
    }
}

/// Precomputed half-step relaxation factors `exp(-a_j dt / 2)`.
#[derive(Debug, Clone)]
pub struct Stepper {
    half_decay: Vec<f64>,
    dt: f64,
}

impl Stepper {
    pub fn new(damping: &DampingProfile, grid: &Grid) -> Result<Self> {
        if damping.samples().len() != grid.n_nodes() {
            return Err(crate::Error::InvalidArgument(format!(
                "damping has {} samples, grid has {} nodes",
                damping.samples().len(),
                grid.n_nodes()
            )));
        }
        let half = 0.5 * grid.dt();
        Ok(Self {
            half_decay: damping.samples().iter().map(|a| (-a * half).exp()).collect(),
            dt: grid.dt(),
        })
    }

    /// Advance `state` by one step in place.
    pub fn advance(&self, state: &mut RiemannState) -> Result<()> {
        if state.rho.len() != self.half_decay.len() || state.xi.len() != self.half_decay.len() {
            return Err(crate::Error::InvalidArgument(format!(
                "state has {} nodes, stepper expects {}",
                state.rho.len(),
                self.half_decay.len()
            )));
        }
        relax(&mut state.rho, &mut state.xi, &self.half_decay);
        transport(&mut state.rho, &mut state.xi);
        relax(&mut state.rho, &mut state.xi, &self.half_decay);
        state.t += self.dt;
        Ok(())
    }
}

/// Exact relaxation of `d = rho - xi` with `s = rho + xi` held fixed.
pub(crate) fn relax(rho: &mut [f64], xi: &mut [f64], decay: &[f64]) {
    for ((r, x), &k) in rho.iter_mut().zip(xi.iter_mut()).zip(decay) {
        if k == 1.0 {
            continue;
        }
        let s = *r + *x;
        let d = (*r - *x) * k;
        *r = 0.5 * (s + d);
        *x = 0.5 * (s - d);
    }
}

/// Shift `rho` left and `xi` right by one node with wall reflection.
pub(crate) fn transport(rho: &mut [f64], xi: &mut [f64]) {
    let n = rho.len() - 1;
    let xi_inner_right = xi[n - 1];
    let rho_inner_left = rho[1];
    rho.copy_within(1..=n, 0);
    xi.copy_within(0..n, 1);
    rho[n] = xi_inner_right;
    xi[0] = rho_inner_left;
}

/// One step of the scheme.
pub fn step(state: &RiemannState, damping: &DampingProfile, grid: &Grid) -> Result<RiemannState> {
    state.check_grid(grid)?;
    let stepper = Stepper::new(damping, grid)?;
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

/// Number of steps needed to reach `t_end` from `t = 0`.
pub fn steps_for(grid: &Grid, t_end: f64) -> usize {
    grid.step_index(t_end)
}

/// Evolve from `initial`, calling `observer` on every state (including the
/// initial one). Times are `t0 + k dt` computed without accumulation.
pub fn evolve_with(
    initial: RiemannState,
    damping: &DampingProfile,
    grid: &Grid,
    n_steps: usize,
    mut observer: impl FnMut(usize, &RiemannState),
) -> Result<RiemannState> {
    initial.check_grid(grid)?;
    let stepper = Stepper::new(damping, grid)?;
    let t0 = initial.t;
    let mut state = initial;
    observer(0, &state);
    for k in 1..=n_steps {
        stepper.advance(&mut state)?;
        state.t = t0 + k as f64 * grid.dt();
        observer(k, &state);
    }
    Ok(state)
}

/// Evolve an explicit initial state up to `t_end`, recording every
/// `record_stride` steps.
pub fn evolve_from(
    initial: RiemannState,
    damping: &DampingProfile,
    grid: &Grid,
    t_end: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    if !(t_end > 0.0) {
        return Err(crate::Error::InvalidArgument(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    if record_stride == 0 {
        return Err(crate::Error::InvalidArgument(
            "record_stride must be positive".into(),
        ));
    }
    let n_steps = steps_for(grid, t_end);
    let mut states = Vec::with_capacity(n_steps / record_stride + 1);
    let final_state = evolve_with(initial, damping, grid, n_steps, |k, s| {
        if k % record_stride == 0 {
            states.push(s.clone());
        }
    })?;
    Ok(Trajectory {
        grid: grid.clone(),
        damping: damping.clone(),
        record_stride,
        states,
        final_state,
    })
}

/// Evolve the initial data up to `t_end`, recording every `record_stride` steps.
pub fn evolve(
    data: &InitialData,
    damping: &DampingProfile,
    grid: &Grid,
    t_end: f64,
    record_stride: usize,
) -> Result<Trajectory> {
    evolve_from(init_state(data, grid)?, damping, grid, t_end, record_stride)
}

/// Displacement and velocity recovered from the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub z: Vec<f64>,
    pub z_t: Vec<f64>,
}

/// `z_x = (rho + xi)/2`, `z_t = (rho - xi)/2`, and `z` by cumulative
/// trapezoidal integration of `z_x` from `z(0) = 0`.
pub fn reconstruct_z(state: &RiemannState, grid: &Grid) -> Reconstruction {
    let z = crate::quad::cumulative_trapezoid(&state.z_x(), grid.dx());
    Reconstruction { z, z_t: state.z_t() }
}
