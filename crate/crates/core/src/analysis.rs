//! Decay-rate fits, the constant-damping bound, smallness thresholds and
//! grid-convergence studies.

use crate::dalembert::{extend_even_periodic, extend_odd_periodic, picard_solve};
use crate::energy::energy_ep;
use crate::error::{Error, Result};
use crate::riemann::{evolve, Trajectory};
use crate::types::{sample_damping, DampingSpec, Grid, InitialData, Interval, PExponent};

/// Least-squares fit of `log E = intercept - gamma t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub gamma_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub window: Interval,
    pub samples: usize,
}

/// Minimum number of samples inside the fit window.
pub const MIN_FIT_SAMPLES: usize = 5;

/// Fit an exponential rate to `(times, energies)` restricted to `window`.
pub fn fit_decay_rate(times: &[f64], energies: &[f64], window: Interval) -> Result<DecayFit> {
    if times.len() != energies.len() {
        return Err(Error::InvalidArgument(format!(
            "{} times but {} energies",
            times.len(),
            energies.len()
        )));
    }
    let mut pts = Vec::new();
    for (&t, &e) in times.iter().zip(energies) {
        if !window.contains(t) {
            continue;
        }
        if !(e > 0.0) {
            return Err(Error::DegenerateFit(format!(
                "energy {e} at t = {t} is not strictly positive"
            )));
        }
        pts.push((t, e.ln()));
    }
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} samples in {window}, need at least {MIN_FIT_SAMPLES}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut stt, mut sty, mut syy) = (0.0, 0.0, 0.0);
    for &(t, y) in &pts {
        stt += (t - mean_t) * (t - mean_t);
        sty += (t - mean_t) * (y - mean_y);
        syy += (y - mean_y) * (y - mean_y);
    }
    if stt == 0.0 {
        return Err(Error::DegenerateFit("all samples at the same time".into()));
    }
    let slope = sty / stt;
    let intercept = mean_y - slope * mean_t;
    let ss_res: f64 = pts
        .iter()
        .map(|&(t, y)| (y - intercept - slope * t).powi(2))
        .sum();
    // a flat log-energy is fitted perfectly by a zero slope
    let r_squared = if syy <= f64::EPSILON * f64::EPSILON * n {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        gamma_hat: -slope,
        intercept,
        r_squared,
        window,
        samples: pts.len(),
    })
}

/// Default fit window `[t_end/4, t_end]`.
pub fn default_fit_window(t_end: f64) -> Interval {
    Interval::new(0.25 * t_end, t_end)
}

/// `E_p` at every recorded state of a trajectory.
pub fn trajectory_energies(traj: &Trajectory, p: PExponent) -> (Vec<f64>, Vec<f64>) {
    traj.states
        .iter()
        .map(|s| (s.t, energy_ep(s, &traj.grid, p)))
        .unzip()
}

/// `K_p = 1 / (p 2^p)`.
pub fn k_p(p: PExponent) -> f64 {
    1.0 / (p.p() * 2f64.powf(p.p()))
}

/// `M_alpha = -alpha + alpha^2 K_p^{1/p}`.
pub fn m_alpha(p: PExponent, alpha: f64) -> f64 {
    -alpha + alpha * alpha * k_p(p).powf(1.0 / p.p())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::OutOfRegime(format!(
            "alpha = {alpha}; the constant-damping bound is only established for 0 < alpha < 2"
        )))
    }
}

/// Upper bound on `E_p(t)` under constant damping `a = 2 alpha`:
/// `((2 + alpha)^2 e^{M_alpha t} E_p(0)^{1/p})^p`.
pub fn global_damping_bound(p: PExponent, alpha: f64, t: f64, ep0: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(ep0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("E_p(0) must be non-negative, got {ep0}")));
    }
    let pp = p.p();
    Ok(((2.0 + alpha).powi(2) * (m_alpha(p, alpha) * t).exp() * ep0.powf(1.0 / pp)).powf(pp))
}

/// Margin factor accepted by [`check_global_decay`].
pub const GLOBAL_BOUND_TOL: f64 = 1.0 + 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDampingReport {
    pub alpha: f64,
    pub p: f64,
    pub k_p: f64,
    pub m_alpha: f64,
    pub bound_satisfied: bool,
    /// `max_t E_p(t) / bound(t)`.
    pub worst_margin: f64,
    pub samples: usize,
}

/// Compare a constant-damping trajectory with [`global_damping_bound`] at
/// every recorded time.
pub fn check_global_decay(traj: &Trajectory, p: PExponent, alpha: f64) -> Result<GlobalDampingReport> {
    check_alpha(alpha)?;
    match traj.damping.constant_value() {
        Some(a) if (a - 2.0 * alpha).abs() <= 1e-12 * a.abs().max(1.0) => {}
        Some(a) => {
            return Err(Error::InvalidUse(format!(
                "trajectory has constant damping {a}, expected 2 alpha = {}",
                2.0 * alpha
            )))
        }
        None => {
            return Err(Error::InvalidUse(
                "the constant-damping bound needs a spatially constant damping".into(),
            ))
        }
    }
    let (times, energies) = trajectory_energies(traj, p);
    let ep0 = energies.first().copied().unwrap_or(0.0);
    let mut worst = 0.0f64;
    for (&t, &e) in times.iter().zip(&energies) {
        let bound = global_damping_bound(p, alpha, t, ep0)?;
        let ratio = if bound > 0.0 {
            e / bound
        } else if e > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(ratio);
    }
    Ok(GlobalDampingReport {
        alpha,
        p: p.p(),
        k_p: k_p(p),
        m_alpha: m_alpha(p, alpha),
        bound_satisfied: worst <= GLOBAL_BOUND_TOL,
        worst_margin: worst,
        samples: times.len(),
    })
}

/// Thresholds of the small-energy argument for `1 < p <= 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmallnessThresholds {
    /// `(p/8)^{1/p}`
    pub lambda_p: f64,
    /// `(p-1)/2`
    pub c_p: f64,
    /// `(1 + ln(8/c_p)) / gamma_p`
    pub t_p: f64,
}

pub fn smallness_thresholds(p: PExponent, gamma_p: f64) -> Result<SmallnessThresholds> {
    if !(gamma_p > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma_p must be positive, got {gamma_p}")));
    }
    let pp = p.p();
    if !(pp > 1.0 && pp <= 2.0) {
        return Err(Error::OutOfRegime(format!("thresholds are defined for 1 < p <= 2, got {pp}")));
    }
    let c_p = 0.5 * (pp - 1.0);
    Ok(SmallnessThresholds {
        lambda_p: (pp / 8.0).powf(1.0 / pp),
        c_p,
        t_p: (1.0 + (8.0 / c_p).ln()) / gamma_p,
    })
}

/// Shortest trajectory accepted by [`strong_stability_check`].
pub const STRONG_STABILITY_MIN_T: f64 = 10.0;

/// `E_p(t_end) <= epsilon E_p(0)`.
pub fn strong_stability_check(traj: &Trajectory, p: PExponent, epsilon: f64) -> Result<bool> {
    if traj.t_end() < STRONG_STABILITY_MIN_T {
        return Err(Error::InsufficientData(format!(
            "trajectory ends at t = {}, need t_end >= {STRONG_STABILITY_MIN_T}",
            traj.t_end()
        )));
    }
    let e0 = energy_ep(&traj.states[0], &traj.grid, p);
    let e1 = energy_ep(&traj.final_state, &traj.grid, p);
    Ok(e1 <= epsilon * e0)
}

/// Problem solved at every resolution of a convergence study.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub data: InitialData,
    pub damping: DampingSpec,
    pub t_end: f64,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl ProblemSpec {
    pub fn new(data: InitialData, damping: DampingSpec, t_end: f64) -> Self {
        Self {
            data,
            damping,
            t_end,
            picard_tol: 1e-13,
            picard_max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    /// Sup-norm of the `(z_x, z_t)` difference at `t_end`.
    pub error: f64,
    /// `log2(e_prev / e)`, absent on the first row.
    pub order: Option<f64>,
}

/// Compare the characteristic scheme at `t_end` against the fixed-point
/// solver (or the free d'Alembert solution when `a = 0`) on each grid.
pub fn convergence_study(problem: &ProblemSpec, n_list: &[usize]) -> Result<Vec<ConvergenceRow>> {
    if n_list.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "a convergence study needs at least 3 resolutions, got {}",
            n_list.len()
        )));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("resolutions must be strictly ascending".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let grid = Grid::new(n)?;
        let error = scheme_error(problem, &grid)?;
        let order = rows.last().map(|prev| {
            (prev.error / error).ln() / (n as f64 / prev.n as f64).ln()
        });
        rows.push(ConvergenceRow { n, error, order });
    }
    Ok(rows)
}

fn scheme_error(problem: &ProblemSpec, grid: &Grid) -> Result<f64> {
    let damping = sample_damping(&problem.damping, grid)?;
    let traj = evolve(&problem.data, &damping, grid, problem.t_end, usize::MAX)?;
    let state = &traj.final_state;
    let (zx, zt) = (state.z_x(), state.z_t());
    let k = grid.step_index(problem.t_end);
    let (ref_x, ref_t) = if matches!(problem.damping, DampingSpec::Zero) {
        free_solution(&problem.data, grid, k as f64 * grid.dt())
    } else {
        let sol = picard_solve(
            &problem.data,
            &damping,
            grid,
            problem.t_end,
            problem.picard_tol,
            problem.picard_max_iter,
        )?;
        (sol.z_x[k].clone(), sol.y[k].clone())
    };
    let err = zx
        .iter()
        .zip(&ref_x)
        .chain(zt.iter().zip(&ref_t))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(err)
}

/// `z_x`, `z_t` of the undamped problem from the d'Alembert formula.
fn free_solution(data: &InitialData, grid: &Grid, t: f64) -> (Vec<f64>, Vec<f64>) {
    let d0 = data.clone();
    let d1 = data.clone();
    let dz = extend_even_periodic(move |x| d0.z0_prime(x));
    let v = extend_odd_periodic(move |x| d1.z1(x));
    grid.nodes()
        .iter()
        .map(|&x| {
            let (ep, em) = (dz.value(x + t), dz.value(x - t));
            let (op, om) = (v.value(x + t), v.value(x - t));
            (0.5 * (ep + em) + 0.5 * (op - om), 0.5 * (ep - em) + 0.5 * (op + om))
        })
        .unzip()
}
