//! Shared vocabulary: exponents, grids, damping profiles, Riemann states,
//! cutoff functions and initial data.
//!
//! Everything here is immutable after construction and `Send + Sync`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Relative tolerance for the conjugate-exponent identity `1/p + 1/q = 1`.
const CONJUGATE_TOL: f64 = 1e-14;

/// Lebesgue exponent `p >= 1` together with its conjugate `q`.
///
/// For `p = 1` the conjugate is stored as `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PExponent {
    p: f64,
    q: f64,
}

impl PExponent {
    pub fn new(p: f64) -> Result<Self> {
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidArgument(format!(
                "exponent p must be finite and >= 1, got {p}"
            )));
        }
        let q = if p == 1.0 { f64::INFINITY } else { p / (p - 1.0) };
        if p > 1.0 && q.is_finite() {
            let defect = (1.0 / p + 1.0 / q - 1.0).abs();
            debug_assert!(defect <= CONJUGATE_TOL * 4.0, "conjugate defect {defect}");
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// The exponent `q`, viewed as an exponent in its own right.
    pub fn conjugate(&self) -> Result<Self> {
        if self.p == 1.0 {
            return Err(Error::InvalidArgument(
                "p = 1 has no finite conjugate exponent".into(),
            ));
        }
        Self::new(self.q)
    }

    /// `true` for `1 < p < 2`, the range where the modified profile `G` is used.
    pub fn is_sub_quadratic(&self) -> bool {
        self.p > 1.0 && self.p < 2.0
    }
}

impl fmt::Display for PExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.p)
    }
}

/// Uniform mesh of `[0, 1]` with time step equal to the mesh size.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n_cells: usize,
    dx: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidArgument(format!(
                "n_cells must be at least 2, got {n_cells}"
            )));
        }
        let n = n_cells as f64;
        let nodes = (0..=n_cells).map(|j| j as f64 / n).collect();
        Ok(Self {
            n_cells,
            dx: 1.0 / n,
            nodes,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_nodes(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Always equal to [`Grid::dx`]: characteristics cross one cell per step.
    pub fn dt(&self) -> f64 {
        self.dx
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Nearest step index for time `t`.
    pub fn step_index(&self, t: f64) -> usize {
        (t / self.dt()).round().max(0.0) as usize
    }
}

/// Construct a grid with `n_cells` cells.
pub fn make_grid(n_cells: usize) -> Result<Grid> {
    Grid::new(n_cells)
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Ramp width used by [`DampingSpec::IndicatorSmoothed`].
pub const INDICATOR_RAMP: f64 = 0.02;

/// How the damping coefficient `a(x)` is defined.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingSpec {
    /// No damping at all. Outside the damping hypothesis; used for reference
    /// runs where the energy must be conserved.
    Zero,
    /// Global constant damping `a(x) = value` (written `2 alpha` in the
    /// constant-damping analysis).
    Constant { value: f64 },
    /// `a0` on `omega`, falling to zero through a C-infinity ramp of width
    /// `ramp` outside `omega`.
    SmoothBump { a0: f64, omega: Interval, ramp: f64 },
    /// A smoothed indicator: like `SmoothBump` with a fixed narrow ramp.
    IndicatorSmoothed { a0: f64, omega: Interval },
}

impl DampingSpec {
    /// Constant damping `a = 2 alpha`.
    pub fn constant_alpha(alpha: f64) -> Self {
        DampingSpec::Constant { value: 2.0 * alpha }
    }

    fn validate(&self) -> Result<()> {
        let check_omega = |a0: f64, omega: &Interval| -> Result<()> {
            if !(a0 > 0.0) || !a0.is_finite() {
                return Err(Error::HypothesisViolation(format!(
                    "lower bound a0 must be positive, got {a0}"
                )));
            }
            if !(omega.lo < omega.hi) || omega.lo < 0.0 || omega.hi > 1.0 {
                return Err(Error::HypothesisViolation(format!(
                    "omega {omega} must be a non-degenerate subinterval of [0, 1]"
                )));
            }
            Ok(())
        };
        match self {
            DampingSpec::Zero => Ok(()),
            DampingSpec::Constant { value } => {
                if !(*value > 0.0) || !value.is_finite() {
                    Err(Error::HypothesisViolation(format!(
                        "constant damping must be positive, got {value}"
                    )))
                } else {
                    Ok(())
                }
            }
            DampingSpec::SmoothBump { a0, omega, ramp } => {
                check_omega(*a0, omega)?;
                if !(*ramp > 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "ramp width must be positive, got {ramp}"
                    )));
                }
                Ok(())
            }
            DampingSpec::IndicatorSmoothed { a0, omega } => check_omega(*a0, omega),
        }
    }

    /// Evaluate `a(x)` for `x` in `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            DampingSpec::Zero => 0.0,
            DampingSpec::Constant { value } => *value,
            DampingSpec::SmoothBump { a0, omega, ramp } => a0 * plateau(x, omega, *ramp),
            DampingSpec::IndicatorSmoothed { a0, omega } => {
                a0 * plateau(x, omega, INDICATOR_RAMP)
            }
        }
    }
}

/// C-infinity transition from 0 (t <= 0) to 1 (t >= 1).
pub fn smooth_transition(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

fn plateau(x: f64, omega: &Interval, ramp: f64) -> f64 {
    if omega.contains(x) {
        1.0
    } else if x < omega.lo {
        smooth_transition((x - (omega.lo - ramp)) / ramp)
    } else {
        smooth_transition(((omega.hi + ramp) - x) / ramp)
    }
}

/// Lower bound and damped region recorded for a profile satisfying the
/// damping hypothesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingBound {
    pub a0: f64,
    pub omega: Interval,
}

/// Damping coefficient sampled at grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DampingProfile {
    spec: DampingSpec,
    samples: Vec<f64>,
    bound: Option<DampingBound>,
    sup_bound: f64,
}

impl DampingProfile {
    pub fn spec(&self) -> &DampingSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `None` only for [`DampingSpec::Zero`].
    pub fn bound(&self) -> Option<DampingBound> {
        self.bound
    }

    pub fn a0(&self) -> f64 {
        self.bound.map_or(0.0, |b| b.a0)
    }

    pub fn omega(&self) -> Option<Interval> {
        self.bound.map(|b| b.omega)
    }

    /// `A = max_j a(x_j)`.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// The constant value when the profile is spatially constant.
    pub fn constant_value(&self) -> Option<f64> {
        match self.spec {
            DampingSpec::Constant { value } => Some(value),
            DampingSpec::Zero => Some(0.0),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.spec.eval(x)
    }
}

/// Sample `spec` on `grid` and verify the damping hypothesis at the nodes.
pub fn sample_damping(spec: &DampingSpec, grid: &Grid) -> Result<DampingProfile> {
    spec.validate()?;
    let samples: Vec<f64> = grid.nodes().iter().map(|&x| spec.eval(x)).collect();
    let bound = match spec {
        DampingSpec::Zero => None,
        DampingSpec::Constant { value } => Some(DampingBound {
            a0: *value,
            omega: Interval::new(0.0, 1.0),
        }),
        DampingSpec::SmoothBump { a0, omega, .. }
        | DampingSpec::IndicatorSmoothed { a0, omega } => Some(DampingBound {
            a0: *a0,
            omega: *omega,
        }),
    };
    if let Some(b) = bound {
        for (&x, &a) in grid.nodes().iter().zip(&samples) {
            if a < 0.0 || (b.omega.contains(x) && a < b.a0) {
                return Err(Error::HypothesisViolation(format!(
                    "a({x}) = {a} violates a >= {} on {}",
                    b.a0, b.omega
                )));
            }
        }
    }
    let sup_bound = samples.iter().copied().fold(0.0, f64::max);
    Ok(DampingProfile {
        spec: spec.clone(),
        samples,
        bound,
        sup_bound,
    })
}

/// Riemann invariants `rho = z_x + z_t`, `xi = z_x - z_t` at the nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub xi: Vec<f64>,
}

impl RiemannState {
    pub fn new(t: f64, rho: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if rho.len() != xi.len() {
            return Err(Error::InvalidArgument(format!(
                "rho has {} entries but xi has {}",
                rho.len(),
                xi.len()
            )));
        }
        if !(t >= 0.0) || rho.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("state has non-finite entries".into()));
        }
        Ok(Self { t, rho, xi })
    }

    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.n_nodes();
        Self {
            t: 0.0,
            rho: vec![0.0; n],
            xi: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.rho.len() != grid.n_nodes() || self.xi.len() != grid.n_nodes() {
            return Err(Error::InvalidArgument(format!(
                "state has {} nodes, grid has {}",
                self.rho.len(),
                grid.n_nodes()
            )));
        }
        Ok(())
    }

    /// Multiply both invariants by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            t: self.t,
            rho: self.rho.iter().map(|v| v * factor).collect(),
            xi: self.xi.iter().map(|v| v * factor).collect(),
        }
    }

    /// `z_x = (rho + xi) / 2`.
    pub fn z_x(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.xi).map(|(r, x)| 0.5 * (r + x)).collect()
    }

    /// `z_t = (rho - xi) / 2`.
    pub fn z_t(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.xi).map(|(r, x)| 0.5 * (r - x)).collect()
    }

    /// Sup-norm distance over both invariants.
    pub fn sup_distance(&self, other: &RiemannState) -> f64 {
        self.rho
            .iter()
            .zip(&other.rho)
            .chain(self.xi.iter().zip(&other.xi))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Nested parameters `eps0 < eps1 < eps2` and the damped interval for the
/// cutoff functions `psi`, `phi`, `beta` localized near `x = 1`.
///
/// Each cutoff is a C1 piecewise cubic built from the smoothstep `3t^2 - 2t^3`:
///
/// * `psi` is 1 on `[0, 1 - eps1]` and 0 on `[1 - eps0, 1]`,
/// * `phi` is 0 on `[0, 1 - eps2]` and 1 on `[1 - eps1, 1]`,
/// * `beta` is 0 on `[0, c]` and 1 on `[1 - eps2, 1]` where `omega = [c, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffTriple {
    eps: [f64; 3],
    omega: Interval,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_derivative(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        6.0 * t * (1.0 - t)
    }
}

/// Rising ramp from 0 at `lo` to 1 at `hi`.
fn ramp_up(x: f64, lo: f64, hi: f64) -> f64 {
    if x <= lo {
        0.0
    } else if x >= hi {
        1.0
    } else {
        smoothstep((x - lo) / (hi - lo))
    }
}

fn ramp_up_derivative(x: f64, lo: f64, hi: f64) -> f64 {
    smoothstep_derivative((x - lo) / (hi - lo)) / (hi - lo)
}

impl CutoffTriple {
    pub fn eps(&self) -> [f64; 3] {
        self.eps
    }

    pub fn omega(&self) -> Interval {
        self.omega
    }

    /// `Q_i = (1 - eps_i, 1 + eps_i)`.
    pub fn q(&self, i: usize) -> Interval {
        Interval::new(1.0 - self.eps[i], 1.0 + self.eps[i])
    }

    pub fn psi(&self, x: f64) -> f64 {
        1.0 - ramp_up(x, 1.0 - self.eps[1], 1.0 - self.eps[0])
    }

    pub fn phi(&self, x: f64) -> f64 {
        ramp_up(x, 1.0 - self.eps[2], 1.0 - self.eps[1])
    }

    pub fn beta(&self, x: f64) -> f64 {
        if x > self.omega.hi {
            return 0.0;
        }
        ramp_up(x, self.omega.lo, 1.0 - self.eps[2])
    }

    pub fn psi_derivative(&self, x: f64) -> f64 {
        -ramp_up_derivative(x, 1.0 - self.eps[1], 1.0 - self.eps[0])
    }

    pub fn phi_derivative(&self, x: f64) -> f64 {
        ramp_up_derivative(x, 1.0 - self.eps[2], 1.0 - self.eps[1])
    }

    pub fn beta_derivative(&self, x: f64) -> f64 {
        ramp_up_derivative(x, self.omega.lo, 1.0 - self.eps[2])
    }
}

/// Build the cutoff triple. Requires `0 < eps0 < eps1 < eps2 < 1`, `omega`
/// touching `x = 1`, and `1 - eps2` strictly inside `omega`.
pub fn build_cutoffs(eps0: f64, eps1: f64, eps2: f64, omega: Interval) -> Result<CutoffTriple> {
    if !(0.0 < eps0 && eps0 < eps1 && eps1 < eps2 && eps2 < 1.0) {
        return Err(Error::InvalidGeometry(format!(
            "need 0 < eps0 < eps1 < eps2 < 1, got ({eps0}, {eps1}, {eps2})"
        )));
    }
    if omega.hi != 1.0 || !(omega.lo < omega.hi) || omega.lo < 0.0 {
        return Err(Error::InvalidGeometry(format!(
            "omega {omega} must be a non-degenerate interval ending at x = 1"
        )));
    }
    if !(1.0 - eps2 > omega.lo) {
        return Err(Error::InvalidGeometry(format!(
            "Q_2 = ({}, {}) is not contained in the interior of omega {omega}",
            1.0 - eps2,
            1.0 + eps2
        )));
    }
    Ok(CutoffTriple {
        eps: [eps0, eps1, eps2],
        omega,
    })
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Initial displacement `z0` (with its derivative) and velocity `z1`.
#[derive(Clone)]
pub struct InitialData {
    tag: String,
    z0: ScalarFn,
    z0_prime: ScalarFn,
    z1: ScalarFn,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialData").field("tag", &self.tag).finish()
    }
}

/// Tolerance for the Dirichlet compatibility check `z0(0) = z0(1) = 0`.
const DIRICHLET_TOL: f64 = 1e-12;

impl InitialData {
    pub fn new(
        tag: impl Into<String>,
        z0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        z0_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        z1: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let tag = tag.into();
        let (left, right) = (z0(0.0), z0(1.0));
        if left.abs() > DIRICHLET_TOL || right.abs() > DIRICHLET_TOL {
            return Err(Error::InvalidData(format!(
                "initial data '{tag}' violates z0(0) = z0(1) = 0: got {left}, {right}"
            )));
        }
        Ok(Self {
            tag,
            z0: Arc::new(z0),
            z0_prime: Arc::new(z0_prime),
            z1: Arc::new(z1),
        })
    }

    /// Named presets used by the command line driver.
    ///
    /// * `sine`: `z0 = sin(pi x)`, `z1 = 0`
    /// * `sine-velocity`: `z0 = 0`, `z1 = sin(pi x)`
    /// * `mixed`: `z0 = sin(pi x)`, `z1 = pi sin(2 pi x)`
    /// * `parabola`: `z0 = x (1 - x)`, `z1 = 0`
    /// * `pulse`: Gaussian displacement centred at `x = 0.3`, `z1 = 0`
    pub fn from_tag(tag: &str) -> Result<Self> {
        match tag {
            "sine" => Self::standing_wave(),
            "sine-velocity" => Self::new(
                tag,
                |_| 0.0,
                |_| 0.0,
                |x| (PI * x).sin(),
            ),
            "mixed" => Self::new(
                tag,
                |x| (PI * x).sin(),
                |x| PI * (PI * x).cos(),
                |x| PI * (2.0 * PI * x).sin(),
            ),
            "parabola" => Self::new(tag, |x| x * (1.0 - x), |x| 1.0 - 2.0 * x, |_| 0.0),
            "pulse" => {
                const C: f64 = 0.3;
                const W: f64 = 0.05;
                Self::new(
                    tag,
                    |x| (-((x - C) / W).powi(2)).exp(),
                    |x| -2.0 * (x - C) / (W * W) * (-((x - C) / W).powi(2)).exp(),
                    |_| 0.0,
                )
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown initial data tag '{other}'"
            ))),
        }
    }

    /// `z0 = sin(pi x)`, `z1 = 0`.
    pub fn standing_wave() -> Result<Self> {
        Self::new("sine", |x| (PI * x).sin(), |x| PI * (PI * x).cos(), |_| 0.0)
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn z0(&self, x: f64) -> f64 {
        (self.z0)(x)
    }

    pub fn z0_prime(&self, x: f64) -> f64 {
        (self.z0_prime)(x)
    }

    pub fn z1(&self, x: f64) -> f64 {
        (self.z1)(x)
    }
}

/// `rho_j = z0'(x_j) + z1(x_j)`, `xi_j = z0'(x_j) - z1(x_j)` at `t = 0`.
pub fn init_state(data: &InitialData, grid: &Grid) -> Result<RiemannState> {
    let n = grid.n_nodes();
    let mut rho = Vec::with_capacity(n);
    let mut xi = Vec::with_capacity(n);
    for &x in grid.nodes() {
        let (dz, v) = (data.z0_prime(x), data.z1(x));
        if !dz.is_finite() || !v.is_finite() {
            return Err(Error::InvalidData(format!(
                "initial data '{}' is not finite at x = {x}",
                data.tag()
            )));
        }
        rho.push(dz + v);
        xi.push(dz - v);
    }
    RiemannState::new(0.0, rho, xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn grid_of_four_cells() {
        let g = make_grid(4).unwrap();
        assert_eq!(g.nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.dt(), 0.25);
        assert_eq!(g.dt(), g.dx());
        assert!(matches!(make_grid(1), Err(Error::InvalidArgument(_))));
        let g = make_grid(512).unwrap();
        assert_eq!(g.dx(), 1.0 / 512.0);
        assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*g.nodes().last().unwrap(), 1.0);
    }

    #[test]
    fn conjugate_exponent() {
        let p = PExponent::new(3.0).unwrap();
        assert!((p.q() - 1.5).abs() < 1e-15);
        assert!(PExponent::new(1.0).unwrap().q().is_infinite());
        assert!(PExponent::new(1.0).unwrap().conjugate().is_err());
        assert!(PExponent::new(0.5).is_err());
        assert!(PExponent::new(f64::NAN).is_err());
    }

    proptest! {
        #[test]
        fn conjugation_is_an_involution(p in 1.0001f64..100.0) {
            let e = PExponent::new(p).unwrap();
            prop_assert!((1.0 / e.p() + 1.0 / e.q() - 1.0).abs() <= 1e-14);
            let back = e.conjugate().unwrap().conjugate().unwrap();
            prop_assert!((back.p() - p).abs() <= 1e-14 * p.max(1.0) * 4.0);
        }
    }

    #[test]
    fn constant_damping() {
        let g = make_grid(16).unwrap();
        let d = sample_damping(&DampingSpec::constant_alpha(1.0), &g).unwrap();
        assert!(d.samples().iter().all(|&a| a == 2.0));
        assert_eq!(d.a0(), 2.0);
        assert_eq!(d.omega(), Some(Interval::new(0.0, 1.0)));
        assert_eq!(d.sup_bound(), 2.0);
        assert_eq!(d.constant_value(), Some(2.0));
    }

    #[test]
    fn bump_damping() {
        let g = make_grid(10).unwrap();
        let spec = DampingSpec::SmoothBump {
            a0: 1.0,
            omega: Interval::new(0.6, 1.0),
            ramp: 0.2,
        };
        let d = sample_damping(&spec, &g).unwrap();
        assert!(d.samples()[8] >= 1.0);
        assert!(d.samples()[2] >= 0.0);
        assert_eq!(d.samples()[2], 0.0);
        assert!(d.samples()[5] > 0.0 && d.samples()[5] < 1.0);
        let bad = DampingSpec::SmoothBump {
            a0: -1.0,
            omega: Interval::new(0.6, 1.0),
            ramp: 0.2,
        };
        assert!(matches!(
            sample_damping(&bad, &g),
            Err(Error::HypothesisViolation(_))
        ));
        let empty = DampingSpec::IndicatorSmoothed {
            a0: 1.0,
            omega: Interval::new(0.7, 0.7),
        };
        assert!(matches!(
            sample_damping(&empty, &g),
            Err(Error::HypothesisViolation(_))
        ));
    }

    #[test]
    fn cutoff_examples() {
        let c = build_cutoffs(0.1, 0.2, 0.3, Interval::new(0.6, 1.0)).unwrap();
        assert_eq!(c.psi(1.0), 0.0);
        assert_eq!(c.psi(0.5), 1.0);
        assert_eq!(c.phi(0.9), 1.0);
        assert_eq!(c.beta(0.5), 0.0);
        assert_eq!(c.beta(0.95), 1.0);
        assert!(matches!(
            build_cutoffs(0.2, 0.1, 0.3, Interval::new(0.6, 1.0)),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            build_cutoffs(0.05, 0.1, 0.5, Interval::new(0.6, 1.0)),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn cutoff_clauses_hold_on_dense_sample() {
        let c = build_cutoffs(0.1, 0.2, 0.3, Interval::new(0.6, 1.0)).unwrap();
        let (q0, q1, q2) = (c.q(0), c.q(1), c.q(2));
        let inside = |q: Interval, x: f64| x > q.lo && x < q.hi;
        for k in 0..=10_000 {
            let x = k as f64 / 10_000.0;
            for v in [c.psi(x), c.phi(x), c.beta(x)] {
                assert!((0.0..=1.0).contains(&v));
            }
            if inside(q0, x) {
                assert_eq!(c.psi(x), 0.0, "psi at {x}");
            }
            if !inside(q1, x) {
                assert_eq!(c.psi(x), 1.0, "psi at {x}");
            }
            if inside(q1, x) {
                assert_eq!(c.phi(x), 1.0, "phi at {x}");
            }
            if !inside(q2, x) {
                assert_eq!(c.phi(x), 0.0, "phi at {x}");
            }
            if inside(q2, x) {
                assert_eq!(c.beta(x), 1.0, "beta at {x}");
            }
            if !c.omega().contains(x) {
                assert_eq!(c.beta(x), 0.0, "beta at {x}");
            }
        }
    }

    #[test]
    fn cutoff_derivatives_match_finite_differences() {
        let c = build_cutoffs(0.1, 0.2, 0.3, Interval::new(0.6, 1.0)).unwrap();
        let h = 1e-6;
        // sample off the ramp endpoints, where the second derivative jumps
        for k in 1..200 {
            let x = (k as f64 + 0.37) / 200.0;
            let fd = |f: &dyn Fn(f64) -> f64| (f(x + h) - f(x - h)) / (2.0 * h);
            assert!((fd(&|y| c.psi(y)) - c.psi_derivative(x)).abs() < 1e-5);
            assert!((fd(&|y| c.phi(y)) - c.phi_derivative(x)).abs() < 1e-5);
            assert!((fd(&|y| c.beta(y)) - c.beta_derivative(x)).abs() < 1e-5);
        }
    }

    #[test]
    fn init_state_examples() {
        let g = make_grid(8).unwrap();
        let s = init_state(&InitialData::standing_wave().unwrap(), &g).unwrap();
        for (j, &x) in g.nodes().iter().enumerate() {
            assert_eq!(s.rho[j], PI * (PI * x).cos());
            assert_eq!(s.xi[j], s.rho[j]);
        }
        let unit = InitialData::new("unit-velocity", |_| 0.0, |_| 0.0, |_| 1.0).unwrap();
        let s = init_state(&unit, &g).unwrap();
        assert!(s.rho.iter().all(|&r| r == 1.0));
        assert!(s.xi.iter().all(|&v| v == -1.0));
        let s = init_state(&InitialData::from_tag("parabola").unwrap(), &g).unwrap();
        assert_eq!(s.rho[4], 0.0);
        assert!(InitialData::new("bad", |x| x, |_| 1.0, |_| 0.0).is_err());
        let nan = InitialData::new("nan", |_| 0.0, |_| f64::NAN, |_| 0.0).unwrap();
        assert!(matches!(init_state(&nan, &g), Err(Error::InvalidData(_))));
    }

    #[test]
    fn reconstruction_recovers_initial_data() {
        let g = make_grid(64).unwrap();
        let data = InitialData::from_tag("mixed").unwrap();
        let s = init_state(&data, &g).unwrap();
        let (zx, zt) = (s.z_x(), s.z_t());
        for (j, &x) in g.nodes().iter().enumerate() {
            assert!((zx[j] - data.z0_prime(x)).abs() <= 4.0 * f64::EPSILON * 4.0);
            assert!((zt[j] - data.z1(x)).abs() <= 4.0 * f64::EPSILON * 4.0);
        }
    }
}
