//! Fixed-point reference solver.
//!
//! Extending `z` oddly and `a` evenly to 2-periodic functions on the line
//! turns the damped problem into the free wave equation with source
//! `g = -a z_t`. The d'Alembert formula then gives `z_t` as a map of itself,
//!
//! ```text
//! y(t,x) = 1/2 [z0'(x+t) - z0'(x-t)] + 1/2 [z1(x+t) + z1(x-t)]
//!        - 1/2 \int_0^t [a y(s, x+t-s) + a y(s, x-t+s)] ds
//! ```
//!
//! which is iterated to a fixed point on short windows. Because `dt = dx`,
//! the characteristics through grid nodes pass through grid nodes, so the
//! map is evaluated with trapezoidal sums along them and needs no
//! interpolation.

use crate::error::{Error, Result};
use crate::quad::simpson;
use crate::types::{DampingProfile, Grid, InitialData};

/// Symmetry used to extend a function from `[0, 1]` to the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

/// 2-periodic odd or even extension of a function given on `[0, 1]`.
#[derive(Clone)]
pub struct ExtendedFunction {
    base: std::sync::Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    parity: Parity,
}

impl std::fmt::Debug for ExtendedFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExtendedFunction")
            .field("parity", &self.parity)
            .finish()
    }
}

impl ExtendedFunction {
    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn value(&self, x: f64) -> f64 {
        let r = x.rem_euclid(2.0);
        if r <= 1.0 {
            (self.base)(r)
        } else {
            match self.parity {
                Parity::Odd => -(self.base)(2.0 - r),
                Parity::Even => (self.base)(2.0 - r),
            }
        }
    }
}

/// Odd 2-periodic extension. Continuity needs `f(0) = f(1) = 0`; a warning
/// is logged otherwise.
pub fn extend_odd_periodic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ExtendedFunction {
    let (l, r) = (f(0.0), f(1.0));
    if l != 0.0 || r != 0.0 {
        log::warn!("odd extension of a function with f(0) = {l}, f(1) = {r} is discontinuous");
    }
    ExtendedFunction {
        base: std::sync::Arc::new(f),
        parity: Parity::Odd,
    }
}

/// Even 2-periodic extension.
pub fn extend_even_periodic(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> ExtendedFunction {
    ExtendedFunction {
        base: std::sync::Arc::new(f),
        parity: Parity::Even,
    }
}

/// d'Alembert formula with source on the line,
///
/// ```text
/// z(t,x) = 1/2 [z0(x+t) + z0(x-t)] + 1/2 \int_{x-t}^{x+t} z1
///        + 1/2 \int_0^t \int_{x-t+s}^{x+t-s} g(s, y) dy ds
/// ```
///
/// with composite Simpson quadrature using `quad_n` panels per unit length.
pub fn dalembert_apply(
    z0e: &ExtendedFunction,
    z1e: &ExtendedFunction,
    source: Option<&dyn Fn(f64, f64) -> f64>,
    t: f64,
    x: f64,
    quad_n: usize,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("t must be non-negative, got {t}")));
    }
    if quad_n < 4 {
        return Err(Error::InvalidArgument(format!("quad_n must be at least 4, got {quad_n}")));
    }
    if t == 0.0 {
        return Ok(z0e.value(x));
    }
    let panels = |len: f64| ((quad_n as f64 * len).ceil() as usize).max(2);
    let mut z = 0.5 * (z0e.value(x + t) + z0e.value(x - t));
    z += 0.5 * simpson(|y| z1e.value(y), x - t, x + t, panels(2.0 * t));
    if let Some(g) = source {
        let inner = |s: f64| {
            let half = t - s;
            simpson(|y| g(s, y), x - half, x + half, panels(2.0 * half))
        };
        z += 0.5 * simpson(inner, 0.0, t, panels(t));
    }
    Ok(z)
}

/// Values of a grid function extended to all integer node indices.
#[derive(Debug, Clone)]
struct NodeExtension<'a> {
    values: &'a [f64],
    parity: Parity,
}

impl NodeExtension<'_> {
    fn n(&self) -> i64 {
        self.values.len() as i64 - 1
    }

    fn at(&self, i: i64) -> f64 {
        let n = self.n();
        let r = i.rem_euclid(2 * n);
        if r <= n {
            self.values[r as usize]
        } else {
            let v = self.values[(2 * n - r) as usize];
            match self.parity {
                Parity::Odd => -v,
                Parity::Even => v,
            }
        }
    }
}

/// Prefix sums of a 2-periodic node sequence, for trapezoidal integrals over
/// arbitrary integer ranges.
struct PeriodicPrefix {
    prefix: Vec<f64>,
    values: Vec<f64>,
}

impl PeriodicPrefix {
    fn new(ext: &NodeExtension<'_>) -> Self {
        let period = 2 * ext.n();
        let values: Vec<f64> = (0..period).map(|i| ext.at(i)).collect();
        let mut prefix = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for v in &values {
            acc += v;
            prefix.push(acc);
        }
        Self { prefix, values }
    }

    fn period(&self) -> i64 {
        self.values.len() as i64
    }

    /// `sum_{i < k} v_i` with `v` extended periodically (`k` may be negative).
    fn cumulative(&self, k: i64) -> f64 {
        let p = self.period();
        let wraps = k.div_euclid(p) as f64;
        wraps * self.prefix[p as usize] + self.prefix[k.rem_euclid(p) as usize]
    }

    fn value(&self, i: i64) -> f64 {
        self.values[i.rem_euclid(self.period()) as usize]
    }

    /// Trapezoidal sum over nodes `lo..=hi` divided by the spacing.
    fn trapezoid(&self, lo: i64, hi: i64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.cumulative(hi + 1) - self.cumulative(lo) - 0.5 * (self.value(lo) + self.value(hi))
    }
}

/// Data at the start of one Picard window.
#[derive(Debug, Clone)]
struct Window {
    start_step: usize,
    n_steps: usize,
    z: Vec<f64>,
    z_x: Vec<f64>,
    z_t: Vec<f64>,
}

/// Result of [`picard_solve`].
#[derive(Debug, Clone)]
pub struct PicardSolution {
    pub grid: Grid,
    /// `y[k][j] = z_t(k dt, x_j)`.
    pub y: Vec<Vec<f64>>,
    /// `z_x` on the same table.
    pub z_x: Vec<Vec<f64>>,
    /// Largest iteration count over all windows.
    pub iterations_used: usize,
    pub iterations_per_window: Vec<usize>,
    /// Sup-norm of the last Picard update in the worst window.
    pub residual: f64,
    /// Window length in steps.
    pub window_steps: usize,
    damping: Vec<f64>,
    windows: Vec<Window>,
}

impl PicardSolution {
    pub fn n_steps(&self) -> usize {
        self.y.len() - 1
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.y.len()).map(|k| k as f64 * self.grid.dt()).collect()
    }

    /// Sup-norm of `F(y) - y` over all windows.
    pub fn fixed_point_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for w in &self.windows {
            let rows = &self.y[w.start_step..=w.start_step + w.n_steps];
            let mapped = apply_map(w, &self.damping, rows).0;
            for (a, b) in mapped.iter().zip(rows) {
                for (u, v) in a.iter().zip(b) {
                    worst = worst.max((u - v).abs());
                }
            }
        }
        worst
    }

    /// `z` at step `k` from the d'Alembert formula of the window containing
    /// it.
    pub fn z_at_step(&self, k: usize) -> Result<Vec<f64>> {
        if k > self.n_steps() {
            return Err(Error::InvalidArgument(format!(
                "step {k} beyond the solved horizon of {} steps",
                self.n_steps()
            )));
        }
        let w = self
            .windows
            .iter()
            .rev()
            .find(|w| w.start_step <= k)
            .expect("the first window starts at step 0");
        let rows = &self.y[w.start_step..=k];
        Ok(displacement(w, &self.damping, rows, &self.grid))
    }
}

/// Sources `h = a y` on the extended index range needed by the map.
fn source_rows(damping: &[f64], rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|row| row.iter().zip(damping).map(|(y, a)| a * y).collect())
        .collect()
}

/// One application of the fixed-point map on a window; returns the new
/// `z_t` rows and the matching `z_x` rows.
fn apply_map(window: &Window, damping: &[f64], rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = window.z_x.len() as i64 - 1;
    let steps = rows.len() as i64 - 1;
    let dt = 1.0 / n as f64;
    let zx0 = NodeExtension { values: &window.z_x, parity: Parity::Even };
    let zt0 = NodeExtension { values: &window.z_t, parity: Parity::Odd };
    let h = source_rows(damping, rows);
    let h_ext: Vec<NodeExtension<'_>> = h
        .iter()
        .map(|r| NodeExtension { values: r, parity: Parity::Odd })
        .collect();

    // cumulative sums along the two characteristic families:
    // plus[c] = sum_{m<=k} h(m, c - m), minus[d + steps] = sum_{m<=k} h(m, d + m)
    let mut plus = vec![0.0; (n + steps + 1) as usize];
    let mut minus = vec![0.0; (n + steps + 1) as usize];
    let mut y_out = Vec::with_capacity(rows.len());
    let mut zx_out = Vec::with_capacity(rows.len());
    for k in 0..=steps {
        let hk = &h_ext[k as usize];
        for (c, acc) in plus.iter_mut().enumerate() {
            *acc += hk.at(c as i64 - k);
        }
        for (i, acc) in minus.iter_mut().enumerate() {
            *acc += hk.at(i as i64 - steps + k);
        }
        let h0 = &h_ext[0];
        let mut y = Vec::with_capacity(n as usize + 1);
        let mut zx = Vec::with_capacity(n as usize + 1);
        for j in 0..=n {
            let (jp, jm) = (j + k, j - k);
            // trapezoid weights: half at s = 0 and s = t
            let sp = plus[jp as usize] - 0.5 * (h0.at(jp) + hk.at(j));
            let sm = minus[(jm + steps) as usize] - 0.5 * (h0.at(jm) + hk.at(j));
            let (ep, em) = (zx0.at(jp), zx0.at(jm));
            let (op, om) = (zt0.at(jp), zt0.at(jm));
            y.push(0.5 * (ep - em) + 0.5 * (op + om) - 0.5 * dt * (sp + sm));
            zx.push(0.5 * (ep + em) + 0.5 * (op - om) - 0.5 * dt * (sp - sm));
        }
        y_out.push(y);
        zx_out.push(zx);
    }
    (y_out, zx_out)
}

/// `z` at the last row of `rows` (step `rows.len() - 1` of the window).
fn displacement(window: &Window, damping: &[f64], rows: &[Vec<f64>], grid: &Grid) -> Vec<f64> {
    let n = grid.n_cells() as i64;
    let k = rows.len() as i64 - 1;
    let dx = grid.dx();
    let z0 = NodeExtension { values: &window.z, parity: Parity::Odd };
    let z1 = PeriodicPrefix::new(&NodeExtension { values: &window.z_t, parity: Parity::Odd });
    let sources: Vec<PeriodicPrefix> = source_rows(damping, rows)
        .iter()
        .map(|r| PeriodicPrefix::new(&NodeExtension { values: r, parity: Parity::Odd }))
        .collect();
    (0..=n)
        .map(|j| {
            let mut z = 0.5 * (z0.at(j + k) + z0.at(j - k)) + 0.5 * dx * z1.trapezoid(j - k, j + k);
            let mut tri = 0.0;
            for (m, src) in sources.iter().enumerate() {
                let half = k - m as i64;
                let w = if m == 0 || half == 0 { 0.5 } else { 1.0 };
                tri += w * src.trapezoid(j - half, j + half);
            }
            // g = -a y
            z -= 0.5 * dx * dx * tri;
            z
        })
        .collect()
}

fn sup_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Picard iteration on consecutive windows of length
/// `min(1/(2 sup a), t_end)`, each restarted from the `z`, `z_x`, `z_t`
/// reached at the end of the previous one.
pub fn picard_solve(
    data: &InitialData,
    damping: &DampingProfile,
    grid: &Grid,
    t_end: f64,
    tol: f64,
    max_iter: usize,
) -> Result<PicardSolution> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be positive, got {tol}")));
    }
    if !(t_end >= 0.0) {
        return Err(Error::InvalidArgument(format!("t_end must be non-negative, got {t_end}")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidArgument("max_iter must be positive".into()));
    }
    if damping.samples().len() != grid.n_nodes() {
        return Err(Error::InvalidArgument(format!(
            "damping has {} samples, grid has {} nodes",
            damping.samples().len(),
            grid.n_nodes()
        )));
    }
    let total = grid.step_index(t_end);
    let a_sup = damping.samples().iter().fold(0.0f64, |m, a| m.max(a.abs()));
    let window_steps = if a_sup > 0.0 {
        let w = (0.5 / a_sup / grid.dt()).floor() as usize;
        if w == 0 {
            log::warn!("damping bound {a_sup} exceeds the grid's contraction range; using one-step windows");
        }
        w.clamp(1, total.max(1))
    } else {
        total.max(1)
    };

    let sample = |f: &dyn Fn(f64) -> f64| grid.nodes().iter().map(|&x| f(x)).collect::<Vec<_>>();
    let mut window = Window {
        start_step: 0,
        n_steps: 0,
        z: sample(&|x| data.z0(x)),
        z_x: sample(&|x| data.z0_prime(x)),
        z_t: sample(&|x| data.z1(x)),
    };
    // keep the extended velocity odd
    let last = window.z_t.len() - 1;
    window.z_t[0] = 0.0;
    window.z_t[last] = 0.0;

    let a = damping.samples().to_vec();
    let mut y_table: Vec<Vec<f64>> = vec![window.z_t.clone()];
    let mut zx_table: Vec<Vec<f64>> = vec![window.z_x.clone()];
    let mut windows = Vec::new();
    let mut per_window = Vec::new();
    let mut worst_residual = 0.0f64;

    let mut start = 0;
    while start < total {
        let len = window_steps.min(total - start);
        window.start_step = start;
        window.n_steps = len;
        // start from the free evolution, i.e. the map applied to y = 0
        let zero = vec![vec![0.0; grid.n_nodes()]; len + 1];
        let (mut rows, _) = apply_map(&window, &vec![0.0; a.len()], &zero);
        let mut iterations = 0;
        let mut residual;
        loop {
            iterations += 1;
            let (next, _) = apply_map(&window, &a, &rows);
            residual = sup_diff(&next, &rows);
            rows = next;
            if residual < tol {
                break;
            }
            if iterations >= max_iter {
                return Err(Error::NoConvergence {
                    window: windows.len(),
                    iterations,
                    residual,
                });
            }
        }
        let (_, zx_rows) = apply_map(&window, &a, &rows);
        let z_end = displacement(&window, &a, &rows, grid);
        y_table.extend(rows[1..].iter().cloned());
        zx_table.extend(zx_rows[1..].iter().cloned());
        per_window.push(iterations);
        worst_residual = worst_residual.max(residual);
        let next = Window {
            start_step: start + len,
            n_steps: 0,
            z: z_end,
            z_x: zx_rows[len].clone(),
            z_t: rows[len].clone(),
        };
        windows.push(std::mem::replace(&mut window, next));
        start += len;
    }
    if windows.is_empty() {
        windows.push(window);
    }
    log::debug!(
        "picard: {} windows of {} steps, iterations {:?}",
        windows.len(),
        window_steps,
        per_window
    );
    Ok(PicardSolution {
        grid: grid.clone(),
        y: y_table,
        z_x: zx_table,
        iterations_used: per_window.iter().copied().max().unwrap_or(0),
        iterations_per_window: per_window,
        residual: worst_residual,
        window_steps,
        damping: a,
        windows,
    })
}

/// Oracle samples of `z` and `z_t` at requested times (snapped to the
/// nearest time step).
#[derive(Debug, Clone, PartialEq)]
pub struct OracleTable {
    pub times: Vec<f64>,
    pub z: Vec<Vec<f64>>,
    pub z_t: Vec<Vec<f64>>,
}

/// Default Picard settings used by [`oracle_solution`].
pub const ORACLE_TOL: f64 = 1e-12;
pub const ORACLE_MAX_ITER: usize = 200;

pub fn oracle_solution(
    data: &InitialData,
    damping: &DampingProfile,
    grid: &Grid,
    times: &[f64],
) -> Result<OracleTable> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let sol = picard_solve(data, damping, grid, t_max, ORACLE_TOL, ORACLE_MAX_ITER)?;
    oracle_from_solution(&sol, times)
}

/// Sample an existing Picard solution.
pub fn oracle_from_solution(sol: &PicardSolution, times: &[f64]) -> Result<OracleTable> {
    let mut table = OracleTable {
        times: Vec::with_capacity(times.len()),
        z: Vec::with_capacity(times.len()),
        z_t: Vec::with_capacity(times.len()),
    };
    for &t in times {
        if !(t >= 0.0) {
            return Err(Error::InvalidArgument(format!("negative sample time {t}")));
        }
        let k = sol.grid.step_index(t);
        table.times.push(k as f64 * sol.grid.dt());
        table.z.push(sol.z_at_step(k)?);
        table.z_t.push(sol.y[k].clone());
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{make_grid, sample_damping, DampingSpec, Interval};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    #[test]
    fn odd_extension_examples() {
        let f = extend_odd_periodic(|x| x);
        assert_eq!(f.value(-0.5), -0.5);
        assert_eq!(f.value(1.5), -0.5);
        let s = extend_odd_periodic(|x| (PI * x).sin());
        for &x in &[-3.7, -0.2, 0.4, 1.3, 5.9] {
            assert!((s.value(x) - (PI * x).sin()).abs() < 1e-12);
        }
        let z = extend_odd_periodic(|_| 0.0);
        assert_eq!(z.value(12.3), 0.0);
    }

    #[test]
    fn even_extension_examples() {
        assert_eq!(extend_even_periodic(|x| x).value(-0.5), 0.5);
        assert_eq!(extend_even_periodic(|_| 2.0).value(-7.25), 2.0);
        let f = extend_even_periodic(|x| 1.0 - x);
        assert_eq!(f.value(1.5), 0.5);
        assert_eq!(f.value(-0.5), 0.5);
    }

    #[test]
    fn extension_symmetries_at_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let odd = extend_odd_periodic(|x| x * (1.0 - x) * (3.0 * x).cos());
        let even = extend_even_periodic(|x| (2.0 * x).exp());
        for _ in 0..10_000 {
            let x: f64 = rng.gen_range(-20.0..20.0);
            assert!((odd.value(x + 2.0) - odd.value(x)).abs() <= 1e-14);
            assert!((even.value(x + 2.0) - even.value(x)).abs() <= 1e-14 * even.value(x).abs().max(1.0));
            assert!((odd.value(-x) + odd.value(x)).abs() <= 1e-14);
            assert!((even.value(-x) - even.value(x)).abs() <= 1e-14 * even.value(x).abs().max(1.0));
        }
    }

    #[test]
    fn dalembert_examples() {
        let sin = extend_odd_periodic(|x| (PI * x).sin());
        let zero = extend_odd_periodic(|_| 0.0);
        let v = dalembert_apply(&sin, &zero, None, 0.5, 0.5, 64).unwrap();
        assert!(v.abs() < 1e-14);
        assert_eq!(dalembert_apply(&sin, &zero, None, 0.0, 0.3, 64).unwrap(), sin.value(0.3));
        let v = dalembert_apply(&zero, &sin, None, 0.5, 0.5, 64).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-7);
        let v = dalembert_apply(&zero, &sin, None, 0.5, 0.5, 512).unwrap();
        assert!((v - 1.0 / PI).abs() < 1e-11);
        assert!(dalembert_apply(&zero, &sin, None, 0.5, 0.5, 3).is_err());
        assert!(dalembert_apply(&zero, &sin, None, -0.5, 0.5, 8).is_err());
    }

    #[test]
    fn dalembert_with_source_matches_forced_solution() {
        // z = t^2 sin(pi x) solves z_tt - z_xx = (2 + pi^2 t^2) sin(pi x)
        let zero = extend_odd_periodic(|_| 0.0);
        let g = |s: f64, y: f64| (2.0 + PI * PI * s * s) * (PI * y).sin();
        let (t, x) = (0.6, 0.3);
        let v = dalembert_apply(&zero, &zero, Some(&g), t, x, 64).unwrap();
        assert!((v - t * t * (PI * x).sin()).abs() < 1e-8);
    }

    fn sine() -> InitialData {
        InitialData::standing_wave().unwrap()
    }

    #[test]
    fn undamped_converges_in_one_iteration() {
        let g = make_grid(32).unwrap();
        let d = sample_damping(&DampingSpec::Zero, &g).unwrap();
        let sol = picard_solve(&sine(), &d, &g, 1.0, 1e-12, 5).unwrap();
        assert_eq!(sol.iterations_used, 1);
        assert_eq!(sol.residual, 0.0);
        // z_t = -pi sin(pi x) sin(pi t), up to the O(dx^2) of nothing: exact samples
        for (k, row) in sol.y.iter().enumerate() {
            let t = k as f64 * g.dt();
            for (j, &x) in g.nodes().iter().enumerate() {
                let exact = -PI * (PI * x).sin() * (PI * t).sin();
                assert!((row[j] - exact).abs() < 1e-12, "k={k} j={j}");
            }
        }
    }

    #[test]
    fn period_two_recurrence() {
        let g = make_grid(40).unwrap();
        let d = sample_damping(&DampingSpec::Zero, &g).unwrap();
        let table = oracle_solution(&sine(), &d, &g, &[0.0, 2.0]).unwrap();
        for (j, &x) in g.nodes().iter().enumerate() {
            assert!((table.z[1][j] - (PI * x).sin()).abs() < 1e-12);
            assert_eq!(table.z[0][j], sine().z0(x));
            assert_eq!(table.z_t[0][j], 0.0);
        }
    }

    #[test]
    fn initial_rows_are_exact() {
        let g = make_grid(16).unwrap();
        let spec = DampingSpec::SmoothBump { a0: 2.0, omega: Interval::new(0.6, 1.0), ramp: 0.1 };
        let d = sample_damping(&spec, &g).unwrap();
        let data = InitialData::from_tag("mixed").unwrap();
        let table = oracle_solution(&data, &d, &g, &[0.0]).unwrap();
        for (j, &x) in g.nodes().iter().enumerate().skip(1).take(15) {
            assert_eq!(table.z[0][j], data.z0(x));
            assert_eq!(table.z_t[0][j], data.z1(x));
        }
    }

    #[test]
    fn damped_iteration_count_is_bounded() {
        let g = make_grid(64).unwrap();
        let d = sample_damping(&DampingSpec::Constant { value: 2.0 }, &g).unwrap();
        let tol = 1e-10;
        let sol = picard_solve(&sine(), &d, &g, 1.0, tol, 200).unwrap();
        let kappa = 2.0 * sol.window_steps as f64 * g.dt();
        assert!(kappa <= 0.5 + 1e-12);
        let bound = (tol.ln() / kappa.ln()).ceil() as usize;
        assert!(sol.iterations_used <= bound, "{} > {bound}", sol.iterations_used);
        assert!(sol.residual <= tol);
        assert!(sol.fixed_point_residual() <= 2.0 * tol);
    }

    #[test]
    fn forced_failure_reports_window() {
        let g = make_grid(32).unwrap();
        let d = sample_damping(&DampingSpec::Constant { value: 50.0 }, &g).unwrap();
        match picard_solve(&sine(), &d, &g, 1.0, 1e-12, 2) {
            Err(Error::NoConvergence { window, iterations, residual }) => {
                assert_eq!(window, 0);
                assert_eq!(iterations, 2);
                assert!(residual >= 1e-12);
            }
            other => panic!("expected no-convergence, got {other:?}"),
        }
        assert!(picard_solve(&sine(), &d, &g, 1.0, 0.0, 2).is_err());
    }

    #[test]
    fn constant_damping_energy_decays_like_exact_mode() {
        // a = 2 alpha with alpha = 0.5: the sin(pi x) mode has
        // z = e^{-alpha t}[cos(w t) + alpha/w sin(w t)] sin(pi x), w^2 = pi^2 - alpha^2
        let g = make_grid(128).unwrap();
        let alpha = 0.5;
        let d = sample_damping(&DampingSpec::constant_alpha(alpha), &g).unwrap();
        let t = 0.75;
        let table = oracle_solution(&sine(), &d, &g, &[t]).unwrap();
        let w = (PI * PI - alpha * alpha).sqrt();
        let amp = (-alpha * t).exp() * ((w * t).cos() + alpha / w * (w * t).sin());
        let vel = -(-alpha * t).exp() * (PI * PI / w) * (w * t).sin();
        for (j, &x) in g.nodes().iter().enumerate() {
            assert!((table.z[0][j] - amp * (PI * x).sin()).abs() < 5e-4);
            assert!((table.z_t[0][j] - vel * (PI * x).sin()).abs() < 5e-4);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn picard_residual_within_twice_tol(a0 in 0.1f64..4.0, lo in 0.1f64..0.8, n in 8usize..40) {
            let g = make_grid(n).unwrap();
            let spec = DampingSpec::SmoothBump { a0, omega: Interval::new(lo, 1.0), ramp: 0.05 };
            let d = sample_damping(&spec, &g).unwrap();
            let tol = 1e-9;
            let sol = picard_solve(&InitialData::from_tag("mixed").unwrap(), &d, &g, 1.3, tol, 200).unwrap();
            prop_assert!(sol.residual < tol);
            prop_assert!(sol.fixed_point_residual() <= 2.0 * tol);
            for row in &sol.y {
                prop_assert_eq!(row[0], 0.0);
                prop_assert_eq!(row[n], 0.0);
            }
        }
    }
}
