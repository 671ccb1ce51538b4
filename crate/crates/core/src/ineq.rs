//! Checkers, constant searches and random audits for the convex inequalities
//! used in the decay estimates.
//!
//! Every checker compares a left side with a right side and accepts
//! `lhs <= rhs + slack * max(1, |lhs|, |rhs|)`. Inequalities with an
//! unspecified constant come with a brute-force search for the smallest
//! constant over a grid, and an audit that re-checks a scaled constant on
//! fresh random samples.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::k_p;
use crate::energy::{big_g_mod, f_pow, g_mod, h_conj, ConvexPair};
use crate::error::{Error, Result};
use crate::quad::trapezoid_map;
use crate::types::PExponent;

/// Slack for the classical inequalities (Young, Fenchel, power sum).
pub const CLASSICAL_SLACK: f64 = 1e-12;
/// Slack for the inequalities with searched constants and the profile bounds.
pub const ESTIMATE_SLACK: f64 = 1e-10;
/// Slack for the integral (Poincaré-type) inequalities.
pub const QUADRATURE_SLACK: f64 = 1e-8;
/// Factor applied to a searched constant before auditing it.
pub const AUDIT_FACTOR: f64 = 1.05;

fn scale(lhs: f64, rhs: f64) -> f64 {
    lhs.abs().max(rhs.abs()).max(1.0)
}

/// `lhs <= rhs` up to relative-or-absolute `slack`.
pub fn within(lhs: f64, rhs: f64, slack: f64) -> bool {
    lhs <= rhs + slack * scale(lhs, rhs)
}

/// Normalized excess `(lhs - rhs) / max(1, |lhs|, |rhs|)`; negative when the
/// inequality holds with room to spare.
pub fn excess(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs) / scale(lhs, rhs)
}

/// `|x|^p`, exact for `p = 2`.
fn pow_abs(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x * x
    } else {
        x.abs().powf(p)
    }
}

/// Outcome of one clause of a multi-part check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clause {
    Holds,
    Violated,
    NotApplicable,
}

impl Clause {
    fn from_bool(b: bool) -> Self {
        if b {
            Clause::Holds
        } else {
            Clause::Violated
        }
    }

    fn compare(lhs: f64, rhs: f64, slack: f64) -> Self {
        Self::from_bool(within(lhs, rhs, slack))
    }

    pub fn is_violated(self) -> bool {
        self == Clause::Violated
    }
}

fn require_sub_quadratic(p: PExponent) -> Result<()> {
    if p.is_sub_quadratic() {
        Ok(())
    } else {
        Err(Error::OutOfRegime(format!("needs 1 < p < 2, got p = {p}")))
    }
}

fn require_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must lie in (0, 1), got {v}")))
    }
}

// ---------------------------------------------------------------------------
// classical inequalities

/// Sides of `|AB| <= eta^p |A|^p / p + |B|^q / (q eta^q)`.
pub fn young_sides(a: f64, b: f64, eta: f64, p: PExponent) -> Result<(f64, f64)> {
    let q = p.q();
    if !q.is_finite() {
        return Err(Error::InvalidArgument("Young's inequality needs p > 1".into()));
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be positive, got {eta}")));
    }
    let pp = p.p();
    let rhs = eta.powf(pp) * pow_abs(a, pp) / pp + pow_abs(b, q) / (q * eta.powf(q));
    Ok(((a * b).abs(), rhs))
}

pub fn check_young(a: f64, b: f64, eta: f64, p: PExponent) -> Result<bool> {
    let (l, r) = young_sides(a, b, eta, p)?;
    Ok(within(l, r, CLASSICAL_SLACK))
}

/// Sides of `|ab| <= F(|a|) + F*(|b|)` for the pair's antiderivative `F`.
pub fn fenchel_sides(a: f64, b: f64, pair: &ConvexPair) -> (f64, f64) {
    ((a * b).abs(), pair.antiderivative(a.abs()) + pair.conjugate(b.abs()))
}

pub fn check_fenchel(a: f64, b: f64, pair: &ConvexPair) -> bool {
    let (l, r) = fenchel_sides(a, b, pair);
    within(l, r, CLASSICAL_SLACK)
}

/// Sides of `|a + b|^p <= 2^(p-1) (|a|^p + |b|^p)`.
pub fn power_sum_sides(a: f64, b: f64, p: PExponent) -> (f64, f64) {
    let pp = p.p();
    (pow_abs(a + b, pp), 2f64.powf(pp - 1.0) * (pow_abs(a, pp) + pow_abs(b, pp)))
}

pub fn check_power_inequality(a: f64, b: f64, p: PExponent) -> bool {
    let (l, r) = power_sum_sides(a, b, p);
    within(l, r, CLASSICAL_SLACK)
}

/// Residual `x g(x) - G(x) - H(g(x))` relative to `max(1, |x g(x)|)`.
pub fn fenchel_identity_residual(x: f64, p: PExponent) -> f64 {
    let g = g_mod(x, p);
    let xg = x * g;
    (xg - big_g_mod(x, p) - h_conj(g, p)).abs() / xg.abs().max(1.0)
}

// ---------------------------------------------------------------------------
// bounds on the modified profile

/// Clause-by-clause report for the bounds on `g`, `G` and `H(g)`.
///
/// The `small_*` clauses need `|x| <= M`, the `large_*` clauses need
/// `|x| > M`, and `large_h_lower` additionally needs `(1 + 1/M)^p < p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProfileBounds {
    /// `x g(x) = G(x) + H(g(x))`
    pub identity: Clause,
    /// `x g(x) / 2 <= G(x)`
    pub sandwich_lower: Clause,
    /// `G(x) <= x g(x)`
    pub sandwich_upper: Clause,
    pub small_h_lower: Clause,
    pub small_h_upper: Clause,
    pub small_xg_lower: Clause,
    pub small_xg_upper: Clause,
    pub small_g_lower: Clause,
    pub small_g_upper: Clause,
    pub large_xg_lower: Clause,
    pub large_xg_upper: Clause,
    pub large_g_lower: Clause,
    pub large_g_upper: Clause,
    pub large_h_lower: Clause,
    pub large_h_upper: Clause,
}

impl ProfileBounds {
    pub fn clauses(&self) -> [(&'static str, Clause); 15] {
        [
            ("identity", self.identity),
            ("sandwich_lower", self.sandwich_lower),
            ("sandwich_upper", self.sandwich_upper),
            ("small_h_lower", self.small_h_lower),
            ("small_h_upper", self.small_h_upper),
            ("small_xg_lower", self.small_xg_lower),
            ("small_xg_upper", self.small_xg_upper),
            ("small_g_lower", self.small_g_lower),
            ("small_g_upper", self.small_g_upper),
            ("large_xg_lower", self.large_xg_lower),
            ("large_xg_upper", self.large_xg_upper),
            ("large_g_lower", self.large_g_lower),
            ("large_g_upper", self.large_g_upper),
            ("large_h_lower", self.large_h_lower),
            ("large_h_upper", self.large_h_upper),
        ]
    }

    pub fn violations(&self) -> usize {
        self.clauses().iter().filter(|(_, c)| c.is_violated()).count()
    }
}

/// `(1 + 1/M)^p < p`, the extra condition for the lower bound on `H(g)`
/// above `M`.
pub fn large_h_gate(m: f64, p: PExponent) -> bool {
    (1.0 + 1.0 / m).powf(p.p()) < p.p()
}

pub fn check_profile_bounds(x: f64, m: f64, p: PExponent) -> Result<ProfileBounds> {
    require_sub_quadratic(p)?;
    if !(m > 0.0) {
        return Err(Error::InvalidArgument(format!("M must be positive, got {m}")));
    }
    let pp = p.p();
    let s = ESTIMATE_SLACK;
    let g = g_mod(x, p);
    let xg = x * g;
    let gg = big_g_mod(x, p);
    let h = h_conj(g, p);
    let x2 = x * x;
    let ax = x.abs();
    let identity = Clause::from_bool((xg - gg - h).abs() <= s * scale(xg, gg));
    let na = Clause::NotApplicable;

    let (mut small, mut large) = ([na; 6], [na; 6]);
    if ax <= m {
        let lo = (pp - 1.0) * (m + 1.0).powf(pp - 2.0);
        let hi = pp - 1.0;
        small = [
            Clause::compare(lo * x2 / 2.0, h, s),
            Clause::compare(h, hi * x2 / 2.0, s),
            Clause::compare(lo * x2, xg, s),
            Clause::compare(xg, hi * x2, s),
            Clause::compare(lo * x2 / 2.0, gg, s),
            Clause::compare(gg, hi * x2 / 2.0, s),
        ];
    } else {
        let xp = ax.powf(pp);
        let c = (1.0 + 1.0 / m).powf(pp - 1.0) - (1.0 / m).powf(pp - 1.0);
        let h_lower = if large_h_gate(m, p) {
            Clause::compare((1.0 - (1.0 + 1.0 / m).powf(pp) / pp) * xp, h, s)
        } else {
            na
        };
        large = [
            Clause::compare(c * xp, xg, s),
            Clause::compare(xg, xp, s),
            Clause::compare(0.5 * c * xp, gg, s),
            Clause::compare(gg, xp, s),
            h_lower,
            Clause::compare(h, (1.0 + 1.0 / m).powf(pp - 1.0) * xp, s),
        ];
    }
    Ok(ProfileBounds {
        identity,
        sandwich_lower: Clause::compare(0.5 * xg, gg, s),
        sandwich_upper: Clause::compare(gg, xg, s),
        small_h_lower: small[0],
        small_h_upper: small[1],
        small_xg_lower: small[2],
        small_xg_upper: small[3],
        small_g_lower: small[4],
        small_g_upper: small[5],
        large_xg_lower: large[0],
        large_xg_upper: large[1],
        large_g_lower: large[2],
        large_g_upper: large[3],
        large_h_lower: large[4],
        large_h_upper: large[5],
    })
}

// ---------------------------------------------------------------------------
// inequalities with existential constants

/// `|a - b| >= mu max(|a|, |b|)`.
pub fn admissible(a: f64, b: f64, mu: f64) -> bool {
    (a - b).abs() >= mu * a.abs().max(b.abs())
}

/// Constant needed at one point of `|a-b|^p <= C mu^(p-2) (a-b)(f(a)-f(b))`,
/// or `None` when the point is not admissible or `a = b`.
pub fn gap_power_ratio(a: f64, b: f64, mu: f64, p: PExponent) -> Option<f64> {
    if a == b || !admissible(a, b, mu) {
        return None;
    }
    let pp = p.p();
    let d = a - b;
    Some(pow_abs(d, pp) * mu.powf(2.0 - pp) / (d * (f_pow(a, p) - f_pow(b, p))))
}

/// `|a-b|^p <= C mu^(p-2) (a-b)(f(a)-f(b))` for admissible `(a, b, mu)`.
pub fn check_gap_power(a: f64, b: f64, mu: f64, p: PExponent, c: f64) -> Result<Clause> {
    require_unit("mu", mu)?;
    if !admissible(a, b, mu) {
        return Ok(Clause::NotApplicable);
    }
    let pp = p.p();
    let d = a - b;
    let rhs = c / mu.powf(2.0 - pp) * d * (f_pow(a, p) - f_pow(b, p));
    Ok(Clause::compare(pow_abs(d, pp), rhs, ESTIMATE_SLACK))
}

/// Constant needed at one point of `G(a-b) <= C mu^(p-2) (a-b)(g(a)-g(b))`.
pub fn gap_modified_ratio(a: f64, b: f64, mu: f64, p: PExponent) -> Option<f64> {
    if a == b || !admissible(a, b, mu) {
        return None;
    }
    let d = a - b;
    Some(big_g_mod(d, p) * mu.powf(2.0 - p.p()) / (d * (g_mod(a, p) - g_mod(b, p))))
}

pub fn check_gap_modified(a: f64, b: f64, mu: f64, p: PExponent, c: f64) -> Result<Clause> {
    require_unit("mu", mu)?;
    if !admissible(a, b, mu) {
        return Ok(Clause::NotApplicable);
    }
    let d = a - b;
    let rhs = c / mu.powf(2.0 - p.p()) * d * (g_mod(a, p) - g_mod(b, p));
    Ok(Clause::compare(big_g_mod(d, p), rhs, ESTIMATE_SLACK))
}

/// The three weighted Fenchel-type inequalities for `1 < p < 2`,
/// `0 < eta < 1`:
///
/// * `Small`: `|a x| <= C eta^-p G(a) + C eta^2 H(x)`
/// * `Large`: `|a x| <= C eta^p G(a) + C eta^-q H(x)`
/// * `Profile`: `|a g(x)| <= C eta^-p G(a) + C eta^2 |g(x)|`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightedForm {
    Small,
    Large,
    Profile,
}

impl WeightedForm {
    pub const ALL: [WeightedForm; 3] = [WeightedForm::Small, WeightedForm::Large, WeightedForm::Profile];

    pub fn name(self) -> &'static str {
        match self {
            WeightedForm::Small => "weighted_fenchel_small",
            WeightedForm::Large => "weighted_fenchel_large",
            WeightedForm::Profile => "weighted_fenchel_profile",
        }
    }
}

/// Precomputed `G(a)`, `H(x)` and `g(x)` for one grid value.
#[derive(Debug, Clone, Copy)]
struct ProfileValues {
    v: f64,
    big_g: f64,
    h: f64,
    g: f64,
}

impl ProfileValues {
    fn new(v: f64, p: PExponent) -> Self {
        Self {
            v,
            big_g: big_g_mod(v, p),
            h: h_conj(v, p),
            g: g_mod(v, p),
        }
    }
}

/// `(lhs, rhs / C)` for one weighted form.
fn weighted_parts(form: WeightedForm, a: &ProfileValues, x: &ProfileValues, eta: f64, p: f64) -> (f64, f64) {
    let q = p / (p - 1.0);
    match form {
        WeightedForm::Small => ((a.v * x.v).abs(), a.big_g / eta.powf(p) + eta * eta * x.h),
        WeightedForm::Large => ((a.v * x.v).abs(), eta.powf(p) * a.big_g + x.h / eta.powf(q)),
        WeightedForm::Profile => ((a.v * x.g).abs(), a.big_g / eta.powf(p) + eta * eta * x.g.abs()),
    }
}

fn weighted_ratio(form: WeightedForm, a: &ProfileValues, x: &ProfileValues, eta: f64, p: f64) -> Option<f64> {
    let (lhs, unit) = weighted_parts(form, a, x, eta, p);
    if lhs == 0.0 {
        None
    } else {
        Some(lhs / unit)
    }
}

/// Result of evaluating the three weighted forms at one point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightedReport {
    pub small: bool,
    pub large: bool,
    pub profile: bool,
}

impl WeightedReport {
    pub fn all(&self) -> bool {
        self.small && self.large && self.profile
    }
}

/// Check all three weighted forms with one constant `c`.
pub fn check_weighted_fenchel(a: f64, x: f64, eta: f64, p: PExponent, c: f64) -> Result<WeightedReport> {
    require_sub_quadratic(p)?;
    require_unit("eta", eta)?;
    let (av, xv) = (ProfileValues::new(a, p), ProfileValues::new(x, p));
    let one = |form| {
        let (l, unit) = weighted_parts(form, &av, &xv, eta, p.p());
        within(l, c * unit, ESTIMATE_SLACK)
    };
    Ok(WeightedReport {
        small: one(WeightedForm::Small),
        large: one(WeightedForm::Large),
        profile: one(WeightedForm::Profile),
    })
}

/// Check one weighted form with its own constant.
pub fn check_weighted_form(form: WeightedForm, a: f64, x: f64, eta: f64, p: PExponent, c: f64) -> Result<bool> {
    require_sub_quadratic(p)?;
    require_unit("eta", eta)?;
    let (av, xv) = (ProfileValues::new(a, p), ProfileValues::new(x, p));
    let (l, unit) = weighted_parts(form, &av, &xv, eta, p.p());
    Ok(within(l, c * unit, ESTIMATE_SLACK))
}

// ---------------------------------------------------------------------------
// integral inequalities

/// `\int |v|^p <= 1/(p 2^p) \int |v'|^p` for `v(0) = v(1) = 0`, with samples
/// of `v` and `v'` on a uniform mesh of `[0, 1]`.
pub fn poincare_power_sides(v: &[f64], v_prime: &[f64], p: PExponent) -> Result<(f64, f64)> {
    check_samples(v, v_prime)?;
    let (l, r) = (v[0], v[v.len() - 1]);
    if l.abs() > 1e-12 || r.abs() > 1e-12 {
        return Err(Error::InvalidData(format!(
            "v must vanish at both endpoints, got v(0) = {l}, v(1) = {r}"
        )));
    }
    let h = 1.0 / (v.len() - 1) as f64;
    let pp = p.p();
    Ok((
        trapezoid_map(v, h, |s| pow_abs(s, pp)),
        k_p(p) * trapezoid_map(v_prime, h, |s| pow_abs(s, pp)),
    ))
}

pub fn check_poincare_p(v: &[f64], v_prime: &[f64], p: PExponent) -> Result<bool> {
    let (l, r) = poincare_power_sides(v, v_prime, p)?;
    Ok(within(l, r, QUADRATURE_SLACK))
}

/// `(\int G(z), \int G(z'))` for `z(0) = 0` sampled on a uniform mesh.
pub fn poincare_modified_parts(z: &[f64], z_prime: &[f64], p: PExponent) -> Result<(f64, f64)> {
    require_sub_quadratic(p)?;
    check_samples(z, z_prime)?;
    if z[0].abs() > 1e-12 {
        return Err(Error::InvalidData(format!("z must vanish at 0, got z(0) = {}", z[0])));
    }
    let h = 1.0 / (z.len() - 1) as f64;
    Ok((
        trapezoid_map(z, h, |s| big_g_mod(s, p)),
        trapezoid_map(z_prime, h, |s| big_g_mod(s, p)),
    ))
}

/// `\int G(z) <= C \int G(z')` for `z(0) = 0`.
pub fn check_poincare_g(z: &[f64], z_prime: &[f64], p: PExponent, c: f64) -> Result<bool> {
    let (l, r) = poincare_modified_parts(z, z_prime, p)?;
    Ok(within(l, c * r, QUADRATURE_SLACK))
}

fn check_samples(v: &[f64], dv: &[f64]) -> Result<()> {
    if v.len() < 3 || v.len() != dv.len() {
        return Err(Error::InvalidArgument(format!(
            "need matching samples with at least 3 nodes, got {} and {}",
            v.len(),
            dv.len()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// constant searches

/// Inequalities with a searched constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchedInequality {
    GapPower,
    GapModified,
    Weighted(WeightedForm),
    PoincareModified,
}

impl SearchedInequality {
    pub fn name(self) -> &'static str {
        match self {
            SearchedInequality::GapPower => "gap_power",
            SearchedInequality::GapModified => "gap_modified",
            SearchedInequality::Weighted(f) => f.name(),
            SearchedInequality::PoincareModified => "poincare_modified",
        }
    }
}

/// Values for the two real arguments and the parameter (`mu` or `eta`).
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub values: Vec<f64>,
    pub params: Vec<f64>,
    /// Add pairs sitting exactly on the admissibility boundary
    /// `|a - b| = mu max(|a|, |b|)` for every grid value and parameter.
    pub refine_boundary: bool,
}

impl SearchGrid {
    pub fn new(mut values: Vec<f64>, params: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        values.dedup();
        Self {
            values,
            params,
            refine_boundary: false,
        }
    }

    /// Log grid of `[1e-3, 1e3]` (40 points per decade, both signs), zero,
    /// and 801 points of `[-2, 2]`; parameters `0.05 k`, `k = 1..19`.
    pub fn standard() -> Self {
        let mut values = vec![0.0];
        for k in 0..=240 {
            let v = 10f64.powf(-3.0 + k as f64 / 40.0);
            values.push(v);
            values.push(-v);
        }
        for k in 0..=800 {
            values.push(-2.0 + 4.0 * k as f64 / 800.0);
        }
        let mut g = Self::new(values, standard_params());
        g.refine_boundary = true;
        g
    }

    pub fn describe(&self) -> String {
        format!(
            "{} values in [{}, {}], {} parameters{}",
            self.values.len(),
            self.values.first().copied().unwrap_or(f64::NAN),
            self.values.last().copied().unwrap_or(f64::NAN),
            self.params.len(),
            if self.refine_boundary { ", boundary refined" } else { "" }
        )
    }

    /// Pairs on the admissibility boundary for parameter `mu`, nudged
    /// outward until admissible in floating point.
    fn boundary_pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        if !self.refine_boundary {
            return out;
        }
        for &a in &self.values {
            if a == 0.0 {
                continue;
            }
            for &mu in &self.params {
                if !(mu > 0.0 && mu < 1.0) {
                    continue;
                }
                for b in [a * (1.0 - mu), a / (1.0 - mu)] {
                    let mut b = b;
                    let mut k = 0;
                    while !admissible(a, b, mu) && k < 8 {
                        b = a - (a - b) * (1.0 + 4.0 * f64::EPSILON);
                        k += 1;
                    }
                    if admissible(a, b, mu) {
                        out.push((a, b));
                    }
                }
            }
        }
        out
    }
}

fn standard_params() -> Vec<f64> {
    (1..=19).map(|k| 0.05 * k as f64).collect()
}

/// Smallest constant making an inequality hold over a search grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantSearchResult {
    pub inequality: SearchedInequality,
    pub p: f64,
    pub c_min: f64,
    /// Arguments `(a, b or x, mu or eta)` where the maximum is attained.
    pub argmax: [f64; 3],
    /// Number of admissible points evaluated.
    pub evaluated: usize,
    pub grid: String,
}

#[derive(Debug, Clone, Copy)]
struct Best {
    value: f64,
    at: [f64; 3],
    count: usize,
}

impl Best {
    const EMPTY: Best = Best {
        value: f64::NEG_INFINITY,
        at: [f64::NAN; 3],
        count: 0,
    };

    fn offer(&mut self, value: f64, at: [f64; 3]) {
        self.count += 1;
        if value > self.value {
            self.value = value;
            self.at = at;
        }
    }

    fn merge(self, other: Best) -> Best {
        let mut b = if other.value > self.value { other } else { self };
        b.count = self.count + other.count;
        b
    }
}

/// Maximum of `ratio(i, j, param)` over all grid pairs and boundary pairs.
fn search_pairs<T: Sync>(
    grid: &SearchGrid,
    prepare: impl Fn(f64) -> T + Sync,
    ratio: impl Fn(&T, &T, f64) -> Option<f64> + Sync,
) -> Best {
    let prepared: Vec<T> = grid.values.iter().map(|&v| prepare(v)).collect();
    let on_grid = prepared
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut best = Best::EMPTY;
            for (j, b) in prepared.iter().enumerate() {
                for &mu in &grid.params {
                    if let Some(r) = ratio(a, b, mu) {
                        best.offer(r, [grid.values[i], grid.values[j], mu]);
                    }
                }
            }
            best
        })
        .reduce(|| Best::EMPTY, Best::merge);
    let extra = grid
        .boundary_pairs()
        .par_iter()
        .map(|&(a, b)| {
            let (pa, pb) = (prepare(a), prepare(b));
            let mut best = Best::EMPTY;
            for &mu in &grid.params {
                if let Some(r) = ratio(&pa, &pb, mu) {
                    best.offer(r, [a, b, mu]);
                }
            }
            best
        })
        .reduce(|| Best::EMPTY, Best::merge);
    on_grid.merge(extra)
}

fn finish(best: Best, inequality: SearchedInequality, p: PExponent, grid: String) -> Result<ConstantSearchResult> {
    if best.count == 0 {
        return Err(Error::InvalidGrid(format!(
            "no admissible point for {} on {grid}",
            inequality.name()
        )));
    }
    if !best.value.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "{} needs an unbounded constant at {:?}",
            inequality.name(),
            best.at
        )));
    }
    Ok(ConstantSearchResult {
        inequality,
        p: p.p(),
        c_min: best.value,
        argmax: best.at,
        evaluated: best.count,
        grid,
    })
}

fn check_params(grid: &SearchGrid, name: &str) -> Result<()> {
    if grid.params.iter().any(|&m| !(m > 0.0 && m < 1.0)) {
        return Err(Error::InvalidGrid(format!("{name} values must lie in (0, 1)")));
    }
    Ok(())
}

/// Smallest `C` with `|a-b|^p <= C mu^(p-2)(a-b)(f(a)-f(b))` on the grid.
pub fn min_constant_gap_power(p: PExponent, grid: &SearchGrid) -> Result<ConstantSearchResult> {
    check_params(grid, "mu")?;
    let pp = p.p();
    let mu_pow: Vec<(f64, f64)> = grid.params.iter().map(|&m| (m, m.powf(2.0 - pp))).collect();
    let best = search_pairs(
        grid,
        |v| (v, f_pow(v, p)),
        |&(a, fa), &(b, fb), mu| {
            if a == b || !admissible(a, b, mu) {
                return None;
            }
            let d = a - b;
            let w = mu_pow.iter().find(|(m, _)| *m == mu).map(|x| x.1).unwrap_or(mu.powf(2.0 - pp));
            Some(pow_abs(d, pp) * w / (d * (fa - fb)))
        },
    );
    finish(best, SearchedInequality::GapPower, p, grid.describe())
}

/// Smallest `C` with `G(a-b) <= C mu^(p-2)(a-b)(g(a)-g(b))` on the grid.
pub fn min_constant_gap_modified(p: PExponent, grid: &SearchGrid) -> Result<ConstantSearchResult> {
    check_params(grid, "mu")?;
    let pp = p.p();
    let best = search_pairs(
        grid,
        |v| (v, g_mod(v, p)),
        |&(a, ga), &(b, gb), mu| {
            if a == b || !admissible(a, b, mu) {
                return None;
            }
            let d = a - b;
            Some(big_g_mod(d, p) * mu.powf(2.0 - pp) / (d * (ga - gb)))
        },
    );
    finish(best, SearchedInequality::GapModified, p, grid.describe())
}

/// Smallest `C` for one weighted form over `(a, x, eta)` on the grid.
pub fn min_constant_weighted(form: WeightedForm, p: PExponent, grid: &SearchGrid) -> Result<ConstantSearchResult> {
    require_sub_quadratic(p)?;
    check_params(grid, "eta")?;
    let pp = p.p();
    let plain = SearchGrid {
        refine_boundary: false,
        ..grid.clone()
    };
    let best = search_pairs(
        &plain,
        |v| ProfileValues::new(v, p),
        |a, x, eta| weighted_ratio(form, a, x, eta, pp),
    );
    finish(best, SearchedInequality::Weighted(form), p, plain.describe())
}

/// Trial functions `z(0) = 0` for the modified Poincaré search: shape and
/// amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrialShape {
    QuarterSine,
    Sine(u32),
    Power(f64),
}

impl TrialShape {
    fn eval(self, x: f64) -> (f64, f64) {
        match self {
            TrialShape::QuarterSine => ((0.5 * PI * x).sin(), 0.5 * PI * (0.5 * PI * x).cos()),
            TrialShape::Sine(k) => {
                let w = k as f64 * PI;
                ((w * x).sin(), w * (w * x).cos())
            }
            TrialShape::Power(m) => (x.powf(m), m * x.powf(m - 1.0)),
        }
    }

    pub fn family() -> Vec<TrialShape> {
        let mut v = vec![TrialShape::QuarterSine];
        v.extend((1..=4).map(TrialShape::Sine));
        v.extend([1.0, 1.25, 1.5, 2.0, 3.0, 4.0].map(TrialShape::Power));
        v
    }
}

/// Number of cells used for the integral inequalities.
pub const POINCARE_CELLS: usize = 2000;

/// Smallest `C` with `\int G(z) <= C \int G(z')` over amplitudes in
/// `[1e-3, 1e3]` times the trial shapes, plus seeded random cubic
/// polynomials.
pub fn min_constant_poincare_modified(p: PExponent) -> Result<ConstantSearchResult> {
    require_sub_quadratic(p)?;
    let n = POINCARE_CELLS;
    let nodes: Vec<f64> = (0..=n).map(|j| j as f64 / n as f64).collect();
    let amplitudes: Vec<f64> = (0..=60).map(|k| 10f64.powf(-3.0 + k as f64 / 10.0)).collect();
    let mut samples: Vec<(Vec<f64>, Vec<f64>)> = TrialShape::family()
        .into_iter()
        .map(|s| nodes.iter().map(|&x| s.eval(x)).unzip())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..64 {
        let coef = random_coefficients(&mut rng, 4);
        samples.push(nodes.iter().map(|&x| polynomial_vanishing_at_zero(&coef, x)).unzip());
    }
    let best = samples
        .par_iter()
        .enumerate()
        .map(|(idx, (z, dz))| {
            let mut best = Best::EMPTY;
            for &c in &amplitudes {
                let zs: Vec<f64> = z.iter().map(|v| c * v).collect();
                let dzs: Vec<f64> = dz.iter().map(|v| c * v).collect();
                if let Ok((l, r)) = poincare_modified_parts(&zs, &dzs, p) {
                    if r > 0.0 {
                        best.offer(l / r, [c, idx as f64, f64::NAN]);
                    }
                }
            }
            best
        })
        .reduce(|| Best::EMPTY, Best::merge);
    finish(
        best,
        SearchedInequality::PoincareModified,
        p,
        format!("{} trial functions x {} amplitudes, {n} cells", samples.len(), amplitudes.len()),
    )
}

fn random_coefficients(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let amp = 10f64.powf(rng.gen_range(-2.0..2.0));
    (0..k).map(|_| amp * rng.gen_range(-1.0..1.0)).collect()
}

/// `z = sum_k c_k x^(k+1)` and its derivative.
fn polynomial_vanishing_at_zero(c: &[f64], x: f64) -> (f64, f64) {
    let (mut z, mut dz, mut xk) = (0.0, 0.0, 1.0);
    for (k, &ck) in c.iter().enumerate() {
        dz += (k as f64 + 1.0) * ck * xk;
        xk *= x;
        z += ck * xk;
    }
    (z, dz)
}

/// `v = x (1 - x) sum_k c_k x^k` and its derivative.
fn polynomial_vanishing_at_ends(c: &[f64], x: f64) -> (f64, f64) {
    let (mut q, mut dq, mut xk) = (0.0, 0.0, 1.0);
    for (k, &ck) in c.iter().enumerate() {
        q += ck * xk;
        if k + 1 < c.len() {
            dq += (k as f64 + 1.0) * c[k + 1] * xk;
        }
        xk *= x;
    }
    let w = x * (1.0 - x);
    (w * q, (1.0 - 2.0 * x) * q + w * dq)
}

// ---------------------------------------------------------------------------
// random audits

/// Outcome of a random audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest normalized `lhs - rhs` seen (negative when every sample holds
    /// strictly).
    pub max_excess: f64,
}

const AUDIT_CHUNK: usize = 4096;

/// Draw `n` admissible samples in parallel chunks. Chunk `i` uses the
/// ChaCha stream `i` of the root seed, so results do not depend on the
/// thread count.
pub fn audit(
    n: usize,
    seed: u64,
    slack: f64,
    sample: impl Fn(&mut ChaCha8Rng) -> Option<(f64, f64)> + Sync,
) -> AuditReport {
    let chunks = n.div_ceil(AUDIT_CHUNK);
    let parts: Vec<AuditReport> = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let quota = AUDIT_CHUNK.min(n - i * AUDIT_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut rep = AuditReport {
                samples: 0,
                violations: 0,
                max_excess: f64::NEG_INFINITY,
            };
            let mut attempts = 0usize;
            while rep.samples < quota && attempts < 100 * quota {
                attempts += 1;
                if let Some((l, r)) = sample(&mut rng) {
                    rep.samples += 1;
                    if !within(l, r, slack) {
                        rep.violations += 1;
                    }
                    rep.max_excess = rep.max_excess.max(excess(l, r));
                }
            }
            rep
        })
        .collect();
    parts.into_iter().fold(
        AuditReport {
            samples: 0,
            violations: 0,
            max_excess: f64::NEG_INFINITY,
        },
        |a, b| AuditReport {
            samples: a.samples + b.samples,
            violations: a.violations + b.violations,
            max_excess: a.max_excess.max(b.max_excess),
        },
    )
}

/// Random real spread over many scales: log-uniform magnitude in
/// `[1e-3, 1e3]` with random sign, uniform on `[-2, 2]`, or zero.
pub fn sample_value(rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.gen();
    if u < 0.5 {
        let m = 10f64.powf(rng.gen_range(-3.0..=3.0));
        if rng.gen() {
            m
        } else {
            -m
        }
    } else if u < 0.98 {
        rng.gen_range(-2.0..=2.0)
    } else {
        0.0
    }
}

/// One of `0.05 k`, `k = 1..19`, as used by the search grids.
pub fn sample_param(rng: &mut ChaCha8Rng) -> f64 {
    0.05 * rng.gen_range(1..=19) as f64
}

/// Audit `inequality` with constant `c`. Grid inequalities sample
/// `(a, b or x)` with [`sample_value`] and the parameter with
/// [`sample_param`]; the modified Poincaré inequality samples random
/// polynomials vanishing at zero.
pub fn audit_constant(inequality: SearchedInequality, p: PExponent, c: f64, n: usize, seed: u64) -> AuditReport {
    let pp = p.p();
    match inequality {
        SearchedInequality::GapPower => audit(n, seed, ESTIMATE_SLACK, |rng| {
            let (a, b, mu) = (sample_value(rng), sample_value(rng), sample_param(rng));
            if !admissible(a, b, mu) {
                return None;
            }
            let d = a - b;
            Some((pow_abs(d, pp), c / mu.powf(2.0 - pp) * d * (f_pow(a, p) - f_pow(b, p))))
        }),
        SearchedInequality::GapModified => audit(n, seed, ESTIMATE_SLACK, |rng| {
            let (a, b, mu) = (sample_value(rng), sample_value(rng), sample_param(rng));
            if !admissible(a, b, mu) {
                return None;
            }
            let d = a - b;
            Some((big_g_mod(d, p), c / mu.powf(2.0 - pp) * d * (g_mod(a, p) - g_mod(b, p))))
        }),
        SearchedInequality::Weighted(form) => audit(n, seed, ESTIMATE_SLACK, |rng| {
            let a = ProfileValues::new(sample_value(rng), p);
            let x = ProfileValues::new(sample_value(rng), p);
            let (l, unit) = weighted_parts(form, &a, &x, sample_param(rng), pp);
            Some((l, c * unit))
        }),
        SearchedInequality::PoincareModified => {
            let m = 400;
            let nodes: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
            audit(n, seed, QUADRATURE_SLACK, |rng| {
                let coef = random_coefficients(rng, 4);
                let (z, dz): (Vec<f64>, Vec<f64>) =
                    nodes.iter().map(|&x| polynomial_vanishing_at_zero(&coef, x)).unzip();
                let (l, r) = poincare_modified_parts(&z, &dz, p).ok()?;
                Some((l, c * r))
            })
        }
    }
}

/// Audit of Young's inequality with random `(A, B)`, `eta` log-uniform in
/// `[1e-2, 1e2]`.
pub fn audit_young(p: PExponent, n: usize, seed: u64) -> AuditReport {
    audit(n, seed, CLASSICAL_SLACK, |rng| {
        let eta = 10f64.powf(rng.gen_range(-2.0..=2.0));
        young_sides(sample_value(rng), sample_value(rng), eta, p).ok()
    })
}

pub fn audit_fenchel(pair: ConvexPair, n: usize, seed: u64) -> AuditReport {
    audit(n, seed, CLASSICAL_SLACK, |rng| {
        Some(fenchel_sides(sample_value(rng), sample_value(rng), &pair))
    })
}

pub fn audit_power_sum(p: PExponent, n: usize, seed: u64) -> AuditReport {
    audit(n, seed, CLASSICAL_SLACK, |rng| {
        Some(power_sum_sides(sample_value(rng), sample_value(rng), p))
    })
}

/// Random `(x, M)` for the profile bounds; every violated clause counts as a
/// violation.
pub fn audit_profile_bounds(p: PExponent, n: usize, seed: u64) -> AuditReport {
    let parts: Vec<(usize, usize)> = (0..n.div_ceil(AUDIT_CHUNK))
        .into_par_iter()
        .map(|i| {
            let quota = AUDIT_CHUNK.min(n - i * AUDIT_CHUNK);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let mut bad = 0;
            for _ in 0..quota {
                let x = sample_value(&mut rng);
                let m = 10f64.powf(rng.gen_range(-2.0..=2.0));
                if let Ok(r) = check_profile_bounds(x, m, p) {
                    bad += r.violations();
                }
            }
            (quota, bad)
        })
        .collect();
    AuditReport {
        samples: parts.iter().map(|x| x.0).sum(),
        violations: parts.iter().map(|x| x.1).sum(),
        max_excess: f64::NAN,
    }
}

/// Random polynomials `x(1-x) q(x)` with cubic `q` for the power Poincaré
/// inequality.
pub fn audit_poincare_power(p: PExponent, n: usize, seed: u64) -> AuditReport {
    let m = POINCARE_CELLS;
    let nodes: Vec<f64> = (0..=m).map(|j| j as f64 / m as f64).collect();
    audit(n, seed, QUADRATURE_SLACK, |rng| {
        let coef = random_coefficients(rng, 4);
        let (v, dv): (Vec<f64>, Vec<f64>) =
            nodes.iter().map(|&x| polynomial_vanishing_at_ends(&coef, x)).unzip();
        poincare_power_sides(&v, &dv, p).ok()
    })
}

/// Largest residual of the Fenchel identity on `n` evenly spaced points of
/// `[-range, range]`.
pub fn identity_residual_sweep(p: PExponent, n: usize, range: f64) -> f64 {
    (0..n)
        .into_par_iter()
        .map(|k| {
            let x = -range + 2.0 * range * (k as f64 + 0.5) / n as f64;
            fenchel_identity_residual(x, p)
        })
        .reduce(|| 0.0, f64::max)
}

// ---------------------------------------------------------------------------
// suite

/// One row of the inequality suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub inequality: String,
    pub p: f64,
    /// Searched constant, when the inequality has one.
    pub c_min: Option<f64>,
    pub samples: usize,
    pub violations: usize,
    pub max_excess: f64,
}

impl SuiteRow {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    pub samples: usize,
    pub polynomial_samples: usize,
    /// Exponents for inequalities valid for every `p > 1`.
    pub p_general: Vec<f64>,
    /// Exponents in `(1, 2)` for the modified profile.
    pub p_modified: Vec<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: 100_000,
            polynomial_samples: 1000,
            p_general: vec![1.5, 2.0, 3.0],
            p_modified: vec![1.25, 1.5, 1.75],
        }
    }
}

/// Derive an independent seed for one suite row.
fn row_seed(root: u64, tag: &str, p: f64) -> u64 {
    let mut h = root ^ 0x9e37_79b9_7f4a_7c15;
    for b in tag.bytes().chain(p.to_bits().to_le_bytes()) {
        h = (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Search-then-audit for one inequality with a searched constant.
pub fn search_and_audit(
    inequality: SearchedInequality,
    p: PExponent,
    grid: &SearchGrid,
    samples: usize,
    seed: u64,
) -> Result<(ConstantSearchResult, AuditReport)> {
    let found = match inequality {
        SearchedInequality::GapPower => min_constant_gap_power(p, grid)?,
        SearchedInequality::GapModified => min_constant_gap_modified(p, grid)?,
        SearchedInequality::Weighted(form) => min_constant_weighted(form, p, grid)?,
        SearchedInequality::PoincareModified => min_constant_poincare_modified(p)?,
    };
    let rep = audit_constant(inequality, p, AUDIT_FACTOR * found.c_min, samples, seed);
    Ok((found, rep))
}

/// Run every check and audit.
pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<SuiteRow>> {
    let grid = SearchGrid::standard();
    let mut rows = Vec::new();
    let row = |name: &str, p: f64, c: Option<f64>, r: AuditReport| SuiteRow {
        inequality: name.to_string(),
        p,
        c_min: c,
        samples: r.samples,
        violations: r.violations,
        max_excess: r.max_excess,
    };
    for &pv in &cfg.p_general {
        let p = PExponent::new(pv)?;
        rows.push(row("young", pv, None, audit_young(p, cfg.samples, row_seed(cfg.seed, "young", pv))));
        rows.push(row(
            "fenchel_power",
            pv,
            None,
            audit_fenchel(ConvexPair::power(p), cfg.samples, row_seed(cfg.seed, "fenchel_power", pv)),
        ));
        rows.push(row(
            "power_sum",
            pv,
            None,
            audit_power_sum(p, cfg.samples, row_seed(cfg.seed, "power_sum", pv)),
        ));
        let (found, rep) = search_and_audit(
            SearchedInequality::GapPower,
            p,
            &grid,
            cfg.samples,
            row_seed(cfg.seed, "gap_power", pv),
        )?;
        rows.push(row("gap_power", pv, Some(found.c_min), rep));
        rows.push(row(
            "poincare_power",
            pv,
            Some(k_p(p)),
            audit_poincare_power(p, cfg.polynomial_samples, row_seed(cfg.seed, "poincare_power", pv)),
        ));
    }
    for &pv in &cfg.p_modified {
        let p = PExponent::new(pv)?;
        let n = 10_000;
        let residual = identity_residual_sweep(p, n, 100.0);
        rows.push(SuiteRow {
            inequality: "fenchel_identity".into(),
            p: pv,
            c_min: None,
            samples: n,
            violations: usize::from(residual > 1e-11),
            max_excess: residual,
        });
        rows.push(row(
            "fenchel_modified",
            pv,
            None,
            audit_fenchel(ConvexPair::modified(p), cfg.samples, row_seed(cfg.seed, "fenchel_modified", pv)),
        ));
        rows.push(row(
            "profile_bounds",
            pv,
            None,
            audit_profile_bounds(p, cfg.samples, row_seed(cfg.seed, "profile_bounds", pv)),
        ));
        let searched = [
            SearchedInequality::GapModified,
            SearchedInequality::Weighted(WeightedForm::Small),
            SearchedInequality::Weighted(WeightedForm::Large),
            SearchedInequality::Weighted(WeightedForm::Profile),
            SearchedInequality::PoincareModified,
        ];
        for ineq in searched {
            let samples = if ineq == SearchedInequality::PoincareModified {
                cfg.polynomial_samples
            } else {
                cfg.samples
            };
            let (found, rep) = search_and_audit(ineq, p, &grid, samples, row_seed(cfg.seed, ineq.name(), pv))?;
            rows.push(row(ineq.name(), pv, Some(found.c_min), rep));
        }
    }
    Ok(rows)
}
