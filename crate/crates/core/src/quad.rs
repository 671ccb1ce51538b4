//! Small quadrature helpers shared by the energy functionals and the oracle.

/// Composite trapezoidal rule for node values with uniform spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => {
            let interior: f64 = values[1..n - 1].iter().sum();
            h * (interior + 0.5 * (values[0] + values[n - 1]))
        }
    }
}

/// Trapezoidal rule of `f(values[j])` without allocating.
pub fn trapezoid_map(values: &[f64], h: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut acc = 0.5 * (f(values[0]) + f(values[n - 1]));
    for &v in &values[1..n - 1] {
        acc += f(v);
    }
    h * acc
}

/// Cumulative trapezoidal integral starting from zero at the first node.
pub fn cumulative_trapezoid(values: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for (j, &v) in values.iter().enumerate() {
        if j > 0 {
            acc += 0.5 * h * (values[j - 1] + v);
        }
        out.push(acc);
    }
    out
}

/// Composite Simpson rule on `[a, b]` with at least `panels` subintervals
/// (rounded up to an even count).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let n = panels.max(2);
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_is_exact_for_linear() {
        let h = 0.25;
        let v: Vec<f64> = (0..5).map(|j| 1.0 + 2.0 * j as f64 * h).collect();
        assert!((trapezoid(&v, h) - 2.0).abs() < 1e-15);
        let c = cumulative_trapezoid(&v, h);
        assert_eq!(c[0], 0.0);
        assert!((c[4] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let s = simpson(|x| x * x * x - x, 0.0, 2.0, 3);
        assert!((s - 2.0).abs() < 1e-14);
        assert_eq!(simpson(|x| x, 1.0, 1.0, 8), 0.0);
    }
}
