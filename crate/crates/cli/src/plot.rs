//! Bare SVG line chart of `log10 E_p` against `t`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::commands::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Series keyed by the textual `p` so the legend shows what the CSV holds.
fn read_series(text: &str) -> Result<BTreeMap<String, Vec<(f64, f64)>>, CliError> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("plot input has no '{name}' column")))
    };
    let (it, ip, ie) = (col("t")?, col("p")?, col("E_p")?);
    let mut series: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .parse()
                .map_err(|_| CliError::Usage(format!("not a number: '{}'", &rec[i])))
        };
        let (t, e) = (num(it)?, num(ie)?);
        // log axis: zero energy has no place on it
        if e > 0.0 {
            series.entry(rec[ip].to_string()).or_default().push((t, e.log10()));
        }
    }
    Ok(series)
}

/// Render the energy CSV; returns the SVG text and the number of series.
pub fn plot_energy_csv(text: &str) -> Result<(String, usize), CliError> {
    let series = read_series(text)?;
    if series.is_empty() {
        return Err(CliError::Usage("plot input has no positive E_p values".into()));
    }
    let pts = series.values().flatten();
    let (mut t0, mut t1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(t, y) in pts {
        t0 = t0.min(t);
        t1 = t1.max(t);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    if t1 <= t0 {
        t1 = t0 + 1.0;
    }
    let sx = |t: f64| MARGIN + (t - t0) / (t1 - t0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} L{left},{bottom} L{right},{bottom}" stroke="black" fill="none"/>"#
    );
    let decades = (y1 - y0) as i64;
    let step = (decades / 8).max(1);
    let mut d = 0;
    while d <= decades {
        let y = sy(y0 + d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{left}" y2="{y:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">1e{}</text>"#,
            left - 5.0,
            left - 8.0,
            y + 4.0,
            y0 as i64 + d
        );
        d += step;
    }
    for k in 0..=5 {
        let t = t0 + (t1 - t0) * k as f64 / 5.0;
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{bottom}" x2="{x:.2}" y2="{}" stroke="black"/><text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            bottom + 5.0,
            bottom + 20.0,
            (t * 100.0).round() / 100.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
        0.5 * WIDTH,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">E_p</text>"#,
        0.5 * HEIGHT,
        0.5 * HEIGHT
    );
    for (i, (p, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let coords: Vec<String> = pts
            .iter()
            .map(|&(t, y)| format!("{:.2},{:.2}", sx(t), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            coords.join(" ")
        );
        let ly = top + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">p = {p}</text>"#,
            right - 90.0,
            right - 70.0,
            right - 65.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    Ok((s, series.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_polyline_per_p() {
        let csv = "t,p,E_p,calE_p,dissipation,overbar\n0,2,1,0,0,0\n1,2,0.1,0,0,0\n0,3,2,0,0,0\n1,3,0.5,0,0,0\n";
        let (svg, n) = plot_energy_csv(csv).unwrap();
        assert_eq!(n, 2);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("p = 3"));
    }

    #[test]
    fn missing_column() {
        assert!(plot_energy_csv("t,p\n0,2\n").is_err());
    }
}
