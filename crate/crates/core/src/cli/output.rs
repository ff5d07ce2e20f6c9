//! CSV, SVG and manifest writers.

use std::fmt::Write;

use serde::Serialize;

use crate::models::ModelSpec;
use crate::oracle::{PointDiagnostics, SweepResult};

use super::RunConfig;

/// Contents of `manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub software: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    /// Model with every parameter except the swept one.
    pub model: ModelSpec,
    pub sweep_parameter: &'static str,
    pub grid: Vec<f64>,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub csv: String,
    pub svg: Vec<String>,
    pub failed_points: usize,
    pub points: Vec<PointDiagnostics>,
}

fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// Version line, column names, then one row per grid point. Columns are
/// the sweep value followed by `<method>.<observable>.re` / `.im` pairs.
pub fn csv_string(sweep_name: &str, observables: &[&str], sweeps: &[SweepResult]) -> String {
    let mut out = format!("# liouville-pt v{}\n", env!("CARGO_PKG_VERSION"));
    out.push_str(sweep_name);
    for s in sweeps {
        for obs in observables {
            let _ = write!(out, ",{m}.{obs}.re,{m}.{obs}.im", m = s.method_tag);
        }
    }
    out.push('\n');
    let grid = sweeps.first().map(|s| s.grid.as_slice()).unwrap_or(&[]);
    for (i, x) in grid.iter().enumerate() {
        out.push_str(&number(*x));
        for s in sweeps {
            for obs in observables {
                let z = s.observables[*obs][i];
                out.push(',');
                out.push_str(&number(z.re));
                out.push(',');
                out.push_str(&number(z.im));
            }
        }
        out.push('\n');
    }
    out
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 50.0); // left, right, top, bottom

fn style(tag: &str) -> (&'static str, &'static str) {
    match tag {
        "exact" => ("#000000", ""),
        "order0" => ("#7f7f7f", " stroke-dasharray=\"2,3\""),
        "dm_pt" => ("#1f77b4", ""),
        _ => ("#d62728", " stroke-dasharray=\"6,4\""),
    }
}

/// Line plot of `|observable|` against the sweep value, one polyline per
/// method. Failed points break the line.
pub fn svg_string(model: &str, sweep_name: &str, observable: &str, sweeps: &[SweepResult]) -> String {
    let (ml, mr, mt, mb) = MARGIN;
    let grid = sweeps.first().map(|s| s.grid.clone()).unwrap_or_default();
    let (x0, x1) = (grid.first().copied().unwrap_or(0.0), grid.last().copied().unwrap_or(1.0));
    let values: Vec<Vec<f64>> =
        sweeps.iter().map(|s| s.observables[observable].iter().map(|z| z.norm()).collect()).collect();
    let finite = values.iter().flatten().copied().filter(|v| v.is_finite());
    let (mut y0, mut y1) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    if y1 - y0 <= 1e-300 {
        y1 = y0 + 1.0;
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let xs = |x: f64| ml + (x - x0) / (x1 - x0).max(1e-300) * (WIDTH - ml - mr);
    let ys = |y: f64| HEIGHT - mb - (y - y0) / (y1 - y0) * (HEIGHT - mt - mb);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(out, "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{model}: |{observable}|</text>", WIDTH / 2.0);
    let _ = writeln!(
        out,
        "<rect x=\"{ml}\" y=\"{mt}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#333\"/>",
        WIDTH - ml - mr,
        HEIGHT - mt - mb
    );
    for k in 0..=4 {
        let fx = x0 + (x1 - x0) * k as f64 / 4.0;
        let fy = y0 + (y1 - y0) * k as f64 / 4.0;
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{fx:.3}</text>", xs(fx), HEIGHT - mb + 16.0);
        let _ = writeln!(out, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{fy:.3e}</text>", ml - 4.0, ys(fy) + 4.0);
    }
    let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{sweep_name}</text>", WIDTH / 2.0, HEIGHT - 10.0);

    for (s, v) in sweeps.iter().zip(&values) {
        let (colour, dash) = style(s.method_tag.tag());
        let mut segment = Vec::new();
        let flush = |segment: &mut Vec<String>, out: &mut String| {
            if !segment.is_empty() {
                let _ = writeln!(
                    out,
                    "<polyline fill=\"none\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>",
                    segment.join(" ")
                );
                segment.clear();
            }
        };
        for (x, y) in grid.iter().zip(v) {
            if y.is_finite() {
                segment.push(format!("{:.2},{:.2}", xs(*x), ys(*y)));
            } else {
                flush(&mut segment, &mut out);
            }
        }
        flush(&mut segment, &mut out);
    }
    for (k, s) in sweeps.iter().enumerate() {
        let (colour, dash) = style(s.method_tag.tag());
        let y = mt + 16.0 + 16.0 * k as f64;
        let x = WIDTH - mr - 110.0;
        let _ = writeln!(
            out,
            "<line x1=\"{x}\" y1=\"{y}\" x2=\"{}\" y2=\"{y}\" stroke=\"{colour}\" stroke-width=\"1.5\"{dash}/>",
            x + 24.0
        );
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\">{}</text>", x + 30.0, y + 4.0, s.method_tag);
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use faer::c64;

    use super::*;
    use crate::oracle::Method;

    fn sweep(m: Method, vals: &[f64]) -> SweepResult {
        let mut observables = BTreeMap::new();
        observables.insert("x".to_string(), vals.iter().map(|&v| c64::new(v, -v)).collect());
        SweepResult { grid: vec![0.0, 1.0, 2.0], observables, method_tag: m, metadata: serde_json::Value::Null }
    }

    #[test]
    fn csv_layout() {
        let csv = csv_string("d", &["x"], &[sweep(Method::Exact, &[1.0, 0.5, 0.25]), sweep(Method::DmPt, &[1.0, f64::NAN, 0.0])]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], format!("# liouville-pt v{}", env!("CARGO_PKG_VERSION")));
        assert_eq!(lines[1], "d,exact.x.re,exact.x.im,dm_pt.x.re,dm_pt.x.im");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("0.0000000000000000e0,1.0000000000000000e0,-1.0000000000000000e0"));
        assert!(lines[3].contains("NaN"));
        assert!(!csv.contains('\r'));
        // 17 significant digits round-trip
        let v: f64 = lines[4].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(v, -0.25);
    }

    #[test]
    fn svg_has_one_polyline_per_method_and_breaks_on_nan() {
        let svg = svg_string("m", "d", "x", &[sweep(Method::Exact, &[1.0, 0.5, 0.25]), sweep(Method::AmpPt, &[1.0, f64::NAN, 0.5])]);
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains(">exact</text>") && svg.contains(">amp_pt</text>"));
    }
}
