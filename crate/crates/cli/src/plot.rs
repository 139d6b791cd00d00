//! Line charts as standalone SVG, with the plotted points as a long CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use wdopt::harness::Trace;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 240.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 56.0;
const TICKS: usize = 5;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

pub struct Chart {
    pub series: Vec<Series>,
    pub x_label: String,
    pub logy: bool,
}

/// Short name for a trace in legends: its algorithm and norm from the
/// header, falling back to the file stem.
pub fn trace_tag(path: &Path, trace: &Trace) -> String {
    let file = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trace");
    match (trace.header_value("algorithm"), trace.header_value("norm")) {
        (Some(a), Some(n)) => format!("{file} ({a}, {n})"),
        (Some(a), None) => format!("{file} ({a})"),
        _ => file.to_string(),
    }
}

pub fn write(chart: &Chart, svg_path: &Path, csv_path: &Path) -> Result<()> {
    let svg = render_svg(chart)?;
    for p in [svg_path, csv_path] {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
        }
    }
    fs::write(svg_path, svg).with_context(|| svg_path.display().to_string())?;
    fs::write(csv_path, render_csv(chart)).with_context(|| csv_path.display().to_string())?;
    Ok(())
}

pub fn render_csv(chart: &Chart) -> String {
    let mut out = String::from("series,t,value\n");
    for s in &chart.series {
        let label = csv_field(&s.label);
        for (x, y) in &s.points {
            let _ = writeln!(out, "{label},{x},{y:e}");
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Range of the finite values, widened when degenerate.
fn extent(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo > hi {
        return None;
    }
    if lo == hi {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.5 };
        return Some((lo - pad, hi + pad));
    }
    Some((lo, hi))
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        return format!("1e{}", v.round() as i64);
    }
    let a = v.abs();
    if a != 0.0 && !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        if s == "-0" { "0".into() } else { s.to_string() }
    }
}

pub fn render_svg(chart: &Chart) -> Result<String> {
    let map_y = |y: f64| if chart.logy { y.log10() } else { y };
    let Some((x_lo, x_hi)) = extent(chart.series.iter().flat_map(|s| s.points.iter().map(|p| p.0))) else {
        bail!("nothing to plot: no finite x values");
    };
    let ys = chart
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|&y| !chart.logy || y > 0.0)
        .map(map_y);
    let Some((y_lo, y_hi)) = extent(ys) else {
        bail!(
            "nothing to plot: no {} y values",
            if chart.logy { "positive finite" } else { "finite" }
        );
    };
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * pw;
    let sy = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let xv = x_lo + f * (x_hi - x_lo);
        let yv = y_lo + f * (y_hi - y_lo);
        let (px, py) = (sx(xv), sy(yv));
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e0e0e0"/><text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 16.0,
            xml_escape(&tick_label(xv, false))
        );
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            py + 4.0,
            xml_escape(&tick_label(yv, chart.logy))
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 16.0,
        xml_escape(&chart.x_label)
    );
    for (i, s) in chart.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        // Non-plottable points split the line into segments.
        let mut segments: Vec<Vec<String>> = vec![Vec::new()];
        for &(x, y) in &s.points {
            let ok = x.is_finite() && y.is_finite() && (!chart.logy || y > 0.0);
            if ok {
                segments
                    .last_mut()
                    .expect("non-empty")
                    .push(format!("{:.2},{:.2}", sx(x), sy(map_y(y))));
            } else if !segments.last().expect("non-empty").is_empty() {
                segments.push(Vec::new());
            }
        }
        for seg in segments.iter().filter(|s| !s.is_empty()) {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                seg.join(" ")
            );
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{:.2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            xml_escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chart(logy: bool) -> Chart {
        Chart {
            series: vec![
                Series {
                    label: "a <b>".into(),
                    points: vec![(1.0, 1.0), (2.0, 0.1), (3.0, f64::NAN), (4.0, 0.001)],
                },
                Series {
                    label: "c,d".into(),
                    points: vec![(1.0, 2.0), (4.0, 3.0)],
                },
            ],
            x_label: "t".into(),
            logy,
        }
    }

    #[test]
    fn one_polyline_per_segment() {
        let svg = render_svg(&chart(true)).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.contains("a &lt;b&gt;"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn csv_is_long_format() {
        let csv = render_csv(&chart(false));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "series,t,value");
        assert_eq!(lines.len(), 1 + 6);
        assert!(lines[6].starts_with("\"c,d\",4,"));
    }

    #[test]
    fn log_axis_needs_positive_values() {
        let c = Chart {
            series: vec![Series {
                label: "z".into(),
                points: vec![(1.0, 0.0), (2.0, -1.0)],
            }],
            x_label: "t".into(),
            logy: true,
        };
        assert!(render_svg(&c).is_err());
    }

    #[test]
    fn tick_labels() {
        assert_eq!(tick_label(2.5, false), "2.5");
        assert_eq!(tick_label(0.0, false), "0");
        assert_eq!(tick_label(-3.0, true), "1e-3");
        assert_eq!(tick_label(12345.0, false), "1.23e4");
    }
}
