//! Self-contained SVG charts of regret traces and final-regret histograms.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::harness::output::ResultRow;
use crate::harness::{Algorithm, Histogram};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

/// A named polyline in data coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

fn color(label: &str) -> &'static str {
    match label {
        "batchrank" => "#d62728",
        "cascadeklucb" => "#1f77b4",
        "rankedexp3" => "#7f7f7f",
        "oracle" => "#000000",
        _ => "#2ca02c",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{LEFT}" y="{TOP}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    s
}

fn legend(s: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let y = TOP + 20.0 + 22.0 * i as f64;
        let x = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{}" stroke-width="3"/>"#,
            x + 25.0,
            color(label)
        );
        let _ = writeln!(
            s,
            r#"<text class="legend" x="{}" y="{}" font-family="sans-serif" font-size="13">{}</text>"#,
            x + 32.0,
            y + 4.0,
            escape(label)
        );
    }
}

/// Line chart of per-step regret against time.
///
/// With `log_y`, nonpositive values are drawn at the smallest positive value.
pub fn line_chart_svg(title: &str, series: &[Series], log_y: bool) -> Result<String> {
    let all: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .collect();
    if all.is_empty() {
        return Err(Error::Schema("no points to plot".into()));
    }
    let x_max = all
        .iter()
        .map(|p| p.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(1.0);
    let y_of = |v: f64, floor: f64| if log_y { v.max(floor).log10() } else { v };
    let floor = all
        .iter()
        .map(|p| p.1)
        .filter(|&v| v > 0.0)
        .fold(f64::INFINITY, f64::min);
    let floor = if floor.is_finite() { floor } else { 1e-6 };
    let (mut y_lo, mut y_hi) = if log_y {
        let ys: Vec<f64> = all.iter().map(|p| y_of(p.1, floor)).collect();
        (
            ys.iter().copied().fold(f64::INFINITY, f64::min).floor(),
            ys.iter().copied().fold(f64::NEG_INFINITY, f64::max).ceil(),
        )
    } else {
        (0.0, all.iter().map(|p| p.1).fold(0.0, f64::max))
    };
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    if !log_y {
        y_lo = 0.0;
        y_hi *= 1.05;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + x / x_max * plot_w;
    let sy = |y: f64| TOP + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h;

    let mut s = header(title);
    for i in 0..=4 {
        let frac = i as f64 / 4.0;
        let xv = frac * x_max;
        let yv = y_lo + frac * (y_hi - y_lo);
        let label = if log_y {
            format!("1e{yv:.1}")
        } else {
            format!("{yv:.3e}")
        };
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{xv:.0}</text>"#,
            sx(xv),
            HEIGHT - BOTTOM + 18.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{label}</text>"#,
            LEFT - 6.0,
            sy(yv) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">step</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.2})">per-step regret</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );
    for series in series {
        let points: Vec<String> = series
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y_of(y, floor))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="series" data-label="{}" fill="none" stroke="{}" stroke-width="2" points="{}"/>"#,
            escape(&series.label),
            color(&series.label),
            points.join(" ")
        );
    }
    let labels: Vec<&str> = series.iter().map(|s| s.label.as_str()).collect();
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Grouped bar chart, one bar per (bin, series).
pub fn histogram_svg(title: &str, histograms: &[(String, Histogram)]) -> Result<String> {
    let first = histograms
        .first()
        .ok_or_else(|| Error::Schema("no histogram to plot".into()))?;
    let bins = first.1.counts.len();
    if histograms.iter().any(|(_, h)| h.edges != first.1.edges) {
        return Err(Error::Schema("histograms use different bin edges".into()));
    }
    let max_count = histograms
        .iter()
        .flat_map(|(_, h)| h.counts.iter().copied())
        .max()
        .unwrap_or(0)
        .max(1) as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let bin_w = plot_w / bins as f64;
    let bar_w = bin_w * 0.8 / histograms.len() as f64;

    let mut s = header(title);
    for bin in 0..bins {
        let x0 = LEFT + bin as f64 * bin_w;
        let (lo, hi) = (first.1.edges[bin], first.1.edges[bin + 1]);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="10">[{lo:e}, {hi:e})</text>"#,
            x0 + bin_w / 2.0,
            HEIGHT - BOTTOM + 18.0
        );
        for (j, (label, h)) in histograms.iter().enumerate() {
            let count = h.counts[bin];
            let bar_h = count as f64 / max_count * plot_h;
            let _ = writeln!(
                s,
                r#"<rect class="bar" data-label="{}" data-bin="{bin}" data-count="{count}" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                escape(label),
                x0 + bin_w * 0.1 + j as f64 * bar_w,
                TOP + plot_h - bar_h,
                bar_w,
                bar_h,
                color(label)
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">final-window per-step regret</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let labels: Vec<&str> = histograms.iter().map(|(l, _)| l.as_str()).collect();
    legend(&mut s, &labels);
    s.push_str("</svg>\n");
    Ok(s)
}

/// Mean regret per window and final-window regret of every run, grouped by
/// algorithm.
pub fn summarize_rows(
    rows: &[ResultRow],
    edges: &[f64],
) -> Result<(Vec<Series>, Vec<(String, Histogram)>)> {
    if rows.is_empty() {
        return Err(Error::Schema("results file has no rows".into()));
    }
    // algorithm -> window_end -> values
    let mut windows: BTreeMap<Algorithm, BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    // algorithm -> run -> (window_index, regret) of the latest window
    let mut finals: BTreeMap<Algorithm, BTreeMap<&str, (usize, f64)>> = BTreeMap::new();
    for r in rows {
        windows
            .entry(r.algorithm)
            .or_default()
            .entry(r.window_end)
            .or_default()
            .push(r.avg_per_step_regret);
        let slot = finals
            .entry(r.algorithm)
            .or_default()
            .entry(r.run_id.as_str())
            .or_insert((r.window_index, r.avg_per_step_regret));
        if r.window_index >= slot.0 {
            *slot = (r.window_index, r.avg_per_step_regret);
        }
    }
    let series = windows
        .into_iter()
        .map(|(algorithm, by_end)| Series {
            label: algorithm.to_string(),
            points: by_end
                .into_iter()
                .map(|(end, mut values)| {
                    values.sort_by(f64::total_cmp);
                    (end as f64, values.iter().sum::<f64>() / values.len() as f64)
                })
                .collect(),
        })
        .collect();
    let histograms = finals
        .into_iter()
        .map(|(algorithm, runs)| {
            let mut h = Histogram::new(edges.to_vec())?;
            for (_, v) in runs.values() {
                h.add(*v);
            }
            Ok((algorithm.to_string(), h))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((series, histograms))
}

/// Writes `regret.svg` and `histogram.svg` into `out_dir`. Nothing is
/// written if either chart cannot be built.
pub fn render_plots(
    rows: &[ResultRow],
    out_dir: &Path,
    edges: &[f64],
    log_y: bool,
) -> Result<Vec<PathBuf>> {
    let (series, histograms) = summarize_rows(rows, edges)?;
    let chart = line_chart_svg("Expected per-step regret", &series, log_y)?;
    let hist = histogram_svg("Final-window regret", &histograms)?;
    std::fs::create_dir_all(out_dir)?;
    let chart_path = out_dir.join("regret.svg");
    let hist_path = out_dir.join("histogram.svg");
    std::fs::write(&chart_path, chart)?;
    std::fs::write(&hist_path, hist)?;
    Ok(vec![chart_path, hist_path])
}

/// Parses the `points` of every polyline in an SVG written by
/// [`line_chart_svg`], keyed by series label.
pub fn polyline_points(svg: &str) -> Vec<(String, Vec<(f64, f64)>)> {
    let attr = |line: &str, name: &str| -> Option<String> {
        let key = format!("{name}=\"");
        let start = line.find(&key)? + key.len();
        let end = line[start..].find('"')? + start;
        Some(line[start..end].to_string())
    };
    svg.lines()
        .filter(|l| l.starts_with("<polyline"))
        .filter_map(|l| {
            let label = attr(l, "data-label")?;
            let points = attr(l, "points")?
                .split_whitespace()
                .filter_map(|p| {
                    let (x, y) = p.split_once(',')?;
                    Some((x.parse().ok()?, y.parse().ok()?))
                })
                .collect();
            Some((label, points))
        })
        .collect()
}
