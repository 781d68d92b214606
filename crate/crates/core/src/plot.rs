//! Deterministic SVG line charts over sweep results.
//!
//! Three figure kinds cover the study's comparisons: the two algorithms
//! against connectivity, the anchor counts against connectivity, and the
//! anchor counts against range error. Rendering is pure string building,
//! so a given suite always produces byte-identical output.

use std::path::Path;

use crate::error::{Error, Result};
use crate::experiment::{Algorithm, CellKey, SuiteResult};
use crate::topology::TopologyKind;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 46.0;
const MARGIN_BOTTOM: f64 = 58.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Which comparison to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// MDS-MAP vs IMDS mean error over average connectivity.
    ErrorVsConnectivity,
    /// One series per anchor count, error over connectivity.
    ErrorVsAnchors,
    /// One series per anchor count, error over range-error percentage.
    ErrorVsRangeError,
}

impl FigureKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            FigureKind::ErrorVsConnectivity => "error-vs-connectivity",
            FigureKind::ErrorVsAnchors => "error-vs-anchors",
            FigureKind::ErrorVsRangeError => "error-vs-range-error",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "error-vs-connectivity" => Ok(FigureKind::ErrorVsConnectivity),
            "error-vs-anchors" => Ok(FigureKind::ErrorVsAnchors),
            "error-vs-range-error" => Ok(FigureKind::ErrorVsRangeError),
            other => Err(Error::Parse(format!("unknown figure kind `{other}`"))),
        }
    }
}

/// Cell filters for a figure. Unset values fall back to what the suite
/// holds: the random topology if present, 10 anchors (else the largest),
/// zero range error (else the smallest), the median radio range.
#[derive(Debug, Clone, Copy, Default)]
pub struct FigureParams {
    pub topology: Option<TopologyKind>,
    pub anchors: Option<usize>,
    pub radio_range: Option<f64>,
    pub range_error_fraction: Option<f64>,
    /// Series source for the per-anchor figures (`both` is rejected there).
    pub algorithm: Option<Algorithm>,
}

struct Resolved {
    topology: TopologyKind,
    anchors: usize,
    radio_range: f64,
    range_error_fraction: f64,
    algorithm: Algorithm,
}

fn resolve(result: &SuiteResult, params: &FigureParams) -> Result<Resolved> {
    if result.cells.is_empty() {
        return Err(Error::MissingCells("the result set has no cells".into()));
    }
    let keys: Vec<&CellKey> = result.cells.iter().map(|(k, _)| k).collect();
    let topology = params.topology.unwrap_or_else(|| {
        if keys.iter().any(|k| k.topology == TopologyKind::Random) {
            TopologyKind::Random
        } else {
            keys[0].topology
        }
    });
    let anchors = params.anchors.unwrap_or_else(|| {
        if keys.iter().any(|k| k.anchors == 10) {
            10
        } else {
            keys.iter().map(|k| k.anchors).max().unwrap_or(10)
        }
    });
    let range_error_fraction = params.range_error_fraction.unwrap_or_else(|| {
        keys.iter()
            .map(|k| k.range_error_fraction)
            .fold(f64::INFINITY, f64::min)
    });
    let radio_range = params.radio_range.unwrap_or_else(|| {
        let mut ranges: Vec<f64> = keys.iter().map(|k| k.radio_range).collect();
        ranges.sort_by(f64::total_cmp);
        ranges.dedup();
        ranges[ranges.len() / 2]
    });
    Ok(Resolved {
        topology,
        anchors,
        radio_range,
        range_error_fraction,
        algorithm: params.algorithm.unwrap_or(Algorithm::Imds),
    })
}

struct Series {
    label: String,
    points: Vec<(f64, f64)>,
}

fn pick_error(key_algorithm: Algorithm, s: &crate::experiment::CellStats) -> f64 {
    match key_algorithm {
        Algorithm::MdsMap => s.err_mdsmap_mean,
        _ => s.err_imds_mean,
    }
}

fn build_series(
    result: &SuiteResult,
    kind: FigureKind,
    r: &Resolved,
) -> Result<(Vec<Series>, &'static str)> {
    let mut series = Vec::new();
    let x_label;
    match kind {
        FigureKind::ErrorVsConnectivity => {
            x_label = "average connectivity";
            let mut mdsmap = Vec::new();
            let mut imds = Vec::new();
            for (key, s) in &result.cells {
                if key.topology == r.topology
                    && key.anchors == r.anchors
                    && key.range_error_fraction == r.range_error_fraction
                {
                    mdsmap.push((s.connectivity_mean, s.err_mdsmap_mean));
                    imds.push((s.connectivity_mean, s.err_imds_mean));
                }
            }
            series.push(Series {
                label: "MDS-MAP".into(),
                points: mdsmap,
            });
            series.push(Series {
                label: "IMDS".into(),
                points: imds,
            });
        }
        FigureKind::ErrorVsAnchors => {
            x_label = "average connectivity";
            if r.algorithm == Algorithm::Both {
                return Err(Error::InvalidParameter(
                    "per-anchor figures plot one algorithm; pass mdsmap or imds".into(),
                ));
            }
            let mut counts: Vec<usize> = result
                .cells
                .iter()
                .map(|(k, _)| k.anchors)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            counts.sort_unstable();
            for anchors in counts {
                let points: Vec<(f64, f64)> = result
                    .cells
                    .iter()
                    .filter(|(k, _)| {
                        k.topology == r.topology
                            && k.anchors == anchors
                            && k.range_error_fraction == r.range_error_fraction
                    })
                    .map(|(_, s)| (s.connectivity_mean, pick_error(r.algorithm, s)))
                    .collect();
                series.push(Series {
                    label: format!("{anchors} anchors"),
                    points,
                });
            }
        }
        FigureKind::ErrorVsRangeError => {
            x_label = "range error (% of R)";
            if r.algorithm == Algorithm::Both {
                return Err(Error::InvalidParameter(
                    "per-anchor figures plot one algorithm; pass mdsmap or imds".into(),
                ));
            }
            let counts: Vec<usize> = result
                .cells
                .iter()
                .map(|(k, _)| k.anchors)
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            for anchors in counts {
                let points: Vec<(f64, f64)> = result
                    .cells
                    .iter()
                    .filter(|(k, _)| {
                        k.topology == r.topology
                            && k.anchors == anchors
                            && k.radio_range == r.radio_range
                    })
                    .map(|(k, s)| (100.0 * k.range_error_fraction, pick_error(r.algorithm, s)))
                    .collect();
                series.push(Series {
                    label: format!("{anchors} anchors"),
                    points,
                });
            }
        }
    }
    series.retain(|s| !s.points.is_empty());
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    if series.is_empty() {
        return Err(Error::MissingCells(format!(
            "no cells match topology={} anchors={} R={} range_error={}",
            r.topology, r.anchors, r.radio_range, r.range_error_fraction
        )));
    }
    Ok((series, x_label))
}

/// Evenly spaced "nice" tick positions covering `[min, max]`.
fn ticks(min: f64, max: f64) -> Vec<f64> {
    let (min, max) = if (max - min).abs() < 1e-12 {
        (min - 1.0, max + 1.0)
    } else {
        (min, max)
    };
    let raw_step = (max - min) / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let norm = raw_step / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let first = (min / step).ceil() * step;
    let mut out = Vec::new();
    let mut v = first;
    while v <= max + 1e-9 * step {
        // snap to the step grid to avoid drifting sums
        out.push((v / step).round() * step);
        v += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let text = format!("{v:.4}");
    let trimmed = text.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

fn fmt_coord(v: f64) -> String {
    format!("{v:.2}")
}

/// Renders the figure to an SVG string.
pub fn render_figure(
    result: &SuiteResult,
    kind: FigureKind,
    params: &FigureParams,
) -> Result<String> {
    let resolved = resolve(result, params)?;
    let (series, x_label) = build_series(result, kind, &resolved)?;
    let y_label = "mean error (% of R)";
    let title = match kind {
        FigureKind::ErrorVsConnectivity => format!(
            "MDS-MAP vs IMDS, {} topology, {} anchors",
            resolved.topology, resolved.anchors
        ),
        FigureKind::ErrorVsAnchors => format!(
            "{} error by anchor count, {} topology",
            resolved.algorithm.as_str(),
            resolved.topology
        ),
        FigureKind::ErrorVsRangeError => format!(
            "{} error by anchor count, {} topology, R={}",
            resolved.algorithm.as_str(),
            resolved.topology,
            resolved.radio_range
        ),
    };

    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .collect();
    let (mut x_min, mut x_max) = min_max(&xs);
    let (mut y_min, mut y_max) = min_max(&ys);
    if x_max - x_min < 1e-12 {
        x_min -= 1.0;
        x_max += 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let x_pad = 0.05 * (x_max - x_min);
    let y_pad = 0.05 * (y_max - y_min);
    x_min -= x_pad;
    x_max += x_pad;
    y_min = (y_min - y_pad).min(0.0_f64.min(y_min));
    y_max += y_pad;

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + plot_h - (y - y_min) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        fmt_coord(MARGIN_LEFT + plot_w / 2.0),
        title
    ));

    // gridlines and ticks
    for tx in ticks(x_min, x_max) {
        let px = sx(tx);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            fmt_coord(px),
            fmt_coord(MARGIN_TOP),
            fmt_coord(MARGIN_TOP + plot_h)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">{}</text>\n",
            fmt_coord(px),
            fmt_coord(MARGIN_TOP + plot_h + 18.0),
            fmt_tick(tx)
        ));
    }
    for ty in ticks(y_min, y_max) {
        let py = sy(ty);
        svg.push_str(&format!(
            "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n",
            fmt_coord(MARGIN_LEFT),
            fmt_coord(MARGIN_LEFT + plot_w),
            fmt_coord(py)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\">{}</text>\n",
            fmt_coord(MARGIN_LEFT - 8.0),
            fmt_coord(py + 4.0),
            fmt_tick(ty)
        ));
    }

    // axes
    svg.push_str(&format!(
        "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        fmt_coord(MARGIN_LEFT),
        fmt_coord(MARGIN_TOP),
        fmt_coord(MARGIN_TOP + plot_h)
    ));
    svg.push_str(&format!(
        "<line x1=\"{0}\" y1=\"{2}\" x2=\"{1}\" y2=\"{2}\" stroke=\"black\" stroke-width=\"1.5\"/>\n",
        fmt_coord(MARGIN_LEFT),
        fmt_coord(MARGIN_LEFT + plot_w),
        fmt_coord(MARGIN_TOP + plot_h)
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
        fmt_coord(MARGIN_LEFT + plot_w / 2.0),
        fmt_coord(HEIGHT - 14.0),
        x_label
    ));
    svg.push_str(&format!(
        "<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        fmt_coord(MARGIN_TOP + plot_h / 2.0),
        y_label
    ));

    // series
    for (idx, s) in series.iter().enumerate() {
        let color = PALETTE[idx % PALETTE.len()];
        if s.points.len() >= 2 {
            let pts: Vec<String> = s
                .points
                .iter()
                .map(|&(x, y)| format!("{},{}", fmt_coord(sx(x)), fmt_coord(sy(y))))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                pts.join(" "),
                color
            ));
        }
        for &(x, y) in &s.points {
            svg.push_str(&format!(
                "<circle class=\"pt\" cx=\"{}\" cy=\"{}\" r=\"3.5\" fill=\"{}\"/>\n",
                fmt_coord(sx(x)),
                fmt_coord(sy(y)),
                color
            ));
        }
        // legend entry
        let ly = MARGIN_TOP + 12.0 + idx as f64 * 22.0;
        let lx = MARGIN_LEFT + plot_w + 16.0;
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\" stroke-width=\"2\"/>\n",
            fmt_coord(lx),
            fmt_coord(ly),
            fmt_coord(lx + 24.0),
            fmt_coord(ly),
            color
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            fmt_coord(lx + 30.0),
            fmt_coord(ly + 4.0),
            s.label
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn min_max(values: &[f64]) -> (f64, f64) {
    values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Renders with default cell filters and writes the SVG to `path`.
pub fn emit_plot<P: AsRef<Path>>(result: &SuiteResult, kind: FigureKind, path: P) -> Result<()> {
    emit_plot_with(result, kind, &FigureParams::default(), path)
}

/// Renders with explicit cell filters and writes the SVG to `path`.
pub fn emit_plot_with<P: AsRef<Path>>(
    result: &SuiteResult,
    kind: FigureKind,
    params: &FigureParams,
    path: P,
) -> Result<()> {
    let svg = render_figure(result, kind, params)?;
    std::fs::write(path, svg)?;
    Ok(())
}
