//! Self-contained SVG line plots on log₁₀ axes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::compare::BoundReport;
use crate::error::Result;
use crate::trace::TraceRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesKind {
    Data,
    Upper,
    Lower,
}

impl SeriesKind {
    fn class(self) -> &'static str {
        match self {
            SeriesKind::Data => "data",
            SeriesKind::Upper => "upper",
            SeriesKind::Lower => "lower",
        }
    }

    fn stroke(self) -> (&'static str, &'static str) {
        match self {
            SeriesKind::Data => ("#1f4e96", ""),
            SeriesKind::Upper => ("#b03a2e", " stroke-dasharray=\"6 4\""),
            SeriesKind::Lower => ("#2e7d32", " stroke-dasharray=\"2 3\""),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub kind: SeriesKind,
    /// `(t, value)`; points with `t < 1` or `value <= 0` cannot be drawn and are dropped.
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Plot {
    pub name: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Default)]
pub struct PlotOutput {
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn drawable(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points
        .iter()
        .filter(|(t, v)| *t >= 1.0 && *v > 0.0 && v.is_finite())
        .map(|(t, v)| (t.log10(), v.log10()))
        .collect()
}

pub fn plot_from_trace(name: &str, rows: &[TraceRow]) -> Plot {
    Plot {
        name: name.to_string(),
        series: vec![Series {
            label: "residual".into(),
            kind: SeriesKind::Data,
            points: rows.iter().filter_map(|r| r.residual.map(|v| (r.t as f64, v))).collect(),
        }],
    }
}

pub fn plot_from_report(name: &str, report: &BoundReport) -> Plot {
    let pick = |f: fn(&crate::compare::BoundRow) -> Option<f64>| -> Vec<(f64, f64)> {
        report.rows.iter().filter_map(|r| f(r).map(|v| (r.t as f64, v))).collect()
    };
    Plot {
        name: name.to_string(),
        series: vec![
            Series {
                label: "residual".into(),
                kind: SeriesKind::Data,
                points: pick(|r| r.residual),
            },
            Series {
                label: "upper envelope".into(),
                kind: SeriesKind::Upper,
                points: pick(|r| r.upper),
            },
            Series {
                label: "lower envelope".into(),
                kind: SeriesKind::Lower,
                points: pick(|r| r.lower),
            },
        ],
    }
}

const W: f64 = 640.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// `None` when the data series has nothing drawable.
pub fn render_svg(plot: &Plot) -> Option<String> {
    let series: Vec<(&Series, Vec<(f64, f64)>)> = plot.series.iter().map(|s| (s, drawable(&s.points))).collect();
    let has_data = series.iter().any(|(s, p)| s.kind == SeriesKind::Data && !p.is_empty());
    if !has_data {
        return None;
    }
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x_lo, mut x_hi, mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    let (x_lo, mut x_hi) = (x_lo.floor(), x_hi.ceil());
    let (y_lo, mut y_hi) = (y_lo.floor(), y_hi.ceil());
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let sx = |x: f64| LEFT + (x - x_lo) / (x_hi - x_lo) * (W - LEFT - RIGHT);
    let sy = |y: f64| H - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (H - TOP - BOTTOM);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">"
    );
    let _ = writeln!(svg, "<title>{}</title>", escape(&plot.name));
    let _ = writeln!(svg, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#444\"/>",
        W - LEFT - RIGHT,
        H - TOP - BOTTOM
    );
    // Decade ticks; the y axis thins out long ranges to about ten labels.
    for e in x_lo as i64..=x_hi as i64 {
        let x = sx(e as f64);
        let _ = writeln!(svg, "<line x1=\"{x:.2}\" y1=\"{}\" x2=\"{x:.2}\" y2=\"{}\" stroke=\"#ddd\"/>", TOP, H - BOTTOM);
        let _ = writeln!(
            svg,
            "<text class=\"xtick\" x=\"{x:.2}\" y=\"{}\" text-anchor=\"middle\">1e{e}</text>",
            H - BOTTOM + 16.0
        );
    }
    let step = (((y_hi - y_lo) / 10.0).ceil() as i64).max(1);
    let mut e = y_lo as i64;
    while e <= y_hi as i64 {
        let y = sy(e as f64);
        let _ = writeln!(svg, "<line x1=\"{LEFT}\" y1=\"{y:.2}\" x2=\"{}\" y2=\"{y:.2}\" stroke=\"#ddd\"/>", W - RIGHT);
        let _ = writeln!(
            svg,
            "<text class=\"ytick\" x=\"{}\" y=\"{:.2}\" text-anchor=\"end\">1e{e}</text>",
            LEFT - 6.0,
            y + 4.0
        );
        e += step;
    }
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">iteration t</text>",
        (LEFT + W - RIGHT) / 2.0,
        H - 12.0
    );
    let _ = writeln!(
        svg,
        "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">f(x_t) - f*</text>",
        (TOP + H - BOTTOM) / 2.0,
        (TOP + H - BOTTOM) / 2.0
    );
    let mut legend_y = TOP + 14.0;
    for (s, pts) in &series {
        if pts.is_empty() {
            continue;
        }
        let (color, dash) = s.kind.stroke();
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(
            svg,
            "<polyline class=\"series {}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.6\"{dash} points=\"{}\"/>",
            s.kind.class(),
            coords.join(" ")
        );
        let lx = W - RIGHT - 150.0;
        let _ = writeln!(
            svg,
            "<line x1=\"{lx}\" y1=\"{legend_y}\" x2=\"{}\" y2=\"{legend_y}\" stroke=\"{color}\" stroke-width=\"1.6\"{dash}/>",
            lx + 24.0
        );
        let _ = writeln!(svg, "<text x=\"{}\" y=\"{}\">{}</text>", lx + 30.0, legend_y + 4.0, escape(&s.label));
        legend_y += 16.0;
    }
    svg.push_str("</svg>\n");
    Some(svg)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn emit_plots(plots: &[Plot], out_dir: &Path) -> Result<PlotOutput> {
    let mut out = PlotOutput::default();
    for plot in plots {
        match render_svg(plot) {
            Some(svg) => {
                std::fs::create_dir_all(out_dir)?;
                let path = out_dir.join(format!("{}.svg", file_stem(&plot.name)));
                std::fs::write(&path, svg)?;
                out.written.push(path);
            }
            None => out.warnings.push(format!("{}: no positive residuals to plot, skipped", plot.name)),
        }
    }
    Ok(out)
}
