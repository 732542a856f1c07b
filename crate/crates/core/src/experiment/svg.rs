//! Learning-curve figure as a standalone SVG document.

use std::fmt::Write as _;

use super::aggregate::{AggregateCurve, FlatReference};
use super::ExperimentError;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotOptions {
    pub title: Option<String>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];
const REFERENCE_COLORS: [&str; 3] = ["#444444", "#999999", "#bcbd22"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round-ish tick spacing for a span.
pub fn tick_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1000.0).round() / 1000.0;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

pub fn render_svg(
    curves: &[AggregateCurve],
    references: &[FlatReference],
    opts: &PlotOptions,
) -> Result<String, ExperimentError> {
    if curves.is_empty() {
        return Err(ExperimentError::NothingToPlot);
    }
    let episodes = curves
        .iter()
        .map(|c| c.mean.len())
        .max()
        .unwrap_or(0)
        .max(1);

    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in curves {
        for (m, s) in c.mean.iter().zip(&c.se) {
            lo = lo.min(m - s);
            hi = hi.max(m + s);
        }
    }
    for r in references {
        lo = lo.min(r.level);
        hi = hi.max(r.level);
    }
    if !lo.is_finite() || !hi.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    let lo = opts.y_min.unwrap_or(lo);
    let mut hi = opts.y_max.unwrap_or(hi);
    if hi <= lo {
        hi = lo + 1.0;
    }

    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_of = |ep: f64| {
        LEFT + if episodes > 1 {
            (ep - 1.0) / (episodes - 1) as f64 * plot_w
        } else {
            plot_w / 2.0
        }
    };
    let y_of = |v: f64| TOP + (hi - v.clamp(lo, hi)) / (hi - lo) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    if let Some(t) = &opts.title {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
            LEFT + plot_w / 2.0,
            escape(t)
        );
    }

    // Axes and ticks.
    let _ = writeln!(s, r##"<g class="axes" stroke="#000" stroke-width="1">"##);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{:.1}"/>"#,
        TOP + plot_h
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{:.1}" x2="{:.1}" y2="{:.1}"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g class="ticks">"#);
    let ys = tick_step(hi - lo, 6);
    let mut v = (lo / ys).ceil() * ys;
    while v <= hi + 1e-9 * ys {
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT}" y2="{y:.1}" stroke="#000"/><line x1="{LEFT}" y1="{y:.1}" x2="{:.1}" y2="{y:.1}" stroke="#eee"/><text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"##,
            LEFT - 4.0,
            LEFT + plot_w,
            LEFT - 7.0,
            y + 4.0,
            fmt_tick(v)
        );
        v += ys;
    }
    let xs = tick_step((episodes.max(2) - 1) as f64, 6).max(1.0);
    let mut e = xs;
    while e <= episodes as f64 + 1e-9 {
        let x = x_of(e);
        let _ = writeln!(
            s,
            r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#000"/><text x="{x:.1}" y="{:.1}" text-anchor="middle">{}</text>"##,
            TOP + plot_h,
            TOP + plot_h + 4.0,
            TOP + plot_h + 17.0,
            fmt_tick(e)
        );
        e += xs;
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">Episode</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">Episode reward</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    );

    // Bands first so every line sits on top.
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let n = c.mean.len();
        let mut pts = Vec::with_capacity(2 * n);
        for k in 0..n {
            pts.push(format!(
                "{:.2},{:.2}",
                x_of((k + 1) as f64),
                y_of(c.mean[k] + c.se[k])
            ));
        }
        for k in (0..n).rev() {
            pts.push(format!(
                "{:.2},{:.2}",
                x_of((k + 1) as f64),
                y_of(c.mean[k] - c.se[k])
            ));
        }
        let _ = writeln!(
            s,
            r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
            pts.join(" ")
        );
    }
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .mean
            .iter()
            .enumerate()
            .map(|(k, m)| format!("{:.2},{:.2}", x_of((k + 1) as f64), y_of(*m)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="1.6"/>"#,
            pts.join(" ")
        );
    }
    for (i, r) in references.iter().enumerate() {
        let color = REFERENCE_COLORS[i % REFERENCE_COLORS.len()];
        let y = y_of(r.level);
        let _ = writeln!(
            s,
            r#"<line class="reference" x1="{LEFT}" y1="{y:.2}" x2="{:.1}" y2="{y:.2}" stroke="{color}" stroke-width="1.4" stroke-dasharray="6 4"/>"#,
            LEFT + plot_w
        );
    }

    // Legend.
    let lx = LEFT + plot_w + 15.0;
    let _ = writeln!(s, r#"<g class="legend">"#);
    let mut ly = TOP + 10.0;
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&c.label)
        );
        ly += 18.0;
    }
    for (i, r) in references.iter().enumerate() {
        let color = REFERENCE_COLORS[i % REFERENCE_COLORS.len()];
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2" stroke-dasharray="6 4"/><text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&r.label)
        );
        ly += 18.0;
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    Ok(s)
}
