//! Minimal native SVG scatter plots with optional fitted curves.

use std::fmt::Write;

use twistbethe_core::scaling::FitResult;

/// Abscissae at which an overlay curve evaluates its model.
pub const FIT_CURVE_POINTS: usize = 200;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 78.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Style {
    Markers,
    Line,
}

#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub style: Style,
}

#[derive(Clone, Debug)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub series: Vec<Series>,
}

/// `FIT_CURVE_POINTS` samples of the fitted model between `lo` and `hi`,
/// spaced evenly in `log N` when `log_x` is set.
pub fn fit_curve(fit: &FitResult, lo: f64, hi: f64, log_x: bool) -> Vec<(f64, f64)> {
    let last = (FIT_CURVE_POINTS - 1) as f64;
    (0..FIT_CURVE_POINTS)
        .map(|i| {
            let t = i as f64 / last;
            let x = if log_x {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            };
            (x, fit.eval(x))
        })
        .collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axis in transformed coordinates (`log10` for log scales).
struct Axis {
    scale: Scale,
    lo: f64,
    hi: f64,
}

impl Axis {
    fn fit(scale: Scale, values: impl Iterator<Item = f64>) -> Option<Axis> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        let span = hi - lo;
        let pad = if span > 0.0 { 0.05 * span } else { 0.5_f64.max(lo.abs() * 0.1) };
        Some(Axis {
            scale,
            lo: lo - pad,
            hi: hi + pad,
        })
    }

    fn transform(&self, v: f64) -> Option<f64> {
        match self.scale {
            Scale::Linear if v.is_finite() => Some(v),
            Scale::Log if v > 0.0 && v.is_finite() => Some(v.log10()),
            _ => None,
        }
    }

    fn frac(&self, t: f64) -> f64 {
        (t - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions (transformed) and their labels.
    fn ticks(&self) -> Vec<(f64, String)> {
        match self.scale {
            Scale::Log => {
                let (a, b) = (self.lo.ceil() as i32, self.hi.floor() as i32);
                if b >= a {
                    (a..=b).map(|k| (k as f64, format!("1e{k}"))).collect()
                } else {
                    let mid = 0.5 * (self.lo + self.hi);
                    vec![(mid, format!("{:.3e}", 10f64.powf(mid)))]
                }
            }
            Scale::Linear => {
                let raw = (self.hi - self.lo) / 6.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0]
                    .iter()
                    .map(|m| m * mag)
                    .find(|s| *s >= raw)
                    .unwrap_or(10.0 * mag);
                let first = (self.lo / step).ceil() as i64;
                let last = (self.hi / step).floor() as i64;
                let decimals = (-step.log10().floor()).max(0.0) as usize;
                (first..=last)
                    .map(|k| {
                        let v = k as f64 * step;
                        let label = if v != 0.0 && !(1e-3..1e5).contains(&v.abs()) {
                            format!("{v:.1e}")
                        } else {
                            format!("{v:.decimals$}")
                        };
                        (v, label)
                    })
                    .collect()
            }
        }
    }
}

impl Plot {
    /// `"log-log"`, `"semi-log"` or `"linear"`.
    pub fn axes_kind(&self) -> &'static str {
        match (self.x_scale, self.y_scale) {
            (Scale::Log, Scale::Log) => "log-log",
            (Scale::Linear, Scale::Linear) => "linear",
            _ => "semi-log",
        }
    }

    pub fn render(&self) -> String {
        let visible: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| &s.points)
            .filter_map(|&(x, y)| Some((transform(self.x_scale, x)?, transform(self.y_scale, y)?)))
            .collect();
        let xs = Axis::fit(self.x_scale, visible.iter().map(|p| p.0));
        let ys = Axis::fit(self.y_scale, visible.iter().map(|p| p.1));
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" data-axes="{}">"#,
            self.axes_kind()
        );
        let _ = writeln!(out, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
            WIDTH / 2.0,
            escape(&self.title)
        );
        let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            out,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 14.0,
            escape(&self.x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{0}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {0})">{1}</text>"#,
            TOP + ph / 2.0,
            escape(&self.y_label)
        );
        let (Some(xa), Some(ya)) = (xs, ys) else {
            out.push_str("</svg>\n");
            return out;
        };
        let px = |t: f64| LEFT + xa.frac(t) * pw;
        let py = |t: f64| TOP + (1.0 - ya.frac(t)) * ph;
        for (t, label) in xa.ticks() {
            let x = px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{0:.2}" x2="{x:.2}" y2="{1:.2}" stroke="black"/><text x="{x:.2}" y="{2:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{label}</text>"#,
                TOP + ph,
                TOP + ph + 5.0,
                TOP + ph + 18.0
            );
        }
        for (t, label) in ya.ticks() {
            let y = py(t);
            let _ = writeln!(
                out,
                r#"<line x1="{0:.2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{1:.2}" y="{2:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{label}</text>"#,
                LEFT - 5.0,
                LEFT - 8.0,
                y + 4.0
            );
        }
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let coords: Vec<(f64, f64)> = s
                .points
                .iter()
                .filter_map(|&(x, y)| Some((px(xa.transform(x)?), py(ya.transform(y)?))))
                .collect();
            let _ = writeln!(
                out,
                r#"<g class="series" data-label="{}" data-points="{}">"#,
                escape(&s.label),
                coords.len()
            );
            match s.style {
                Style::Markers => {
                    for (x, y) in &coords {
                        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3.5" fill="{color}"/>"#);
                    }
                }
                Style::Line => {
                    let pts: Vec<String> = coords.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                    let _ = writeln!(
                        out,
                        r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                        pts.join(" ")
                    );
                }
            }
            let ly = TOP + 16.0 + 16.0 * k as f64;
            let lx = WIDTH - RIGHT - 170.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx}" y="{0}" width="10" height="10" fill="{color}"/><text x="{1}" y="{2}" font-family="sans-serif" font-size="11">{3}</text>"#,
                ly - 9.0,
                lx + 14.0,
                ly,
                escape(&s.label)
            );
            out.push_str("</g>\n");
        }
        out.push_str("</svg>\n");
        out
    }
}

fn transform(scale: Scale, v: f64) -> Option<f64> {
    Axis { scale, lo: 0.0, hi: 1.0 }.transform(v)
}
