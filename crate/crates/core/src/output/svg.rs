//! Minimal SVG figures: line/marker plots and heat maps.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f4e9c", "#c0392b", "#111111", "#2e8b57", "#8e44ad", "#d35400"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub markers: bool,
    pub line: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            markers: false,
            line: true,
        }
    }

    pub fn markers(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
            markers: true,
            line: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub log_y: bool,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Roughly five round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    if !(span > 0.0) {
        return vec![lo];
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= 6.0)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn label(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-3) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi == lo {
        let pad = if lo == 0.0 { 1.0 } else { 0.05 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">
<rect width="100%" height="100%" fill="white"/>
<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>
"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str, y_fmt: impl Fn(f64) -> String) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    for t in ticks(f.x.0, f.x.1) {
        let x = f.px(t);
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.1}" stroke="black"/><text x="{x:.2}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y1 + 5.0,
            y1 + 18.0,
            label(t)
        );
    }
    for t in ticks(f.y.0, f.y.1) {
        let y = f.py(t);
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.1}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            y + 4.0,
            y_fmt(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="20" y="{:.1}" text-anchor="middle" transform="rotate(-90 20 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

impl Plot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            log_y: false,
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self) -> String {
        let ty = |y: f64| if self.log_y { y.log10() } else { y };
        let usable = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!self.log_y || y > 0.0);
        let pts = || self.series.iter().flat_map(|s| s.points.iter().copied().filter(usable));
        let f = Frame {
            x: bounds(pts().map(|p| p.0)),
            y: bounds(pts().map(|p| ty(p.1))),
        };
        let mut out = String::new();
        header(&mut out, &self.title);
        let log_y = self.log_y;
        axes(&mut out, &f, &self.x_label, &self.y_label, |t| {
            if log_y {
                label(10f64.powf(t))
            } else {
                label(t)
            }
        });
        for (k, s) in self.series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let p: Vec<(f64, f64)> = s.points.iter().copied().filter(usable).map(|(x, y)| (f.px(x), f.py(ty(y)))).collect();
            if s.line && p.len() > 1 {
                let d: Vec<String> = p.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    d.join(" ")
                );
            }
            if s.markers {
                for (x, y) in &p {
                    let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                }
            }
            let ly = TOP + 10.0 + 18.0 * k as f64;
            let lx = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx}" y="{:.1}" width="12" height="3" fill="{color}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
                ly - 4.0,
                lx + 16.0,
                escape(&s.label)
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Five-stop approximation of a perceptually ordered colour map on `[0, 1]`.
fn colour(t: f64) -> String {
    const STOPS: [(f64, f64, f64); 5] = [
        (68.0, 1.0, 84.0),
        (59.0, 82.0, 139.0),
        (33.0, 145.0, 140.0),
        (94.0, 201.0, 98.0),
        (253.0, 231.0, 37.0),
    ];
    let t = t.clamp(0.0, 1.0) * 4.0;
    let i = (t.floor() as usize).min(3);
    let u = t - i as f64;
    let (a, b) = (STOPS[i], STOPS[i + 1]);
    let mix = |p: f64, q: f64| (p + (q - p) * u).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(a.0, b.0), mix(a.1, b.1), mix(a.2, b.2))
}

/// Heat map of `values[i][j]` at `(x[i], y[j])`, normalised to its maximum.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, x: &[f64], y: &[f64], values: &[Vec<f64>]) -> String {
    let f = Frame {
        x: bounds(x.iter().copied()),
        y: bounds(y.iter().copied()),
    };
    let mut out = String::new();
    header(&mut out, title);
    let max = values.iter().flatten().copied().fold(0.0, f64::max);
    let cw = (WIDTH - LEFT - RIGHT) / x.len().max(1) as f64;
    let ch = (HEIGHT - TOP - BOTTOM) / y.len().max(1) as f64;
    for (i, row) in values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let t = if max > 0.0 { v / max } else { 0.0 };
            if t < 1e-3 {
                continue;
            }
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                LEFT + i as f64 * cw,
                HEIGHT - BOTTOM - (j + 1) as f64 * ch,
                cw + 0.05,
                ch + 0.05,
                colour(t)
            );
        }
    }
    axes(&mut out, &f, x_label, y_label, label);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round_and_cover_range() {
        assert_eq!(ticks(0.0, 20.0), vec![0.0, 5.0, 10.0, 15.0, 20.0]);
        let t = ticks(741.3, 790.2);
        assert!(t.first().unwrap() >= &741.3 && t.last().unwrap() <= &790.2 && t.len() >= 3);
    }

    #[test]
    fn plot_is_well_formed_and_deterministic() {
        let p = Plot::new("a < b", "x", "y").with(Series::markers("s", vec![(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)]));
        let s = p.render();
        assert!(s.starts_with("<svg") && s.ends_with("</svg>\n"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert_eq!(s, p.render());
        let h = heatmap("h", "x", "y", &[0.0, 1.0], &[0.0, 1.0], &[vec![0.0, 1.0], vec![0.5, 0.25]]);
        assert_eq!(h.matches("<rect x=").count() - 1, 3);
        assert_eq!(colour(0.0), "#440154");
    }
}
