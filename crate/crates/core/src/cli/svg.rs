//! Static SVG line plots and heatmaps.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 30.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Line,
    Dashed,
    Markers,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub style: Style,
}

impl Series {
    pub fn new(label: &str, x: Vec<f64>, y: Vec<f64>, style: Style) -> Self {
        Series {
            label: label.into(),
            x,
            y,
            style,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<Series>,
}

impl LinePlot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        LinePlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_y: false,
            series: Vec::new(),
        }
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    pub fn render(&self, comment: &str) -> String {
        let ty = |y: f64| if self.log_y { y.max(f64::MIN_POSITIVE).log10() } else { y };
        let finite = |v: f64| v.is_finite();
        let xs = self.series.iter().flat_map(|s| s.x.iter().copied()).filter(|v| finite(*v));
        let ys = self
            .series
            .iter()
            .flat_map(|s| s.y.iter().map(|&y| ty(y)))
            .filter(|v| finite(*v));
        let (x0, x1) = padded(bounds(xs), 0.0);
        let (y0, y1) = padded(bounds(ys), 0.05);

        let mut out = open(comment, &self.title);
        let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (WIDTH - LEFT - RIGHT);
        let py = |y: f64| HEIGHT - BOTTOM - (y - y0) / (y1 - y0) * (HEIGHT - TOP - BOTTOM);
        frame(&mut out);
        for t in ticks(x0, x1) {
            let x = px(t);
            let _ = writeln!(
                out,
                r#"<line x1="{x:.2}" y1="{b:.2}" x2="{x:.2}" y2="{c:.2}" stroke="black"/><text x="{x:.2}" y="{d:.2}" text-anchor="middle" font-size="12">{}</text>"#,
                label(t),
                b = HEIGHT - BOTTOM,
                c = HEIGHT - BOTTOM + 5.0,
                d = HEIGHT - BOTTOM + 20.0
            );
        }
        for t in ticks(y0, y1) {
            let y = py(t);
            let text = if self.log_y { format!("1e{}", label(t)) } else { label(t) };
            let _ = writeln!(
                out,
                r#"<line x1="{a:.2}" y1="{y:.2}" x2="{LEFT:.2}" y2="{y:.2}" stroke="black"/><text x="{b:.2}" y="{c:.2}" text-anchor="end" font-size="12">{text}</text>"#,
                a = LEFT - 5.0,
                b = LEFT - 8.0,
                c = y + 4.0
            );
        }
        axis_labels(&mut out, &self.x_label, &self.y_label);

        for (k, s) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let pts: Vec<(f64, f64)> = s
                .x
                .iter()
                .zip(&s.y)
                .map(|(&x, &y)| (x, ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .map(|(x, y)| (px(x), py(y)))
                .collect();
            match s.style {
                Style::Markers => {
                    for (x, y) in &pts {
                        let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                    }
                }
                Style::Line | Style::Dashed => {
                    let dash = if s.style == Style::Dashed { r#" stroke-dasharray="6,4""# } else { "" };
                    let mut d = String::new();
                    for (i, (x, y)) in pts.iter().enumerate() {
                        let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
                    }
                    let _ = writeln!(
                        out,
                        r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
                        d.trim_end()
                    );
                }
            }
            let ly = TOP + 16.0 + 16.0 * k as f64;
            let lx = WIDTH - RIGHT - 160.0;
            let _ = writeln!(
                out,
                r#"<rect x="{lx:.2}" y="{a:.2}" width="12" height="4" fill="{color}"/><text x="{b:.2}" y="{ly:.2}" font-size="12">{}</text>"#,
                escape(&s.label),
                a = ly - 6.0,
                b = lx + 18.0
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

/// Cells drawn on an index grid; `values` is row-major with `x` outermost.
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<f64>,
}

impl Heatmap {
    pub fn render(&self, comment: &str) -> String {
        let (nx, ny) = (self.x.len().max(1), self.y.len().max(1));
        let (lo, hi) = padded(bounds(self.values.iter().copied().filter(|v| v.is_finite())), 0.0);
        let plot_w = WIDTH - LEFT - RIGHT - 70.0;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let (cw, ch) = (plot_w / nx as f64, plot_h / ny as f64);

        let mut out = open(comment, &self.title);
        for i in 0..nx {
            for j in 0..ny {
                let v = self.values.get(i * ny + j).copied().unwrap_or(f64::NAN);
                let fill = if v.is_finite() { colormap((v - lo) / (hi - lo)) } else { "#ffffff".into() };
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                    LEFT + i as f64 * cw,
                    TOP + plot_h - (j + 1) as f64 * ch,
                    cw + 0.3,
                    ch + 0.3
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w:.2}" height="{plot_h:.2}" fill="none" stroke="black"/>"#
        );
        for i in index_ticks(nx) {
            let x = LEFT + (i as f64 + 0.5) * cw;
            let _ = writeln!(
                out,
                r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-size="12">{}</text>"#,
                HEIGHT - BOTTOM + 20.0,
                self.x.get(i).map_or(String::new(), |v| label(*v))
            );
        }
        for j in index_ticks(ny) {
            let y = TOP + plot_h - (j as f64 + 0.5) * ch;
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-size="12">{}</text>"#,
                LEFT - 8.0,
                y + 4.0,
                self.y.get(j).map_or(String::new(), |v| label(*v))
            );
        }
        let bar_x = LEFT + plot_w + 20.0;
        for k in 0..50 {
            let f = k as f64 / 49.0;
            let _ = writeln!(
                out,
                r#"<rect x="{bar_x:.2}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
                TOP + plot_h * (1.0 - (k + 1) as f64 / 50.0),
                plot_h / 50.0 + 0.3,
                colormap(f)
            );
        }
        for (v, y) in [(hi, TOP + 10.0), (lo, TOP + plot_h)] {
            let _ = writeln!(
                out,
                r#"<text x="{:.2}" y="{y:.2}" font-size="11">{}</text>"#,
                bar_x + 20.0,
                label(v)
            );
        }
        axis_labels(&mut out, &self.x_label, &self.y_label);
        out.push_str("</svg>\n");
        out
    }
}

fn open(comment: &str, title: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(out, "<!--\n{}\n-->", comment.replace("--", "- -"));
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="16">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
    out
}

fn frame(out: &mut String) {
    let _ = writeln!(
        out,
        r#"<rect x="{LEFT}" y="{TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
}

fn axis_labels(out: &mut String, x: &str, y: &str) {
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{}</text>"#,
        LEFT + (WIDTH - LEFT - RIGHT) / 2.0,
        HEIGHT - 15.0,
        escape(x)
    );
    let cy = TOP + (HEIGHT - TOP - BOTTOM) / 2.0;
    let _ = writeln!(
        out,
        r#"<text x="14" y="{cy:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 14 {cy:.2})">{}</text>"#,
        escape(y)
    );
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
}

fn padded((lo, hi): (f64, f64), frac: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-300 {
        let w = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - w, hi + w);
    }
    let pad = frac * (hi - lo);
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let step = mag
        * if f < 1.5 {
            1.0
        } else if f < 3.0 {
            2.0
        } else if f < 7.0 {
            5.0
        } else {
            10.0
        };
    let first = (lo / step).ceil();
    (0..20)
        .map(|k| (first + k as f64) * step)
        .take_while(|t| *t <= hi + 1e-9 * step)
        .map(|t| if t.abs() < 1e-12 * step { 0.0 } else { t })
        .collect()
}

fn index_ticks(n: usize) -> Vec<usize> {
    let every = n.div_ceil(5).max(1);
    (0..n).step_by(every).collect()
}

fn label(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".into()
    } else if !(1e-3..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        let decimals = (3 - a.log10().floor() as i32).max(0) as usize;
        let s = format!("{v:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

fn colormap(f: f64) -> String {
    const STOPS: [(f64, [f64; 3]); 5] = [
        (0.0, [68.0, 1.0, 84.0]),
        (0.25, [59.0, 82.0, 139.0]),
        (0.5, [33.0, 145.0, 140.0]),
        (0.75, [94.0, 201.0, 98.0]),
        (1.0, [253.0, 231.0, 37.0]),
    ];
    let f = if f.is_finite() { f.clamp(0.0, 1.0) } else { 0.0 };
    let k = STOPS.iter().rposition(|s| s.0 <= f).unwrap_or(0).min(STOPS.len() - 2);
    let (a, b) = (STOPS[k], STOPS[k + 1]);
    let w = (f - a.0) / (b.0 - a.0);
    let c: Vec<u8> = (0..3).map(|i| (a.1[i] + w * (b.1[i] - a.1[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
