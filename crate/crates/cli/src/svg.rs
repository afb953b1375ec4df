//! Hand-written SVG for scatter plots and metric curves. Output depends only
//! on the inputs, so identical runs give identical bytes.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 64.0;
const ELLIPSE_SEGMENTS: usize = 96;

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

pub fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Linear data-to-pixel mapping for one plot area.
#[derive(Debug, Clone, Copy)]
struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn new(mut x: (f64, f64), mut y: (f64, f64)) -> Self {
        for r in [&mut x, &mut y] {
            if !(r.1 > r.0) {
                *r = (r.0 - 0.5, r.0 + 0.5);
            }
        }
        Self { x, y }
    }

    fn padded(self, frac: f64) -> Self {
        let px = (self.x.1 - self.x.0) * frac;
        let py = (self.y.1 - self.y.0) * frac;
        Self { x: (self.x.0 - px, self.x.1 + px), y: (self.y.0 - py, self.y.1 + py) }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (left, right) = (MARGIN, WIDTH - MARGIN);
        let (top, bottom) = (MARGIN, HEIGHT - MARGIN);
        let _ = writeln!(
            out,
            r##"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="#333"/>"##,
            right - left,
            bottom - top
        );
        for t in 0..=4 {
            let f = t as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (x, y) = (self.px(xv), self.py(yv));
            let _ = writeln!(out, r##"<line x1="{x:.3}" y1="{bottom}" x2="{x:.3}" y2="{:.3}" stroke="#333"/>"##, bottom + 5.0);
            let _ = writeln!(
                out,
                r#"<text x="{x:.3}" y="{:.3}" font-size="11" text-anchor="middle">{}</text>"#,
                bottom + 18.0,
                tick(xv)
            );
            let _ = writeln!(out, r##"<line x1="{:.3}" y1="{y:.3}" x2="{left}" y2="{y:.3}" stroke="#333"/>"##, left - 5.0);
            let _ = writeln!(
                out,
                r#"<text x="{:.3}" y="{:.3}" font-size="11" text-anchor="end">{}</text>"#,
                left - 8.0,
                y + 4.0,
                tick(yv)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.3}" y="{:.3}" font-size="13" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 16.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="18" y="{:.3}" font-size="13" text-anchor="middle" transform="rotate(-90 18 {:.3})">{}</text>"#,
            HEIGHT / 2.0,
            HEIGHT / 2.0,
            escape(y_label)
        );
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" { "0.00".into() } else { s }
}

fn header(out: &mut String, title: &str, metadata: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(out, "<metadata>{}</metadata>", escape(metadata));
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.3}" y="32" font-size="15" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    );
}

fn legend(out: &mut String, entries: &[(String, &str)]) {
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = MARGIN + 14.0 + 18.0 * i as f64;
        let x = WIDTH - MARGIN - 110.0;
        let _ = writeln!(out, r#"<rect x="{x}" y="{:.3}" width="12" height="12" fill="{color}"/>"#, y - 10.0);
        let _ = writeln!(out, r#"<text x="{}" y="{y:.3}" font-size="12">{}</text>"#, x + 18.0, escape(label));
    }
}

/// One value's 2-D Gaussian: mean and lower Cholesky factor (row-major 2×2).
#[derive(Debug, Clone)]
pub struct Contour {
    pub value: String,
    pub mean: [f64; 2],
    pub lower: [[f64; 2]; 2],
}

impl Contour {
    /// Point at Mahalanobis radius `r` and angle `t`.
    fn at(&self, r: f64, t: f64) -> (f64, f64) {
        let (c, s) = (t.cos(), t.sin());
        let l = &self.lower;
        (self.mean[0] + r * l[0][0] * c, self.mean[1] + r * (l[1][0] * c + l[1][1] * s))
    }
}

pub const CONTOUR_RADII: [f64; 2] = [1.0, 2.0];

pub struct Scatter<'a> {
    pub title: String,
    pub axis_labels: [String; 2],
    pub values: &'a [String],
    /// (x, y, value index)
    pub points: &'a [(f64, f64, usize)],
    pub contours: &'a [Contour],
    pub metadata: String,
}

pub fn scatter(plot: &Scatter<'_>) -> String {
    let mut xs: Vec<f64> = plot.points.iter().map(|p| p.0).collect();
    let mut ys: Vec<f64> = plot.points.iter().map(|p| p.1).collect();
    for c in plot.contours {
        for k in 0..ELLIPSE_SEGMENTS {
            let (x, y) = c.at(CONTOUR_RADII[1], angle(k));
            xs.push(x);
            ys.push(y);
        }
    }
    let frame = Frame::new(bounds(&xs), bounds(&ys)).padded(0.04);

    let mut out = String::new();
    header(&mut out, &plot.title, &plot.metadata);
    frame.axes(&mut out, &plot.axis_labels[0], &plot.axis_labels[1]);
    out.push_str("<g class=\"points\">\n");
    for &(x, y, v) in plot.points {
        let _ = writeln!(
            out,
            r#"<circle cx="{:.3}" cy="{:.3}" r="2.5" fill="{}" fill-opacity="0.55" data-value="{}"/>"#,
            frame.px(x),
            frame.py(y),
            color(v),
            escape(&plot.values[v])
        );
    }
    out.push_str("</g>\n<g class=\"contours\">\n");
    for (v, c) in plot.contours.iter().enumerate() {
        for r in CONTOUR_RADII {
            let mut d = String::new();
            for k in 0..ELLIPSE_SEGMENTS {
                let (x, y) = c.at(r, angle(k));
                let _ = write!(d, "{}{:.3},{:.3} ", if k == 0 { "M" } else { "L" }, frame.px(x), frame.py(y));
            }
            d.push('Z');
            let _ = writeln!(
                out,
                r#"<path d="{d}" fill="none" stroke="{}" stroke-width="1.6" data-value="{}" data-radius="{r}"/>"#,
                color(v),
                escape(&c.value)
            );
        }
    }
    out.push_str("</g>\n");
    let entries: Vec<(String, &str)> = plot.values.iter().enumerate().map(|(i, v)| (v.clone(), color(i))).collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}

fn angle(k: usize) -> f64 {
    std::f64::consts::TAU * k as f64 / ELLIPSE_SEGMENTS as f64
}

fn bounds(xs: &[f64]) -> (f64, f64) {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo.is_finite() && hi.is_finite() { (lo, hi) } else { (0.0, 1.0) }
}

/// Curves against prefix length 1..=n.
pub fn curves(title: &str, series: &[(&str, &[f64])], metadata: &str) -> String {
    let n = series.iter().map(|(_, ys)| ys.len()).max().unwrap_or(0).max(1);
    let all: Vec<f64> = series.iter().flat_map(|(_, ys)| ys.iter().copied()).filter(|y| y.is_finite()).collect();
    let (lo, hi) = bounds(&all);
    let frame = Frame::new((1.0, n as f64), (lo.min(0.0), hi.max(1.0)));

    let mut out = String::new();
    header(&mut out, title, metadata);
    frame.axes(&mut out, "number of dimensions", "value");
    for (i, (name, ys)) in series.iter().enumerate() {
        let pts: Vec<String> = ys
            .iter()
            .enumerate()
            .filter(|(_, y)| y.is_finite())
            .map(|(k, &y)| format!("{:.3},{:.3}", frame.px((k + 1) as f64), frame.py(y)))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="2" data-series="{}"/>"#,
            pts.join(" "),
            color(i),
            escape(name)
        );
    }
    let entries: Vec<(String, &str)> = series.iter().enumerate().map(|(i, (n, _))| (n.to_string(), color(i))).collect();
    legend(&mut out, &entries);
    out.push_str("</svg>\n");
    out
}
