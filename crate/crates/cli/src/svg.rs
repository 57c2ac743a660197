//! Minimal line charts written as standalone SVG.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const TICKS: usize = 5;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    /// Draw a dot at every point as well as the line.
    pub markers: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { name: name.into(), points, markers: false }
    }

    pub fn with_markers(mut self) -> Self {
        self.markers = true;
        self
    }
}

pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
    /// Dashed horizontal reference lines.
    pub references: Vec<(String, f64)>,
    /// Suppress the legend (path fans have too many series to name).
    pub legend: bool,
}

impl Chart {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            series: Vec::new(),
            references: Vec::new(),
            legend: true,
        }
    }

    fn tx(&self, x: f64) -> Option<f64> {
        transform(x, self.log_x)
    }

    fn ty(&self, y: f64) -> Option<f64> {
        transform(y, self.log_y)
    }

    pub fn render(&self) -> String {
        let points: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|s| s.points.iter())
            .filter_map(|&(x, y)| Some((self.tx(x)?, self.ty(y)?)))
            .collect();
        let refs: Vec<f64> = self.references.iter().filter_map(|r| self.ty(r.1)).collect();
        let (x0, x1) = padded(points.iter().map(|p| p.0));
        let (y0, y1) = padded(points.iter().map(|p| p.1).chain(refs.iter().copied()));
        let plot_w = WIDTH - LEFT - RIGHT;
        let plot_h = HEIGHT - TOP - BOTTOM;
        let sx = |u: f64| LEFT + (u - x0) / (x1 - x0) * plot_w;
        let sy = |v: f64| TOP + plot_h - (v - y0) / (y1 - y0) * plot_h;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" font-size="15" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, escape(&self.title));
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
        );
        for i in 0..=TICKS {
            let u = x0 + (x1 - x0) * i as f64 / TICKS as f64;
            let v = y0 + (y1 - y0) * i as f64 / TICKS as f64;
            let (px, py) = (sx(u), sy(v));
            let _ = writeln!(s, r##"<line x1="{px:.2}" y1="{TOP}" x2="{px:.2}" y2="{:.2}" stroke="#e0e0e0"/>"##, TOP + plot_h);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#e0e0e0"/>"##, LEFT + plot_w);
            let _ = writeln!(s, r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, TOP + plot_h + 18.0, tick(u, self.log_x));
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, py + 4.0, tick(v, self.log_y));
        }
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, LEFT + plot_w / 2.0, HEIGHT - 16.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
            TOP + plot_h / 2.0,
            TOP + plot_h / 2.0,
            escape(&self.y_label)
        );
        for (label, y) in &self.references {
            let Some(v) = self.ty(*y) else { continue };
            let py = sy(v);
            let _ = writeln!(
                s,
                r##"<line x1="{LEFT}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}" stroke="#555" stroke-dasharray="6 4"/>"##,
                LEFT + plot_w
            );
            let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#555">{}</text>"##, LEFT + plot_w + 4.0, py + 4.0, escape(label));
        }
        for (i, series) in self.series.iter().enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let pts: Vec<(f64, f64)> = series
                .points
                .iter()
                .filter_map(|&(x, y)| Some((sx(self.tx(x)?), sy(self.ty(y)?))))
                .collect();
            let path: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            if series.markers {
                for (x, y) in &pts {
                    let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{color}"/>"#);
                }
            }
            if self.legend {
                let ly = TOP + 14.0 + 18.0 * i as f64;
                let lx = LEFT + plot_w + 12.0;
                let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 18.0);
                let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 24.0, ly + 4.0, escape(&series.name));
            }
        }
        s.push_str("</svg>\n");
        s
    }
}

fn transform(v: f64, log: bool) -> Option<f64> {
    match (log, v.is_finite()) {
        (_, false) => None,
        (true, _) if v <= 0.0 => None,
        (true, _) => Some(v.log10()),
        (false, _) => Some(v),
    }
}

fn padded(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = if hi > lo { hi - lo } else { lo.abs().max(1.0) };
    (lo - 0.05 * span, hi + 0.05 * span)
}

fn tick(u: f64, log: bool) -> String {
    let v = if log { 10f64.powf(u) } else { u };
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_axes_skip_non_positive_points() {
        let mut chart = Chart::new("t", "x", "y");
        chart.log_x = true;
        chart.log_y = true;
        chart.series.push(Series::line("a<b", vec![(1.0, 0.0), (10.0, 0.1), (100.0, 0.01)]).with_markers());
        let svg = chart.render();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<circle").count(), 2);
    }

    #[test]
    fn empty_chart_renders() {
        assert!(Chart::new("empty", "x", "y").render().ends_with("</svg>\n"));
    }
}
