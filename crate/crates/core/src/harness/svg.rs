//! Bare SVG renderings of histograms and ECDFs: axes, bars, steps.

use std::fmt::Write as _;

use crate::stats::HistogramBin;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 50.0;

struct Frame {
    x0: f64,
    x1: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = if self.x1 > self.x0 { self.x1 - self.x0 } else { 1.0 };
        PAD + (x - self.x0) / span * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        let top = if self.y1 > 0.0 { self.y1 } else { 1.0 };
        H - PAD - y / top * (H - 2.0 * PAD)
    }
}

fn open(title: &str, f: &Frame, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle">{}</text>"#, W / 2.0, escape(title));
    let (l, b, r, t) = (PAD, H - PAD, W - PAD, PAD);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    let _ = writeln!(s, r#"<text x="{l}" y="{}" text-anchor="middle">{:.4}</text>"#, b + 18.0, f.x0);
    let _ = writeln!(s, r#"<text x="{r}" y="{}" text-anchor="middle">{:.4}</text>"#, b + 18.0, f.x1);
    let _ = writeln!(s, r#"<text x="{}" y="{t}" text-anchor="end">{}</text>"#, l - 6.0, fmt_y(f.y1));
    let _ = writeln!(s, r#"<text x="{}" y="{b}" text-anchor="end">0</text>"#, l - 6.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{y_label}</text>"#, l, t - 10.0);
    s
}

fn fmt_y(y: f64) -> String {
    if y.fract() == 0.0 {
        format!("{y}")
    } else {
        format!("{y:.2}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn histogram(bins: &[HistogramBin], title: &str) -> String {
    let f = Frame {
        x0: bins.first().map_or(0.0, |b| b.bin_left),
        x1: bins.last().map_or(1.0, |b| b.bin_right),
        y1: bins.iter().map(|b| b.count).max().unwrap_or(0) as f64,
    };
    let mut s = open(title, &f, "count");
    for b in bins {
        let (x, w) = (f.px(b.bin_left), f.px(b.bin_right) - f.px(b.bin_left));
        let y = f.py(b.count as f64);
        let _ = writeln!(
            s,
            r##"<rect x="{x:.2}" y="{y:.2}" width="{w:.2}" height="{:.2}" fill="#7a9cc6" stroke="#2b4a6f"/>"##,
            H - PAD - y
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn ecdf(points: &[(f64, f64)], title: &str) -> String {
    let f = Frame {
        x0: points.first().map_or(0.0, |p| p.0),
        x1: points.last().map_or(1.0, |p| p.0),
        y1: 1.0,
    };
    let mut s = open(title, &f, "F(x)");
    let mut d = format!("M{:.2} {:.2}", f.px(f.x0), f.py(0.0));
    let mut prev = 0.0;
    for &(x, y) in points {
        let _ = write!(d, " L{:.2} {:.2} L{:.2} {:.2}", f.px(x), f.py(prev), f.px(x), f.py(y));
        prev = y;
    }
    let _ = writeln!(s, r##"<path d="{d}" stroke="#2b4a6f" fill="none"/>"##);
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_well_formed_documents() {
        let bins = crate::stats::histogram(&[0.1, 0.2, 0.2, 0.4], 3).unwrap();
        let h = histogram(&bins, "a < b");
        assert!(h.starts_with("<svg") && h.ends_with("</svg>\n"));
        assert_eq!(h.matches("<rect").count(), 1 + bins.len());
        assert!(h.contains("a &lt; b"));
        let e = ecdf(&crate::stats::ecdf(&[1.0, 2.0]).unwrap(), "e");
        // two axis segments, two per step
        assert_eq!(e.matches(" L").count(), 2 + 4);
    }
}
