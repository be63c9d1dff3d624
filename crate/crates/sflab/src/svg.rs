//! Minimal SVG figures: polylines, circles and labels in a square viewport.

use std::fmt::Write as _;

use sflab_core::Complex64;

const SIZE: f64 = 480.0;
const PAD: f64 = 24.0;

/// Maps `[-extent, extent]²` onto the canvas, `y` pointing up.
pub struct Figure {
    extent: f64,
    body: String,
    title: String,
}

impl Figure {
    pub fn new(title: &str, extent: f64) -> Figure {
        Figure {
            extent: if extent > 0.0 && extent.is_finite() { extent } else { 1.0 },
            body: String::new(),
            title: escape(title),
        }
    }

    fn map(&self, z: Complex64) -> (f64, f64) {
        let s = (SIZE - 2.0 * PAD) / (2.0 * self.extent);
        (PAD + (z.re + self.extent) * s, PAD + (self.extent - z.im) * s)
    }

    pub fn circle(&mut self, center: Complex64, radius: f64, stroke: &str) -> &mut Self {
        let (x, y) = self.map(center);
        let r = radius * (SIZE - 2.0 * PAD) / (2.0 * self.extent);
        let _ = writeln!(
            self.body,
            r#"<circle cx="{x:.3}" cy="{y:.3}" r="{r:.3}" fill="none" stroke="{stroke}" stroke-width="1"/>"#
        );
        self
    }

    pub fn polyline(&mut self, pts: &[Complex64], stroke: &str, width: f64, dashed: bool) -> &mut Self {
        let finite: Vec<String> = pts
            .iter()
            .filter(|z| z.re.is_finite() && z.im.is_finite())
            .map(|&z| {
                let (x, y) = self.map(z);
                format!("{x:.3},{y:.3}")
            })
            .collect();
        if finite.len() < 2 {
            return self;
        }
        let dash = if dashed { r#" stroke-dasharray="6,4""# } else { "" };
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
            finite.join(" ")
        );
        self
    }

    pub fn dot(&mut self, at: Complex64, fill: &str) -> &mut Self {
        let (x, y) = self.map(at);
        let _ = writeln!(self.body, r#"<circle cx="{x:.3}" cy="{y:.3}" r="1.2" fill="{fill}"/>"#);
        self
    }

    pub fn label(&mut self, at: Complex64, text: &str) -> &mut Self {
        let (x, y) = self.map(at);
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" font-size="11" font-family="sans-serif">{}</text>"#,
            escape(text)
        );
        self
    }

    pub fn finish(&self) -> String {
        format!(
            concat!(
                r#"<svg xmlns="http://www.w3.org/2000/svg" width="{s}" height="{s}" viewBox="0 0 {s} {s}">"#,
                "\n<title>{t}</title>\n",
                r#"<rect width="{s}" height="{s}" fill="white"/>"#,
                "\n",
                r#"<text x="{p}" y="16" font-size="12" font-family="sans-serif">{t}</text>"#,
                "\n{b}</svg>\n"
            ),
            s = SIZE,
            p = PAD,
            t = self.title,
            b = self.body
        )
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
