//! Minimal SVG emission for phase portraits and the quadratic diagram.
//!
//! Incoming separatrices are drawn solid, outgoing dashed, landing
//! connections highlighted; marked points sit on a ring at
//! `1.2 * max|root|`.

use num_complex::Complex64;
use std::fmt::Write as _;

use ncfield_core::vector_field::{marked_point_angle, trace_all, AntiPolyField, Terminal, TraceError};
use ncfield_core::TraceConfig;

use crate::bifurcation::{BifurcationSample, Classification};

const CANVAS: f64 = 600.0;

struct Canvas {
    body: String,
    half_extent: f64,
}

impl Canvas {
    fn new(half_extent: f64) -> Self {
        Canvas { body: String::new(), half_extent }
    }

    // SVG y grows downward; flip to keep the mathematical orientation
    fn map(&self, z: Complex64) -> (f64, f64) {
        let s = CANVAS / (2.0 * self.half_extent);
        ((z.re + self.half_extent) * s, (self.half_extent - z.im) * s)
    }

    fn circle(&mut self, c: Complex64, r_px: f64, style: &str) {
        let (x, y) = self.map(c);
        let _ = writeln!(self.body, r##"  <circle cx="{x:.2}" cy="{y:.2}" r="{r_px}" {style}/>"##);
    }

    fn polyline(&mut self, pts: &[Complex64], style: &str) {
        if pts.len() < 2 {
            return;
        }
        let mut d = String::new();
        for (i, &p) in pts.iter().enumerate() {
            let (x, y) = self.map(p);
            let _ = write!(d, "{}{x:.3},{y:.3}", if i == 0 { "" } else { " " });
        }
        let _ = writeln!(self.body, r##"  <polyline points="{d}" fill="none" {style}/>"##);
    }

    fn line(&mut self, a: Complex64, b: Complex64, style: &str) {
        let (x1, y1) = self.map(a);
        let (x2, y2) = self.map(b);
        let _ = writeln!(
            self.body,
            r##"  <line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" {style}/>"##
        );
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{c}\" height=\"{c}\" viewBox=\"0 0 {c} {c}\">\n\
             <rect width=\"{c}\" height=\"{c}\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            c = CANVAS
        )
    }
}

/// Clips a polyline at the first exit through the given radius.
fn clip_at_radius(pts: &[Complex64], radius: f64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(pts.len());
    for i in 0..pts.len() {
        if pts[i].norm() <= radius {
            out.push(pts[i]);
        } else {
            if i > 0 {
                let a = pts[i - 1];
                let b = pts[i];
                let t = (radius - a.norm()) / (b.norm() - a.norm());
                out.push(a + (b - a) * Complex64::new(t.clamp(0.0, 1.0), 0.0));
            }
            break;
        }
    }
    out
}

/// Phase portrait of a field: roots, separatrices, marked-point ring.
/// Landing connections are highlighted rather than rejected, so
/// non-generic (heteroclinic) fields render too.
pub fn render_portrait(f: &AntiPolyField<f64>, cfg: &TraceConfig<f64>) -> Result<String, TraceError> {
    let ring = (1.2 * f.max_root_norm()).max(1.0);
    let mut canvas = Canvas::new(1.15 * ring);
    let traces = trace_all(f, cfg)?;
    canvas.circle(
        Complex64::new(0.0, 0.0),
        ring * CANVAS / (2.0 * 1.15 * ring),
        r##"fill="none" stroke="#cccccc" stroke-width="1""##,
    );
    for t in &traces {
        let clipped = clip_at_radius(&t.polyline, ring);
        let style = match t.terminal {
            Terminal::LandingZero { .. } => {
                r##"stroke="#cc2222" stroke-width="2.5""##.to_string()
            }
            _ => {
                if t.class.is_outgoing() {
                    r##"stroke="#336699" stroke-width="1.2" stroke-dasharray="6 4""##.to_string()
                } else {
                    r##"stroke="#113355" stroke-width="1.2""##.to_string()
                }
            }
        };
        canvas.polyline(&clipped, &style);
    }
    let k = f.k() as u32;
    for j in 0..(2 * k + 4) {
        let (angle, attracting) = marked_point_angle::<f64>(k, j).expect("index in range");
        let p = Complex64::from_polar(ring, angle);
        let style = if attracting {
            r##"fill="#222222""##
        } else {
            r##"fill="white" stroke="#222222" stroke-width="1.5""##
        };
        canvas.circle(p, 5.0, style);
    }
    for &r in f.roots() {
        canvas.circle(r, 4.0, r##"fill="#000000""##);
    }
    Ok(canvas.finish())
}

/// Parameter-plane picture: the three rays, the origin, classified
/// samples, and optional portrait thumbnails for chosen eps values.
pub fn render_bifurcation_diagram(
    samples: &[BifurcationSample],
    portraits: &[(Complex64, String)],
) -> String {
    let mut extent: f64 = 1.0;
    for s in samples {
        extent = extent.max(s.epsilon.0.abs()).max(s.epsilon.1.abs());
    }
    extent *= 1.2;
    let mut canvas = Canvas::new(extent);
    for ray in 0..3 {
        let theta = 2.0 * std::f64::consts::PI * ray as f64 / 3.0;
        canvas.line(
            Complex64::new(0.0, 0.0),
            Complex64::from_polar(extent * 1.5, theta),
            r##"stroke="#888888" stroke-width="1.5" stroke-dasharray="3 3""##,
        );
    }
    for s in samples {
        let eps = Complex64::new(s.epsilon.0, s.epsilon.1);
        let style = match &s.classification {
            Classification::DoubleSaddle => r##"fill="#000000""##,
            Classification::Heteroclinic { .. } => r##"fill="#cc2222""##,
            Classification::Generic { sector, .. } => match sector {
                0 => r##"fill="#1b9e77""##,
                1 => r##"fill="#d95f02""##,
                _ => r##"fill="#7570b3""##,
            },
        };
        canvas.circle(eps, 4.0, style);
    }
    let mut doc = canvas.finish();
    if !portraits.is_empty() {
        // append thumbnails in a strip below the diagram
        let thumb = 180.0;
        let total_w = (portraits.len() as f64 * thumb).max(CANVAS);
        let mut body = String::new();
        let _ = writeln!(
            body,
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total_w}\" height=\"{}\">",
            CANVAS + thumb + 20.0
        );
        let _ = writeln!(body, "<g>{}</g>", strip_svg_tag(&doc));
        for (i, (eps, inner)) in portraits.iter().enumerate() {
            let x = i as f64 * thumb;
            let scale = thumb / CANVAS;
            let _ = writeln!(
                body,
                "<g transform=\"translate({x},{}) scale({scale})\">{}</g>",
                CANVAS + 10.0,
                strip_svg_tag(inner)
            );
            let _ = writeln!(
                body,
                "<text x=\"{}\" y=\"{}\" font-size=\"11\">eps = {:.3}+{:.3}i</text>",
                x + 4.0,
                CANVAS + thumb + 16.0,
                eps.re,
                eps.im
            );
        }
        let _ = writeln!(body, "</svg>");
        doc = body;
    }
    doc
}

fn strip_svg_tag(doc: &str) -> String {
    let start = doc.find('>').map(|i| i + 1).unwrap_or(0);
    let end = doc.rfind("</svg>").unwrap_or(doc.len());
    doc[start..end].to_string()
}
