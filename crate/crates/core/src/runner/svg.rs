//! Minimal standalone SVG plots: scatter and polyline layers over a pair of
//! axes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerKind {
    Scatter,
    Polyline,
}

/// A named set of points. A polyline layer may hold several disjoint
/// pieces; a scatter layer ignores the split.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    pub pieces: Vec<Vec<(f64, f64)>>,
    pub color: String,
}

impl Layer {
    pub fn scatter(name: &str, points: Vec<(f64, f64)>, color: &str) -> Self {
        Layer { name: name.into(), kind: LayerKind::Scatter, pieces: vec![points], color: color.into() }
    }

    pub fn polyline(name: &str, pieces: Vec<Vec<(f64, f64)>>, color: &str) -> Self {
        Layer { name: name.into(), kind: LayerKind::Polyline, pieces, color: color.into() }
    }

    pub fn count(&self) -> usize {
        self.pieces.iter().map(Vec::len).sum()
    }

    fn points(&self) -> impl Iterator<Item = &(f64, f64)> {
        self.pieces.iter().flatten()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub width: f64,
    pub height: f64,
    /// Data ranges; taken from the layers (padded) when absent.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub layers: Vec<Layer>,
}

const MARGIN: f64 = 60.0;

impl Plot {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Plot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            width: 640.0,
            height: 480.0,
            x_range: None,
            y_range: None,
            layers: Vec::new(),
        }
    }

    pub fn with_layer(mut self, layer: Layer) -> Self {
        self.layers.push(layer);
        self
    }

    fn ranges(&self) -> ((f64, f64), (f64, f64)) {
        let span = |sel: fn(&(f64, f64)) -> f64| {
            let (lo, hi) = self
                .layers
                .iter()
                .flat_map(Layer::points)
                .map(sel)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if lo > hi {
                (0.0, 1.0)
            } else if hi - lo < 1e-12 * (1.0 + lo.abs()) {
                (lo - 1.0, hi + 1.0)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        };
        (self.x_range.unwrap_or_else(|| span(|p| p.0)), self.y_range.unwrap_or_else(|| span(|p| p.1)))
    }

    /// Data coordinates to SVG user coordinates.
    pub fn map(&self, p: (f64, f64)) -> (f64, f64) {
        let ((x0, x1), (y0, y1)) = self.ranges();
        let w = self.width - 2.0 * MARGIN;
        let h = self.height - 2.0 * MARGIN;
        (MARGIN + (p.0 - x0) / (x1 - x0) * w, self.height - MARGIN - (p.1 - y0) / (y1 - y0) * h)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the plot. Coordinates are written with four decimals, so equal
/// inputs give byte-identical documents.
pub fn emit_svg(plot: &Plot) -> Result<String> {
    for layer in &plot.layers {
        if layer.points().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
            return Err(Error::NonFiniteCoordinate(layer.name.clone()));
        }
    }
    let ((x0, x1), (y0, y1)) = plot.ranges();
    if ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) || x0 >= x1 || y0 >= y1 {
        return Err(Error::InvalidArgument(format!("bad plot range x [{x0}, {x1}], y [{y0}, {y1}]")));
    }
    let (w, h) = (plot.width, plot.height);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(&plot.title));

    let _ = writeln!(s, r#"<g class="axes" stroke="black" fill="none">"#);
    let (bl, br, tl) = ((MARGIN, h - MARGIN), (w - MARGIN, h - MARGIN), (MARGIN, MARGIN));
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, bl.0, bl.1, br.0, br.1);
    let _ = writeln!(s, r#"<line x1="{}" y1="{}" x2="{}" y2="{}"/>"#, bl.0, bl.1, tl.0, tl.1);
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let (xv, yv) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
        let (px, _) = plot.map((xv, y0));
        let (_, py) = plot.map((x0, yv));
        let _ = writeln!(s, r#"<line x1="{px:.4}" y1="{}" x2="{px:.4}" y2="{}"/>"#, h - MARGIN, h - MARGIN + 5.0);
        let _ = writeln!(s, r#"<line x1="{}" y1="{py:.4}" x2="{}" y2="{py:.4}"/>"#, MARGIN - 5.0, MARGIN);
        let _ = writeln!(
            s,
            r#"<text x="{px:.4}" y="{}" text-anchor="middle" stroke="none" fill="black">{}</text>"#,
            h - MARGIN + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.4}" text-anchor="end" stroke="none" fill="black">{}</text>"#,
            MARGIN - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" stroke="none" fill="black">{}</text>"#,
        w / 2.0,
        h - 15.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{}" text-anchor="middle" stroke="none" fill="black" transform="rotate(-90 15 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(&plot.y_label)
    );
    s.push_str("</g>\n");

    for layer in &plot.layers {
        let color = escape(&layer.color);
        let _ = writeln!(s, r#"<g class="layer" id="{}" data-count="{}">"#, escape(&layer.name), layer.count());
        match layer.kind {
            LayerKind::Scatter => {
                for &p in layer.points() {
                    let (px, py) = plot.map(p);
                    let _ = writeln!(s, r#"<circle cx="{px:.4}" cy="{py:.4}" r="2" fill="{color}"/>"#);
                }
            }
            LayerKind::Polyline => {
                for piece in &layer.pieces {
                    let pts: Vec<String> = piece
                        .iter()
                        .map(|&p| {
                            let (px, py) = plot.map(p);
                            format!("{px:.4},{py:.4}")
                        })
                        .collect();
                    let _ = writeln!(
                        s,
                        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1"/>"#,
                        pts.join(" ")
                    );
                }
            }
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn tick(v: f64) -> String {
    let r = format!("{v:.3}");
    let r = r.trim_end_matches('0').trim_end_matches('.');
    if r == "-0" {
        "0".into()
    } else {
        r.into()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_plot_has_axes_only() {
        let s = emit_svg(&Plot::new("empty", "x", "y")).unwrap();
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("viewBox=\"0 0 640 480\""));
        assert!(s.contains("class=\"axes\""));
        assert!(!s.contains("class=\"layer\""));
    }

    #[test]
    fn single_point_lands_on_mapped_origin() {
        let plot = Plot::new("one", "x", "y").with_layer(Layer::scatter("p", vec![(0.0, 0.0)], "black"));
        let s = emit_svg(&plot).unwrap();
        assert_eq!(s.matches("<circle").count(), 1);
        let (px, py) = plot.map((0.0, 0.0));
        assert!(s.contains(&format!(r#"cx="{px:.4}" cy="{py:.4}""#)));
        // degenerate range is widened symmetrically, so the origin is central
        assert_eq!((px, py), (320.0, 240.0));
    }

    #[test]
    fn layer_groups_carry_counts() {
        let pts = vec![(2.0, 0.0), (0.0, 0.2), (-2.0, 0.0), (0.0, -0.2)];
        let curve: Vec<(f64, f64)> = (0..=50).map(|i| (2.0 * (i as f64 * 0.1).cos(), 0.2 * (i as f64 * 0.1).sin())).collect();
        let plot = Plot::new("t", "x", "y")
            .with_layer(Layer::scatter("spectrum", pts, "black"))
            .with_layer(Layer::polyline("curve", vec![curve], "red"));
        let s = emit_svg(&plot).unwrap();
        assert_eq!(s.matches("class=\"layer\"").count(), 2);
        assert!(s.contains(r#"id="spectrum" data-count="4""#));
        assert!(s.contains(r#"id="curve" data-count="51""#));
    }

    #[test]
    fn rejects_non_finite() {
        for bad in [f64::NAN, f64::INFINITY] {
            let plot = Plot::new("t", "x", "y").with_layer(Layer::scatter("bad", vec![(bad, 1.0)], "black"));
            assert!(matches!(emit_svg(&plot), Err(Error::NonFiniteCoordinate(n)) if n == "bad"));
        }
    }
}
