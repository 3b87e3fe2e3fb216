//! Deterministic SVG emission.
//!
//! Every figure the crate produces is vector-only and byte-stable: the
//! same inputs always serialize to the same bytes.  Numbers are printed
//! with a fixed precision, elements are emitted in the order they were
//! added, and no timestamps or random identifiers appear in the output.
//!
//! The model is a flat list of [`Element`]s in mathematical coordinates
//! (y up); [`document`] computes the bounding box, flips the y axis and
//! wraps everything in a standalone `<svg>`.

use crate::lattice::{Axial, Corner, Vec2};
use crate::percolation::Configuration;
use crate::wulff::ConvexBody;

/// Stroke/fill styling, as literal SVG attribute values.
#[derive(Debug, Clone)]
pub struct Style {
    pub stroke: String,
    pub fill: String,
    pub stroke_width: f64,
}

impl Style {
    /// Outline only.
    pub fn stroke(color: &str, width: f64) -> Style {
        Style {
            stroke: color.to_string(),
            fill: "none".to_string(),
            stroke_width: width,
        }
    }

    /// Fill only.
    pub fn fill(color: &str) -> Style {
        Style {
            stroke: "none".to_string(),
            fill: color.to_string(),
            stroke_width: 0.0,
        }
    }
}

/// A drawable primitive in mathematical coordinates.
#[derive(Debug, Clone)]
pub enum Element {
    /// Closed polygon.
    Polygon { points: Vec<Vec2>, style: Style },
    /// Open polyline.
    Polyline { points: Vec<Vec2>, style: Style },
    Circle { center: Vec2, r: f64, style: Style },
    /// An XML comment (provenance annotations).
    Comment(String),
}

/// Fixed-precision, locale-independent number formatting.  Negative
/// zero is normalized so that `-0.0000` never appears.
fn num(x: f64) -> String {
    let s = format!("{x:.4}");
    if s == "-0.0000" {
        "0.0000".to_string()
    } else {
        s
    }
}

fn escape_comment(s: &str) -> String {
    s.replace("--", "\u{2010}\u{2010}")
}

fn points_attr(points: &[Vec2]) -> String {
    points
        .iter()
        .map(|p| format!("{},{}", num(p.x), num(-p.y)))
        .collect::<Vec<_>>()
        .join(" ")
}

fn style_attr(style: &Style) -> String {
    format!(
        "fill=\"{}\" stroke=\"{}\" stroke-width=\"{}\"",
        style.fill,
        style.stroke,
        num(style.stroke_width)
    )
}

/// Render elements into a standalone SVG document.
///
/// The viewBox is the bounding box of all coordinates padded by
/// `margin`; `width_px` fixes the raster-independent display width.
pub fn document(elements: &[Element], margin: f64, width_px: u32) -> String {
    let mut lo = Vec2::new(f64::MAX, f64::MAX);
    let mut hi = Vec2::new(f64::MIN, f64::MIN);
    let mut bound = |p: Vec2, r: f64| {
        lo.x = lo.x.min(p.x - r);
        lo.y = lo.y.min(-p.y - r);
        hi.x = hi.x.max(p.x + r);
        hi.y = hi.y.max(-p.y + r);
    };
    for e in elements {
        match e {
            Element::Polygon { points, .. } | Element::Polyline { points, .. } => {
                for &p in points {
                    bound(Vec2::new(p.x, -p.y), 0.0);
                }
            }
            Element::Circle { center, r, .. } => bound(Vec2::new(center.x, -center.y), *r),
            Element::Comment(_) => {}
        }
    }
    if lo.x > hi.x {
        lo = Vec2::new(-1.0, -1.0);
        hi = Vec2::new(1.0, 1.0);
    }
    let (w, h) = (hi.x - lo.x + 2.0 * margin, hi.y - lo.y + 2.0 * margin);
    let height_px = (width_px as f64 * h / w).round().max(1.0) as u32;
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width_px}\" height=\"{height_px}\" \
         viewBox=\"{} {} {} {}\">\n",
        num(lo.x - margin),
        num(lo.y - margin),
        num(w),
        num(h)
    ));
    for e in elements {
        match e {
            Element::Polygon { points, style } => out.push_str(&format!(
                "  <polygon points=\"{}\" {}/>\n",
                points_attr(points),
                style_attr(style)
            )),
            Element::Polyline { points, style } => out.push_str(&format!(
                "  <polyline points=\"{}\" {}/>\n",
                points_attr(points),
                style_attr(style)
            )),
            Element::Circle { center, r, style } => out.push_str(&format!(
                "  <circle cx=\"{}\" cy=\"{}\" r=\"{}\" {}/>\n",
                num(center.x),
                num(-center.y),
                num(*r),
                style_attr(style)
            )),
            Element::Comment(s) => out.push_str(&format!("  <!-- {} -->\n", escape_comment(s))),
        }
    }
    out.push_str("</svg>\n");
    out
}

/// The hexagonal dual cell of a lattice vertex (its six surrounding
/// triangle corners, counterclockwise).
pub fn hex_cell(v: Axial) -> Vec<Vec2> {
    use crate::lattice::Direction;
    (0..6u8)
        .map(|k| {
            let a = v.step(Direction::new(k));
            let b = v.step(Direction::new(k).rotate(1));
            Corner::of_triangle(v, a, b).embed()
        })
        .collect()
}

/// Elements for a full configuration: one hexagon per vertex, open
/// vertices dark, closed light.
pub fn config_elements(config: &Configuration) -> Vec<Element> {
    let mut out = Vec::with_capacity(config.window.len());
    for v in config.window.iter() {
        let open = config.is_open(v).expect("vertex from the window");
        let fill = if open { "#355e8d" } else { "#eceff4" };
        out.push(Element::Polygon {
            points: hex_cell(v),
            style: Style {
                stroke: "#9099a6".to_string(),
                fill: fill.to_string(),
                stroke_width: 0.03,
            },
        });
    }
    out
}

/// Highlight a lattice path over a configuration drawing.
pub fn path_elements(path: &[Axial], color: &str) -> Vec<Element> {
    let mut out = Vec::new();
    if path.len() >= 2 {
        out.push(Element::Polyline {
            points: path.iter().map(|v| v.embed()).collect(),
            style: Style::stroke(color, 0.15),
        });
    }
    for &v in path {
        out.push(Element::Circle {
            center: v.embed(),
            r: 0.18,
            style: Style::fill(color),
        });
    }
    out
}

/// Outline of a convex body.
pub fn body_outline(body: &ConvexBody, color: &str, width: f64) -> Element {
    Element::Polygon {
        points: body.vertices().to_vec(),
        style: Style::stroke(color, width),
    }
}

/// A Wulff shape overlaid on the reference disk of radius `r`
/// (both centered at the origin).
pub fn wulff_overlay(w_hat: &ConvexBody, r: f64) -> Vec<Element> {
    vec![
        Element::Circle {
            center: Vec2::ZERO,
            r,
            style: Style::stroke("#b4533a", 0.01),
        },
        body_outline(w_hat, "#355e8d", 0.01),
    ]
}

/// A cloud of lattice vertices (e.g. a Cheeger minimizer) as dots.
pub fn vertex_cloud(vs: &[Axial], color: &str) -> Vec<Element> {
    vs.iter()
        .map(|v| Element::Circle {
            center: v.embed(),
            r: 0.35,
            style: Style::fill(color),
        })
        .collect()
}
