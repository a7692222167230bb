//! Plain-text polygon files and SVG outlines.
//!
//! ```text
//! # comment
//! FOOTPRINT
//! P x0 y0 x1 y1 ...
//! LAYER substrate
//! P x0 y0 x1 y1 ...
//! H x0 y0 ...        # hole of the preceding P
//! ```
//! Coordinates are in mm. Without a FOOTPRINT section the first layer's
//! region serves as the footprint.

use std::fmt::Write as _;
use std::path::Path;

use super::geometry::{Point, Polygon};
use super::layout::{Layer, PlanarLayout};
use super::PatternError;

enum Section {
    None,
    Footprint,
    Layer(usize),
}

pub fn parse_polygons(text: &str) -> Result<PlanarLayout, PatternError> {
    let mut footprint: Vec<Polygon> = Vec::new();
    let mut layers: Vec<Layer> = Vec::new();
    let mut section = Section::None;
    let perr = |line: usize, msg: String| PatternError::Parse { line, msg };
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let head = tok.next().unwrap_or_default();
        match head {
            "FOOTPRINT" => section = Section::Footprint,
            "LAYER" => {
                let name = tok.next().ok_or_else(|| perr(line_no, "LAYER needs a name".into()))?;
                if layers.iter().any(|l| l.name == name) {
                    return Err(perr(line_no, format!("duplicate layer `{name}`")));
                }
                layers.push(Layer::new(name, Vec::new()));
                section = Section::Layer(layers.len() - 1);
            }
            "P" | "H" => {
                let nums: Vec<f64> = tok
                    .map(|t| t.parse::<f64>().map_err(|_| perr(line_no, format!("bad number `{t}`"))))
                    .collect::<Result<_, _>>()?;
                if nums.len() % 2 != 0 || nums.len() < 6 {
                    return Err(perr(line_no, "ring needs at least 3 coordinate pairs".into()));
                }
                if nums.iter().any(|v| !v.is_finite()) {
                    return Err(perr(line_no, "non-finite coordinate".into()));
                }
                let ring: Vec<Point> = nums.chunks(2).map(|c| [c[0], c[1]]).collect();
                let region = match section {
                    Section::None => return Err(perr(line_no, "ring before any FOOTPRINT/LAYER header".into())),
                    Section::Footprint => &mut footprint,
                    Section::Layer(i) => &mut layers[i].region,
                };
                if head == "P" {
                    region.push(Polygon::new(ring));
                } else {
                    region
                        .last_mut()
                        .ok_or_else(|| perr(line_no, "hole without a preceding outer ring".into()))?
                        .holes
                        .push(ring);
                }
            }
            other => return Err(perr(line_no, format!("unknown record `{other}`"))),
        }
    }
    if layers.is_empty() {
        return Err(PatternError::Parse { line: 0, msg: "no layers".into() });
    }
    let mut fixed = false;
    for p in footprint.iter_mut().chain(layers.iter_mut().flat_map(|l| l.region.iter_mut())) {
        fixed |= p.normalize_orientation();
    }
    if footprint.is_empty() {
        footprint = layers[0].region.clone();
    }
    let mut layout = PlanarLayout::new(footprint, layers);
    layout.orientation_fixed = fixed;
    layout.validate()?;
    Ok(layout)
}

pub fn import_polygons(path: &Path) -> Result<PlanarLayout, PatternError> {
    let text = std::fs::read_to_string(path).map_err(|e| PatternError::Io(format!("{}: {e}", path.display())))?;
    parse_polygons(&text)
}

fn write_ring(out: &mut String, tag: &str, ring: &[Point]) {
    out.push_str(tag);
    for p in ring {
        // shortest round-trip representation
        let _ = write!(out, " {} {}", p[0], p[1]);
    }
    out.push('\n');
}

pub fn format_polygons(layout: &PlanarLayout) -> String {
    let mut out = String::from("# kirimorph polygon file, coordinates in mm\nFOOTPRINT\n");
    let emit = |out: &mut String, region: &[Polygon]| {
        for poly in region {
            write_ring(out, "P", &poly.outer);
            for h in &poly.holes {
                write_ring(out, "H", h);
            }
        }
    };
    emit(&mut out, &layout.footprint);
    for layer in &layout.layers {
        let _ = writeln!(out, "LAYER {}", layer.name);
        emit(&mut out, &layer.region);
    }
    out
}

const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

/// Outline-only SVG, y axis pointing up, 1 user unit = 1 mm.
pub fn to_svg(layout: &PlanarLayout) -> String {
    let pts = layout.footprint.iter().flat_map(|p| p.outer.iter().copied());
    let b = super::geometry::bbox_of(pts);
    let pad = 0.05 * (b[2] - b[0]).max(b[3] - b[1]).max(1.0);
    let (x0, y0, w, h) = (b[0] - pad, b[1] - pad, b[2] - b[0] + 2.0 * pad, b[3] - b[1] + 2.0 * pad);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}mm" height="{h}mm" viewBox="{x0} {} {w} {h}">"#,
        -(y0 + h)
    );
    s.push_str("<g transform=\"scale(1,-1)\" fill=\"none\" stroke-width=\"0.2\">\n");
    let mut path = |name: &str, color: &str, region: &[Polygon]| {
        let _ = write!(s, "<path id=\"{name}\" stroke=\"{color}\" d=\"");
        for poly in region {
            for ring in poly.rings() {
                for (i, p) in ring.iter().enumerate() {
                    let _ = write!(s, "{}{} {} ", if i == 0 { 'M' } else { 'L' }, p[0], p[1]);
                }
                s.push_str("Z ");
            }
        }
        s.push_str("\"/>\n");
    };
    path("footprint", "#000000", &layout.footprint);
    for (i, layer) in layout.layers.iter().enumerate() {
        path(&layer.name, PALETTE[i % PALETTE.len()], &layer.region);
    }
    s.push_str("</g>\n</svg>\n");
    s
}
