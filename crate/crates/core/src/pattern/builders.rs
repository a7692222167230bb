//! Parametric pattern constructors.
//!
//! Every circle a pattern uses is polygonized from one shared angle list, so
//! a kirigami arc lying on the substrate rim reuses the rim's exact vertices.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::geometry::{arc_segments, Point, Polygon};
use super::layout::{Layer, PlanarLayout, KIRIGAMI, SUBSTRATE};
use super::PatternError;

pub const SUBSTRATE_TOP: &str = "substrate_top";

/// Default maximum chord deviation for arc polygonization, mm.
pub const DEFAULT_CHORD_TOL: f64 = 0.05;

fn default_chord_tol() -> f64 {
    DEFAULT_CHORD_TOL
}
fn default_petal_fill() -> f64 {
    0.5
}
fn default_petals() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternSpec {
    Lotus {
        #[serde(rename = "R_mm")]
        radius: f64,
        gamma: f64,
        #[serde(default = "default_petals")]
        n_petals: usize,
        #[serde(default = "default_petal_fill")]
        petal_fill: f64,
        #[serde(default = "default_chord_tol", rename = "chord_tol_mm")]
        chord_tol: f64,
    },
    PyramidCross {
        #[serde(rename = "R_mm")]
        radius: f64,
        #[serde(rename = "arm_width_mm")]
        arm_width: f64,
        #[serde(default = "default_arms")]
        n_arms: usize,
    },
    Strip {
        #[serde(rename = "length_mm")]
        length: f64,
        #[serde(rename = "width_mm")]
        width: f64,
        #[serde(default, rename = "kirigami_margin_mm")]
        margin: f64,
    },
    AnnulusRim {
        #[serde(rename = "R_mm")]
        radius: f64,
        #[serde(rename = "r_inner_mm")]
        r_inner: f64,
        #[serde(default = "default_petals")]
        n_petals: usize,
        #[serde(default = "default_petal_fill")]
        petal_fill: f64,
        #[serde(default = "default_chord_tol", rename = "chord_tol_mm")]
        chord_tol: f64,
    },
    /// Trilayer spoon: lotus bowl on a bottom substrate disk, straight handle
    /// of kirigami capped by a second substrate strip on top.
    Spoon {
        #[serde(rename = "R_mm")]
        radius: f64,
        gamma: f64,
        #[serde(default = "default_petals")]
        n_petals: usize,
        #[serde(default = "default_petal_fill")]
        petal_fill: f64,
        #[serde(rename = "handle_length_mm")]
        handle_length: f64,
        #[serde(rename = "handle_width_mm")]
        handle_width: f64,
        /// How far the handle reaches into the bowl, measured from the rim.
        #[serde(rename = "handle_inset_mm")]
        handle_inset: f64,
        #[serde(default = "default_chord_tol", rename = "chord_tol_mm")]
        chord_tol: f64,
    },
    Custom {
        path: std::path::PathBuf,
    },
}

fn default_arms() -> usize {
    4
}

impl PatternSpec {
    pub fn build(&self) -> Result<PlanarLayout, PatternError> {
        match *self {
            PatternSpec::Lotus { radius, gamma, n_petals, petal_fill, chord_tol } => {
                build_lotus(&LotusParams { radius, gamma, n_petals, petal_fill, chord_tol })
            }
            PatternSpec::PyramidCross { radius, arm_width, n_arms } => build_pyramid_cross(radius, arm_width, n_arms),
            PatternSpec::Strip { length, width, margin } => build_strip(length, width, margin),
            PatternSpec::AnnulusRim { radius, r_inner, n_petals, petal_fill, chord_tol } => {
                build_annulus_rim(radius, r_inner, n_petals, petal_fill, chord_tol)
            }
            PatternSpec::Spoon { radius, gamma, n_petals, petal_fill, handle_length, handle_width, handle_inset, chord_tol } => {
                build_spoon(
                    &LotusParams { radius, gamma, n_petals, petal_fill, chord_tol },
                    handle_length,
                    handle_width,
                    handle_inset,
                )
            }
            PatternSpec::Custom { ref path } => super::textfmt::import_polygons(path),
        }
    }

    /// Composite radius used for the H/2R normalization, if the pattern has one.
    pub fn radius(&self) -> Option<f64> {
        match *self {
            PatternSpec::Lotus { radius, .. }
            | PatternSpec::PyramidCross { radius, .. }
            | PatternSpec::AnnulusRim { radius, .. }
            | PatternSpec::Spoon { radius, .. } => Some(radius),
            PatternSpec::Strip { length, .. } => Some(length / 2.0),
            PatternSpec::Custom { .. } => None,
        }
    }

    pub fn with_gamma(&self, g: f64) -> Option<PatternSpec> {
        let mut s = self.clone();
        match &mut s {
            PatternSpec::Lotus { gamma, .. } | PatternSpec::Spoon { gamma, .. } => *gamma = g,
            _ => return None,
        }
        Some(s)
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            PatternSpec::Lotus { gamma, .. } | PatternSpec::Spoon { gamma, .. } => Some(gamma),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LotusParams {
    pub radius: f64,
    pub gamma: f64,
    pub n_petals: usize,
    pub petal_fill: f64,
    pub chord_tol: f64,
}

impl LotusParams {
    pub fn new(radius: f64, gamma: f64) -> Self {
        Self { radius, gamma, n_petals: 8, petal_fill: 0.5, chord_tol: DEFAULT_CHORD_TOL }
    }

    fn check(&self) -> Result<(), PatternError> {
        positive("R_mm", self.radius)?;
        positive("chord_tol_mm", self.chord_tol)?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(domain("gamma", "must lie in (0, 1]"));
        }
        if self.n_petals < 1 {
            return Err(domain("n_petals", "must be at least 1"));
        }
        if !(self.petal_fill > 0.0 && self.petal_fill <= 1.0) {
            return Err(domain("petal_fill", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

fn domain(field: &str, reason: &str) -> PatternError {
    PatternError::ParameterDomain { field: field.to_string(), reason: reason.to_string() }
}

fn positive(field: &str, v: f64) -> Result<(), PatternError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(field, "must be a positive number"))
    }
}

/// A polygonized circle: sorted angles starting at `start`, spanning one turn.
/// Breakpoint angles are always vertices; spans between them are subdivided
/// uniformly to the chord tolerance.
struct Circle {
    angles: Vec<f64>,
    points: Vec<Point>,
}

impl Circle {
    fn new(radius: f64, breaks: &[f64], chord_tol: f64) -> Self {
        let mut angles = Vec::new();
        if breaks.is_empty() {
            let n = arc_segments(radius, TAU, chord_tol).max(3);
            angles.extend((0..n).map(|k| TAU * k as f64 / n as f64));
        } else {
            for (i, &a) in breaks.iter().enumerate() {
                let b = if i + 1 < breaks.len() { breaks[i + 1] } else { breaks[0] + TAU };
                let n = arc_segments(radius, b - a, chord_tol);
                angles.extend((0..n).map(|k| a + (b - a) * k as f64 / n as f64));
            }
        }
        let points = angles.iter().map(|&t| [radius * t.cos(), radius * t.sin()]).collect();
        Self { angles, points }
    }

    fn index_of(&self, angle: f64) -> usize {
        self.angles
            .iter()
            .position(|&a| a == angle)
            .expect("breakpoint angle is a vertex")
    }

    /// Vertices walking counter-clockwise from breakpoint `from` to breakpoint `to`, both included.
    fn ccw(&self, from: f64, to: f64) -> Vec<Point> {
        let (i0, i1) = (self.index_of(from), self.index_of(to));
        let n = self.points.len();
        let mut out = vec![self.points[i0]];
        let mut i = i0;
        while i != i1 {
            i = (i + 1) % n;
            out.push(self.points[i]);
        }
        out
    }

    fn polygon(&self) -> Polygon {
        Polygon::new(self.points.clone())
    }
}

/// Petal corner angles for `n` petals centred at `phase + 2πk/n`.
fn petal_breaks(n: usize, fill: f64, phase: f64) -> Vec<(f64, f64)> {
    let half = fill * PI / n as f64;
    (0..n)
        .map(|k| {
            let c = phase + TAU * k as f64 / n as f64;
            (c - half, c + half)
        })
        .collect()
}

fn flatten(b: &[(f64, f64)]) -> Vec<f64> {
    b.iter().flat_map(|&(a, c)| [a, c]).collect()
}

/// Central disk of radius γR joined with petals reaching out to R; returned as one ring.
fn lotus_ring(outer: &Circle, inner: &Circle, petals: &[(f64, f64)]) -> Vec<Point> {
    let mut ring = Vec::new();
    for (k, &(start, end)) in petals.iter().enumerate() {
        let next_start = petals[(k + 1) % petals.len()].0;
        // petal tip, then down the trailing edge and along the gap to the next petal
        ring.extend(outer.ccw(start, end));
        ring.extend(inner.ccw(end, next_start));
    }
    ring
}

pub fn build_lotus(p: &LotusParams) -> Result<PlanarLayout, PatternError> {
    build_lotus_phased(p, 0.0)
}

fn build_lotus_phased(p: &LotusParams, phase: f64) -> Result<PlanarLayout, PatternError> {
    let (substrate, kirigami) = lotus_regions(p, phase, &[])?;
    Ok(PlanarLayout::new(
        vec![substrate.clone()],
        vec![Layer::new(SUBSTRATE, vec![substrate]), Layer::new(KIRIGAMI, vec![kirigami])],
    ))
}

/// Substrate disk and kirigami region of a lotus. `extra_rim_breaks` are
/// additional rim vertices other features need.
fn lotus_regions(p: &LotusParams, phase: f64, extra_rim_breaks: &[f64]) -> Result<(Polygon, Polygon), PatternError> {
    p.check()?;
    let full = p.gamma >= 1.0 || p.petal_fill >= 1.0;
    let petals = if full { Vec::new() } else { petal_breaks(p.n_petals, p.petal_fill, phase) };
    let mut rim_breaks = flatten(&petals);
    rim_breaks.extend_from_slice(extra_rim_breaks);
    rim_breaks.sort_by(f64::total_cmp);
    let rim = Circle::new(p.radius, &rim_breaks, p.chord_tol);
    let substrate = rim.polygon();
    if full {
        return Ok((substrate.clone(), substrate));
    }
    let inner = Circle::new(p.gamma * p.radius, &flatten(&petals), p.chord_tol);
    let mut ring = lotus_ring(&rim, &inner, &petals);
    dedup_ring(&mut ring);
    Ok((substrate, Polygon::new(ring)))
}

fn dedup_ring(ring: &mut Vec<Point>) {
    ring.dedup();
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
}

/// Rectangular bimorph: substrate `length × width`, kirigami inset by `margin`
/// from both long edges.
pub fn build_strip(length: f64, width: f64, margin: f64) -> Result<PlanarLayout, PatternError> {
    positive("length_mm", length)?;
    positive("width_mm", width)?;
    if !(margin >= 0.0) || 2.0 * margin >= width {
        return Err(domain("kirigami_margin_mm", "must satisfy 0 <= margin < width/2"));
    }
    let rect = |y0: f64, y1: f64| Polygon::new(vec![[0.0, y0], [length, y0], [length, y1], [0.0, y1]]);
    let substrate = rect(0.0, width);
    Ok(PlanarLayout::new(
        vec![substrate.clone()],
        vec![Layer::new(SUBSTRATE, vec![substrate]), Layer::new(KIRIGAMI, vec![rect(margin, width - margin)])],
    ))
}

/// Regular `n_arms`-gon substrate; kirigami faces separated by fold strips of
/// width `arm_width` running from the centre to each corner.
pub fn build_pyramid_cross(radius: f64, arm_width: f64, n_arms: usize) -> Result<PlanarLayout, PatternError> {
    positive("R_mm", radius)?;
    positive("arm_width_mm", arm_width)?;
    if n_arms < 3 {
        return Err(domain("n_arms", "must be at least 3"));
    }
    let corner = |k: usize| {
        let t = TAU * k as f64 / n_arms as f64;
        [radius * t.cos(), radius * t.sin()]
    };
    let half = arm_width / 2.0;
    let mut faces = Vec::new();
    let mut rim = Vec::new();
    for k in 0..n_arms {
        let (a, b) = (corner(k), corner(k + 1));
        let ua = unit(a);
        let ub = unit(b);
        // radial lines shifted toward the face interior
        let la = ([-ua[1] * half, ua[0] * half], ua);
        let lb = ([ub[1] * half, -ub[0] * half], ub);
        let apex = intersect(la.0, la.1, lb.0, lb.1).ok_or_else(|| domain("n_arms", "degenerate face"))?;
        let edge = [b[0] - a[0], b[1] - a[1]];
        let p = intersect(a, edge, la.0, la.1).ok_or_else(|| domain("arm_width_mm", "degenerate face"))?;
        let q = intersect(a, edge, lb.0, lb.1).ok_or_else(|| domain("arm_width_mm", "degenerate face"))?;
        let tp = proj(a, edge, p);
        let tq = proj(a, edge, q);
        if !(tp > 0.0 && tq < 1.0 && tp < tq) || apex[0] * ua[0] + apex[1] * ua[1] < 0.0 {
            return Err(domain("arm_width_mm", "arms too wide for the polygon"));
        }
        faces.push(Polygon::new(vec![apex, p, q]));
        rim.push(a);
        rim.push(p);
        rim.push(q);
    }
    let substrate = Polygon::new(rim);
    Ok(PlanarLayout::new(
        vec![substrate.clone()],
        vec![Layer::new(SUBSTRATE, vec![substrate]), Layer::new(KIRIGAMI, faces)],
    ))
}

fn unit(p: Point) -> Point {
    let l = p[0].hypot(p[1]);
    [p[0] / l, p[1] / l]
}

fn intersect(p: Point, d: Point, q: Point, e: Point) -> Option<Point> {
    let den = d[0] * e[1] - d[1] * e[0];
    if den.abs() < 1e-14 {
        return None;
    }
    let t = ((q[0] - p[0]) * e[1] - (q[1] - p[1]) * e[0]) / den;
    Some([p[0] + t * d[0], p[1] + t * d[1]])
}

fn proj(a: Point, d: Point, p: Point) -> f64 {
    ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (d[0] * d[0] + d[1] * d[1])
}

/// Rimmed plate, three layers: base substrate disk of radius `r_inner`,
/// full kirigami disk, and a ring of substrate petals on top forming the rim.
pub fn build_annulus_rim(
    radius: f64,
    r_inner: f64,
    n_petals: usize,
    petal_fill: f64,
    chord_tol: f64,
) -> Result<PlanarLayout, PatternError> {
    positive("R_mm", radius)?;
    positive("r_inner_mm", r_inner)?;
    positive("chord_tol_mm", chord_tol)?;
    if r_inner >= radius {
        return Err(domain("r_inner_mm", "must be smaller than R_mm"));
    }
    if n_petals < 1 || !(petal_fill > 0.0 && petal_fill < 1.0) {
        return Err(domain("petal_fill", "must lie in (0, 1) with at least one petal"));
    }
    let petals = petal_breaks(n_petals, petal_fill, 0.0);
    let breaks = flatten(&petals);
    let rim = Circle::new(radius, &breaks, chord_tol);
    let inner = Circle::new(r_inner, &breaks, chord_tol);
    let disk = rim.polygon();
    let rim_petals: Vec<Polygon> = petals
        .iter()
        .map(|&(s, e)| {
            let mut ring = rim.ccw(s, e);
            let mut back = inner.ccw(s, e);
            back.reverse();
            ring.extend(back);
            Polygon::new(ring)
        })
        .collect();
    Ok(PlanarLayout::new(
        vec![disk.clone()],
        vec![
            Layer::new(SUBSTRATE, vec![inner.polygon()]),
            Layer::new(KIRIGAMI, vec![disk]),
            Layer::new(SUBSTRATE_TOP, rim_petals),
        ],
    ))
}

/// Spoon: lotus bowl (petals rotated so a gap faces +x) plus a straight handle
/// along +x. The handle kirigami runs from inside the bowl's gap out to the
/// tip and is capped by a top substrate strip of the same extent.
pub fn build_spoon(
    p: &LotusParams,
    handle_length: f64,
    handle_width: f64,
    handle_inset: f64,
) -> Result<PlanarLayout, PatternError> {
    p.check()?;
    positive("handle_length_mm", handle_length)?;
    positive("handle_width_mm", handle_width)?;
    positive("handle_inset_mm", handle_inset)?;
    if p.gamma >= 1.0 || p.petal_fill >= 1.0 {
        return Err(domain("gamma", "spoon bowl needs petals with gaps (gamma < 1, petal_fill < 1)"));
    }
    let r = p.radius;
    let hw = handle_width / 2.0;
    if hw >= r {
        return Err(domain("handle_width_mm", "handle wider than the bowl"));
    }
    let x_in = r - handle_inset;
    let gap_half = PI * (1.0 - p.petal_fill) / p.n_petals as f64;
    if x_in <= p.gamma * r || hw.atan2(x_in) >= gap_half || x_in * x_in + hw * hw >= r * r {
        return Err(domain("handle_inset_mm", "handle root must sit inside the petal gap facing +x"));
    }
    let theta_c = (hw / r).asin();
    let phase = PI / p.n_petals as f64;
    let (substrate, kirigami) = lotus_regions(p, phase, &[-theta_c, theta_c])?;

    // footprint: rim from +θc round to -θc, then the handle outline
    let rim = &substrate.outer;
    let start = rim
        .iter()
        .position(|q| (q[1] - hw).abs() < 1e-12 && q[0] > 0.0)
        .ok_or_else(|| PatternError::Degenerate("handle root not on rim".into()))?;
    let end = rim
        .iter()
        .position(|q| (q[1] + hw).abs() < 1e-12 && q[0] > 0.0)
        .ok_or_else(|| PatternError::Degenerate("handle root not on rim".into()))?;
    let mut outline = Vec::new();
    let mut i = start;
    loop {
        outline.push(rim[i]);
        if i == end {
            break;
        }
        i = (i + 1) % rim.len();
    }
    let tip = r + handle_length;
    outline.push([tip, -hw]);
    outline.push([tip, hw]);
    let handle = Polygon::new(vec![[x_in, -hw], [tip, -hw], [tip, hw], [x_in, hw]]);

    Ok(PlanarLayout::new(
        vec![Polygon::new(outline)],
        vec![
            Layer::new(SUBSTRATE, vec![substrate]),
            Layer::new(KIRIGAMI, vec![kirigami, handle.clone()]),
            Layer::new(SUBSTRATE_TOP, vec![handle]),
        ],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::removed_fraction;

    #[test]
    fn full_gamma_is_full_disk() {
        let lay = build_lotus(&LotusParams::new(30.0, 1.0)).unwrap();
        lay.validate().unwrap();
        assert_eq!(lay.layer(KIRIGAMI).unwrap().region, lay.layer(SUBSTRATE).unwrap().region);
        assert_eq!(removed_fraction(&lay).unwrap(), 0.0);
    }

    #[test]
    fn lotus_is_valid_and_shares_rim_vertices() {
        let lay = build_lotus(&LotusParams::new(30.0, 0.6)).unwrap();
        lay.validate().unwrap();
        let rim = &lay.layer(SUBSTRATE).unwrap().region[0].outer;
        let k = &lay.layer(KIRIGAMI).unwrap().region[0].outer;
        let on_rim = k.iter().filter(|p| (p[0].hypot(p[1]) - 30.0).abs() < 1e-9).count();
        assert!(on_rim > 16);
        for p in k.iter().filter(|p| (p[0].hypot(p[1]) - 30.0).abs() < 1e-9) {
            assert!(rim.contains(p), "kirigami rim vertex {p:?} is not a substrate vertex");
        }
    }

    #[test]
    fn lotus_parameter_errors() {
        let mut p = LotusParams::new(30.0, 0.0);
        assert!(matches!(build_lotus(&p), Err(PatternError::ParameterDomain { .. })));
        p.gamma = 1.2;
        assert!(build_lotus(&p).is_err());
        p.gamma = 0.5;
        p.n_petals = 0;
        assert!(build_lotus(&p).is_err());
    }

    #[test]
    fn strip_margins() {
        let lay = build_strip(60.0, 10.0, 0.0).unwrap();
        assert_eq!(lay.layers[0].region, lay.layers[1].region);
        let lay = build_strip(60.0, 10.0, 2.0).unwrap();
        lay.validate().unwrap();
        assert!((lay.layer(KIRIGAMI).unwrap().area() - 360.0).abs() < 1e-12);
        assert!(matches!(build_strip(60.0, 10.0, 5.0), Err(PatternError::ParameterDomain { .. })));
    }

    #[test]
    fn pyramid_faces_are_valid() {
        let lay = build_pyramid_cross(30.0, 3.0, 4).unwrap();
        lay.validate().unwrap();
        assert_eq!(lay.layer(KIRIGAMI).unwrap().region.len(), 4);
        assert!(build_pyramid_cross(30.0, 50.0, 4).is_err());
    }

    #[test]
    fn annulus_rim_and_spoon_validate() {
        build_annulus_rim(30.0, 18.0, 8, 0.5, 0.05).unwrap().validate().unwrap();
        let mut p = LotusParams::new(25.0, 0.4);
        p.n_petals = 6;
        let spoon = build_spoon(&p, 50.0, 8.0, 7.0).unwrap();
        spoon.validate().unwrap();
        assert_eq!(spoon.layers.len(), 3);
        assert!(build_spoon(&p, 50.0, 20.0, 7.0).is_err());
    }
}
