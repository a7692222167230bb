use serde::{Deserialize, Serialize};

use super::geometry::{find_self_intersection, segments_cross, signed_area, Location, Point, Polygon};
use super::PatternError;

/// Containment tolerance for layer regions against the footprint, mm.
pub const CONTAINMENT_TOL: f64 = 1e-9;

pub const SUBSTRATE: &str = "substrate";
pub const KIRIGAMI: &str = "kirigami";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub name: String,
    pub region: Vec<Polygon>,
}

impl Layer {
    pub fn new(name: impl Into<String>, region: Vec<Polygon>) -> Self {
        Self { name: name.into(), region }
    }

    pub fn area(&self) -> f64 {
        self.region.iter().map(Polygon::area).sum()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.region.iter().any(|poly| poly.contains(p))
    }
}

/// Stack of named planar layers sharing one footprint, coordinates in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarLayout {
    pub footprint: Vec<Polygon>,
    pub layers: Vec<Layer>,
    /// Set when an importer had to flip ring orientations.
    #[serde(default)]
    pub orientation_fixed: bool,
}

impl PlanarLayout {
    pub fn new(footprint: Vec<Polygon>, layers: Vec<Layer>) -> Self {
        Self { footprint, layers, orientation_fixed: false }
    }

    pub fn layer(&self, name: &str) -> Option<&Layer> {
        self.layers.iter().find(|l| l.name == name)
    }

    pub fn layer_index(&self, name: &str) -> Option<usize> {
        self.layers.iter().position(|l| l.name == name)
    }

    pub fn layer_mut(&mut self, name: &str) -> Option<&mut Layer> {
        self.layers.iter_mut().find(|l| l.name == name)
    }

    pub fn footprint_area(&self) -> f64 {
        self.footprint.iter().map(Polygon::area).sum()
    }

    pub fn footprint_contains(&self, p: Point) -> bool {
        self.footprint.iter().any(|poly| poly.contains(p))
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point + Copy) -> PlanarLayout {
        PlanarLayout {
            footprint: self.footprint.iter().map(|p| p.map_points(f)).collect(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer::new(l.name.clone(), l.region.iter().map(|p| p.map_points(f)).collect()))
                .collect(),
            orientation_fixed: self.orientation_fixed,
        }
    }

    /// Full invariant walk: ring simplicity and orientation, hole placement,
    /// pairwise interior-disjointness within a layer, containment in the footprint.
    pub fn validate(&self) -> Result<(), PatternError> {
        if self.footprint.is_empty() {
            return Err(PatternError::Degenerate("empty footprint".into()));
        }
        check_region("footprint", &self.footprint)?;
        let mut seen = std::collections::HashSet::new();
        for layer in &self.layers {
            if !seen.insert(layer.name.as_str()) {
                return Err(PatternError::Conflict(format!("duplicate layer name `{}`", layer.name)));
            }
            check_region(&layer.name, &layer.region)?;
            for (i, poly) in layer.region.iter().enumerate() {
                if !region_contains_polygon(&self.footprint, poly) {
                    return Err(PatternError::Conflict(format!(
                        "layer `{}` polygon {i} leaves the footprint",
                        layer.name
                    )));
                }
            }
        }
        Ok(())
    }
}

fn ring_error(layer: &str, polygon: usize, ring: usize, reason: impl Into<String>) -> PatternError {
    PatternError::InvalidRing { layer: layer.to_string(), polygon, ring, reason: reason.into() }
}

/// Checks one region: per-ring validity and pairwise disjointness.
pub(crate) fn check_region(name: &str, region: &[Polygon]) -> Result<(), PatternError> {
    for (pi, poly) in region.iter().enumerate() {
        for (ri, ring) in poly.rings().enumerate() {
            if ring.len() < 3 {
                return Err(ring_error(name, pi, ri, "fewer than 3 vertices"));
            }
            if let Some((a, b)) = find_self_intersection(ring) {
                return Err(ring_error(name, pi, ri, format!("self-intersecting (edges {a} and {b})")));
            }
            let area = signed_area(ring);
            if ri == 0 && area <= 0.0 {
                return Err(ring_error(name, pi, ri, "outer ring must be counter-clockwise with positive area"));
            }
            if ri > 0 && area >= 0.0 {
                return Err(ring_error(name, pi, ri, "hole must be clockwise"));
            }
        }
        let outer_only = Polygon::new(poly.outer.clone());
        for (hi, hole) in poly.holes.iter().enumerate() {
            if !hole.iter().all(|&p| outer_only.locate(p, 0.0) == Location::Inside) || rings_cross(hole, &poly.outer) {
                return Err(ring_error(name, pi, hi + 1, "hole is not strictly inside the outer ring"));
            }
            for (hj, other) in poly.holes.iter().enumerate().skip(hi + 1) {
                let a = Polygon::new(reversed(hole));
                let b = Polygon::new(reversed(other));
                if interiors_overlap(&a, &b) {
                    return Err(ring_error(name, pi, hj + 1, format!("hole overlaps hole {}", hi + 1)));
                }
            }
        }
    }
    for i in 0..region.len() {
        for j in (i + 1)..region.len() {
            if interiors_overlap(&region[i], &region[j]) {
                return Err(PatternError::Conflict(format!("`{name}` polygons {i} and {j} overlap")));
            }
        }
    }
    Ok(())
}

fn reversed(r: &[Point]) -> Vec<Point> {
    r.iter().rev().copied().collect()
}

fn rings_cross(a: &[Point], b: &[Point]) -> bool {
    let (na, nb) = (a.len(), b.len());
    for i in 0..na {
        for j in 0..nb {
            if segments_cross(a[i], a[(i + 1) % na], b[j], b[(j + 1) % nb]) {
                return true;
            }
        }
    }
    false
}

/// Sample points just inside each edge of `poly` (one per edge).
fn inner_probes(poly: &Polygon) -> Vec<Point> {
    let mut out = Vec::new();
    for (k, ring) in poly.rings().enumerate() {
        let n = ring.len();
        let area = signed_area(ring);
        // left normal points into the region for a CCW outer ring or a CW hole
        let s = if (k == 0) == (area > 0.0) { 1.0 } else { -1.0 };
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len = d[0].hypot(d[1]);
            if len == 0.0 {
                continue;
            }
            let eps = 1e-7 * len;
            out.push([(a[0] + b[0]) / 2.0 - s * eps * d[1] / len, (a[1] + b[1]) / 2.0 + s * eps * d[0] / len]);
        }
    }
    out
}

/// Do two polygons share interior area? Shared boundaries are allowed.
pub(crate) fn interiors_overlap(a: &Polygon, b: &Polygon) -> bool {
    let (ba, bb) = (a.bbox(), b.bbox());
    if ba[0] > bb[2] || bb[0] > ba[2] || ba[1] > bb[3] || bb[1] > ba[3] {
        return false;
    }
    for ra in a.rings() {
        for rb in b.rings() {
            if rings_cross(ra, rb) {
                return true;
            }
        }
    }
    inner_probes(a).into_iter().any(|p| b.contains(p) && a.contains(p))
        || inner_probes(b).into_iter().any(|p| a.contains(p) && b.contains(p))
}

/// Every vertex of `poly` lies inside or on the region, and no edge crosses its boundary.
pub(crate) fn region_contains_polygon(region: &[Polygon], poly: &Polygon) -> bool {
    for ring in poly.rings() {
        for &p in ring {
            if !region.iter().any(|r| r.locate(p, CONTAINMENT_TOL) != Location::Outside) {
                return false;
            }
        }
        for r in region {
            for rr in r.rings() {
                if rings_cross(ring, rr) {
                    return false;
                }
            }
        }
    }
    // probes catch a polygon bridging a gap between two footprint pieces
    inner_probes(poly)
        .into_iter()
        .all(|p| region.iter().any(|r| r.locate(p, CONTAINMENT_TOL) != Location::Outside))
}
