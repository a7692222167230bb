//! Planar polygon primitives: rings, polygons with holes, and the
//! predicates the layout validator and the mesher share.

use serde::{Deserialize, Serialize};

pub type Point = [f64; 2];

/// Polygon with an outer ring (counter-clockwise) and clockwise holes.
/// Rings are stored open: the closing edge is implied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub outer: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

impl Polygon {
    pub fn new(outer: Vec<Point>) -> Self {
        Self { outer, holes: Vec::new() }
    }

    pub fn with_holes(outer: Vec<Point>, holes: Vec<Vec<Point>>) -> Self {
        Self { outer, holes }
    }

    /// Net area (outer minus holes), independent of ring orientation.
    pub fn area(&self) -> f64 {
        signed_area(&self.outer).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    pub fn rings(&self) -> impl Iterator<Item = &Vec<Point>> {
        std::iter::once(&self.outer).chain(self.holes.iter())
    }

    /// Area centroid of the net region.
    pub fn centroid(&self) -> Point {
        let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
        for (k, ring) in self.rings().enumerate() {
            let (rx, ry, ra) = ring_moments(ring);
            // outer counts positive and holes negative whatever the stored orientation
            let s = if k == 0 { ra.signum() } else { -ra.signum() };
            cx += s * rx;
            cy += s * ry;
            a += s * ra;
        }
        [cx / a, cy / a]
    }

    /// Bring rings to the canonical orientation. Returns true if any ring was flipped.
    pub fn normalize_orientation(&mut self) -> bool {
        let mut flipped = false;
        if signed_area(&self.outer) < 0.0 {
            self.outer.reverse();
            flipped = true;
        }
        for h in &mut self.holes {
            if signed_area(h) > 0.0 {
                h.reverse();
                flipped = true;
            }
        }
        flipped
    }

    pub fn map_points(&self, f: impl Fn(Point) -> Point) -> Polygon {
        Polygon {
            outer: self.outer.iter().map(|&p| f(p)).collect(),
            holes: self.holes.iter().map(|h| h.iter().map(|&p| f(p)).collect()).collect(),
        }
    }

    /// Classify a point against the net region (outer minus holes).
    pub fn locate(&self, p: Point, tol: f64) -> Location {
        match locate_in_ring(&self.outer, p, tol) {
            Location::Outside => Location::Outside,
            Location::Boundary => Location::Boundary,
            Location::Inside => {
                for h in &self.holes {
                    match locate_in_ring(h, p, tol) {
                        Location::Inside => return Location::Outside,
                        Location::Boundary => return Location::Boundary,
                        Location::Outside => {}
                    }
                }
                Location::Inside
            }
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.locate(p, 0.0) == Location::Inside
    }

    pub fn bbox(&self) -> [f64; 4] {
        bbox_of(self.outer.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

/// Shoelace signed area; positive for counter-clockwise rings.
pub fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

/// First moments and signed area of a ring: (∫x dA, ∫y dA, A).
fn ring_moments(ring: &[Point]) -> (f64, f64, f64) {
    let n = ring.len();
    let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let p = ring[i];
        let q = ring[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    (cx / 6.0, cy / 6.0, a / 2.0)
}

pub fn bbox_of(points: impl Iterator<Item = Point>) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in points {
        b[0] = b[0].min(p[0]);
        b[1] = b[1].min(p[1]);
        b[2] = b[2].max(p[0]);
        b[3] = b[3].max(p[1]);
    }
    b
}

pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(
        robust::Coord { x: a[0], y: a[1] },
        robust::Coord { x: b[0], y: b[1] },
        robust::Coord { x: c[0], y: c[1] },
    )
}

pub fn dist_point_segment(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0) } else { 0.0 };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Even-odd point location with an explicit boundary band of width `tol`.
pub fn locate_in_ring(ring: &[Point], p: Point, tol: f64) -> Location {
    let n = ring.len();
    let mut inside = false;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if tol > 0.0 {
            if dist_point_segment(p, a, b) <= tol {
                return Location::Boundary;
            }
        } else if orient(a, b, p) == 0.0
            && p[0] >= a[0].min(b[0])
            && p[0] <= a[0].max(b[0])
            && p[1] >= a[1].min(b[1])
            && p[1] <= a[1].max(b[1])
        {
            return Location::Boundary;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

/// True when segments ab and cd cross at a single point interior to both.
pub fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// True when segments ab and cd share any point (crossing, touching or overlapping).
pub fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 * o2 < 0.0 && o3 * o4 < 0.0 {
        return true;
    }
    let on = |p: Point, q: Point, r: Point| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    (o1 == 0.0 && on(a, b, c)) || (o2 == 0.0 && on(a, b, d)) || (o3 == 0.0 && on(c, d, a)) || (o4 == 0.0 && on(c, d, b))
}

/// Intersection point of the lines through ab and cd, if not parallel.
pub fn line_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<Point> {
    let r = [b[0] - a[0], b[1] - a[1]];
    let s = [d[0] - c[0], d[1] - c[1]];
    let den = r[0] * s[1] - r[1] * s[0];
    if den.abs() < 1e-300 {
        return None;
    }
    let t = ((c[0] - a[0]) * s[1] - (c[1] - a[1]) * s[0]) / den;
    Some([a[0] + t * r[0], a[1] + t * r[1]])
}

/// Simplicity check for a closed ring. Returns the first offending edge pair.
pub fn find_self_intersection(ring: &[Point]) -> Option<(usize, usize)> {
    let n = ring.len();
    if n < 3 {
        return Some((0, 0));
    }
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        if a == b {
            return Some((i, i));
        }
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            let c = ring[j];
            let d = ring[(j + 1) % n];
            if adjacent {
                // neighbours share exactly one vertex; they must not fold back onto each other
                let (p, q, r) = if j == i + 1 { (a, b, d) } else { (c, a, b) };
                if orient(p, q, r) == 0.0 {
                    let back = (r[0] - q[0]) * (p[0] - q[0]) + (r[1] - q[1]) * (p[1] - q[1]);
                    if back > 0.0 {
                        return Some((i, j));
                    }
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i, j));
            }
        }
    }
    None
}

/// Polygonal approximation of a circular arc from `a0` to `a1` (radians,
/// either direction). Endpoints are included. Chord sagitta never exceeds
/// `chord_tol`.
pub fn arc_points(center: Point, radius: f64, a0: f64, a1: f64, chord_tol: f64) -> Vec<Point> {
    let sweep = a1 - a0;
    let n = arc_segments(radius, sweep.abs(), chord_tol);
    (0..=n)
        .map(|k| {
            let t = a0 + sweep * k as f64 / n as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

/// Number of chords needed so that the sagitta over `sweep` radians stays below `chord_tol`.
pub fn arc_segments(radius: f64, sweep: f64, chord_tol: f64) -> usize {
    if radius <= 0.0 || sweep <= 0.0 {
        return 1;
    }
    let max_step = if chord_tol >= radius { std::f64::consts::PI / 2.0 } else { 2.0 * (1.0 - chord_tol / radius).acos() };
    ((sweep / max_step).ceil() as usize).max(1)
}
