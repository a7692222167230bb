//! Conforming Delaunay refinement of a layout footprint.
//!
//! Every ring of the footprint and of each layer is a constraint. Constraints
//! are recovered by midpoint splitting, so the final triangulation is plain
//! Delaunay and every input edge is a chain of mesh edges.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::pattern::geometry::{dist_point_segment, line_intersection, segments_cross};
use crate::pattern::{PlanarLayout, Point};

use super::delaunay::{orient, Delaunay, Inserted, NONE};
use super::trimesh::{triangle_angles, TriMesh2D};
use super::MeshError;

/// Longest edge allowed relative to `h_target` before a triangle is split.
const SIZE_FACTOR: f64 = 1.4;
/// Segments shorter than this fraction of `h_target` are never split.
const MIN_SPLIT_FRACTION: f64 = 1e-3;
const SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub h_target: f64,
    pub min_angle_deg: f64,
    /// Hard cap on Steiner points, as a multiple of the nominal node count.
    pub steiner_budget: f64,
}

impl MeshOptions {
    pub fn new(h_target: f64, min_angle_deg: f64) -> Self {
        Self { h_target, min_angle_deg, steiner_budget: 20.0 }
    }
}

/// Quality triangulation of the layout footprint with all layer boundaries as constraints.
pub fn triangulate(layout: &PlanarLayout, h_target: f64, min_angle_deg: f64) -> Result<TriMesh2D, MeshError> {
    triangulate_with(layout, &MeshOptions::new(h_target, min_angle_deg))
}

pub fn triangulate_with(layout: &PlanarLayout, opts: &MeshOptions) -> Result<TriMesh2D, MeshError> {
    if !(opts.h_target > 0.0 && opts.h_target.is_finite()) {
        return Err(MeshError::Parameter(format!("h_target must be positive, got {}", opts.h_target)));
    }
    if !(opts.min_angle_deg >= 0.0 && opts.min_angle_deg <= 33.0) {
        return Err(MeshError::Parameter(format!(
            "min_angle must lie in [0, 33] degrees, got {}",
            opts.min_angle_deg
        )));
    }
    layout.validate().map_err(|e| MeshError::Degenerate(e.to_string()))?;
    let (points, segs) = planar_graph(layout, opts.h_target)?;
    let mut r = Refiner::new(layout, opts, &points, &segs);
    r.recover_segments();
    r.refine();
    Ok(r.extract())
}

/// Deduplicated constraint vertices and segments, split at crossings,
/// T-junctions and to at most `h` in length.
fn planar_graph(layout: &PlanarLayout, h: f64) -> Result<(Vec<Point>, Vec<[usize; 2]>), MeshError> {
    let mut pts: Vec<Point> = Vec::new();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let scale = layout
        .footprint
        .iter()
        .flat_map(|p| p.outer.iter())
        .fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let tol = SNAP * scale;
    let mut add = |p: Point, pts: &mut Vec<Point>| -> usize {
        let key = ((p[0] / tol).floor() as i64, (p[1] / tol).floor() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(c) = grid.get(&(key.0 + dx, key.1 + dy)) {
                    for &i in c {
                        let q = pts[i];
                        if (q[0] - p[0]).abs() <= tol && (q[1] - p[1]).abs() <= tol {
                            return i;
                        }
                    }
                }
            }
        }
        pts.push(p);
        grid.entry(key).or_default().push(pts.len() - 1);
        pts.len() - 1
    };
    let mut segs: Vec<[usize; 2]> = Vec::new();
    let regions = std::iter::once(&layout.footprint).chain(layout.layers.iter().map(|l| &l.region));
    for region in regions {
        for poly in region {
            for ring in poly.rings() {
                let ids: Vec<usize> = ring.iter().map(|&p| add(p, &mut pts)).collect();
                for i in 0..ids.len() {
                    let (a, b) = (ids[i], ids[(i + 1) % ids.len()]);
                    if a != b {
                        segs.push([a.min(b), a.max(b)]);
                    }
                }
            }
        }
    }
    dedup_segments(&mut segs);

    // split at proper crossings and at vertices lying inside segments
    for _ in 0..4 {
        let mut cuts: Vec<Vec<usize>> = vec![Vec::new(); segs.len()];
        let bbs: Vec<[f64; 4]> = segs
            .iter()
            .map(|s| {
                let (a, b) = (pts[s[0]], pts[s[1]]);
                [a[0].min(b[0]) - tol, a[1].min(b[1]) - tol, a[0].max(b[0]) + tol, a[1].max(b[1]) + tol]
            })
            .collect();
        for i in 0..segs.len() {
            for j in i + 1..segs.len() {
                let (bi, bj) = (bbs[i], bbs[j]);
                if bi[2] < bj[0] || bj[2] < bi[0] || bi[3] < bj[1] || bj[3] < bi[1] {
                    continue;
                }
                let [a, b] = segs[i];
                let [c, d] = segs[j];
                if a == c || a == d || b == c || b == d {
                    continue;
                }
                if segments_cross(pts[a], pts[b], pts[c], pts[d]) {
                    let x = line_intersection(pts[a], pts[b], pts[c], pts[d])
                        .ok_or_else(|| MeshError::Degenerate("parallel crossing segments".into()))?;
                    let k = add(x, &mut pts);
                    cuts[i].push(k);
                    cuts[j].push(k);
                }
            }
        }
        for (k, p) in pts.iter().enumerate() {
            for (i, s) in segs.iter().enumerate() {
                let bb = bbs[i];
                if k == s[0] || k == s[1] || p[0] < bb[0] || p[0] > bb[2] || p[1] < bb[1] || p[1] > bb[3] {
                    continue;
                }
                if dist_point_segment(*p, pts[s[0]], pts[s[1]]) <= tol {
                    cuts[i].push(k);
                }
            }
        }
        if cuts.iter().all(Vec::is_empty) {
            break;
        }
        let mut next = Vec::new();
        for (s, mut c) in segs.iter().zip(cuts) {
            let (a, b) = (pts[s[0]], pts[s[1]]);
            let d = [b[0] - a[0], b[1] - a[1]];
            let t = |p: Point| (p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1];
            c.sort_by(|x, y| t(pts[*x]).total_cmp(&t(pts[*y])));
            c.dedup();
            let chain: Vec<usize> = std::iter::once(s[0]).chain(c).chain(std::iter::once(s[1])).collect();
            for w in chain.windows(2) {
                if w[0] != w[1] {
                    next.push([w[0].min(w[1]), w[0].max(w[1])]);
                }
            }
        }
        segs = next;
        dedup_segments(&mut segs);
    }

    // presplit long segments into equal pieces
    let mut out = Vec::with_capacity(segs.len());
    for s in segs {
        let (a, b) = (pts[s[0]], pts[s[1]]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let n = (len / h).ceil().max(1.0) as usize;
        let mut prev = s[0];
        for k in 1..n {
            let t = k as f64 / n as f64;
            pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            let id = pts.len() - 1;
            out.push([prev, id]);
            prev = id;
        }
        out.push([prev, s[1]]);
    }
    Ok((pts, out))
}

fn dedup_segments(segs: &mut Vec<[usize; 2]>) {
    segs.sort_unstable();
    segs.dedup();
}

fn circumcenter(a: Point, b: Point, c: Point) -> Point {
    let bx = b[0] - a[0];
    let by = b[1] - a[1];
    let cx = c[0] - a[0];
    let cy = c[1] - a[1];
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    [a[0] + (cy * b2 - by * c2) / d, a[1] + (bx * c2 - cx * b2) / d]
}

fn dist(a: Point, b: Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Strictly inside the diametral circle of segment a-b.
fn encroaches(p: Point, a: Point, b: Point) -> bool {
    (a[0] - p[0]) * (b[0] - p[0]) + (a[1] - p[1]) * (b[1] - p[1]) < 0.0
}

struct Refiner<'a> {
    layout: &'a PlanarLayout,
    dt: Delaunay,
    h: f64,
    min_angle: f64,
    /// Live segments keyed by ordered endpoint pair.
    segs: HashSet<(u32, u32)>,
    vseg: HashMap<u32, Vec<u32>>,
    seg_queue: VecDeque<(u32, u32)>,
    bad_queue: VecDeque<(u32, [u32; 3])>,
    budget: usize,
    skipped_corner: usize,
    skipped_small: usize,
    skipped_budget: bool,
}

fn key(a: u32, b: u32) -> (u32, u32) {
    (a.min(b), a.max(b))
}

impl<'a> Refiner<'a> {
    fn new(layout: &'a PlanarLayout, opts: &MeshOptions, points: &[Point], segs: &[[usize; 2]]) -> Self {
        let bbox = crate::pattern::geometry::bbox_of(points.iter().copied());
        let mut dt = Delaunay::new(bbox);
        let mut id = Vec::with_capacity(points.len());
        for &p in points {
            id.push(match dt.insert(p) {
                Inserted::New { vertex, .. } => vertex,
                Inserted::Duplicate(v) => v,
            });
        }
        let area = layout.footprint_area();
        let nominal = area / (0.433 * opts.h_target * opts.h_target) + points.len() as f64;
        let mut r = Refiner {
            layout,
            dt,
            h: opts.h_target,
            min_angle: opts.min_angle_deg,
            segs: HashSet::new(),
            vseg: HashMap::new(),
            seg_queue: VecDeque::new(),
            bad_queue: VecDeque::new(),
            budget: (opts.steiner_budget * nominal) as usize + 1000,
            skipped_corner: 0,
            skipped_small: 0,
            skipped_budget: false,
        };
        for s in segs {
            let (a, b) = (id[s[0]], id[s[1]]);
            if a != b {
                r.add_seg(a, b);
            }
        }
        r
    }

    fn add_seg(&mut self, a: u32, b: u32) {
        let k = key(a, b);
        if self.segs.insert(k) {
            self.vseg.entry(a).or_default().push(b);
            self.vseg.entry(b).or_default().push(a);
            self.seg_queue.push_back(k);
        }
    }

    fn remove_seg(&mut self, a: u32, b: u32) {
        self.segs.remove(&key(a, b));
        if let Some(v) = self.vseg.get_mut(&a) {
            v.retain(|&x| x != b);
        }
        if let Some(v) = self.vseg.get_mut(&b) {
            v.retain(|&x| x != a);
        }
    }

    fn is_seg(&self, a: u32, b: u32) -> bool {
        self.segs.contains(&key(a, b))
    }

    fn steiner_left(&self) -> bool {
        self.dt.pts.len() < self.budget
    }

    /// Missing from the triangulation or encroached by an adjacent apex.
    fn needs_split(&self, (a, b): (u32, u32)) -> bool {
        if !self.is_seg(a, b) {
            return false;
        }
        match self.dt.edge_apexes(a, b) {
            None => true,
            Some(apex) => {
                let (pa, pb) = (self.dt.point(a), self.dt.point(b));
                apex.iter().any(|&v| !self.dt.is_super(v) && encroaches(self.dt.point(v), pa, pb))
            }
        }
    }

    fn split_seg(&mut self, (a, b): (u32, u32)) -> bool {
        let (pa, pb) = (self.dt.point(a), self.dt.point(b));
        if dist(pa, pb) < MIN_SPLIT_FRACTION * self.h || !self.steiner_left() {
            self.skipped_small += 1;
            return false;
        }
        let m = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        match self.dt.insert(m) {
            Inserted::New { vertex, created } => {
                self.remove_seg(a, b);
                self.add_seg(a, vertex);
                self.add_seg(vertex, b);
                self.after_insert(&created);
                true
            }
            Inserted::Duplicate(_) => false,
        }
    }

    fn after_insert(&mut self, created: &[u32]) {
        let mut verts: Vec<u32> = created.iter().flat_map(|&t| self.dt.tri(t).v).collect();
        verts.sort_unstable();
        verts.dedup();
        for v in verts {
            if let Some(nb) = self.vseg.get(&v) {
                for &w in nb {
                    self.seg_queue.push_back(key(v, w));
                }
            }
        }
        for &t in created {
            self.bad_queue.push_back((t, self.dt.tri(t).v));
        }
    }

    fn drain_segments(&mut self) {
        while let Some(s) = self.seg_queue.pop_front() {
            if self.needs_split(s) {
                self.split_seg(s);
            }
        }
    }

    fn recover_segments(&mut self) {
        self.drain_segments();
    }

    fn in_domain(&self, v: [u32; 3]) -> bool {
        if v.iter().any(|&x| self.dt.is_super(x)) {
            return false;
        }
        let p = v.map(|x| self.dt.point(x));
        let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        self.layout.footprint_contains(c)
    }

    /// Quality verdict for a live in-domain triangle.
    fn is_bad(&mut self, v: [u32; 3]) -> bool {
        let p = v.map(|x| self.dt.point(x));
        let longest = dist(p[0], p[1]).max(dist(p[1], p[2])).max(dist(p[2], p[0]));
        let shortest = dist(p[0], p[1]).min(dist(p[1], p[2])).min(dist(p[2], p[0]));
        let ang = triangle_angles(p);
        let (imin, &amin) = ang.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        if longest > SIZE_FACTOR * self.h {
            return true;
        }
        if amin >= self.min_angle {
            return false;
        }
        let apex = v[imin];
        if self.is_seg(apex, v[(imin + 1) % 3]) && self.is_seg(apex, v[(imin + 2) % 3]) {
            self.skipped_corner += 1;
            return false;
        }
        if shortest < MIN_SPLIT_FRACTION * self.h {
            self.skipped_small += 1;
            return false;
        }
        true
    }

    /// Walk from the triangle's centroid towards `c`, returning the first
    /// constrained edge crossed, or the triangle containing `c`.
    fn walk(&self, t0: u32, c: Point) -> Result<u32, (u32, u32)> {
        let p = self.dt.tri(t0).v.map(|x| self.dt.point(x));
        let g = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
        let mut t = t0;
        let mut prev = NONE;
        for _ in 0..100_000 {
            let tri = *self.dt.tri(t);
            let q = tri.v.map(|x| self.dt.point(x));
            let mut exit = None;
            let mut fallback = None;
            for k in 0..3 {
                let (a, b) = ((k + 1) % 3, (k + 2) % 3);
                if tri.n[k] == prev || orient(q[a], q[b], c) >= 0.0 {
                    continue;
                }
                fallback.get_or_insert(k);
                let sa = orient(g, c, q[a]);
                let sb = orient(g, c, q[b]);
                if sa * sb <= 0.0 {
                    exit = Some(k);
                    break;
                }
            }
            let Some(k) = exit.or(fallback) else { return Ok(t) };
            let (a, b) = (tri.v[(k + 1) % 3], tri.v[(k + 2) % 3]);
            if self.is_seg(a, b) {
                return Err((a, b));
            }
            if tri.n[k] == NONE {
                return Ok(t);
            }
            prev = t;
            t = tri.n[k];
        }
        Ok(t)
    }

    fn refine(&mut self) {
        self.drain_segments();
        let all: Vec<u32> = self.dt.alive_tris().collect();
        for t in all {
            self.bad_queue.push_back((t, self.dt.tri(t).v));
        }
        while let Some((t, v)) = self.bad_queue.pop_front() {
            let tri = *self.dt.tri(t);
            if !tri.alive || tri.v != v || !self.in_domain(v) || !self.is_bad(v) {
                continue;
            }
            if !self.steiner_left() {
                self.skipped_budget = true;
                break;
            }
            let p = v.map(|x| self.dt.point(x));
            let c = circumcenter(p[0], p[1], p[2]);
            if !c[0].is_finite() || !c[1].is_finite() {
                continue;
            }
            match self.walk(t, c) {
                Err(seg) => {
                    if self.split_seg(seg) {
                        self.drain_segments();
                        self.bad_queue.push_back((t, v));
                    }
                }
                Ok(tc) => {
                    let cav = self.dt.cavity(c, tc);
                    let mut hit = Vec::new();
                    for &ct in &cav {
                        let cv = self.dt.tri(ct).v;
                        for k in 0..3 {
                            let (a, b) = (cv[k], cv[(k + 1) % 3]);
                            if self.is_seg(a, b) && encroaches(c, self.dt.point(a), self.dt.point(b)) {
                                hit.push(key(a, b));
                            }
                        }
                    }
                    if hit.is_empty() {
                        if let Inserted::New { created, .. } = self.dt.insert(c) {
                            self.after_insert(&created);
                            self.drain_segments();
                        }
                    } else {
                        hit.sort_unstable();
                        hit.dedup();
                        let mut any = false;
                        for s in hit {
                            if self.is_seg(s.0, s.1) {
                                any |= self.split_seg(s);
                            }
                        }
                        self.drain_segments();
                        if any {
                            self.bad_queue.push_back((t, v));
                        }
                    }
                }
            }
        }
    }

    fn extract(self) -> TriMesh2D {
        let mut tris: Vec<[u32; 3]> = self.dt.alive_tris().map(|t| self.dt.tri(t).v).filter(|&v| self.in_domain(v)).collect();
        let mut used = vec![false; self.dt.pts.len()];
        for t in &tris {
            for &v in t {
                used[v as usize] = true;
            }
        }
        let mut map = vec![NONE; self.dt.pts.len()];
        let mut nodes = Vec::new();
        for (i, &u) in used.iter().enumerate() {
            if u {
                map[i] = nodes.len() as u32;
                nodes.push(self.dt.pts[i]);
            }
        }
        for t in &mut tris {
            *t = t.map(|v| map[v as usize]);
            // canonical rotation: smallest index first
            let r = (0..3).min_by_key(|&k| t[k]).unwrap();
            *t = [t[r], t[(r + 1) % 3], t[(r + 2) % 3]];
        }
        tris.sort_unstable();
        let layer_names: Vec<String> = self.layout.layers.iter().map(|l| l.name.clone()).collect();
        let coverage = tris
            .iter()
            .map(|t| {
                let p = t.map(|v| nodes[v as usize]);
                let c = [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0];
                self.layout
                    .layers
                    .iter()
                    .enumerate()
                    .filter(|(_, l)| l.contains(c))
                    .fold(0u32, |m, (i, _)| m | (1 << i))
            })
            .collect();
        let mut boundary_edges: Vec<[u32; 2]> = self
            .segs
            .iter()
            .filter(|&&(a, b)| map[a as usize] != NONE && map[b as usize] != NONE)
            .map(|&(a, b)| {
                let (x, y) = (map[a as usize], map[b as usize]);
                [x.min(y), x.max(y)]
            })
            .collect();
        boundary_edges.sort_unstable();
        let mut warnings = Vec::new();
        if self.skipped_corner > 0 {
            warnings.push(format!(
                "{} triangles below the angle target at constrained input corners",
                self.skipped_corner
            ));
        }
        if self.skipped_small > 0 {
            warnings.push(format!("{} refinements skipped at features below the split length", self.skipped_small));
        }
        if self.skipped_budget {
            warnings.push("Steiner point budget exhausted before the quality target was met".into());
        }
        TriMesh2D { nodes, triangles: tris, coverage, layer_names, boundary_edges, warnings }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshing::AuditLimits;
    use crate::pattern::{build_lotus, Layer, LotusParams, Polygon, KIRIGAMI, SUBSTRATE};

    fn square() -> PlanarLayout {
        let sq = vec![Polygon::new(vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])];
        PlanarLayout::new(sq.clone(), vec![Layer::new(SUBSTRATE, sq)])
    }

    #[test]
    fn unit_square_area_sums_to_one() {
        let m = triangulate(&square(), 0.5, 20.0).unwrap();
        let total: f64 = (0..m.triangles.len()).map(|t| m.area(t)).sum();
        assert!((total - 1.0).abs() < 1e-9, "{total}");
        let rep = m.audit(AuditLimits::default(), Some(&square()));
        assert!(rep.ok(), "{:?}", rep.violations);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(triangulate(&square(), 0.0, 20.0), Err(MeshError::Parameter(_))));
        assert!(matches!(triangulate(&square(), 0.5, 40.0), Err(MeshError::Parameter(_))));
    }

    #[test]
    fn lotus_mesh_is_valid_and_tagged() {
        let layout = build_lotus(&LotusParams::new(30.0, 0.6)).unwrap();
        let m = triangulate(&layout, 1.5, 20.0).unwrap();
        let rep = m.audit(AuditLimits::default(), Some(&layout));
        assert!(rep.ok(), "{:?}", &rep.violations[..rep.violations.len().min(5)]);
        let both = m.layer_bit(SUBSTRATE).unwrap() | m.layer_bit(KIRIGAMI).unwrap();
        for t in 0..m.triangles.len() {
            let c = m.centroid(t);
            if (c[0] * c[0] + c[1] * c[1]).sqrt() < 18.0 - 1e-6 {
                assert_eq!(m.coverage[t] & both, both);
            }
        }
    }

    #[test]
    fn deterministic() {
        let layout = build_lotus(&LotusParams::new(10.0, 0.5)).unwrap();
        assert_eq!(triangulate(&layout, 1.0, 20.0).unwrap(), triangulate(&layout, 1.0, 20.0).unwrap());
    }
}
