use serde::{Deserialize, Serialize};

use crate::pattern::geometry::{dist_point_segment, Point};
use crate::pattern::PlanarLayout;

use super::MeshError;

/// Conforming planar triangulation of a layout footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh2D {
    pub nodes: Vec<Point>,
    /// Counter-clockwise node triples.
    pub triangles: Vec<[u32; 3]>,
    /// Bit `i` set when the triangle lies in layer `i` of `layer_names`.
    pub coverage: Vec<u32>,
    pub layer_names: Vec<String>,
    /// Constrained edges: every input ring edge as a chain of these.
    pub boundary_edges: Vec<[u32; 2]>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

/// Thresholds checked by [`TriMesh2D::audit`].
#[derive(Debug, Clone, Copy)]
pub struct AuditLimits {
    pub area_min: f64,
    pub min_angle_deg: f64,
}

impl Default for AuditLimits {
    fn default() -> Self {
        Self { area_min: 1e-6, min_angle_deg: 20.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub min_angle_deg: f64,
    /// Triangles under the angle limit whose smallest angle sits between two constrained edges.
    pub corner_exempt: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Interior angles in degrees, angle `i` at vertex `i`.
pub fn triangle_angles(p: [Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let a = p[i];
        let b = p[(i + 1) % 3];
        let c = p[(i + 2) % 3];
        let u = [b[0] - a[0], b[1] - a[1]];
        let v = [c[0] - a[0], c[1] - a[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        out[i] = cross.abs().atan2(dot).to_degrees();
    }
    out
}

impl TriMesh2D {
    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let v = self.triangles[t];
        [self.nodes[v[0] as usize], self.nodes[v[1] as usize], self.nodes[v[2] as usize]]
    }

    pub fn centroid(&self, t: usize) -> Point {
        let p = self.tri_points(t);
        [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
    }

    pub fn area(&self, t: usize) -> f64 {
        let p = self.tri_points(t);
        triangle_area(p[0], p[1], p[2])
    }

    pub fn layer_bit(&self, name: &str) -> Option<u32> {
        self.layer_names.iter().position(|n| n == name).map(|i| 1u32 << i)
    }

    /// Summed area of triangles tagged with `layer`.
    pub fn layer_area(&self, name: &str) -> f64 {
        let Some(bit) = self.layer_bit(name) else { return 0.0 };
        (0..self.triangles.len()).filter(|&t| self.coverage[t] & bit != 0).map(|t| self.area(t)).sum()
    }

    /// Undirected edges used by exactly one triangle, as directed CCW edges.
    pub fn outer_edges(&self) -> Vec<[u32; 2]> {
        let mut directed = std::collections::HashSet::new();
        for t in &self.triangles {
            for k in 0..3 {
                directed.insert((t[k], t[(k + 1) % 3]));
            }
        }
        let mut out: Vec<[u32; 2]> = directed
            .iter()
            .filter(|&&(a, b)| !directed.contains(&(b, a)))
            .map(|&(a, b)| [a, b])
            .collect();
        out.sort_unstable();
        out
    }

    /// Per-node flag: lies on the outer boundary of the triangulated region.
    pub fn boundary_nodes(&self) -> Vec<bool> {
        let mut on = vec![false; self.nodes.len()];
        for [a, b] in self.outer_edges() {
            on[a as usize] = true;
            on[b as usize] = true;
        }
        on
    }

    /// Independent invariant walk: orientation and area, half-edge
    /// conformity, hanging nodes, angle quality, and (when given) recovery of
    /// every input ring edge as a chain of mesh edges.
    pub fn audit(&self, limits: AuditLimits, layout: Option<&PlanarLayout>) -> AuditReport {
        let mut rep = AuditReport { min_angle_deg: 180.0, ..Default::default() };
        let n = self.nodes.len() as u32;
        let constrained: std::collections::HashSet<(u32, u32)> =
            self.boundary_edges.iter().map(|e| (e[0].min(e[1]), e[0].max(e[1]))).collect();
        let mut directed = std::collections::HashMap::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= n) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                rep.violations.push(format!("triangle {t} has invalid node references"));
                continue;
            }
            let a = self.area(t);
            if a < limits.area_min {
                rep.violations.push(format!("triangle {t} area {a:e} below minimum"));
            }
            for k in 0..3 {
                if directed.insert((tri[k], tri[(k + 1) % 3]), t).is_some() {
                    rep.violations.push(format!("directed edge {:?} used twice", (tri[k], tri[(k + 1) % 3])));
                }
            }
            let ang = triangle_angles(self.tri_points(t));
            let (imin, &amin) = ang.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap();
            if amin < limits.min_angle_deg {
                let v = tri[imin];
                let e1 = (v.min(tri[(imin + 1) % 3]), v.max(tri[(imin + 1) % 3]));
                let e2 = (v.min(tri[(imin + 2) % 3]), v.max(tri[(imin + 2) % 3]));
                if constrained.contains(&e1) && constrained.contains(&e2) {
                    rep.corner_exempt += 1;
                } else {
                    rep.violations.push(format!("triangle {t} min angle {amin:.2} deg"));
                }
            }
            rep.min_angle_deg = rep.min_angle_deg.min(amin);
        }
        // hanging nodes: no node may sit inside a boundary edge
        let scale = self.nodes.iter().fold(1.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
        let tol = 1e-10 * scale;
        for &(a, b) in directed.keys().filter(|&&(a, b)| !directed.contains_key(&(b, a))) {
            let (pa, pb) = (self.nodes[a as usize], self.nodes[b as usize]);
            for (i, &p) in self.nodes.iter().enumerate() {
                let i = i as u32;
                if i != a && i != b && dist_point_segment(p, pa, pb) < tol {
                    rep.violations.push(format!("node {i} hangs on boundary edge ({a}, {b})"));
                }
            }
        }
        if let Some(layout) = layout {
            self.audit_recovery(layout, tol, &directed, &mut rep);
        }
        rep
    }

    fn audit_recovery(
        &self,
        layout: &PlanarLayout,
        tol: f64,
        directed: &std::collections::HashMap<(u32, u32), usize>,
        rep: &mut AuditReport,
    ) {
        let regions = std::iter::once(&layout.footprint).chain(layout.layers.iter().map(|l| &l.region));
        for region in regions {
            for poly in region {
                for ring in poly.rings() {
                    for i in 0..ring.len() {
                        let (a, b) = (ring[i], ring[(i + 1) % ring.len()]);
                        let d = [b[0] - a[0], b[1] - a[1]];
                        let l2 = d[0] * d[0] + d[1] * d[1];
                        let mut on: Vec<(f64, u32)> = self
                            .nodes
                            .iter()
                            .enumerate()
                            .filter(|(_, &p)| dist_point_segment(p, a, b) < tol.max(1e-9))
                            .map(|(k, &p)| (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2, k as u32))
                            .collect();
                        on.sort_by(|x, y| x.0.total_cmp(&y.0));
                        let covered = on.first().map_or(false, |f| f.0 < 1e-9)
                            && on.last().map_or(false, |l| l.0 > 1.0 - 1e-9)
                            && on.windows(2).all(|w| {
                                directed.contains_key(&(w[0].1, w[1].1)) || directed.contains_key(&(w[1].1, w[0].1))
                            });
                        if !covered {
                            rep.violations.push(format!("input edge {a:?}-{b:?} not recovered"));
                        }
                    }
                }
            }
        }
    }
}

/// Read a 2D mesh in the documented plain-text form:
///
/// ```text
/// LAYERS substrate kirigami
/// NODES <n>
/// x y              (n lines)
/// TRIANGLES <m>
/// a b c coverage   (m lines, 0-based node indices, coverage bitmask)
/// EDGES <k>        (optional constrained edges)
/// a b
/// ```
pub fn parse_trimesh(text: &str) -> Result<TriMesh2D, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let perr = |line: usize, msg: &str| MeshError::Parse { line, msg: msg.to_string() };
    let mut next = |what: &str| lines.next().ok_or_else(|| perr(0, &format!("unexpected end of file, expected {what}")));
    let (ln, l) = next("LAYERS")?;
    let mut tok = l.split_whitespace();
    if tok.next() != Some("LAYERS") {
        return Err(perr(ln, "expected LAYERS"));
    }
    let layer_names: Vec<String> = tok.map(str::to_string).collect();
    let count = |ln: usize, l: &str, key: &str| -> Result<usize, MeshError> {
        let mut t = l.split_whitespace();
        if t.next() != Some(key) {
            return Err(perr(ln, &format!("expected {key}")));
        }
        t.next().and_then(|v| v.parse().ok()).ok_or_else(|| perr(ln, "bad count"))
    };
    let (ln, l) = next("NODES")?;
    let nn = count(ln, l, "NODES")?;
    let mut nodes = Vec::with_capacity(nn);
    for _ in 0..nn {
        let (ln, l) = next("node")?;
        let v: Vec<f64> = l.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if v.len() != 2 {
            return Err(perr(ln, "node needs x y"));
        }
        nodes.push([v[0], v[1]]);
    }
    let (ln, l) = next("TRIANGLES")?;
    let nt = count(ln, l, "TRIANGLES")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut coverage = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (ln, l) = next("triangle")?;
        let v: Vec<u32> = l.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        if v.len() != 4 || v[..3].iter().any(|&i| i as usize >= nn) {
            return Err(perr(ln, "triangle needs 3 valid node indices and a coverage mask"));
        }
        triangles.push([v[0], v[1], v[2]]);
        coverage.push(v[3]);
    }
    let mut boundary_edges = Vec::new();
    if let Ok((ln, l)) = next("EDGES") {
        let ne = count(ln, l, "EDGES")?;
        for _ in 0..ne {
            let (ln, l) = next("edge")?;
            let v: Vec<u32> = l.split_whitespace().filter_map(|t| t.parse().ok()).collect();
            if v.len() != 2 || v.iter().any(|&i| i as usize >= nn) {
                return Err(perr(ln, "edge needs 2 valid node indices"));
            }
            boundary_edges.push([v[0], v[1]]);
        }
    }
    let mesh = TriMesh2D { nodes, triangles, coverage, layer_names, boundary_edges, warnings: Vec::new() };
    for t in 0..mesh.triangles.len() {
        if mesh.area(t) <= 0.0 {
            return Err(MeshError::Degenerate(format!("triangle {t} is not counter-clockwise")));
        }
    }
    Ok(mesh)
}

pub fn format_trimesh(mesh: &TriMesh2D) -> String {
    use std::fmt::Write as _;
    let mut s = format!("LAYERS {}\nNODES {}\n", mesh.layer_names.join(" "), mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(s, "TRIANGLES {}", mesh.triangles.len());
    for (t, c) in mesh.triangles.iter().zip(&mesh.coverage) {
        let _ = writeln!(s, "{} {} {} {}", t[0], t[1], t[2], c);
    }
    let _ = writeln!(s, "EDGES {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {}", e[0], e[1]);
    }
    s
}
