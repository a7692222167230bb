//! Incremental Delaunay triangulation (Bowyer–Watson) on exact predicates.
//!
//! The first three vertices form an enclosing super-triangle, so every real
//! vertex has a complete fan and point location never leaves the mesh.

use crate::pattern::Point;

pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Tri {
    /// Counter-clockwise vertices.
    pub v: [u32; 3],
    /// `n[i]` is the neighbour across the edge opposite `v[i]`.
    pub n: [u32; 3],
    pub alive: bool,
}

pub(crate) struct Delaunay {
    pub pts: Vec<Point>,
    pub tris: Vec<Tri>,
    free: Vec<u32>,
    vert_tri: Vec<u32>,
    last: u32,
    mark: Vec<u32>,
    stamp: u32,
}

pub(crate) enum Inserted {
    New { vertex: u32, created: Vec<u32> },
    Duplicate(u32),
}

fn coord(p: Point) -> robust::Coord<f64> {
    robust::Coord { x: p[0], y: p[1] }
}

pub(crate) fn orient(a: Point, b: Point, c: Point) -> f64 {
    robust::orient2d(coord(a), coord(b), coord(c))
}

pub(crate) fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    robust::incircle(coord(a), coord(b), coord(c), coord(d))
}

impl Delaunay {
    pub fn new(bbox: [f64; 4]) -> Self {
        let cx = 0.5 * (bbox[0] + bbox[2]);
        let cy = 0.5 * (bbox[1] + bbox[3]);
        let m = (bbox[2] - bbox[0]).max(bbox[3] - bbox[1]).max(1.0) * 64.0;
        let pts = vec![[cx - 2.0 * m, cy - m], [cx + 2.0 * m, cy - m], [cx, cy + 2.0 * m]];
        let tris = vec![Tri { v: [0, 1, 2], n: [NONE; 3], alive: true }];
        Self { pts, tris, free: Vec::new(), vert_tri: vec![0, 0, 0], last: 0, mark: vec![0], stamp: 0 }
    }

    pub fn is_super(&self, v: u32) -> bool {
        v < 3
    }

    pub fn point(&self, v: u32) -> Point {
        self.pts[v as usize]
    }

    pub fn tri(&self, t: u32) -> &Tri {
        &self.tris[t as usize]
    }

    pub fn alive_tris(&self) -> impl Iterator<Item = u32> + '_ {
        self.tris.iter().enumerate().filter(|(_, t)| t.alive).map(|(i, _)| i as u32)
    }

    fn tri_points(&self, t: u32) -> [Point; 3] {
        let v = self.tris[t as usize].v;
        [self.pts[v[0] as usize], self.pts[v[1] as usize], self.pts[v[2] as usize]]
    }

    /// Triangle containing `p` (closed), by visibility walk.
    pub fn locate(&self, p: Point) -> u32 {
        let mut t = if self.tris[self.last as usize].alive { self.last } else { self.alive_tris().next().unwrap() };
        let cap = 4 * self.tris.len() + 16;
        for _ in 0..cap {
            let tri = &self.tris[t as usize];
            let q = self.tri_points(t);
            let mut next = NONE;
            for i in 0..3 {
                if orient(q[(i + 1) % 3], q[(i + 2) % 3], p) < 0.0 {
                    next = tri.n[i];
                    break;
                }
            }
            if next == NONE {
                return t;
            }
            t = next;
        }
        // fall back to a scan if the walk cycles
        self.alive_tris()
            .find(|&t| {
                let q = self.tri_points(t);
                (0..3).all(|i| orient(q[(i + 1) % 3], q[(i + 2) % 3], p) >= 0.0)
            })
            .expect("point inside the super-triangle")
    }

    fn next_stamp(&mut self) -> u32 {
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        if self.mark.len() < self.tris.len() {
            self.mark.resize(self.tris.len(), 0);
        }
        self.stamp
    }

    /// Triangles whose circumcircle strictly contains `p`, grown from `start`.
    pub fn cavity(&mut self, p: Point, start: u32) -> Vec<u32> {
        let stamp = self.next_stamp();
        let mut out = vec![start];
        self.mark[start as usize] = stamp;
        let mut i = 0;
        while i < out.len() {
            let t = out[i];
            i += 1;
            for k in 0..3 {
                let nb = self.tris[t as usize].n[k];
                if nb == NONE || self.mark[nb as usize] == stamp {
                    continue;
                }
                let q = self.tri_points(nb);
                if incircle(q[0], q[1], q[2], p) > 0.0 {
                    self.mark[nb as usize] = stamp;
                    out.push(nb);
                }
            }
        }
        out
    }

    /// Cavity membership left over from the most recent `cavity` call.
    pub fn in_last_cavity(&self, t: u32) -> bool {
        t != NONE && self.mark.get(t as usize) == Some(&self.stamp)
    }

    fn alloc(&mut self, tri: Tri) -> u32 {
        if let Some(i) = self.free.pop() {
            self.tris[i as usize] = tri;
            i
        } else {
            self.tris.push(tri);
            self.mark.push(0);
            (self.tris.len() - 1) as u32
        }
    }

    pub fn insert(&mut self, p: Point) -> Inserted {
        let t0 = self.locate(p);
        for &v in &self.tris[t0 as usize].v {
            if self.pts[v as usize] == p {
                return Inserted::Duplicate(v);
            }
        }
        let cav = self.cavity(p, t0);
        let mut boundary: Vec<(u32, u32, u32)> = Vec::new();
        for &t in &cav {
            let tri = self.tris[t as usize];
            for k in 0..3 {
                let nb = tri.n[k];
                if nb == NONE || !self.in_last_cavity(nb) {
                    boundary.push((tri.v[(k + 1) % 3], tri.v[(k + 2) % 3], nb));
                }
            }
        }
        let vid = self.pts.len() as u32;
        self.pts.push(p);
        self.vert_tri.push(NONE);
        for &t in &cav {
            self.tris[t as usize].alive = false;
            self.free.push(t);
        }
        // reuse lowest slots first so numbering does not depend on cavity order
        self.free.sort_unstable_by(|a, b| b.cmp(a));
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outside) in &boundary {
            let t = self.alloc(Tri { v: [a, b, vid], n: [NONE, NONE, outside], alive: true });
            if outside != NONE {
                let o = &mut self.tris[outside as usize];
                for j in 0..3 {
                    if o.v[(j + 1) % 3] == b && o.v[(j + 2) % 3] == a {
                        o.n[j] = t;
                    }
                }
            }
            created.push(t);
        }
        for (i, &(a, b, _)) in boundary.iter().enumerate() {
            let t = created[i];
            let after = boundary.iter().position(|e| e.0 == b).map(|j| created[j]).unwrap_or(NONE);
            let before = boundary.iter().position(|e| e.1 == a).map(|j| created[j]).unwrap_or(NONE);
            let tri = &mut self.tris[t as usize];
            tri.n[0] = after;
            tri.n[1] = before;
            self.vert_tri[a as usize] = t;
            self.vert_tri[b as usize] = t;
        }
        self.vert_tri[vid as usize] = created[0];
        self.last = created[0];
        Inserted::New { vertex: vid, created }
    }

    /// Triangles around vertex `v`; counter-clockwise for interior vertices.
    pub fn fan(&self, v: u32) -> Vec<u32> {
        let start = self.vert_tri[v as usize];
        let mut out = Vec::new();
        if start == NONE {
            return out;
        }
        let slot = |t: u32| self.tris[t as usize].v.iter().position(|&x| x == v).unwrap();
        let mut t = start;
        loop {
            out.push(t);
            // across edge (v, v[i+2]) lies the next triangle counter-clockwise
            let nb = self.tris[t as usize].n[(slot(t) + 1) % 3];
            if nb == start {
                return out;
            }
            if nb == NONE {
                break;
            }
            t = nb;
        }
        // open fan on the hull: collect the clockwise side too
        let mut t = start;
        loop {
            let nb = self.tris[t as usize].n[(slot(t) + 2) % 3];
            if nb == NONE {
                return out;
            }
            out.push(nb);
            t = nb;
        }
    }

    /// Triangle holding directed edge a→b, with the slot of the opposite vertex.
    pub fn find_edge(&self, a: u32, b: u32) -> Option<(u32, usize)> {
        for t in self.fan(a) {
            let tri = &self.tris[t as usize];
            for k in 0..3 {
                if tri.v[(k + 1) % 3] == a && tri.v[(k + 2) % 3] == b {
                    return Some((t, k));
                }
            }
        }
        None
    }

    /// Apex vertices on either side of undirected edge {a, b}, if it exists.
    pub fn edge_apexes(&self, a: u32, b: u32) -> Option<[u32; 2]> {
        let (t1, k1) = self.find_edge(a, b)?;
        let (t2, k2) = self.find_edge(b, a)?;
        Some([self.tris[t1 as usize].v[k1], self.tris[t2 as usize].v[k2]])
    }
}
