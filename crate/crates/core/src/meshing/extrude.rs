use serde::{Deserialize, Serialize};

use super::trimesh::{triangle_angles, TriMesh2D};
use super::MeshError;

/// One entry of the layer stack, bottom to top.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub name: String,
    #[serde(rename = "thickness_mm")]
    pub thickness: f64,
    pub material: String,
    /// Elements through the thickness.
    #[serde(default = "one")]
    pub subdivisions: usize,
}

fn one() -> usize {
    1
}

impl LayerSpec {
    pub fn new(name: impl Into<String>, thickness: f64, material: impl Into<String>) -> Self {
        Self { name: name.into(), thickness, material: material.into(), subdivisions: 1 }
    }
}

/// Stacked 6-node wedge mesh. Wedge node order: bottom triangle CCW, then
/// the top triangle in the same order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayeredMesh {
    pub nodes: Vec<[f64; 3]>,
    pub elements: Vec<[u32; 6]>,
    pub element_layer: Vec<u32>,
    /// Source 2D triangle of each element.
    pub element_tri: Vec<u32>,
    pub layer_names: Vec<String>,
    pub layer_materials: Vec<String>,
    pub layer_thickness: Vec<f64>,
    /// Source 2D node of each 3D node.
    pub node_2d: Vec<u32>,
    /// z-level index of each 3D node into `levels`.
    pub node_level: Vec<u32>,
    pub levels: Vec<f64>,
    /// z-level range `[bottom, top]` of each layer.
    pub layer_levels: Vec<[u32; 2]>,
}

impl LayeredMesh {
    pub fn element_volume(&self, e: usize) -> f64 {
        let el = self.elements[e];
        let p = |i: usize| self.nodes[el[i] as usize];
        let a = 0.5 * ((p(1)[0] - p(0)[0]) * (p(2)[1] - p(0)[1]) - (p(2)[0] - p(0)[0]) * (p(1)[1] - p(0)[1]));
        a * (p(3)[2] - p(0)[2])
    }

    pub fn layer_id(&self, name: &str) -> Option<u32> {
        self.layer_names.iter().position(|n| n == name).map(|i| i as u32)
    }

    pub fn layer_volume(&self, layer: u32) -> f64 {
        (0..self.elements.len()).filter(|&e| self.element_layer[e] == layer).map(|e| self.element_volume(e)).sum()
    }

    pub fn total_height(&self) -> f64 {
        self.levels.last().copied().unwrap_or(0.0)
    }

    /// Structural checks: positive wedge volumes, one node per (2D node,
    /// level), and stacked wedges sharing their interface nodes.
    pub fn audit(&self) -> Vec<String> {
        let mut out = Vec::new();
        for e in 0..self.elements.len() {
            if !(self.element_volume(e) > 0.0) {
                out.push(format!("element {e} has non-positive volume"));
            }
        }
        let mut seen = std::collections::HashMap::new();
        for n in 0..self.nodes.len() {
            if let Some(m) = seen.insert((self.node_2d[n], self.node_level[n]), n) {
                out.push(format!("nodes {m} and {n} duplicate a position"));
            }
        }
        let mut bottom = std::collections::HashMap::new();
        for (e, el) in self.elements.iter().enumerate() {
            bottom.insert((self.element_tri[e], self.node_level[el[0] as usize]), e);
        }
        for (e, el) in self.elements.iter().enumerate() {
            let top = self.node_level[el[3] as usize];
            if let Some(&f) = bottom.get(&(self.element_tri[e], top)) {
                if el[3..] != self.elements[f][..3] {
                    out.push(format!("elements {e} and {f} do not share their interface nodes"));
                }
            }
        }
        out
    }
}

/// Stack `layers` over the shared 2D triangulation.
pub fn extrude(mesh: &TriMesh2D, layers: &[LayerSpec]) -> Result<LayeredMesh, MeshError> {
    if layers.is_empty() {
        return Err(MeshError::Parameter("layer stack is empty".into()));
    }
    let mut bits = Vec::with_capacity(layers.len());
    let mut levels = vec![0.0];
    let mut layer_levels = Vec::with_capacity(layers.len());
    for l in layers {
        if !(l.thickness > 0.0 && l.thickness.is_finite()) {
            return Err(MeshError::Parameter(format!("layer '{}' thickness must be positive", l.name)));
        }
        if l.subdivisions == 0 {
            return Err(MeshError::Parameter(format!("layer '{}' needs at least one subdivision", l.name)));
        }
        bits.push(mesh.layer_bit(&l.name).ok_or_else(|| MeshError::UnknownLayer(l.name.clone()))?);
        let z0 = *levels.last().unwrap();
        let lo = levels.len() as u32 - 1;
        for k in 1..=l.subdivisions {
            levels.push(z0 + l.thickness * k as f64 / l.subdivisions as f64);
        }
        layer_levels.push([lo, levels.len() as u32 - 1]);
    }
    let n2 = mesh.nodes.len();
    let nl = levels.len();
    let mut need = vec![false; n2 * nl];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for (li, &[lo, hi]) in layer_levels.iter().enumerate() {
            if mesh.coverage[t] & bits[li] != 0 {
                for lev in lo..=hi {
                    for &v in tri {
                        need[lev as usize * n2 + v as usize] = true;
                    }
                }
            }
        }
    }
    let mut id = vec![u32::MAX; n2 * nl];
    let mut nodes = Vec::new();
    let mut node_2d = Vec::new();
    let mut node_level = Vec::new();
    for lev in 0..nl {
        for v in 0..n2 {
            if need[lev * n2 + v] {
                id[lev * n2 + v] = nodes.len() as u32;
                let p = mesh.nodes[v];
                nodes.push([p[0], p[1], levels[lev]]);
                node_2d.push(v as u32);
                node_level.push(lev as u32);
            }
        }
    }
    let mut elements = Vec::new();
    let mut element_layer = Vec::new();
    let mut element_tri = Vec::new();
    for (li, &[lo, hi]) in layer_levels.iter().enumerate() {
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if mesh.coverage[t] & bits[li] == 0 {
                continue;
            }
            for lev in lo..hi {
                let b = lev as usize * n2;
                let u = (lev as usize + 1) * n2;
                let at = |base: usize, k: usize| id[base + tri[k] as usize];
                elements.push([at(b, 0), at(b, 1), at(b, 2), at(u, 0), at(u, 1), at(u, 2)]);
                element_layer.push(li as u32);
                element_tri.push(t as u32);
            }
        }
    }
    Ok(LayeredMesh {
        nodes,
        elements,
        element_layer,
        element_tri,
        layer_names: layers.iter().map(|l| l.name.clone()).collect(),
        layer_materials: layers.iter().map(|l| l.material.clone()).collect(),
        layer_thickness: layers.iter().map(|l| l.thickness).collect(),
        node_2d,
        node_level,
        levels,
        layer_levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LayerSummary {
    pub name: String,
    pub elements: usize,
    pub footprint_area_mm2: f64,
    pub volume_mm3: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeshReport {
    pub elements: usize,
    pub nodes: usize,
    pub min_volume_mm3: f64,
    pub max_volume_mm3: f64,
    pub min_angle_deg: f64,
    pub layers: Vec<LayerSummary>,
}

pub fn mesh_report(mesh: &LayeredMesh) -> MeshReport {
    let vols: Vec<f64> = (0..mesh.elements.len()).map(|e| mesh.element_volume(e)).collect();
    let min_angle = mesh
        .elements
        .iter()
        .map(|el| {
            let p = |i: usize| {
                let q = mesh.nodes[el[i] as usize];
                [q[0], q[1]]
            };
            triangle_angles([p(0), p(1), p(2)]).into_iter().fold(180.0, f64::min)
        })
        .fold(180.0, f64::min);
    let layers = mesh
        .layer_names
        .iter()
        .enumerate()
        .map(|(li, name)| {
            let ids: Vec<usize> = (0..mesh.elements.len()).filter(|&e| mesh.element_layer[e] == li as u32).collect();
            let volume: f64 = ids.iter().map(|&e| vols[e]).sum();
            LayerSummary {
                name: name.clone(),
                elements: ids.len(),
                footprint_area_mm2: volume / mesh.layer_thickness[li],
                volume_mm3: volume,
            }
        })
        .collect();
    MeshReport {
        elements: mesh.elements.len(),
        nodes: mesh.nodes.len(),
        min_volume_mm3: vols.iter().copied().fold(f64::INFINITY, f64::min),
        max_volume_mm3: vols.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_angle_deg: min_angle,
        layers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_triangle(coverage: u32) -> TriMesh2D {
        TriMesh2D {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            coverage: vec![coverage],
            layer_names: vec!["substrate".into(), "kirigami".into()],
            boundary_edges: vec![],
            warnings: vec![],
        }
    }

    fn stack() -> Vec<LayerSpec> {
        vec![LayerSpec::new("substrate", 0.1, "s"), LayerSpec::new("kirigami", 1.8, "k")]
    }

    #[test]
    fn two_layers_share_interface_nodes() {
        let m = extrude(&one_triangle(3), &stack()).unwrap();
        assert_eq!((m.elements.len(), m.nodes.len()), (2, 9));
        assert_eq!(m.elements[0][3..], m.elements[1][..3]);
        let r = mesh_report(&m);
        assert_eq!((r.elements, r.nodes), (2, 9));
        assert!(r.min_volume_mm3 > 0.0);
    }

    #[test]
    fn substrate_only_triangle() {
        let m = extrude(&one_triangle(1), &stack()).unwrap();
        assert_eq!((m.elements.len(), m.nodes.len()), (1, 6));
    }

    #[test]
    fn subdivisions_and_unknown_layer() {
        let mut s = stack();
        s[1].subdivisions = 3;
        let m = extrude(&one_triangle(3), &s).unwrap();
        assert_eq!(m.elements.len(), 4);
        assert_eq!(m.nodes.len(), 15);
        assert!((m.total_height() - 1.9).abs() < 1e-12);
        s[0].name = "nope".into();
        assert_eq!(extrude(&one_triangle(3), &s), Err(MeshError::UnknownLayer("nope".into())));
    }
}
