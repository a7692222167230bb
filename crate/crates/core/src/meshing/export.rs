use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use super::extrude::LayeredMesh;
use super::MeshError;

/// Legacy ASCII VTK unstructured grid with per-cell layer ids and optional
/// nodal displacements.
pub fn to_vtk(mesh: &LayeredMesh, displacement: Option<&[[f64; 3]]>) -> String {
    let mut s = String::from("# vtk DataFile Version 3.0\nkirimorph layered mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{:.9} {:.9} {:.9}", p[0], p[1], p[2]);
    }
    let ne = mesh.elements.len();
    let _ = writeln!(s, "CELLS {} {}", ne, ne * 7);
    for e in &mesh.elements {
        // base face must point away from the top face
        let _ = writeln!(s, "6 {} {} {} {} {} {}", e[0], e[2], e[1], e[3], e[5], e[4]);
    }
    let _ = writeln!(s, "CELL_TYPES {ne}");
    for _ in 0..ne {
        s.push_str("13\n");
    }
    let _ = writeln!(s, "CELL_DATA {ne}\nSCALARS layer int 1\nLOOKUP_TABLE default");
    for l in &mesh.element_layer {
        let _ = writeln!(s, "{l}");
    }
    if let Some(u) = displacement {
        let _ = writeln!(s, "POINT_DATA {}\nVECTORS displacement double", mesh.nodes.len());
        for d in u {
            let _ = writeln!(s, "{:.9e} {:.9e} {:.9e}", d[0], d[1], d[2]);
        }
    }
    s
}

pub fn write_vtk(path: &Path, mesh: &LayeredMesh, displacement: Option<&[[f64; 3]]>) -> Result<(), MeshError> {
    std::fs::write(path, to_vtk(mesh, displacement)).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))
}

/// Outward-oriented boundary triangles of one layer's solid, at `positions`.
pub fn layer_surface(mesh: &LayeredMesh, layer: u32, positions: &[[f64; 3]]) -> Vec<[[f64; 3]; 3]> {
    // faces listed with outward orientation for a positive wedge
    const FACES: [&[usize]; 5] = [&[0, 2, 1], &[3, 4, 5], &[0, 1, 4, 3], &[1, 2, 5, 4], &[2, 0, 3, 5]];
    let mut seen: HashMap<Vec<u32>, (usize, Vec<u32>)> = HashMap::new();
    let mut order = Vec::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        if mesh.element_layer[e] != layer {
            continue;
        }
        for f in FACES {
            let ids: Vec<u32> = f.iter().map(|&k| el[k]).collect();
            let mut k = ids.clone();
            k.sort_unstable();
            let entry = seen.entry(k.clone()).or_insert_with(|| {
                order.push(k);
                (0, ids)
            });
            entry.0 += 1;
        }
    }
    let mut out = Vec::new();
    for k in order {
        let (count, ids) = &seen[&k];
        if *count != 1 {
            continue;
        }
        let p = |i: usize| positions[ids[i] as usize];
        out.push([p(0), p(1), p(2)]);
        if ids.len() == 4 {
            out.push([p(0), p(2), p(3)]);
        }
    }
    out
}

/// Binary little-endian STL of one layer's outer surface.
pub fn stl_layer_surface(mesh: &LayeredMesh, layer: u32, positions: &[[f64; 3]]) -> Vec<u8> {
    let tris = layer_surface(mesh, layer, positions);
    let mut buf = Vec::with_capacity(84 + 50 * tris.len());
    let mut header = [0u8; 80];
    let title = format!("kirimorph layer {}", mesh.layer_names.get(layer as usize).map_or("?", |s| s));
    let n = title.len().min(80);
    header[..n].copy_from_slice(&title.as_bytes()[..n]);
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(tris.len() as u32).to_le_bytes());
    for t in tris {
        let u = [t[1][0] - t[0][0], t[1][1] - t[0][1], t[1][2] - t[0][2]];
        let v = [t[2][0] - t[0][0], t[2][1] - t[0][1], t[2][2] - t[0][2]];
        let mut nrm = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
        let l = (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]).sqrt();
        if l > 0.0 {
            nrm.iter_mut().for_each(|c| *c /= l);
        }
        for c in nrm.iter().chain(t.iter().flatten()) {
            buf.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        buf.extend_from_slice(&0u16.to_le_bytes());
    }
    buf
}

pub fn write_stl(path: &Path, mesh: &LayeredMesh, layer: u32, positions: &[[f64; 3]]) -> Result<(), MeshError> {
    std::fs::write(path, stl_layer_surface(mesh, layer, positions))
        .map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))
}

/// Closed-manifold check on a binary STL: vertices are welded by exact
/// coordinates and every directed edge must meet its reverse exactly once.
/// Returns the number of offending edges, so 0 means watertight and
/// consistently oriented.
pub fn stl_open_edges(bytes: &[u8]) -> Result<usize, MeshError> {
    if bytes.len() < 84 {
        return Err(MeshError::Io("stl shorter than its header".into()));
    }
    let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() != 84 + 50 * n {
        return Err(MeshError::Io(format!("stl length {} does not match {n} facets", bytes.len())));
    }
    let mut ids: HashMap<[u32; 3], usize> = HashMap::new();
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for f in 0..n {
        let rec = &bytes[84 + 50 * f..];
        let mut v = [0usize; 3];
        for (k, slot) in v.iter_mut().enumerate() {
            let mut key = [0u32; 3];
            for (c, kc) in key.iter_mut().enumerate() {
                let o = 12 + 12 * k + 4 * c;
                *kc = u32::from_le_bytes(rec[o..o + 4].try_into().unwrap());
            }
            let next = ids.len();
            *slot = *ids.entry(key).or_insert(next);
        }
        for k in 0..3 {
            *edges.entry((v[k], v[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    Ok(edges
        .iter()
        .filter(|(&(a, b), &c)| c != 1 || edges.get(&(b, a)) != Some(&1))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshing::{extrude, LayerSpec, TriMesh2D};

    fn square() -> LayeredMesh {
        let tri = TriMesh2D {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            coverage: vec![0b11, 0b11],
            layer_names: vec!["substrate".into(), "kirigami".into()],
            boundary_edges: vec![[0, 1], [1, 2], [2, 3], [3, 0]],
            warnings: vec![],
        };
        let layers = [LayerSpec::new("substrate", 0.1, "s"), LayerSpec::new("kirigami", 0.5, "k")];
        extrude(&tri, &layers).unwrap()
    }

    #[test]
    fn layer_stl_is_closed_and_outward() {
        let mesh = square();
        let bytes = stl_layer_surface(&mesh, 1, &mesh.nodes);
        // 2 caps of 2 triangles, 4 sides of 2 triangles
        assert_eq!(u32::from_le_bytes(bytes[80..84].try_into().unwrap()), 12);
        assert_eq!(stl_open_edges(&bytes).unwrap(), 0);
        let tris = layer_surface(&mesh, 1, &mesh.nodes);
        // divergence theorem: signed volume equals the layer volume
        let vol: f64 = tris
            .iter()
            .map(|t| {
                let [a, b, c] = *t;
                (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
                    + a[2] * (b[0] * c[1] - b[1] * c[0]))
                    / 6.0
            })
            .sum();
        assert!((vol - 0.5).abs() < 1e-12, "{vol}");
    }

    #[test]
    fn dropping_a_facet_opens_the_surface() {
        let mesh = square();
        let mut bytes = stl_layer_surface(&mesh, 0, &mesh.nodes);
        let n = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) - 1;
        bytes[80..84].copy_from_slice(&n.to_le_bytes());
        bytes.truncate(bytes.len() - 50);
        assert_eq!(stl_open_edges(&bytes).unwrap(), 3);
        assert!(stl_open_edges(&bytes[..100]).is_err());
    }

    #[test]
    fn vtk_counts_match() {
        let mesh = square();
        let s = to_vtk(&mesh, Some(&vec![[0.0; 3]; mesh.nodes.len()]));
        assert!(s.contains(&format!("POINTS {} double", mesh.nodes.len())));
        assert!(s.contains(&format!("CELLS {} {}", mesh.elements.len(), 7 * mesh.elements.len())));
        let types = s.split("CELL_TYPES").nth(1).unwrap().lines().skip(1).take_while(|l| *l == "13").count();
        assert_eq!(types, mesh.elements.len());
    }
}
