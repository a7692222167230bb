use serde::{Deserialize, Serialize};

use super::geometry::{Point, Polygon};
use super::layout::{interiors_overlap, region_contains_polygon, PlanarLayout, KIRIGAMI, SUBSTRATE};
use super::PatternError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Mirror line parallel to `axis`. `at` is its offset (y for an x-parallel
/// line, x for a y-parallel one); `None` puts it through the area centroid
/// of the selected polygons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorLine {
    pub axis: Axis,
    pub at: Option<f64>,
}

impl MirrorLine {
    pub fn through_selection(axis: Axis) -> Self {
        Self { axis, at: None }
    }

    pub fn global(axis: Axis) -> Self {
        Self { axis, at: Some(0.0) }
    }
}

fn selected<'a>(layout: &'a PlanarLayout, layer: &str, selection: &[usize]) -> Result<(usize, Vec<&'a Polygon>), PatternError> {
    let li = layout
        .layer_index(layer)
        .ok_or_else(|| PatternError::UnknownLayer(layer.to_string()))?;
    let region = &layout.layers[li].region;
    if selection.is_empty() {
        return Err(PatternError::ParameterDomain { field: "selection".into(), reason: "empty selection".into() });
    }
    let mut out = Vec::new();
    for &i in selection {
        out.push(region.get(i).ok_or(PatternError::NoSuchPolygon { layer: layer.to_string(), index: i })?);
    }
    Ok((li, out))
}

fn selection_centroid(polys: &[&Polygon]) -> Point {
    let (mut cx, mut cy, mut a) = (0.0, 0.0, 0.0);
    for p in polys {
        let c = p.centroid();
        let w = p.area();
        cx += c[0] * w;
        cy += c[1] * w;
        a += w;
    }
    [cx / a, cy / a]
}

/// Replace the selected polygons of a layer and re-check the layer against
/// its unselected polygons and the footprint.
fn commit(layout: &PlanarLayout, li: usize, selection: &[usize], moved: Vec<Polygon>) -> Result<PlanarLayout, PatternError> {
    let mut out = layout.clone();
    let name = out.layers[li].name.clone();
    for (&i, p) in selection.iter().zip(moved) {
        out.layers[li].region[i] = p;
    }
    let region = &out.layers[li].region;
    for &i in selection {
        if !region_contains_polygon(&out.footprint, &region[i]) {
            return Err(PatternError::Conflict(format!("layer `{name}` polygon {i} leaves the footprint")));
        }
        for (j, other) in region.iter().enumerate() {
            if j != i && !(selection.contains(&j) && j < i) && interiors_overlap(&region[i], other) {
                return Err(PatternError::Conflict(format!("layer `{name}` polygon {i} overlaps polygon {j}")));
            }
        }
    }
    Ok(out)
}

/// Mirror selected polygons of one layer; ring orientation is restored afterwards.
pub fn reflect_layer(
    layout: &PlanarLayout,
    layer: &str,
    line: MirrorLine,
    selection: &[usize],
) -> Result<PlanarLayout, PatternError> {
    let (li, polys) = selected(layout, layer, selection)?;
    let at = line.at.unwrap_or_else(|| {
        let c = selection_centroid(&polys);
        match line.axis {
            Axis::X => c[1],
            Axis::Y => c[0],
        }
    });
    let moved = polys
        .iter()
        .map(|p| {
            let mut m = p.map_points(|q| match line.axis {
                Axis::X => [q[0], 2.0 * at - q[1]],
                Axis::Y => [2.0 * at - q[0], q[1]],
            });
            m.normalize_orientation();
            m
        })
        .collect();
    commit(layout, li, selection, moved)
}

/// Scale selected polygons by (sx, sy) about `anchor`.
pub fn scale_layer_aspect(
    layout: &PlanarLayout,
    layer: &str,
    selection: &[usize],
    sx: f64,
    sy: f64,
    anchor: Point,
) -> Result<PlanarLayout, PatternError> {
    if !(sx > 0.0 && sy > 0.0) {
        return Err(PatternError::ParameterDomain { field: "sx/sy".into(), reason: "scale factors must be positive".into() });
    }
    let (li, polys) = selected(layout, layer, selection)?;
    let moved = polys
        .iter()
        .map(|p| p.map_points(|q| [anchor[0] + sx * (q[0] - anchor[0]), anchor[1] + sy * (q[1] - anchor[1])]))
        .collect();
    commit(layout, li, selection, moved)
}

/// Rigid rotation of the whole layout about the origin.
pub fn rotate_layout(layout: &PlanarLayout, angle: f64) -> PlanarLayout {
    let (s, c) = angle.sin_cos();
    layout.map_points(move |p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
}

/// α = 1 − area(kirigami) / area(substrate).
pub fn removed_fraction(layout: &PlanarLayout) -> Result<f64, PatternError> {
    let sub = layout.layer(SUBSTRATE).ok_or_else(|| PatternError::UnknownLayer(SUBSTRATE.into()))?;
    let kir = layout.layer(KIRIGAMI).ok_or_else(|| PatternError::UnknownLayer(KIRIGAMI.into()))?;
    let a_s = sub.area();
    if !(a_s > 0.0) {
        return Err(PatternError::Degenerate("substrate area is zero".into()));
    }
    Ok(1.0 - kir.area() / a_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern::layout::Layer;

    fn square_layout() -> PlanarLayout {
        let fp = Polygon::new(vec![[-20.0, -20.0], [20.0, -20.0], [20.0, 20.0], [-20.0, 20.0]]);
        let sq = Polygon::new(vec![[-5.0, -5.0], [5.0, -5.0], [5.0, 5.0], [-5.0, 5.0]]);
        PlanarLayout::new(vec![fp.clone()], vec![Layer::new(SUBSTRATE, vec![fp]), Layer::new(KIRIGAMI, vec![sq])])
    }

    #[test]
    fn identity_scale() {
        let l = square_layout();
        let s = scale_layer_aspect(&l, KIRIGAMI, &[0], 1.0, 1.0, [0.0, 0.0]).unwrap();
        assert_eq!(s, l);
    }

    #[test]
    fn stretch_square_to_rectangle() {
        let l = square_layout();
        let s = scale_layer_aspect(&l, KIRIGAMI, &[0], 1.0, 2.0, [0.0, 0.0]).unwrap();
        let p = &s.layer(KIRIGAMI).unwrap().region[0];
        assert!((p.area() - 200.0).abs() < 1e-12);
        let b = p.bbox();
        assert_eq!((b[2] - b[0], b[3] - b[1]), (10.0, 20.0));
        assert!(scale_layer_aspect(&l, KIRIGAMI, &[0], 1.0, 5.0, [0.0, 0.0]).is_err());
        assert!(scale_layer_aspect(&l, KIRIGAMI, &[0], 0.0, 1.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn symmetric_polygon_is_a_fixed_point() {
        let l = square_layout();
        let r = reflect_layer(&l, KIRIGAMI, MirrorLine::global(Axis::X), &[0]).unwrap();
        let mut a = r.layer(KIRIGAMI).unwrap().region[0].outer.clone();
        let mut b = l.layer(KIRIGAMI).unwrap().region[0].outer.clone();
        a.sort_by(|p, q| p.partial_cmp(q).unwrap());
        b.sort_by(|p, q| p.partial_cmp(q).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn missing_polygon_and_layer() {
        let l = square_layout();
        assert!(matches!(reflect_layer(&l, KIRIGAMI, MirrorLine::global(Axis::X), &[3]), Err(PatternError::NoSuchPolygon { .. })));
        assert!(matches!(reflect_layer(&l, "nope", MirrorLine::global(Axis::X), &[0]), Err(PatternError::UnknownLayer(_))));
    }
}
