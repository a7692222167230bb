use kirimorph::meshing::{extrude, format_trimesh, mesh_report, parse_trimesh, triangulate, AuditLimits, LayerSpec};
use kirimorph::pattern::{
    format_polygons, parse_polygons, removed_fraction, rotate_layout, PatternSpec, KIRIGAMI, SUBSTRATE,
};
use proptest::prelude::*;

fn lotus(radius: f64, gamma: f64) -> PatternSpec {
    PatternSpec::Lotus { radius, gamma, n_petals: 8, petal_fill: 0.5, chord_tol: 0.01 }
}

fn stack() -> Vec<LayerSpec> {
    vec![LayerSpec::new(SUBSTRATE, 0.1, "s"), LayerSpec::new(KIRIGAMI, 1.8, "k")]
}

#[test]
fn sweep_gammas_remove_the_tabulated_fractions() {
    for (g, a) in [(0.2, 0.48), (0.4, 0.42), (0.6, 0.32), (0.8, 0.18)] {
        let alpha = removed_fraction(&lotus(30.0, g).build().unwrap()).unwrap();
        assert!((alpha - a).abs() < 1e-3, "{g}: {alpha}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lotus_removed_fraction_follows_the_closed_form(gamma in 0.05..=1.0f64, radius in 5.0..60.0f64) {
        let alpha = removed_fraction(&lotus(radius, gamma).build().unwrap()).unwrap();
        prop_assert!((alpha - 0.5 * (1.0 - gamma * gamma)).abs() < 1e-3);
    }

    #[test]
    fn polygon_text_round_trips(gamma in 0.1..0.95f64) {
        let layout = lotus(20.0, gamma).build().unwrap();
        let back = parse_polygons(&format_polygons(&layout)).unwrap();
        prop_assert_eq!(back.layers.len(), layout.layers.len());
        for (a, b) in layout.layers.iter().zip(&back.layers) {
            prop_assert_eq!(&a.name, &b.name);
            prop_assert!((a.area() - b.area()).abs() < 1e-9 * a.area());
        }
    }

    #[test]
    fn rotation_preserves_the_removed_fraction(gamma in 0.1..0.95f64, angle in -3.2..3.2f64) {
        let layout = lotus(20.0, gamma).build().unwrap();
        let a0 = removed_fraction(&layout).unwrap();
        let a1 = removed_fraction(&rotate_layout(&layout, angle)).unwrap();
        prop_assert!((a0 - a1).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn lotus_meshes_satisfy_the_mesh_invariants(gamma in 0.15..0.9f64, h in 1.5..3.5f64) {
        let layout = lotus(20.0, gamma).build().unwrap();
        let tri = triangulate(&layout, h, 20.0).unwrap();
        let audit = tri.audit(AuditLimits::default(), Some(&layout));
        prop_assert!(audit.ok(), "{:?}", audit.violations);
        prop_assert!(audit.min_angle_deg >= 20.0 || audit.corner_exempt > 0);

        let mesh = extrude(&tri, &stack()).unwrap();
        prop_assert!(mesh.audit().is_empty(), "{:?}", mesh.audit());
        // layer volumes match the planar areas times thickness
        let kir = layout.layer(KIRIGAMI).unwrap().area();
        let sub = layout.layer(SUBSTRATE).unwrap().area();
        let li = |n: &str| mesh.layer_id(n).unwrap();
        prop_assert!((mesh.layer_volume(li(KIRIGAMI)) - 1.8 * kir).abs() < 1e-2 * 1.8 * kir);
        prop_assert!((mesh.layer_volume(li(SUBSTRATE)) - 0.1 * sub).abs() < 1e-2 * 0.1 * sub);
        prop_assert!(mesh_report(&mesh).min_volume_mm3 > 0.0);

        let back = parse_trimesh(&format_trimesh(&tri)).unwrap();
        prop_assert_eq!(back.triangles, tri.triangles);
        prop_assert_eq!(back.coverage, tri.coverage);
    }
}
