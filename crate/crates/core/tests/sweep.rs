use kirimorph::analysis::{sweep_gamma, AnalysisError, CaseSpec};
use kirimorph::fem::SolveConfig;
use kirimorph::materials::{preset, EigenstrainMode, MaterialModel, ThermalLoad};
use kirimorph::meshing::LayerSpec;
use kirimorph::pattern::{PatternSpec, KIRIGAMI, SUBSTRATE, SUBSTRATE_TOP};

fn film() -> MaterialModel {
    MaterialModel::new("film", 404.2082, 0.49, -1e-3).unwrap()
}

fn lotus_case() -> CaseSpec {
    CaseSpec {
        pattern: PatternSpec::Lotus { radius: 10.0, gamma: 0.5, n_petals: 8, petal_fill: 0.5, chord_tol: 0.05 },
        h_target: 2.5,
        min_angle_deg: 20.0,
        layers: vec![LayerSpec::new(SUBSTRATE, 0.1, "film"), LayerSpec::new(KIRIGAMI, 0.6, "abs")],
        materials: vec![film(), preset("abs_kirigami").unwrap()],
        mode: EigenstrainMode::InPlane,
    }
}

fn cfg() -> SolveConfig {
    SolveConfig { n_load_steps: 2, ..Default::default() }
}

#[test]
fn duplicate_gammas_give_identical_rows() {
    let s = sweep_gamma(&lotus_case(), &[0.3, 0.7, 0.3], &ThermalLoad::new(10.0, 2), &cfg()).unwrap();
    assert_eq!(s.common_lambda, 1.0);
    let (a, b) = (&s.rows[0], &s.rows[2]);
    assert_eq!((a.h_mm, a.alpha, a.final_lambda), (b.h_mm, b.alpha, b.final_lambda));
    assert!(s.rows.iter().all(|r| r.error.is_none() && r.h_mm > 0.0));
    // more kirigami, flatter bowl
    assert!(s.is_monotone_decreasing());
}

#[test]
fn failing_case_is_recorded_without_stopping_the_sweep() {
    let spec = CaseSpec {
        pattern: PatternSpec::Spoon {
            radius: 10.0,
            gamma: 0.5,
            n_petals: 8,
            petal_fill: 0.5,
            handle_length: 10.0,
            handle_width: 2.0,
            handle_inset: 2.0,
            chord_tol: 0.05,
        },
        layers: vec![
            LayerSpec::new(SUBSTRATE, 0.1, "film"),
            LayerSpec::new(KIRIGAMI, 0.6, "abs"),
            LayerSpec::new(SUBSTRATE_TOP, 0.1, "film"),
        ],
        materials: vec![film(), preset("abs_kirigami").unwrap(), film()],
        ..lotus_case()
    };
    // at gamma 0.9 the handle root falls inside the central disk
    let s = sweep_gamma(&spec, &[0.5, 0.9], &ThermalLoad::new(10.0, 2), &SolveConfig { boundary: kirimorph::fem::BoundaryMode::Free, ..cfg() }).unwrap();
    assert!(s.rows[0].error.is_none(), "{:?}", s.rows[0].error);
    assert!(s.rows[1].error.as_deref().unwrap().contains("handle_inset_mm"));
    assert!(s.rows[1].h_mm.is_nan());
    let csv = s.to_csv();
    assert!(csv.lines().nth(2).unwrap().starts_with("0.9,,,,,"));
}

#[test]
fn invalid_requests_are_rejected_up_front() {
    let load = ThermalLoad::new(10.0, 2);
    assert!(matches!(sweep_gamma(&lotus_case(), &[], &load, &cfg()), Err(AnalysisError::Input(_))));
    assert!(matches!(sweep_gamma(&lotus_case(), &[0.0], &load, &cfg()), Err(AnalysisError::Input(_))));
    let strip = CaseSpec { pattern: PatternSpec::Strip { length: 20.0, width: 5.0, margin: 0.0 }, ..lotus_case() };
    assert!(matches!(sweep_gamma(&strip, &[0.5], &load, &cfg()), Err(AnalysisError::Input(_))));
}
