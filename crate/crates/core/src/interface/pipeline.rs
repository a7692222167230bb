use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{PipelineError, RunConfig, RunManifest};
use crate::analysis::{fit_midline_curvature, measure_height, sweep_gamma, timoshenko_curvature, Height, Sweep};
use crate::fem::{convergence_csv, solve_static, FemError, MorphResult};
use crate::meshing::{
    extrude, format_trimesh, mesh_report, stl_layer_surface, to_vtk, triangulate, AuditLimits, AuditReport, LayerSpec,
    LayeredMesh, MeshReport, TriMesh2D,
};
use crate::pattern::{format_polygons, removed_fraction, to_svg, Axis, PatternSpec, PlanarLayout, KIRIGAMI, SUBSTRATE};

/// Env var naming the default output root.
pub const OUT_ENV: &str = "KIRIMORPH_OUT";

/// Run directory: explicit override, else the config's directory (relative
/// to the output root), else `<root>/<config stem>`.
pub fn output_dir(cfg: Option<&RunConfig>, config_path: Option<&Path>, explicit: Option<&Path>) -> PathBuf {
    if let Some(p) = explicit {
        return p.to_path_buf();
    }
    let root = std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("kirimorph_out"));
    if let Some(d) = cfg.and_then(|c| c.output.directory.as_ref()) {
        return if d.is_absolute() { d.clone() } else { root.join(d) };
    }
    let stem = config_path.and_then(|p| p.file_stem()).map(|s| s.to_string_lossy().into_owned());
    root.join(stem.unwrap_or_else(|| "run".into()))
}

/// Normalizing radius for H/2R: the pattern's own, else half the larger
/// footprint extent.
pub fn radius_of(spec: &PatternSpec, layout: &PlanarLayout) -> f64 {
    spec.radius().unwrap_or_else(|| {
        let b = crate::pattern::geometry::bbox_of(layout.footprint.iter().flat_map(|p| p.outer.iter().copied()));
        0.5 * (b[2] - b[0]).max(b[3] - b[1])
    })
}

#[derive(Debug)]
pub struct PatternOutcome {
    pub layout: PlanarLayout,
    /// Removed fraction, when the layout has substrate and kirigami layers.
    pub alpha: Option<f64>,
    pub files: Vec<PathBuf>,
}

/// Builds a layout and writes `pattern.svg` and `pattern.poly`; with
/// `stl = Some((h, thickness))` also the printable kirigami layer as
/// `kirigami.stl`.
pub fn run_pattern(spec: &PatternSpec, dir: &Path, stl: Option<(f64, f64)>) -> Result<PatternOutcome, PipelineError> {
    let layout = spec.build()?;
    let alpha = removed_fraction(&layout).ok();
    let mut files = vec![dir.join("pattern.svg"), dir.join("pattern.poly")];
    super::write_atomic(&files[0], to_svg(&layout).as_bytes())?;
    super::write_atomic(&files[1], format_polygons(&layout).as_bytes())?;
    if let Some((h, thickness)) = stl {
        let tri = triangulate(&layout, h, 20.0)?;
        let mesh = extrude(&tri, &[LayerSpec::new(KIRIGAMI, thickness, "kirigami")])?;
        let path = dir.join("kirigami.stl");
        super::write_atomic(&path, &stl_layer_surface(&mesh, 0, &mesh.nodes))?;
        files.push(path);
    }
    Ok(PatternOutcome { layout, alpha, files })
}

#[derive(Debug)]
pub struct MeshOutcome {
    pub layout: PlanarLayout,
    pub tri: TriMesh2D,
    pub mesh: LayeredMesh,
    pub report: MeshReport,
    pub audit: AuditReport,
    /// Layered-mesh structural problems.
    pub structure: Vec<String>,
}

impl MeshOutcome {
    pub fn ok(&self) -> bool {
        self.audit.ok() && self.structure.is_empty()
    }
}

fn build_mesh(cfg: &RunConfig) -> Result<MeshOutcome, PipelineError> {
    let layout = cfg.pattern.build()?;
    let tri = triangulate(&layout, cfg.mesh.h_target_mm, cfg.mesh.min_angle_deg)?;
    let limits = AuditLimits { min_angle_deg: cfg.mesh.min_angle_deg, ..AuditLimits::default() };
    let audit = tri.audit(limits, Some(&layout));
    let mesh = extrude(&tri, &cfg.mesh.layers)?;
    let report = mesh_report(&mesh);
    let structure = mesh.audit();
    Ok(MeshOutcome { layout, tri, mesh, report, audit, structure })
}

#[derive(Serialize)]
struct MeshSummary<'a> {
    report: &'a MeshReport,
    min_angle_2d_deg: f64,
    corner_exempt: usize,
    violations: Vec<String>,
}

/// Meshes the configured pattern and writes `mesh.tri`, `mesh.vtk` and
/// `mesh_report.json`.
pub fn run_mesh(cfg: &RunConfig, dir: &Path) -> Result<MeshOutcome, PipelineError> {
    let out = build_mesh(cfg)?;
    super::write_atomic(&dir.join("mesh.tri"), format_trimesh(&out.tri).as_bytes())?;
    super::write_atomic(&dir.join("mesh.vtk"), to_vtk(&out.mesh, None).as_bytes())?;
    let summary = MeshSummary {
        report: &out.report,
        min_angle_2d_deg: out.audit.min_angle_deg,
        corner_exempt: out.audit.corner_exempt,
        violations: out.audit.violations.iter().chain(&out.structure).cloned().collect(),
    };
    let json = serde_json::to_string_pretty(&summary).expect("report serializes");
    super::write_atomic(&dir.join("mesh_report.json"), json.as_bytes())?;
    Ok(out)
}

#[derive(Debug)]
pub struct SimulateOutcome {
    pub mesh: LayeredMesh,
    pub result: MorphResult,
    pub height: Height,
    pub alpha: Option<f64>,
    /// Strip patterns only: fitted midline curvature and the bimorph oracle, 1/mm.
    pub curvature: Option<(f64, f64)>,
    /// Reason the continuation stopped early.
    pub stall: Option<String>,
    pub manifest: RunManifest,
}

impl SimulateOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.stall.is_some() {
            super::exit::STALL
        } else {
            super::exit::OK
        }
    }
}

const METRICS_HEADER: &str =
    "pattern,gamma,alpha,H_mm,H_over_2R,lambda,completed,strain_energy_mJ,max_stress_MPa,curvature_per_mm,timoshenko_per_mm\n";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn pattern_kind(spec: &PatternSpec) -> &'static str {
    match spec {
        PatternSpec::Lotus { .. } => "lotus",
        PatternSpec::PyramidCross { .. } => "pyramid_cross",
        PatternSpec::Strip { .. } => "strip",
        PatternSpec::AnnulusRim { .. } => "annulus_rim",
        PatternSpec::Spoon { .. } => "spoon",
        PatternSpec::Custom { .. } => "custom",
    }
}

/// Bimorph oracle for a two-layer strip at load factor `lambda`. Negative when
/// the bottom layer contracts relative to the top, matching the fitted sign.
fn strip_oracle(cfg: &RunConfig, lambda: f64) -> Option<f64> {
    let mats = cfg.layer_materials();
    let (l0, l1) = (cfg.mesh.layers.first()?, cfg.mesh.layers.get(1)?);
    if cfg.mesh.layers.len() != 2 || l0.name != SUBSTRATE || l1.name != KIRIGAMI {
        return None;
    }
    let mismatch = (mats[0].alpha - mats[1].alpha) * cfg.load.delta_t * lambda;
    Some(timoshenko_curvature(mats[0].young, l0.thickness, mats[1].young, l1.thickness, mismatch))
}

/// Full pipeline for one config. A continuation stall still writes every
/// output for the partial state and is reported through `stall`.
pub fn run_simulate(cfg: &RunConfig, dir: &Path) -> Result<SimulateOutcome, PipelineError> {
    let mut manifest = RunManifest::new("simulate", cfg);
    let built = manifest.time("mesh", || build_mesh(cfg))?;
    let MeshOutcome { layout, mesh, .. } = built;
    let materials = cfg.layer_materials();
    let load = cfg.thermal_load();
    let solved = manifest.time("solve", || solve_static(&mesh, &materials, &load, cfg.load.eigenstrain_mode, &cfg.solver));
    let (result, stall) = match solved {
        Ok(r) => (r, None),
        Err(FemError::Stall { result, cause }) => (*result, Some(cause)),
        Err(e) => return Err(e.into()),
    };
    let radius = radius_of(&cfg.pattern, &layout);
    let height = measure_height(&result, radius);
    let alpha = removed_fraction(&layout).ok();
    let curvature = match cfg.pattern {
        PatternSpec::Strip { .. } => match (fit_midline_curvature(&mesh, &result, Axis::X), strip_oracle(cfg, result.lambda)) {
            (Ok(k), Some(oracle)) => Some((k, oracle)),
            _ => None,
        },
        _ => None,
    };

    let t = std::time::Instant::now();
    let metrics = format!(
        "{METRICS_HEADER}{},{},{},{},{},{},{},{},{},{},{}\n",
        pattern_kind(&cfg.pattern),
        opt(cfg.pattern.gamma()),
        opt(alpha),
        height.h_mm,
        height.h_over_2r,
        result.lambda,
        result.completed,
        result.strain_energy,
        result.max_stress,
        opt(curvature.map(|c| c.0)),
        opt(curvature.map(|c| c.1)),
    );
    manifest.emit(dir, "metrics.csv", metrics.as_bytes())?;
    if cfg.output.convergence_csv {
        manifest.emit(dir, "convergence.csv", convergence_csv(&result).as_bytes())?;
    }
    let mut deformed_mesh = mesh.clone();
    deformed_mesh.nodes = result.reference.clone();
    if cfg.output.vtk {
        manifest.emit(dir, "deformed.vtk", to_vtk(&deformed_mesh, Some(&result.displacement)).as_bytes())?;
    }
    if cfg.output.snapshots {
        for (k, g) in result.grid_states.iter().enumerate() {
            manifest.emit(dir, &format!("step_{k:03}.vtk"), to_vtk(&deformed_mesh, Some(&g.displacement)).as_bytes())?;
        }
    }
    if cfg.output.stl {
        if let Some(li) = mesh.layer_id(KIRIGAMI) {
            manifest.emit(dir, "kirigami_deformed.stl", &stl_layer_surface(&mesh, li, &result.deformed))?;
        }
    }
    manifest.timings.push(super::StageTiming { stage: "export".into(), seconds: t.elapsed().as_secs_f64() });
    manifest.write(dir)?;
    Ok(SimulateOutcome { mesh, result, height, alpha, curvature, stall, manifest })
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub sweep: Sweep,
    pub manifest: RunManifest,
}

/// γ sweep over the config's pattern; `gammas` overrides the config's list.
/// Writes `sweep.csv`, `sweep_plot.dat` and the manifest.
pub fn run_sweep(cfg: &RunConfig, gammas: Option<&[f64]>, dir: &Path) -> Result<SweepOutcome, PipelineError> {
    let gammas: Vec<f64> = match (gammas, &cfg.sweep) {
        (Some(g), _) => g.to_vec(),
        (None, Some(s)) => s.gammas.clone(),
        (None, None) => {
            return Err(PipelineError::Config { path: "sweep.gammas".into(), msg: "no gamma values given".into() })
        }
    };
    let mut manifest = RunManifest::new("sweep", cfg);
    let spec = cfg.case_spec();
    let load = cfg.thermal_load();
    let sweep = manifest.time("sweep", || sweep_gamma(&spec, &gammas, &load, &cfg.solver))?;
    manifest.emit(dir, "sweep.csv", sweep.to_csv().as_bytes())?;
    manifest.emit(dir, "sweep_plot.dat", sweep.to_plot().as_bytes())?;
    manifest.write(dir)?;
    Ok(SweepOutcome { sweep, manifest })
}
