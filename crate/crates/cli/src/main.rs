use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use kirimorph::interface::{exit, output_dir, run_mesh, run_pattern, run_simulate, run_sweep, PipelineError, RunConfig};
use kirimorph::materials::{fit_linear_modulus, parse_temperature_log, read_stress_strain_csv, MaterialError, TempUnit};
use kirimorph::pattern::{PatternSpec, DEFAULT_CHORD_TOL};

#[derive(Parser)]
#[command(name = "kirimorph", version, about = "Kirigami / shrink-film composite morphing simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a planar pattern and write SVG and polygon files.
    Pattern(PatternArgs),
    /// Mesh a config's pattern and audit the mesh.
    Mesh {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run pattern, mesh, solve and measure for one config.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one case per gamma and tabulate H/2R.
    Sweep {
        config: PathBuf,
        /// Comma-separated; overrides the config's sweep block.
        #[arg(long, value_delimiter = ',')]
        gammas: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Energy-equivalent linear modulus from a `strain,stress_mpa` CSV.
    FitMaterial {
        curve: PathBuf,
        #[arg(long = "eps-m")]
        eps_m: f64,
        /// Machine-readable output.
        #[arg(long)]
        csv: bool,
    },
    /// Summarize an oven temperature log against an ambient temperature.
    IngestTemplog {
        log: PathBuf,
        #[arg(long)]
        ambient: f64,
        /// Defaults to the log's own unit.
        #[arg(long = "ambient-unit", value_enum, ignore_case = true)]
        ambient_unit: Option<Unit>,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Lotus,
    PyramidCross,
    Strip,
    AnnulusRim,
    Spoon,
}

#[derive(Clone, Copy, ValueEnum)]
enum Unit {
    F,
    C,
    K,
}

impl From<Unit> for TempUnit {
    fn from(u: Unit) -> Self {
        match u {
            Unit::F => TempUnit::F,
            Unit::C => TempUnit::C,
            Unit::K => TempUnit::K,
        }
    }
}

#[derive(Args)]
struct PatternArgs {
    #[arg(long, value_enum, required_unless_present = "config", conflicts_with = "config")]
    preset: Option<Preset>,
    /// Read the `[pattern]` block of a run config instead of flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "R")]
    r: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    n_petals: Option<usize>,
    #[arg(long)]
    petal_fill: Option<f64>,
    #[arg(long)]
    arm_width: Option<f64>,
    #[arg(long)]
    n_arms: Option<usize>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    margin: Option<f64>,
    #[arg(long)]
    r_inner: Option<f64>,
    #[arg(long)]
    handle_length: Option<f64>,
    #[arg(long)]
    handle_width: Option<f64>,
    #[arg(long)]
    handle_inset: Option<f64>,
    #[arg(long)]
    chord_tol: Option<f64>,
    /// Also write the printable kirigami layer as binary STL.
    #[arg(long)]
    stl: bool,
    /// Target edge length for the STL mesh, mm.
    #[arg(long, default_value_t = 1.5)]
    stl_h: f64,
    /// Kirigami layer thickness for the STL, mm.
    #[arg(long, default_value_t = 1.8)]
    stl_thickness: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad invocation that clap cannot detect, such as a field the preset needs.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn need<T>(v: Option<T>, flag: &str, preset: &str) -> Result<T> {
    v.ok_or_else(|| Usage(format!("missing required field --{flag} for preset {preset}")).into())
}

fn pattern_spec(a: &PatternArgs) -> Result<(PatternSpec, String)> {
    if let Some(path) = &a.config {
        let cfg = RunConfig::load(path)?;
        let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "config".into());
        return Ok((cfg.pattern, format!("pattern_{stem}")));
    }
    let preset = a.preset.expect("clap requires preset or config");
    let name = preset.to_possible_value().unwrap().get_name().to_string();
    let chord_tol = a.chord_tol.unwrap_or(DEFAULT_CHORD_TOL);
    let n_petals = a.n_petals.unwrap_or(8);
    let petal_fill = a.petal_fill.unwrap_or(0.5);
    let spec = match preset {
        Preset::Lotus => PatternSpec::Lotus {
            radius: need(a.r, "R", &name)?,
            gamma: need(a.gamma, "gamma", &name)?,
            n_petals,
            petal_fill,
            chord_tol,
        },
        Preset::PyramidCross => PatternSpec::PyramidCross {
            radius: need(a.r, "R", &name)?,
            arm_width: need(a.arm_width, "arm-width", &name)?,
            n_arms: a.n_arms.unwrap_or(4),
        },
        Preset::Strip => PatternSpec::Strip {
            length: need(a.length, "length", &name)?,
            width: need(a.width, "width", &name)?,
            margin: a.margin.unwrap_or(0.0),
        },
        Preset::AnnulusRim => PatternSpec::AnnulusRim {
            radius: need(a.r, "R", &name)?,
            r_inner: need(a.r_inner, "r-inner", &name)?,
            n_petals,
            petal_fill,
            chord_tol,
        },
        Preset::Spoon => PatternSpec::Spoon {
            radius: need(a.r, "R", &name)?,
            gamma: need(a.gamma, "gamma", &name)?,
            n_petals,
            petal_fill,
            handle_length: need(a.handle_length, "handle-length", &name)?,
            handle_width: need(a.handle_width, "handle-width", &name)?,
            handle_inset: need(a.handle_inset, "handle-inset", &name)?,
            chord_tol,
        },
    };
    Ok((spec, format!("pattern_{name}")))
}

fn cmd_pattern(a: &PatternArgs) -> Result<i32> {
    let (spec, run_name) = pattern_spec(a)?;
    let dir = output_dir(None, Some(Path::new(&run_name)), a.out.as_deref());
    let out = run_pattern(&spec, &dir, a.stl.then_some((a.stl_h, a.stl_thickness)))?;
    if let Some(alpha) = out.alpha {
        println!("removed fraction alpha = {alpha:.6}");
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(exit::OK)
}

fn cmd_mesh(config: &Path, out: Option<&Path>) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(Some(&cfg), Some(config), out);
    let m = run_mesh(&cfg, &dir)?;
    let r = &m.report;
    println!(
        "{} nodes, {} wedges, min 2D angle {:.2} deg ({} corner-exempt)",
        r.nodes, r.elements, m.audit.min_angle_deg, m.audit.corner_exempt
    );
    println!("wrote {}", dir.display());
    if m.ok() {
        return Ok(exit::OK);
    }
    for v in m.audit.violations.iter().chain(&m.structure) {
        eprintln!("mesh audit: {v}");
    }
    Ok(exit::MESH)
}

fn cmd_simulate(config: &Path, out: Option<&Path>) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(Some(&cfg), Some(config), out);
    let s = run_simulate(&cfg, &dir)?;
    println!(
        "lambda = {}  H = {:.4} mm  H/2R = {:.4}  elements = {}",
        s.result.lambda,
        s.height.h_mm,
        s.height.h_over_2r,
        s.mesh.elements.len()
    );
    if let Some((k, oracle)) = s.curvature {
        println!("curvature = {k:.6e} 1/mm  bimorph = {oracle:.6e} 1/mm  ratio = {:.4}", k / oracle);
    }
    println!("wrote {}", dir.display());
    if let Some(cause) = &s.stall {
        eprintln!("continuation stopped at lambda = {}: {cause}", s.result.lambda);
    }
    Ok(s.exit_code())
}

fn cmd_sweep(config: &Path, gammas: Option<&[f64]>, out: Option<&Path>) -> Result<i32> {
    let cfg = RunConfig::load(config)?;
    let dir = output_dir(Some(&cfg), Some(config), out);
    let s = run_sweep(&cfg, gammas, &dir)?;
    print!("{}", s.sweep.to_csv());
    for r in s.sweep.rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("gamma {}: {}", r.gamma, r.error.as_deref().unwrap_or_default());
    }
    println!("wrote {}", dir.display());
    Ok(exit::OK)
}

fn cmd_fit(curve: &Path, eps_m: f64, csv: bool) -> Result<i32> {
    let c = read_stress_strain_csv(curve).map_err(PipelineError::from)?;
    let e = fit_linear_modulus(&c, eps_m).map_err(PipelineError::from)?;
    if csv {
        println!("eps_m,E_MPa\n{eps_m},{e}");
    } else {
        println!("E = {e} MPa (energy-equivalent up to strain {eps_m})");
    }
    Ok(exit::OK)
}

fn cmd_templog(log: &Path, ambient: f64, unit: Option<Unit>, csv: bool) -> Result<i32> {
    let text = std::fs::read_to_string(log).map_err(|e| PipelineError::io(log, e))?;
    let parsed = parse_temperature_log(&text).map_err(PipelineError::from)?;
    let unit = unit.map(TempUnit::from).unwrap_or(parsed.source_unit);
    let s = parsed.summarize(unit.to_kelvin(ambient));
    if csv {
        println!("mean_K,std_K,duration_s,delta_T_mean_K\n{},{},{},{}", s.mean_k, s.std_k, s.duration_s, s.delta_t_mean_k);
    } else {
        println!("mean {:.3} K, std {:.3} K over {} s", s.mean_k, s.std_k, s.duration_s);
        println!("delta_T {:.1} K", s.delta_t_mean_k);
    }
    Ok(exit::OK)
}

fn run(cli: Cli) -> Result<i32> {
    match &cli.cmd {
        Cmd::Pattern(a) => cmd_pattern(a),
        Cmd::Mesh { config, out } => cmd_mesh(config, out.as_deref()).with_context(|| format!("mesh {}", config.display())),
        Cmd::Simulate { config, out } => {
            cmd_simulate(config, out.as_deref()).with_context(|| format!("simulate {}", config.display()))
        }
        Cmd::Sweep { config, gammas, out } => {
            cmd_sweep(config, gammas.as_deref(), out.as_deref()).with_context(|| format!("sweep {}", config.display()))
        }
        Cmd::FitMaterial { curve, eps_m, csv } => cmd_fit(curve, *eps_m, *csv),
        Cmd::IngestTemplog { log, ambient, ambient_unit, csv } => cmd_templog(log, *ambient, *ambient_unit, *csv),
    }
}

fn exit_code(err: &anyhow::Error) -> i32 {
    if err.downcast_ref::<Usage>().is_some() {
        return exit::USAGE;
    }
    if let Some(p) = err.downcast_ref::<PipelineError>() {
        return p.exit_code();
    }
    match err.downcast_ref::<MaterialError>() {
        Some(MaterialError::Io(_)) => exit::IO,
        _ => exit::USAGE,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
