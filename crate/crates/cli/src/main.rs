//! `strain-tomo`: mesh generation, sinogram simulation, reconstruction and
//! field comparison for 2-D Bragg-edge strain tomography.

mod config;

use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use strain_tomo::equilibrium::assemble_constraints;
use strain_tomo::fields::{interpolate_to_nodes, AnalyticField, BeamField, BeamParams, RingPlugField, RingPlugParams};
use strain_tomo::forward::{operator_for_sinogram, simulate_sinogram, FieldSource, Sinogram};
use strain_tomo::mesh::{build_ring_plug_mesh, build_structured_mesh, QuadMesh};
use strain_tomo::raytrace::generate_rays;
use strain_tomo::solver::{
    build_regularizer, compare_fields, read_field_csv, solve_constrained, solve_tikhonov, write_field_csv, write_vtk,
    ConstraintMode, FieldComparison, RegularizerKind, SolverConfig,
};
use strain_tomo::{Component, Error, NodalStrainField};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "strain-tomo", version, about = "2-D neutron strain tomography from longitudinal ray transform data")]
struct Cli {
    /// Worker threads for operator assembly (default: all cores).
    #[arg(long, global = true, env = "LRT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a quadrilateral mesh and write it as JSON.
    Meshgen(MeshgenArgs),
    /// Simulate a sinogram from an analytic or nodal strain field.
    Simulate(SimulateArgs),
    /// Reconstruct a nodal strain field from a sinogram.
    Reconstruct(ReconstructArgs),
    /// Compare two nodal strain field files on the same mesh.
    Compare(CompareArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Shape {
    Rect,
    RingPlug,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum FieldKind {
    Beam,
    Ringplug,
    File,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ProjectionMode {
    /// Sample the field at the nodes and project with the discrete operator.
    Discrete,
    /// Integrate the analytic field along each ray.
    Exact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RegArg {
    None,
    Identity,
    Stiffness,
}

impl From<RegArg> for RegularizerKind {
    fn from(r: RegArg) -> Self {
        match r {
            RegArg::None => RegularizerKind::None,
            RegArg::Identity => RegularizerKind::Identity,
            RegArg::Stiffness => RegularizerKind::Stiffness,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ConstraintArg {
    Kkt,
    Penalty,
}

impl From<ConstraintArg> for ConstraintMode {
    fn from(c: ConstraintArg) -> Self {
        match c {
            ConstraintArg::Kkt => ConstraintMode::Kkt,
            ConstraintArg::Penalty => ConstraintMode::Penalty,
        }
    }
}

/// Geometry and material flags shared by meshgen and simulate. Lengths are
/// in metres unless `--mm` is given.
#[derive(Args, Debug, Clone)]
struct GeometryArgs {
    /// Read every length flag in millimetres.
    #[arg(long)]
    mm: bool,

    /// Rectangle / beam length along x [default: 0.02 m].
    #[arg(long)]
    length: Option<f64>,
    /// Rectangle / beam width along y, centred on y = 0 [default: 0.01 m].
    #[arg(long)]
    width: Option<f64>,
    /// Beam thickness [default: 0.005 m].
    #[arg(long)]
    thickness: Option<f64>,
    /// End load on the beam in newtons [default: 2000].
    #[arg(long)]
    load: Option<f64>,

    /// Outer radius of the ring [default: 0.025 m].
    #[arg(long)]
    outer_radius: Option<f64>,
    /// Bore (plug) radius [default: 0.0105 m].
    #[arg(long)]
    bore_radius: Option<f64>,
    /// Bore center offset along x [default: 0].
    #[arg(long)]
    bore_offset: Option<f64>,
    /// Diametral interference [default: 40e-6 m].
    #[arg(long)]
    interference: Option<f64>,

    /// Young's modulus in Pa [default: 200e9].
    #[arg(long)]
    young: Option<f64>,
}

impl GeometryArgs {
    fn len(&self, v: Option<f64>, default: f64) -> f64 {
        match v {
            Some(x) if self.mm => x * 1e-3,
            Some(x) => x,
            None => default,
        }
    }

    fn beam(&self, poisson: f64) -> BeamParams {
        let d = BeamParams::default();
        BeamParams {
            length: self.len(self.length, d.length),
            width: self.len(self.width, d.width),
            thickness: self.len(self.thickness, d.thickness),
            young: self.young.unwrap_or(d.young),
            poisson,
            load: self.load.unwrap_or(d.load),
        }
    }

    fn ring_plug(&self, poisson: f64) -> RingPlugParams {
        let d = RingPlugParams::default();
        RingPlugParams {
            outer_radius: self.len(self.outer_radius, d.outer_radius),
            bore_radius: self.len(self.bore_radius, d.bore_radius),
            bore_offset: self.len(self.bore_offset, d.bore_offset),
            interference: self.len(self.interference, d.interference),
            young: self.young.unwrap_or(d.young),
            poisson,
        }
    }
}

#[derive(Args, Debug)]
struct MeshgenArgs {
    #[arg(long, value_enum)]
    shape: Shape,
    /// Elements along x (rect).
    #[arg(long)]
    nx: Option<usize>,
    /// Elements along y (rect).
    #[arg(long)]
    ny: Option<usize>,
    /// Target element size; required for ring-plug, alternative to --nx/--ny for rect.
    #[arg(long)]
    element_size: Option<f64>,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Output mesh JSON.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, value_enum)]
    field: FieldKind,
    /// Nodal field CSV for `--field file`.
    #[arg(long)]
    field_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "discrete")]
    mode: ProjectionMode,
    #[arg(long)]
    angles: usize,
    #[arg(long)]
    offsets: usize,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    /// Noise seed; mandatory when --noise-sigma is non-zero.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0.3)]
    nu: f64,
    #[command(flatten)]
    geometry: GeometryArgs,
    /// Output sinogram CSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Also write the analytic field sampled at the mesh nodes.
    #[arg(long)]
    truth_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long)]
    sinogram: PathBuf,
    #[arg(long, default_value_t = 0.3)]
    nu: f64,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "none")]
    reg: RegArg,
    #[arg(long, value_enum, default_value = "kkt")]
    constraint: ConstraintArg,
    /// Penalty weight w for `--constraint penalty`.
    #[arg(long, default_value_t = 1e4)]
    penalty_weight: f64,
    #[arg(long, default_value_t = 1e-8)]
    constraint_tolerance: f64,
    /// Fail instead of returning the minimum-norm solution on a rank-deficient system.
    #[arg(long)]
    reject_rank_deficient: bool,
    /// Output field CSV.
    #[arg(long, short)]
    out: PathBuf,
    /// Optional legacy VTK output.
    #[arg(long)]
    vtk: Option<PathBuf>,
    /// JSON report of residuals and solver statistics.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Field under test.
    #[arg(long)]
    a: PathBuf,
    /// Reference field.
    #[arg(long)]
    b: PathBuf,
    /// JSON report output.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Failures after argument parsing.
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Meshgen(a) => meshgen(a),
        Command::Simulate(a) => simulate(a),
        Command::Reconstruct(a) => reconstruct(a),
        Command::Compare(a) => compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn meshgen(a: MeshgenArgs) -> CmdResult {
    let g = &a.geometry;
    let mesh = match a.shape {
        Shape::Rect => {
            let length = g.len(g.length, BeamParams::default().length);
            let width = g.len(g.width, BeamParams::default().width);
            let (nx, ny) = match (a.nx, a.ny, a.element_size) {
                (Some(nx), Some(ny), None) => (nx, ny),
                (None, None, Some(h)) => {
                    let h = g.len(Some(h), 0.0);
                    if !(h > 0.0) {
                        return Err(Failure::Usage("--element-size must be positive".into()));
                    }
                    (((length / h).round() as usize).max(1), ((width / h).round() as usize).max(1))
                }
                _ => return Err(Failure::Usage("rect needs either --nx and --ny, or --element-size".into())),
            };
            build_structured_mesh(0.0, length, -width / 2.0, width / 2.0, nx, ny)?
        }
        Shape::RingPlug => {
            let h = a
                .element_size
                .ok_or_else(|| Failure::Usage("ring-plug needs --element-size".into()))?;
            let p = g.ring_plug(0.3);
            build_ring_plug_mesh(p.outer_radius, p.bore_radius, p.bore_offset, g.len(Some(h), 0.0))?
        }
    };
    mesh.save(&a.out)?;
    println!(
        "wrote {} ({} nodes, {} elements)",
        a.out.display(),
        mesh.node_count(),
        mesh.element_count()
    );
    Ok(())
}

fn analytic_field(kind: FieldKind, g: &GeometryArgs, nu: f64) -> Result<Option<Box<dyn AnalyticField>>, Error> {
    Ok(match kind {
        FieldKind::Beam => Some(Box::new(BeamField::new(g.beam(nu))?)),
        FieldKind::Ringplug => {
            let field = RingPlugField::new(g.ring_plug(nu))?;
            if field.is_approximate() {
                eprintln!("warning: offset bore; the ring-plug field is the concentric solution about the bore center");
            }
            Some(Box::new(field))
        }
        FieldKind::File => None,
    })
}

fn simulate(a: SimulateArgs) -> CmdResult {
    if a.noise_sigma != 0.0 && a.seed.is_none() {
        return Err(Failure::Usage("--seed is required when --noise-sigma is non-zero".into()));
    }
    if a.angles == 0 || a.offsets == 0 {
        return Err(Failure::Usage("--angles and --offsets must be positive".into()));
    }
    let mesh = QuadMesh::load(&a.mesh)?;
    let rays = generate_rays(&mesh, a.angles, a.offsets);
    let seed = a.seed.unwrap_or(0);
    let analytic = analytic_field(a.field, &a.geometry, a.nu)?;

    let sinogram = match (&analytic, a.mode) {
        (Some(f), ProjectionMode::Exact) => simulate_sinogram(&mesh, FieldSource::Exact(f.as_ref()), &rays, a.noise_sigma, seed)?,
        (Some(f), ProjectionMode::Discrete) => {
            simulate_sinogram(&mesh, FieldSource::Interpolated(f.as_ref()), &rays, a.noise_sigma, seed)?
        }
        (None, mode) => {
            if mode == ProjectionMode::Exact {
                return Err(Failure::Usage("--mode exact needs an analytic field".into()));
            }
            let path = a
                .field_file
                .as_ref()
                .ok_or_else(|| Failure::Usage("--field file needs --field-file".into()))?;
            let nodal = load_field(path, &mesh)?;
            simulate_sinogram(&mesh, FieldSource::Nodal(&nodal), &rays, a.noise_sigma, seed)?
        }
    };
    sinogram.save(&a.out)?;
    println!(
        "wrote {} ({} of {} rays kept)",
        a.out.display(),
        sinogram.len(),
        rays.len()
    );
    if let Some(path) = &a.truth_out {
        let f = analytic
            .as_ref()
            .ok_or_else(|| Failure::Usage("--truth-out needs an analytic field".into()))?;
        let nodal = interpolate_to_nodes(f.as_ref(), &mesh)?;
        write_field_csv(&mesh, &nodal, File::create(path).map_err(Error::from)?)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn load_field(path: &Path, mesh: &QuadMesh) -> Result<NodalStrainField, Error> {
    let (points, field) = read_field_csv(File::open(path)?, &path.display().to_string())?;
    if points.len() != mesh.node_count() {
        return Err(Error::MeshMismatch(format!(
            "{} has {} nodes, mesh has {}",
            path.display(),
            points.len(),
            mesh.node_count()
        )));
    }
    let tol = 1e-9 * mesh.bounding_radius().max(1.0);
    if let Some(i) = points.iter().zip(mesh.nodes()).position(|(p, q)| p.distance(*q) > tol) {
        return Err(Error::MeshMismatch(format!("{} node {i} does not match the mesh", path.display())));
    }
    Ok(field)
}

#[derive(Serialize)]
struct ReconReport<'a> {
    run_config: &'a RunConfig,
    data_residual: f64,
    constraint_residual: f64,
    reg_norm: f64,
    stats: &'a strain_tomo::solver::SolveStats,
}

fn reconstruct(a: ReconstructArgs) -> CmdResult {
    let config = SolverConfig {
        constraint_mode: a.constraint.into(),
        penalty_weight: a.penalty_weight,
        alpha: a.alpha,
        regularizer: a.reg.into(),
        constraint_tolerance: a.constraint_tolerance,
        reject_rank_deficient: a.reject_rank_deficient,
        ..Default::default()
    };
    config.validate().map_err(|e| Failure::Usage(e.to_string()))?;
    if !(0.0..0.5).contains(&a.nu) {
        return Err(Failure::Usage(format!("--nu {} outside [0, 0.5)", a.nu)));
    }
    if a.alpha > 0.0 && a.reg == RegArg::None {
        return Err(Failure::Usage("--alpha > 0 needs --reg identity or stiffness".into()));
    }
    let mesh = QuadMesh::load(&a.mesh)?;
    let sinogram = Sinogram::load(&a.sinogram)?;
    if sinogram.is_empty() {
        return Err(Error::DimensionMismatch("sinogram has no records".into()).into());
    }
    let k = operator_for_sinogram(&sinogram, &mesh)?;
    let c = assemble_constraints(&mesh, a.nu)?;
    let data = sinogram.values();
    let result = match build_regularizer(config.regularizer, &mesh) {
        Some(b) => solve_tikhonov(&k.matrix, &data, &c.matrix, &b, config.alpha, &config)?,
        None => solve_constrained(&k.matrix, &data, &c.matrix, &config)?,
    };
    write_field_csv(&mesh, &result.field, File::create(&a.out).map_err(Error::from)?)?;
    if let Some(path) = &a.vtk {
        write_vtk(&mesh, &result.field, File::create(path).map_err(Error::from)?)?;
    }
    let run_config = RunConfig::reconstruct(&a, &config);
    if let Some(path) = &a.report {
        write_json(
            path,
            &ReconReport {
                run_config: &run_config,
                data_residual: result.data_residual,
                constraint_residual: result.constraint_residual,
                reg_norm: result.reg_norm,
                stats: &result.stats,
            },
        )?;
    }
    println!("data_residual       {:.6e}", result.data_residual);
    println!("constraint_residual {:.6e}", result.constraint_residual);
    println!("reg_norm            {:.6e}", result.reg_norm);
    if result.stats.rank_deficiency_estimate > 0 {
        eprintln!(
            "warning: system is rank deficient (estimate {}); returned the minimum-norm solution",
            result.stats.rank_deficiency_estimate
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct CompareReport<'a> {
    run_config: &'a RunConfig,
    #[serde(flatten)]
    comparison: &'a FieldComparison,
}

fn compare(a: CompareArgs) -> CmdResult {
    let mesh = QuadMesh::load(&a.mesh)?;
    let fa = load_field(&a.a, &mesh)?;
    let fb = load_field(&a.b, &mesh)?;
    let cmp = compare_fields(&fa, &fb, &mesh)?;
    let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |x| format!("{x:.6e}"));
    println!("{:<5} {:>14} {:>14} {:>14} {:>14}", "comp", "rmse", "max_abs", "rmse/max|b|", "rmse/rms(b)");
    for c in Component::ALL {
        let e = cmp.component(c);
        println!(
            "{:<5} {:>14.6e} {:>14.6e} {:>14} {:>14}",
            c.name(),
            e.rmse,
            e.max_abs_error,
            fmt(e.normalized_rmse),
            fmt(e.relative_rmse)
        );
    }
    if let Some(path) = &a.report {
        let run_config = RunConfig::compare(&a);
        write_json(
            path,
            &CompareReport {
                run_config: &run_config,
                comparison: &cmp,
            },
        )?;
    }
    Ok(())
}
