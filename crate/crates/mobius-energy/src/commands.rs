use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use mobius_energy_core::compactness::{
    annulus_modulus, ball_cover, disk_pair_integral, flat_annulus, gauss_holder_quotient,
    kuiper_selfdistance,
};
use mobius_energy_core::conformal::{conformality_error, conformalize, ConformalizeOptions};
use mobius_energy_core::curvature::total_angle_defect;
use mobius_energy_core::curve_energy::{
    curve_e0_with, curve_e_lambda_with, link_energy_u, CurveOptions, Singularity,
};
use mobius_energy_core::moebius::{random_safe, MoebiusMap};
use mobius_energy_core::optimize::{descend_with, DescentOptions, EnergyKind, Shape, Trajectory};
use mobius_energy_core::reduce::tree_sum;
use mobius_energy_core::shapes::{make_curve, make_sphere_mesh, ArcKind, CurveKind, SphereKind};
use mobius_energy_core::surface_energy::{
    invariance_trials, relative_spread, schwarz_check, surface_e_lambda_with, surface_link_u_with,
    willmore_term, Ambient, FactorModel, InvarianceTrial, SurfaceOptions,
};
use mobius_energy_core::{ClosedCurve, SphereMesh};

use crate::error::{CliError, CliResult};
use crate::format::{
    csv, emit, fmt_f64, map_to_specs, read_json, read_map, read_mesh, read_shape, to_json,
    AnnulusFile, PrimitiveSpec, ShapeFile,
};

#[derive(Debug, Parser)]
#[command(
    name = "mobius-energy",
    version,
    about = "Moebius-invariant energies of embedded curves and spheres"
)]
pub struct Cli {
    /// Worker threads for the pair loops; results do not depend on it.
    #[arg(long, global = true, env = "ENERGY_THREADS")]
    pub threads: Option<usize>,
    /// Seed for all random choices.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a test shape.
    Generate {
        #[command(subcommand)]
        kind: GenerateKind,
    },
    /// Evaluate an energy.
    Energy {
        #[command(subcommand)]
        kind: EnergyCommand,
    },
    /// Energies of a mesh under random safe Moebius maps (CSV).
    Invariance(InvarianceArgs),
    /// Gradient descent on an energy.
    Minimize(MinimizeArgs),
    /// Greedy ball cover with sheet counts.
    Cover(CoverArgs),
    /// Conformal modulus of an annulus.
    Modulus(ModulusArgs),
    /// Self-energy of two parallel disks.
    Diskpair(DiskpairArgs),
    /// Normalized Kuiper self-distance.
    Kuiper(KuiperArgs),
    /// Hoelder quotient of the Gauss map.
    Holder(HolderArgs),
    /// Push a shape through a Moebius map.
    Transform(TransformArgs),
}

#[derive(Debug, Args)]
pub struct CurveOut {
    #[arg(long, default_value_t = 256)]
    pub n: usize,
    /// Keep the generated size instead of rescaling to length 2 pi.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeshOut {
    #[arg(long, default_value_t = 3)]
    pub subdiv: u32,
    /// Ambient dimension (3 or 4).
    #[arg(long)]
    pub dim: Option<usize>,
    /// Replace the domain by a conformal one.
    #[arg(long)]
    pub conformalize: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ArcArg {
    Unknot,
    Trefoil,
}

#[derive(Debug, Subcommand)]
pub enum GenerateKind {
    Circle {
        #[command(flatten)]
        out: CurveOut,
    },
    Ellipse {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[command(flatten)]
        out: CurveOut,
    },
    TorusKnot {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 3)]
        q: u32,
        #[command(flatten)]
        out: CurveOut,
    },
    /// Circle with a seeded radial perturbation.
    PerturbedCircle {
        #[arg(long, default_value_t = 0.1)]
        amp: f64,
        #[arg(long, default_value_t = 4)]
        mode: u32,
        #[command(flatten)]
        out: CurveOut,
    },
    Icosphere {
        #[command(flatten)]
        out: MeshOut,
    },
    Ellipsoid {
        #[arg(long)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        #[arg(long, default_value_t = 1.0)]
        c: f64,
        #[command(flatten)]
        out: MeshOut,
    },
    /// Sphere with two caps drawn in to distance `gap`.
    Pinch {
        #[arg(long)]
        gap: f64,
        #[command(flatten)]
        out: MeshOut,
    },
    /// Knotted 2-sphere in R^4.
    SpunKnot {
        #[arg(long, value_enum, default_value_t = ArcArg::Trefoil)]
        arc: ArcArg,
        #[command(flatten)]
        out: MeshOut,
    },
    /// Flat annulus with loops `loop0` (inner) and `loop1` (outer).
    Annulus {
        #[arg(long, default_value_t = 1.0)]
        inner_radius: f64,
        #[arg(long, default_value_t = std::f64::consts::E)]
        outer_radius: f64,
        #[arg(long, default_value_t = 50)]
        rings: usize,
        #[arg(long, default_value_t = 100)]
        sectors: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum FactorArg {
    /// Least-squares fit of edge length ratios.
    #[default]
    Edge,
    /// Square root of the dual area ratio.
    Area,
}

impl From<FactorArg> for FactorModel {
    fn from(f: FactorArg) -> Self {
        match f {
            FactorArg::Edge => FactorModel::EdgeFit,
            FactorArg::Area => FactorModel::AreaRatio,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum AmbientArg {
    #[default]
    Euclidean,
    Chordal,
}

#[derive(Debug, Args)]
pub struct MeshIn {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Conformalize the domain before evaluating.
    #[arg(long)]
    pub conformalize: bool,
    /// Use the radial projection of the image as domain (required for OFF).
    #[arg(long)]
    pub radial_domain: bool,
    #[arg(long, value_enum, default_value_t)]
    pub factor: FactorArg,
}

impl MeshIn {
    fn load(&self) -> CliResult<(SphereMesh, Option<ConformalizeReport>)> {
        prepare(
            read_mesh(&self.input, self.radial_domain)?,
            self.conformalize,
        )
    }
}

#[derive(Debug, Subcommand)]
pub enum EnergyCommand {
    Curve {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        /// Adds the curvature regularizer with this weight.
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        diag_correction: bool,
        /// Rescale to length 2 pi first.
        #[arg(long)]
        normalize: bool,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    Surface {
        #[command(flatten)]
        mesh: MeshIn,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, value_enum, default_value_t)]
        ambient: AmbientArg,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
    /// Pair energy of two disjoint curves or two disjoint meshes.
    Link {
        #[arg(long = "in", value_name = "FILE")]
        input: PathBuf,
        #[arg(long = "with", value_name = "FILE")]
        other: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        factor: FactorArg,
        #[arg(long, value_name = "FILE")]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct InvarianceArgs {
    #[command(flatten)]
    pub mesh: MeshIn,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    /// Minimal distance of every vertex to the inversion spheres.
    #[arg(long, default_value_t = 0.5)]
    pub margin: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Use this map file for a single trial instead of random maps.
    #[arg(long, value_name = "FILE")]
    pub map: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EnergyArg {
    CurveE0,
    CurveElambda,
    SurfaceE0,
    SurfaceElambda,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub energy: EnergyArg,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 200)]
    pub steps: usize,
    /// Largest vertex displacement tried by the line search.
    #[arg(long, default_value_t = 0.05)]
    pub step0: f64,
    /// Finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    pub h: f64,
    /// Smoothing scale of the preconditioner (0: plain gradient).
    #[arg(long, default_value_t = 1.0)]
    pub smoothing: f64,
    /// Skip resampling / re-conformalization.
    #[arg(long)]
    pub no_gauge: bool,
    #[arg(long)]
    pub radial_domain: bool,
    #[arg(long, value_enum, default_value_t)]
    pub factor: FactorArg,
    /// Trajectory CSV.
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// Final shape.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Summary report (stdout when absent).
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CoverArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub radial_domain: bool,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModulusArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long, default_value = "loop0")]
    pub inner: String,
    #[arg(long, default_value = "loop1")]
    pub outer: String,
    /// Apply this map file to the annulus first.
    #[arg(long, value_name = "FILE")]
    pub map: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DiskpairArgs {
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    #[arg(long)]
    pub eps: f64,
    /// Initial midpoint cells.
    #[arg(long, default_value_t = 64)]
    pub resolution: usize,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KuiperArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub radial_domain: bool,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HolderArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Exponent `1/q` in (0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub q_exp: f64,
    #[arg(long)]
    pub radial_domain: bool,
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long = "in", value_name = "FILE")]
    pub input: PathBuf,
    /// Map file; a random safe map from `--seed` when absent.
    #[arg(long, value_name = "FILE")]
    pub map: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub margin: f64,
    #[arg(long)]
    pub radial_domain: bool,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write the applied map.
    #[arg(long, value_name = "FILE")]
    pub map_out: Option<PathBuf>,
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let seed = cli.seed;
    match &cli.command {
        Command::Generate { kind } => generate(kind, seed),
        Command::Energy { kind } => energy(kind),
        Command::Invariance(a) => invariance(a, seed),
        Command::Minimize(a) => minimize(a),
        Command::Cover(a) => cover(a),
        Command::Modulus(a) => modulus(a),
        Command::Diskpair(a) => diskpair(a),
        Command::Kuiper(a) => kuiper(a),
        Command::Holder(a) => holder(a, seed),
        Command::Transform(a) => transform(a, seed),
    }
}

fn write_curve(c: ClosedCurve, out: &CurveOut) -> CliResult<()> {
    let c = if out.raw { c } else { c.normalize()? };
    emit(out.out.as_deref(), &ShapeFile::Curve(c).to_json()?)
}

fn write_mesh(kind: SphereKind, out: &MeshOut, default_dim: usize) -> CliResult<()> {
    let mesh = make_sphere_mesh(&kind, out.dim.unwrap_or(default_dim))?;
    let (mesh, _) = prepare(mesh, out.conformalize)?;
    emit(out.out.as_deref(), &ShapeFile::Mesh(mesh).to_json()?)
}

fn generate(kind: &GenerateKind, seed: u64) -> CliResult<()> {
    match kind {
        GenerateKind::Circle { out } => write_curve(make_curve(&CurveKind::Circle, out.n)?, out),
        GenerateKind::Ellipse { a, b, out } => write_curve(
            make_curve(&CurveKind::Ellipse { a: *a, b: *b }, out.n)?,
            out,
        ),
        GenerateKind::TorusKnot { p, q, out } => write_curve(
            make_curve(&CurveKind::TorusKnot { p: *p, q: *q }, out.n)?,
            out,
        ),
        GenerateKind::PerturbedCircle { amp, mode, out } => write_curve(
            make_curve(
                &CurveKind::PerturbedCircle {
                    amp: *amp,
                    mode: *mode,
                    seed,
                },
                out.n,
            )?,
            out,
        ),
        GenerateKind::Icosphere { out } => {
            write_mesh(SphereKind::Icosphere { subdiv: out.subdiv }, out, 3)
        }
        GenerateKind::Ellipsoid { a, b, c, out } => write_mesh(
            SphereKind::Ellipsoid {
                a: *a,
                b: *b,
                c: *c,
                subdiv: out.subdiv,
            },
            out,
            3,
        ),
        GenerateKind::Pinch { gap, out } => write_mesh(
            SphereKind::Pinch {
                gap: *gap,
                subdiv: out.subdiv,
            },
            out,
            3,
        ),
        GenerateKind::SpunKnot { arc, out } => {
            let arc = match arc {
                ArcArg::Unknot => ArcKind::Unknot,
                ArcArg::Trefoil => ArcKind::Trefoil,
            };
            write_mesh(
                SphereKind::SpunKnot {
                    arc,
                    subdiv: out.subdiv,
                },
                out,
                4,
            )
        }
        GenerateKind::Annulus {
            inner_radius,
            outer_radius,
            rings,
            sectors,
            out,
        } => {
            let a = flat_annulus(*inner_radius, *outer_radius, *rings, *sectors)?;
            emit(out.as_deref(), &to_json(&AnnulusFile::from_annulus(&a))?)
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConformalizeReport {
    pub iterations: usize,
    pub converged: bool,
    pub initial_max_distortion: f64,
    pub max_distortion: f64,
}

fn prepare(
    mesh: SphereMesh,
    conformal: bool,
) -> CliResult<(SphereMesh, Option<ConformalizeReport>)> {
    if !conformal {
        return Ok((mesh, None));
    }
    let c = conformalize(&mesh, ConformalizeOptions::default())?;
    let report = ConformalizeReport {
        iterations: c.iterations,
        converged: c.converged,
        initial_max_distortion: c.initial.max,
        max_distortion: c.distortion.max,
    };
    Ok((c.mesh, Some(report)))
}

#[derive(Debug, Serialize)]
struct SingularityReport {
    pair: [usize; 2],
    distance: f64,
}

impl From<Singularity> for SingularityReport {
    fn from(s: Singularity) -> Self {
        SingularityReport {
            pair: s.pair,
            distance: s.distance,
        }
    }
}

#[derive(Debug, Serialize)]
struct CurveReport {
    e0: f64,
    regularizer: f64,
    lambda: Option<f64>,
    total: f64,
    length: f64,
    singularity: Option<SingularityReport>,
    warnings: Vec<String>,
    density: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct SchwarzReport {
    lhs: f64,
    rhs: f64,
    holds: bool,
}

#[derive(Debug, Serialize)]
struct SurfaceReport {
    e0: f64,
    regularizer: f64,
    lambda: f64,
    p: f64,
    q: f64,
    total: f64,
    willmore: f64,
    schwarz: SchwarzReport,
    angle_defect_sum: f64,
    max_distortion: f64,
    mean_distortion: f64,
    domain_area: f64,
    image_area: f64,
    vertices: usize,
    faces: usize,
    conformalize: Option<ConformalizeReport>,
    singularity: Option<SingularityReport>,
    warnings: Vec<String>,
    density: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct LinkReport {
    value: f64,
    closest: SingularityReport,
}

fn energy(kind: &EnergyCommand) -> CliResult<()> {
    match kind {
        EnergyCommand::Curve {
            input,
            lambda,
            diag_correction,
            normalize,
            report,
        } => {
            let c = match read_shape(input, false)? {
                ShapeFile::Curve(c) => c,
                ShapeFile::Mesh(_) => {
                    return Err(CliError::Parameter(
                        "energy curve needs a curve file".into(),
                    ))
                }
            };
            let c = if *normalize { c.normalize()? } else { c };
            let opts = CurveOptions {
                diagonal_correction: *diag_correction,
                ..CurveOptions::default()
            };
            let out = match lambda {
                Some(l) => {
                    let e = curve_e_lambda_with(&c, *l, opts)?;
                    CurveReport {
                        e0: e.e0,
                        regularizer: e.regularizer,
                        lambda: Some(*l),
                        total: e.total,
                        length: c.length(),
                        singularity: e.singularity.map(Into::into),
                        warnings: e.warnings,
                        density: e.density.unwrap_or_default(),
                    }
                }
                None => {
                    let e = curve_e0_with(&c, opts)?;
                    CurveReport {
                        e0: e.value,
                        regularizer: 0.0,
                        lambda: None,
                        total: e.value,
                        length: c.length(),
                        singularity: e.singularity.map(Into::into),
                        warnings: Vec::new(),
                        density: e.density,
                    }
                }
            };
            emit(report.as_deref(), &to_json(&out)?)
        }
        EnergyCommand::Surface {
            mesh,
            lambda,
            p,
            ambient,
            report,
        } => {
            let (m, conformal) = mesh.load()?;
            let ambient = match ambient {
                AmbientArg::Euclidean => Ambient::Euclidean,
                AmbientArg::Chordal => Ambient::Chordal,
            };
            let opts = SurfaceOptions {
                factor: mesh.factor.into(),
                ambient,
                ..SurfaceOptions::default()
            };
            let e = surface_e_lambda_with(&m, *lambda, *p, opts)?;
            let s = schwarz_check(&m, *lambda, *p)?;
            let distortion = conformality_error(&m)?;
            let out = SurfaceReport {
                e0: e.e0,
                regularizer: e.regularizer,
                lambda: *lambda,
                p: *p,
                q: e.q.unwrap_or(f64::NAN),
                total: e.total,
                willmore: willmore_term(&m)?,
                schwarz: SchwarzReport {
                    lhs: s.lhs,
                    rhs: s.rhs,
                    holds: s.holds,
                },
                angle_defect_sum: total_angle_defect(&m),
                max_distortion: distortion.max,
                mean_distortion: distortion.mean,
                domain_area: tree_sum(&m.domain_dual_areas()?),
                image_area: tree_sum(&m.image_dual_areas()?),
                vertices: m.vertex_count(),
                faces: m.face_count(),
                conformalize: conformal,
                singularity: e.singularity.map(Into::into),
                warnings: e.warnings,
                density: e.density.unwrap_or_default(),
            };
            emit(report.as_deref(), &to_json(&out)?)
        }
        EnergyCommand::Link {
            input,
            other,
            factor,
            report,
        } => {
            let out = match (read_shape(input, false)?, read_shape(other, false)?) {
                (ShapeFile::Curve(a), ShapeFile::Curve(b)) => {
                    let e = link_energy_u(&a, &b)?;
                    LinkReport {
                        value: e.value,
                        closest: e.closest.into(),
                    }
                }
                (ShapeFile::Mesh(a), ShapeFile::Mesh(b)) => {
                    let e = surface_link_u_with(&a, &b, (*factor).into())?;
                    LinkReport {
                        value: e.value,
                        closest: e.closest.into(),
                    }
                }
                _ => {
                    return Err(CliError::Parameter(
                        "link needs two curves or two meshes".into(),
                    ))
                }
            };
            emit(report.as_deref(), &to_json(&out)?)
        }
    }
}

#[derive(Debug, Serialize)]
struct InvarianceSummary {
    trials: usize,
    e0_spread: f64,
    willmore_spread: f64,
    total_min: f64,
    willmore_original: f64,
}

fn invariance(a: &InvarianceArgs, seed: u64) -> CliResult<()> {
    let (m, _) = a.mesh.load()?;
    let opts = SurfaceOptions {
        factor: a.mesh.factor.into(),
        ..SurfaceOptions::default()
    };
    let trials: Vec<InvarianceTrial> = match &a.map {
        Some(path) => {
            let image = read_map(path)?.apply_shape(&m)?;
            let e = surface_e_lambda_with(&image, a.lambda, a.p, opts)?;
            vec![InvarianceTrial {
                trial: 0,
                seed,
                e0: e.e0,
                willmore: willmore_term(&image)?,
                regularizer: e.regularizer,
                total: e.total,
            }]
        }
        None => invariance_trials(&m, a.trials, seed, a.margin, a.lambda, a.p, opts)?,
    };
    let table = csv(
        &["trial", "e0", "willmore", "regularizer", "total"],
        trials.iter().map(|t| {
            vec![
                t.trial.to_string(),
                fmt_f64(t.e0),
                fmt_f64(t.willmore),
                fmt_f64(t.regularizer),
                fmt_f64(t.total),
            ]
        }),
    );
    emit(a.report.as_deref(), &table)?;
    if a.report.is_some() && !trials.is_empty() {
        let e0: Vec<f64> = trials.iter().map(|t| t.e0).collect();
        let w: Vec<f64> = trials.iter().map(|t| t.willmore).collect();
        let summary = InvarianceSummary {
            trials: trials.len(),
            e0_spread: relative_spread(&e0),
            willmore_spread: relative_spread(&w),
            total_min: trials.iter().map(|t| t.total).fold(f64::INFINITY, f64::min),
            willmore_original: willmore_term(&m)?,
        };
        emit(None, &to_json(&summary)?)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct StepReport {
    iteration: usize,
    e0: f64,
    regularizer: f64,
    total: f64,
    step_size: f64,
    sphericity: f64,
}

#[derive(Debug, Serialize)]
struct GaugeReport {
    iteration: usize,
    before: f64,
    after: f64,
    accepted: bool,
}

#[derive(Debug, Serialize)]
struct MinimizeReport {
    status: String,
    steps: usize,
    monotone: bool,
    initial: StepReport,
    last: StepReport,
    gauges: Vec<GaugeReport>,
    warnings: Vec<String>,
}

fn step_report(r: &mobius_energy_core::optimize::StepRecord) -> StepReport {
    StepReport {
        iteration: r.iteration,
        e0: r.e0,
        regularizer: r.regularizer,
        total: r.total,
        step_size: r.step_size,
        sphericity: r.sphericity,
    }
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    csv(
        &[
            "iter",
            "e0",
            "regularizer",
            "total",
            "step_size",
            "sphericity",
        ],
        t.records.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                fmt_f64(r.e0),
                fmt_f64(r.regularizer),
                fmt_f64(r.total),
                fmt_f64(r.step_size),
                fmt_f64(r.sphericity),
            ]
        }),
    )
}

fn minimize(a: &MinimizeArgs) -> CliResult<()> {
    let shape = match read_shape(&a.input, a.radial_domain)? {
        ShapeFile::Curve(c) => Shape::Curve(c),
        ShapeFile::Mesh(m) => Shape::Sphere(m),
    };
    let kind = match a.energy {
        EnergyArg::CurveE0 => EnergyKind::CurveE0,
        EnergyArg::CurveElambda => EnergyKind::CurveELambda { lambda: a.lambda },
        EnergyArg::SurfaceE0 => EnergyKind::SurfaceE0,
        EnergyArg::SurfaceElambda => EnergyKind::SurfaceELambda {
            lambda: a.lambda,
            p: a.p,
        },
    };
    let opts = DescentOptions {
        steps: a.steps,
        step0: a.step0,
        h: a.h,
        snapshot_every: 0,
        gauge: !a.no_gauge,
        smoothing: a.smoothing,
    };
    let t = descend_with(kind, &shape, opts, a.factor.into())?;
    if let Some(log) = &a.log {
        emit(Some(log), &trajectory_csv(&t))?;
    }
    if let Some(out) = &a.out {
        let file = match &t.shape {
            Shape::Curve(c) => ShapeFile::Curve(c.clone()),
            Shape::Sphere(m) => ShapeFile::Mesh(m.clone()),
        };
        emit(Some(out), &file.to_json()?)?;
    }
    let report = MinimizeReport {
        status: format!("{:?}", t.status),
        steps: t.records.len() - 1,
        monotone: t.is_monotone(),
        initial: step_report(t.initial()),
        last: step_report(t.last()),
        gauges: t
            .gauges
            .iter()
            .map(|g| GaugeReport {
                iteration: g.iteration,
                before: g.before,
                after: g.after,
                accepted: g.accepted,
            })
            .collect(),
        warnings: t.warnings.clone(),
    };
    emit(a.report.as_deref(), &to_json(&report)?)
}

#[derive(Debug, Serialize)]
struct BallReport {
    center: Vec<f64>,
    vertex: usize,
    radius: f64,
    sheet_count: usize,
    max_bilip: f64,
}

#[derive(Debug, Serialize)]
struct CoverOut {
    delta: f64,
    total_balls: usize,
    max_sheet_count: usize,
    balls: Vec<BallReport>,
}

fn cover(a: &CoverArgs) -> CliResult<()> {
    let m = read_mesh(&a.input, a.radial_domain)?;
    let c = ball_cover(&m, a.delta)?;
    let out = CoverOut {
        delta: c.delta,
        total_balls: c.total_balls,
        max_sheet_count: c.balls.iter().map(|b| b.sheet_count).max().unwrap_or(0),
        balls: c
            .balls
            .iter()
            .map(|b| BallReport {
                center: b.center.0.clone(),
                vertex: b.vertex,
                radius: b.radius,
                sheet_count: b.sheet_count,
                max_bilip: b.max_bilip,
            })
            .collect(),
    };
    emit(a.report.as_deref(), &to_json(&out)?)
}

#[derive(Debug, Serialize)]
struct ModulusOut {
    modulus: f64,
    inner: String,
    outer: String,
}

fn modulus(a: &ModulusArgs) -> CliResult<()> {
    let file: AnnulusFile = read_json(&a.input)?;
    let mut points = file.points()?;
    if let Some(map) = &a.map {
        points = read_map(map)?.apply_points(&points)?;
    }
    let value = annulus_modulus(
        &points,
        &file.faces,
        file.get_loop(&a.inner)?,
        file.get_loop(&a.outer)?,
    )?;
    let out = ModulusOut {
        modulus: value,
        inner: a.inner.clone(),
        outer: a.outer.clone(),
    };
    emit(a.report.as_deref(), &to_json(&out)?)
}

#[derive(Debug, Serialize)]
struct DiskpairOut {
    r: f64,
    eps: f64,
    value: f64,
    resolution: usize,
    change: f64,
    converged: bool,
    warnings: Vec<String>,
}

fn diskpair(a: &DiskpairArgs) -> CliResult<()> {
    let d = disk_pair_integral(a.r, a.eps, a.resolution)?;
    let out = DiskpairOut {
        r: a.r,
        eps: a.eps,
        value: d.value,
        resolution: d.resolution,
        change: d.change,
        converged: d.converged,
        warnings: d.warnings,
    };
    emit(a.report.as_deref(), &to_json(&out)?)
}

#[derive(Debug, Serialize)]
struct KuiperOut {
    rho: f64,
    kuiper: f64,
}

fn kuiper(a: &KuiperArgs) -> CliResult<()> {
    let m = read_mesh(&a.input, a.radial_domain)?;
    let out = KuiperOut {
        rho: a.rho,
        kuiper: kuiper_selfdistance(&m, a.rho)?,
    };
    emit(a.report.as_deref(), &to_json(&out)?)
}

#[derive(Debug, Serialize)]
struct HolderOut {
    q_exp: f64,
    quotient: f64,
}

fn holder(a: &HolderArgs, seed: u64) -> CliResult<()> {
    let m = read_mesh(&a.input, a.radial_domain)?;
    let out = HolderOut {
        q_exp: a.q_exp,
        quotient: gauss_holder_quotient(&m, a.q_exp, seed)?,
    };
    emit(a.report.as_deref(), &to_json(&out)?)
}

fn transform(a: &TransformArgs, seed: u64) -> CliResult<()> {
    let shape = read_shape(&a.input, a.radial_domain)?;
    let map: MoebiusMap = match &a.map {
        Some(p) => read_map(p)?,
        None => match &shape {
            ShapeFile::Curve(c) => random_safe(seed, c, a.margin)?,
            ShapeFile::Mesh(m) => random_safe(seed, m, a.margin)?,
        },
    };
    let moved = match &shape {
        ShapeFile::Curve(c) => ShapeFile::Curve(map.apply_shape(c)?),
        ShapeFile::Mesh(m) => ShapeFile::Mesh(map.apply_shape(m)?),
    };
    if let Some(p) = &a.map_out {
        let specs: Vec<PrimitiveSpec> = map_to_specs(&map);
        emit(Some(p), &to_json(&specs)?)?;
    }
    emit(a.out.as_deref(), &moved.to_json()?)
}
