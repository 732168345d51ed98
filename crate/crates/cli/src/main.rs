//! `riemann-kit`: batch front end for the geometry engine. Every subcommand
//! writes one JSON report (schema `riemann-kit/1`) and optionally CSV data.

mod args;
mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use args::{extended, GeodesicArgs, ManifoldArgs, RunArgs};
use report::{error_value, render, write_text, Report, SCHEMA};

#[derive(Parser, Debug)]
#[command(name = "riemann-kit", version, about = "Riemannian geometry on coordinate charts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Christoffel symbols, curvature, Ricci and sectional curvatures at a point.
    Curvature(CurvatureCmd),
    /// Integrate a geodesic with a parallel frame.
    Geodesic(GeodesicCmd),
    /// Parallel transport along a geodesic or a sampled curve.
    Transport(TransportCmd),
    /// Exponential map, optionally with its differential.
    Exp(ExpCmd),
    /// Inverse of the exponential map by shooting.
    Log(LogCmd),
    /// Development of a curve into the initial tangent space.
    Develop(DevelopCmd),
    /// A Jacobi field along a geodesic.
    Jacobi(JacobiCmd),
    /// Conjugate points along a unit-speed geodesic.
    Conjugate(ConjugateCmd),
    /// Energy, first variation, index form and the Basic Inequality along a geodesic.
    Variation(VariationCmd),
    /// Scalar Riccati equation f' = -f^2 - H(t) with pole continuation.
    Riccati(RiccatiCmd),
    /// Comparison theorem checks.
    Compare(CompareCmd),
    /// Area of geodesic spheres against the model space.
    Volume(VolumeCmd),
    /// Geodesics on a surface of revolution.
    Surfrev(SurfrevCmd),
    /// Curvature identities at seeded points.
    Check(CheckCmd),
}

#[derive(clap::Args, Debug, Serialize)]
pub struct CurvatureCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub point: Vec<f64>,
    /// Extra plane for the sectional curvature, as `x;y`.
    #[arg(long, allow_hyphen_values = true)]
    pub plane: Option<String>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct GeodesicCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub geo: GeodesicArgs,
    /// Trajectory CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct TransportCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Vectors to transport, as `w1;w2;...`.
    #[arg(long, allow_hyphen_values = true)]
    pub vectors: String,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// A geodesic (`--point`, `--velocity`, `--length`) or a sampled curve file.
#[derive(clap::Args, Debug, Clone, Serialize)]
pub struct CurveArgs {
    /// CSV with columns `t,x1..xn`; replaces the geodesic.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub point: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub velocity: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub length: f64,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct ExpCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub point: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub velocity: Vec<f64>,
    /// Also report d(exp) with respect to base point and velocity.
    #[arg(long)]
    pub jacobian: bool,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct LogCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub point: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub target: Vec<f64>,
    /// Seeded shooting starts; above 1 the shortest converged geodesic is kept.
    #[arg(long, default_value_t = 1)]
    pub tries: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iterations: usize,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct DevelopCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub curve: CurveArgs,
    /// Development CSV path (`t,s1..sn`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct JacobiCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub geo: GeodesicArgs,
    /// J(0) in coordinates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub j0: Vec<f64>,
    /// J'(0) in coordinates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub j0p: Vec<f64>,
    /// CSV of frame components `t,f1..fn,fp1..fpn`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct ConjugateCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub geo: GeodesicArgs,
    /// CSV of the determinant trace `t,det`.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct VariationCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub geo: GeodesicArgs,
    /// Curvature bound for the Myers fields sin(sqrt(c) s) E_i.
    #[arg(long)]
    pub c: Option<f64>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct RiccatiCmd {
    #[command(flatten)]
    pub run: RunArgs,
    /// Driving function H as an expression in `t`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub h: String,
    /// f(0+), a number or `inf`.
    #[arg(long, default_value = "inf", value_parser = extended, allow_hyphen_values = true)]
    pub f0: f64,
    #[arg(long, default_value_t = 10.0)]
    pub tmax: f64,
    /// Pole threshold is 1/epsilon.
    #[arg(long, default_value_t = 1e-8)]
    pub epsilon: f64,
    /// Start time used for f(0+) = inf.
    #[arg(long, default_value_t = 1e-6)]
    pub t0: f64,
    /// Trace CSV path (`t,f,segment_id`).
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CompareKind {
    Driving,
    Sturm,
    Value,
    Rauch,
    Myers,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct CompareCmd {
    #[arg(long, value_enum)]
    pub kind: CompareKind,
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// The larger driving function, an expression in `t`.
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub h: String,
    /// The smaller driving function.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub k: String,
    #[arg(long, default_value = "inf", value_parser = extended, allow_hyphen_values = true)]
    pub f0: f64,
    /// Second initial value (value comparison).
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub g0: f64,
    #[arg(long, default_value_t = 3.0)]
    pub tmax: f64,
    /// Curvature bound for Myers.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Start point on M (rauch, myers).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub point: Vec<f64>,
    /// Direction on M; rescaled to unit length.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub velocity: Vec<f64>,
    /// Comparison manifold N for rauch (definition file).
    #[arg(long)]
    pub other_manifold: Option<PathBuf>,
    #[arg(long)]
    pub other_builtin: Option<String>,
    #[arg(long, default_value = "")]
    pub other_param: String,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub other_point: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub other_velocity: Vec<f64>,
    /// |J'(0)| for the Rauch fields.
    #[arg(long, default_value_t = 1.0)]
    pub j0p_len: f64,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct VolumeCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
    pub point: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kref: f64,
    /// Number of directions (default 512 for n = 2, 2048 for n = 3).
    #[arg(long)]
    pub directions: Option<usize>,
    /// RK4 step of the radial geodesics.
    #[arg(long, default_value_t = 1e-2)]
    pub radial_step: f64,
    /// Also fit the r^2 area-deficit coefficient.
    #[arg(long)]
    pub fit_scalar: bool,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct SurfrevCmd {
    #[command(flatten)]
    pub run: RunArgs,
    /// Profile file (JSON: f, h, u_range, arclength, periodic).
    #[arg(long, conflicts_with = "torus")]
    pub profile: Option<PathBuf>,
    /// Torus radii `R,r`.
    #[arg(long, value_delimiter = ',')]
    pub torus: Vec<f64>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub u0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta0: f64,
    /// Angle from the meridian direction.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub phi0: f64,
    /// Length of the confirming integration.
    #[arg(long, default_value_t = 50.0)]
    pub length: f64,
    /// Trajectory CSV path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(clap::Args, Debug, Serialize)]
pub struct CheckCmd {
    #[command(flatten)]
    pub m: ManifoldArgs,
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of seeded points.
    #[arg(long, default_value_t = 20)]
    pub count: usize,
    /// Points are drawn from [-scale, scale]^n inside the domain.
    #[arg(long, default_value_t = 0.5)]
    pub scale: f64,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Curvature(_) => "curvature",
            Command::Geodesic(_) => "geodesic",
            Command::Transport(_) => "transport",
            Command::Exp(_) => "exp",
            Command::Log(_) => "log",
            Command::Develop(_) => "develop",
            Command::Jacobi(_) => "jacobi",
            Command::Conjugate(_) => "conjugate",
            Command::Variation(_) => "variation",
            Command::Riccati(_) => "riccati",
            Command::Compare(_) => "compare",
            Command::Volume(_) => "volume",
            Command::Surfrev(_) => "surfrev",
            Command::Check(_) => "check",
        }
    }

    fn run_args(&self) -> &RunArgs {
        match self {
            Command::Curvature(c) => &c.run,
            Command::Geodesic(c) => &c.run,
            Command::Transport(c) => &c.run,
            Command::Exp(c) => &c.run,
            Command::Log(c) => &c.run,
            Command::Develop(c) => &c.run,
            Command::Jacobi(c) => &c.run,
            Command::Conjugate(c) => &c.run,
            Command::Variation(c) => &c.run,
            Command::Riccati(c) => &c.run,
            Command::Compare(c) => &c.run,
            Command::Volume(c) => &c.run,
            Command::Surfrev(c) => &c.run,
            Command::Check(c) => &c.run,
        }
    }

    fn settings(&self) -> serde_json::Value {
        let v = match self {
            Command::Curvature(c) => serde_json::to_value(c),
            Command::Geodesic(c) => serde_json::to_value(c),
            Command::Transport(c) => serde_json::to_value(c),
            Command::Exp(c) => serde_json::to_value(c),
            Command::Log(c) => serde_json::to_value(c),
            Command::Develop(c) => serde_json::to_value(c),
            Command::Jacobi(c) => serde_json::to_value(c),
            Command::Conjugate(c) => serde_json::to_value(c),
            Command::Variation(c) => serde_json::to_value(c),
            Command::Riccati(c) => serde_json::to_value(c),
            Command::Compare(c) => serde_json::to_value(c),
            Command::Volume(c) => serde_json::to_value(c),
            Command::Surfrev(c) => serde_json::to_value(c),
            Command::Check(c) => serde_json::to_value(c),
        };
        v.expect("settings serialize")
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let cmd = &cli.command;
    let run = cmd.run_args();
    if run.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(run.jobs).build_global();
    }
    let mut manifold = None;
    let outcome = match cmd {
        Command::Curvature(c) => commands::curvature(c, &mut manifold),
        Command::Geodesic(c) => commands::geodesic(c, &mut manifold),
        Command::Transport(c) => commands::transport(c, &mut manifold),
        Command::Exp(c) => commands::exp(c, &mut manifold),
        Command::Log(c) => commands::log(c, &mut manifold),
        Command::Develop(c) => commands::develop(c, &mut manifold),
        Command::Jacobi(c) => commands::jacobi(c, &mut manifold),
        Command::Conjugate(c) => commands::conjugate(c, &mut manifold),
        Command::Variation(c) => commands::variation(c, &mut manifold),
        Command::Riccati(c) => commands::riccati(c),
        Command::Compare(c) => commands::compare(c, &mut manifold),
        Command::Volume(c) => commands::volume(c, &mut manifold),
        Command::Surfrev(c) => commands::surfrev(c, &mut manifold),
        Command::Check(c) => commands::check(c, &mut manifold),
    };
    let (result, error, code) = match outcome {
        Ok(v) => (Some(v), None, ExitCode::SUCCESS),
        Err(e) => (None, Some(error_value(&e)), ExitCode::from(1)),
    };
    let report = Report {
        schema: SCHEMA,
        tool: "riemann-kit",
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        seed: run.seed,
        settings: cmd.settings(),
        manifold,
        result,
        error,
    };
    if let Err(e) = write_text(run.output.as_deref(), &render(&report)) {
        eprintln!("riemann-kit: cannot write report: {e}");
        return ExitCode::from(1);
    }
    code
}
