//! Argument parsing.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use minmorph_core::moser::SURFACE_TOLERANCE;
use minmorph_core::morph::DEFAULT_FRAMES;

use crate::error::{EXIT_OK, EXIT_VALIDATION};
use crate::run::{execute, Command, RunConfig, ShapeSpec, DEFAULT_GRAD_TOL};

/// Distortion-minimal maps and morphs between closed loops and closed
/// triangle meshes.
///
/// Loops are `LOOP2D` files, meshes are OFF files, morphs are JSON. A map is
/// given as two files with the same combinatorics: its source and its image.
/// Use `-` to read from standard input.
#[derive(Debug, Parser)]
#[command(name = "minmorph", version)]
pub struct Args {
    #[command(subcommand)]
    command: Sub,
    /// Target relative Jacobian deviation of the surface solver.
    #[arg(long = "tol", global = true, default_value_t = SURFACE_TOLERANCE)]
    rel_tol: f64,
    /// Gradient threshold of the brute-force schedule check.
    #[arg(long, global = true, default_value_t = DEFAULT_GRAD_TOL)]
    grad_tol: f64,
    /// Number of time samples K (at least 2).
    #[arg(long, global = true, default_value_t = DEFAULT_FRAMES)]
    frames: usize,
    /// Seed for randomized commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long = "out", short = 'o', global = true)]
    output: Option<PathBuf>,
    /// Iteration cap; each solver has its own default.
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Largest surface vertex move per step, in mean edge lengths.
    #[arg(long, global = true, default_value_t = 0.05)]
    step_scale: f64,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Print the total volume.
    Volume { input: PathBuf },
    /// Per-simplex Jacobian CSV of the map source -> image.
    Jacobian { source: PathBuf, image: PathBuf },
    /// Total distortion, its lower bound and the gap.
    MapDistortion { source: PathBuf, image: PathBuf },
    /// Reparametrize the image so the map has constant Jacobian; writes the
    /// new image.
    MakeMinimalMap { source: PathBuf, image: PathBuf },
    /// Per-sample distortion CSV of a morph.
    MorphDistortion { input: PathBuf },
    /// Make every frame map of a morph distortion-minimal.
    PairwiseMinimalize { input: PathBuf },
    /// Distortion-minimal morph through the same shapes up to scale.
    Minimalize { input: PathBuf },
    /// Optimal volume schedule samples and its functional value.
    Schedule {
        #[arg(long)]
        v0: f64,
        #[arg(long)]
        v1: f64,
        /// Also minimize the discretized functional by gradient descent.
        #[arg(long)]
        brute_force: bool,
    },
    /// Minimal morph from the input to its scaled copy.
    ScalingMorph {
        input: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Random orientation-preserving perturbation of the vertices (seeded).
    Perturb {
        input: PathBuf,
        #[arg(long, default_value_t = 0.3)]
        magnitude: f64,
    },
    /// Generate a test shape.
    #[command(subcommand)]
    Shape(ShapeSub),
    /// Run the invariant suite on loops, meshes and morphs.
    Verify {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ShapeSub {
    Polygon {
        #[arg(long, default_value_t = 64)]
        vertices: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    Ellipse {
        #[arg(long, default_value_t = 64)]
        vertices: usize,
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Vertex clustering toward the major axis, in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        cluster: f64,
    },
    Square {
        #[arg(long, default_value_t = 1)]
        per_side: usize,
    },
    Tetrahedron,
    Icosphere {
        #[arg(long, default_value_t = 3)]
        subdivisions: usize,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
}

impl From<Args> for RunConfig {
    fn from(a: Args) -> Self {
        let command = match a.command {
            Sub::Volume { input } => Command::Volume { input },
            Sub::Jacobian { source, image } => Command::Jacobian { source, image },
            Sub::MapDistortion { source, image } => Command::MapDistortion { source, image },
            Sub::MakeMinimalMap { source, image } => Command::MakeMinimalMap { source, image },
            Sub::MorphDistortion { input } => Command::MorphDistortion { input },
            Sub::PairwiseMinimalize { input } => Command::PairwiseMinimalize { input },
            Sub::Minimalize { input } => Command::Minimalize { input },
            Sub::Schedule { v0, v1, brute_force } => Command::Schedule { v0, v1, brute_force },
            Sub::ScalingMorph { input, alpha } => Command::ScalingMorph { input, alpha },
            Sub::Perturb { input, magnitude } => Command::Perturb { input, magnitude },
            Sub::Shape(s) => Command::Shape(match s {
                ShapeSub::Polygon { vertices, radius } => ShapeSpec::Polygon { vertices, radius },
                ShapeSub::Ellipse { vertices, a, b, cluster } => ShapeSpec::Ellipse { vertices, a, b, cluster },
                ShapeSub::Square { per_side } => ShapeSpec::Square { per_side },
                ShapeSub::Tetrahedron => ShapeSpec::Tetrahedron,
                ShapeSub::Icosphere { subdivisions, radius } => ShapeSpec::Icosphere { subdivisions, radius },
            }),
            Sub::Verify { inputs } => Command::Verify { inputs },
        };
        RunConfig {
            command,
            output: a.output,
            rel_tol: a.rel_tol,
            grad_tol: a.grad_tol,
            frames: a.frames,
            seed: a.seed,
            max_iters: a.max_iters,
            step_scale: a.step_scale,
        }
    }
}

/// Parses `args` (program name first) into a run configuration.
pub fn parse<I, T>(args: I) -> Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    Args::try_parse_from(args).map(RunConfig::from)
}

/// Parses, runs and returns the exit status. Usage errors exit with 1,
/// like any other invalid input.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse(args) {
        Ok(config) => execute(&config),
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            }
        }
    }
}
