//! Subcommand execution, independent of argument parsing.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use minmorph_core::maps::phi_min;
use minmorph_core::morph::{
    minimalize, optimal_schedule, pairwise_minimalize, psi_value, scaling_morph, uniform_times, DEFAULT_FRAMES,
};
use minmorph_core::moser::{make_minimal_map, SURFACE_TOLERANCE};
use minmorph_core::oracle::{brute_force_psi_min, random_map, VariationalProblem};
use minmorph_core::{shapes, CorrespondenceMap, DiscreteManifold, Morph, MoserSolveOptions};

use crate::error::{CliError, EXIT_OK, EXIT_VALIDATION};
use crate::io::{self, fmt_f64};
use crate::report::{self, ScheduleExtras};

/// Default stopping threshold of the brute-force schedule check.
pub const DEFAULT_GRAD_TOL: f64 = 1e-9;
/// Iteration cap of the brute-force schedule check when `--max-iters` is
/// not given.
pub const BRUTE_FORCE_ITERS: usize = 200_000;

/// Relative slack when comparing a sampled morph's distortion with the
/// closed-form bound; covers the stencil truncation error.
pub const MORPH_BOUND_SLACK: f64 = 1e-3;
/// Relative slack for identities that hold up to rounding.
pub const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum ShapeSpec {
    Polygon { vertices: usize, radius: f64 },
    /// Ellipse with semi-axes `a`, `b`. `cluster > 0` bunches the vertices
    /// near the ends of the major axis.
    Ellipse { vertices: usize, a: f64, b: f64, cluster: f64 },
    Square { per_side: usize },
    Tetrahedron,
    Icosphere { subdivisions: usize, radius: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Volume { input: PathBuf },
    Jacobian { source: PathBuf, image: PathBuf },
    MapDistortion { source: PathBuf, image: PathBuf },
    MakeMinimalMap { source: PathBuf, image: PathBuf },
    MorphDistortion { input: PathBuf },
    PairwiseMinimalize { input: PathBuf },
    Minimalize { input: PathBuf },
    Schedule { v0: f64, v1: f64, brute_force: bool },
    ScalingMorph { input: PathBuf, alpha: f64 },
    /// Seeded random tangential perturbation; writes the image manifold.
    Perturb { input: PathBuf, magnitude: f64 },
    Shape(ShapeSpec),
    Verify { inputs: Vec<PathBuf> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    /// Standard output when `None`.
    pub output: Option<PathBuf>,
    pub rel_tol: f64,
    pub grad_tol: f64,
    pub frames: usize,
    pub seed: u64,
    /// Per-solver default when `None`.
    pub max_iters: Option<usize>,
    pub step_scale: f64,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        let defaults = MoserSolveOptions::default();
        Self {
            command,
            output: None,
            rel_tol: SURFACE_TOLERANCE,
            grad_tol: DEFAULT_GRAD_TOL,
            frames: DEFAULT_FRAMES,
            seed: 0,
            max_iters: None,
            step_scale: defaults.step_scale,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: &str| Err(CliError::Config(m.into()));
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.rel_tol) {
            return bad("--tol must be a positive number");
        }
        if !positive(self.grad_tol) {
            return bad("--grad-tol must be a positive number");
        }
        if !positive(self.step_scale) {
            return bad("--step-scale must be a positive number");
        }
        if self.frames < 2 {
            return bad("--frames must be at least 2");
        }
        if self.max_iters == Some(0) {
            return bad("--max-iters must be at least 1");
        }
        if self.output.as_ref().is_some_and(|p| p.as_os_str().is_empty()) {
            return bad("--out must not be empty");
        }
        let paths: Vec<&PathBuf> = match &self.command {
            Command::Volume { input }
            | Command::MorphDistortion { input }
            | Command::PairwiseMinimalize { input }
            | Command::Minimalize { input }
            | Command::ScalingMorph { input, .. }
            | Command::Perturb { input, .. } => vec![input],
            Command::Jacobian { source, image }
            | Command::MapDistortion { source, image }
            | Command::MakeMinimalMap { source, image } => vec![source, image],
            Command::Verify { inputs } => {
                if inputs.is_empty() {
                    return bad("verify needs at least one input");
                }
                inputs.iter().collect()
            }
            Command::Schedule { .. } | Command::Shape(_) => vec![],
        };
        if paths.iter().any(|p| p.as_os_str().is_empty()) {
            return bad("input paths must not be empty");
        }
        Ok(())
    }

    fn solve_options(&self) -> Result<MoserSolveOptions, CliError> {
        let max_iters = self.max_iters.unwrap_or(MoserSolveOptions::default().max_iters);
        MoserSolveOptions::new(self.rel_tol, max_iters, self.step_scale).map_err(CliError::core("options"))
    }
}

/// What a successful run produced.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Outcome {
    /// The artifact: written to the output path or standard output.
    pub text: String,
    /// Diagnostics for standard error.
    pub notes: Vec<String>,
    /// False when `verify` found a failing check.
    pub ok: bool,
}

impl Outcome {
    fn artifact(text: String) -> Self {
        Self { text, notes: Vec::new(), ok: true }
    }

    pub fn exit_code(&self) -> u8 {
        if self.ok {
            EXIT_OK
        } else {
            EXIT_VALIDATION
        }
    }
}

fn load_map(source: &Path, image: &Path) -> Result<CorrespondenceMap, CliError> {
    let context = format!("{} -> {}", source.display(), image.display());
    CorrespondenceMap::between(io::load_manifold(source)?, io::load_manifold(image)?)
        .map_err(CliError::core(context))
}

/// Runs the command without touching the output path.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    config.validate()?;
    let ctx = |p: &Path| p.display().to_string();
    let outcome = match &config.command {
        Command::Volume { input } => {
            let m = io::load_manifold(input)?;
            Outcome::artifact(format!("{}\n", fmt_f64(m.total_volume())))
        }
        Command::Jacobian { source, image } => {
            let field = load_map(source, image)?.jacobian_field().map_err(CliError::core(ctx(image)))?;
            Outcome::artifact(report::jacobian_csv(&field))
        }
        Command::MapDistortion { source, image } => {
            let map = load_map(source, image)?;
            let phi = map.total_distortion().map_err(CliError::core(ctx(image)))?;
            let bound = phi_min(map.source().total_volume(), map.image().total_volume())
                .map_err(CliError::core(ctx(image)))?;
            Outcome::artifact(report::map_distortion_csv(phi, bound))
        }
        Command::MakeMinimalMap { source, image } => {
            let map = load_map(source, image)?;
            let minimal = make_minimal_map(&map, &config.solve_options()?).map_err(CliError::core(ctx(image)))?;
            let before = map.total_distortion().map_err(CliError::core(ctx(image)))?;
            let after = minimal.total_distortion().map_err(CliError::core(ctx(image)))?;
            let mut out = Outcome::artifact(io::format_manifold(minimal.image()));
            out.notes.push(format!("phi {} -> {}", fmt_f64(before), fmt_f64(after)));
            out
        }
        Command::MorphDistortion { input } => {
            let morph = io::load_morph(input)?;
            Outcome::artifact(report::morph_distortion_csv(&morph.total_distortion()))
        }
        Command::PairwiseMinimalize { input } => {
            let morph = io::load_morph(input)?;
            let out = pairwise_minimalize(&morph, &config.solve_options()?).map_err(CliError::core(ctx(input)))?;
            Outcome::artifact(io::format_morph(&out))
        }
        Command::Minimalize { input } => {
            let morph = io::load_morph(input)?;
            let out = minimalize(&morph, &config.solve_options()?).map_err(CliError::core(ctx(input)))?;
            Outcome::artifact(io::format_morph(&out))
        }
        Command::Schedule { v0, v1, brute_force } => schedule(config, *v0, *v1, *brute_force)?,
        Command::ScalingMorph { input, alpha } => {
            let m = io::load_manifold(input)?;
            let morph = scaling_morph(m, *alpha, config.frames).map_err(CliError::core(ctx(input)))?;
            Outcome::artifact(io::format_morph(&morph))
        }
        Command::Perturb { input, magnitude } => {
            let m = io::load_manifold(input)?;
            let map = random_map(&m, config.seed, *magnitude).map_err(CliError::core(ctx(input)))?;
            Outcome::artifact(io::format_manifold(map.image()))
        }
        Command::Shape(spec) => Outcome::artifact(io::format_manifold(&build_shape(spec)?)),
        Command::Verify { inputs } => verify(inputs)?,
    };
    Ok(outcome)
}

/// Runs the command, writes the artifact and notes, and returns the exit
/// status. Nothing is written when the command fails.
pub fn execute(config: &RunConfig) -> u8 {
    let result = run(config).and_then(|outcome| {
        io::write_output(config.output.as_deref(), &outcome.text)?;
        Ok(outcome)
    });
    match result {
        Ok(outcome) => {
            for note in &outcome.notes {
                eprintln!("{note}");
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn schedule(config: &RunConfig, v0: f64, v1: f64, brute_force: bool) -> Result<Outcome, CliError> {
    let sched = optimal_schedule(v0, v1).map_err(CliError::core("schedule"))?;
    let psi = psi_value(&sched).map_err(CliError::core("schedule"))?;
    let brute_force = if brute_force {
        let mut problem = VariationalProblem::new(v0, v1, config.frames.max(3)).map_err(CliError::core("schedule"))?;
        problem.grad_tol = config.grad_tol;
        problem.max_iters = config.max_iters.unwrap_or(BRUTE_FORCE_ITERS);
        let min = brute_force_psi_min(&problem).map_err(CliError::core("brute-force schedule"))?;
        Some((min.value, min.grad_norm, min.converged))
    } else {
        None
    };
    let times = uniform_times(config.frames);
    Ok(Outcome::artifact(report::schedule_csv(&sched, &times, &ScheduleExtras { psi, brute_force })))
}

fn build_shape(spec: &ShapeSpec) -> Result<DiscreteManifold, CliError> {
    let positive = |x: f64, what: &str| {
        if x.is_finite() && x > 0.0 {
            Ok(())
        } else {
            Err(CliError::Config(format!("{what} must be a positive number")))
        }
    };
    let shape = match *spec {
        ShapeSpec::Polygon { vertices, radius } => {
            positive(radius, "radius")?;
            min_count(vertices, 3, "vertices")?;
            shapes::regular_polygon(vertices, radius)
        }
        ShapeSpec::Ellipse { vertices, a, b, cluster } => {
            positive(a, "a")?;
            positive(b, "b")?;
            min_count(vertices, 3, "vertices")?;
            if !(cluster.is_finite() && (0.0..1.0).contains(&cluster)) {
                return Err(CliError::Config("cluster must lie in [0, 1)".into()));
            }
            shapes::ellipse_through(&shapes::clustered_angles(vertices, cluster), a, b)
        }
        ShapeSpec::Square { per_side } => {
            min_count(per_side, 1, "per-side")?;
            shapes::unit_square(per_side)
        }
        ShapeSpec::Tetrahedron => shapes::regular_tetrahedron(),
        ShapeSpec::Icosphere { subdivisions, radius } => {
            positive(radius, "radius")?;
            if subdivisions > 6 {
                return Err(CliError::Config("subdivisions above 6 are not supported".into()));
            }
            shapes::icosphere(subdivisions, radius)
        }
    };
    shape.checked().map_err(CliError::core("shape"))
}

fn min_count(n: usize, min: usize, what: &str) -> Result<(), CliError> {
    if n < min {
        return Err(CliError::Config(format!("{what} must be at least {min}")));
    }
    Ok(())
}

/// Collects `PASS`/`FAIL` lines.
struct Suite {
    text: String,
    failed: usize,
    passed: usize,
}

impl Suite {
    fn record(&mut self, origin: &str, name: &str, passed: bool, detail: impl std::fmt::Display) {
        let tag = if passed { "PASS" } else { "FAIL" };
        writeln!(self.text, "{tag} {origin}: {name} ({detail})").unwrap();
        if passed {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
    }
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Runs the invariant suite on every input, continuing past failures.
fn verify(inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    let mut suite = Suite { text: String::new(), failed: 0, passed: 0 };
    for path in inputs {
        let text = io::read_text(path)?;
        let origin = path.display().to_string();
        if text.trim_start().starts_with('{') {
            match io::parse_morph(&text, &origin) {
                Ok(morph) => {
                    suite.record(&origin, "morph is valid", true, format!("{} frames", morph.num_frames()));
                    verify_morph(&mut suite, &origin, &morph);
                }
                Err(e) => suite.record(&origin, "morph is valid", false, e),
            }
        } else {
            let m = io::parse_manifold(&text, &origin)?;
            verify_manifold(&mut suite, &origin, &m);
        }
    }
    writeln!(suite.text, "{} passed, {} failed", suite.passed, suite.failed).unwrap();
    Ok(Outcome { ok: suite.failed == 0, text: suite.text, notes: Vec::new() })
}

fn verify_manifold(suite: &mut Suite, origin: &str, m: &DiscreteManifold) {
    let diagnostics = m.validate();
    for check in &diagnostics.checks {
        let detail = if check.passed { "ok".to_string() } else { diagnostics.to_string() };
        suite.record(origin, &check.invariant.to_string(), check.passed, detail);
    }
    if !diagnostics.is_valid() {
        return;
    }
    let vol = m.total_volume();
    let sum: f64 = m.measures().iter().sum();
    suite.record(origin, "positive volume", vol > 0.0, format!("vol {}", fmt_f64(vol)));
    suite.record(origin, "volume is the sum of simplex measures", rel_gap(sum, vol) <= ROUNDING_SLACK, fmt_f64(sum));

    let identity = CorrespondenceMap::identity(m.clone());
    match identity.is_minimal_map(ROUNDING_SLACK) {
        Ok(r) => suite.record(origin, "identity map is minimal", r.minimal, fmt_f64(r.max_deviation)),
        Err(e) => suite.record(origin, "identity map is minimal", false, e),
    }

    // Scaling by 2 about the origin has J = 2^n everywhere.
    let scaled = m.scaled_about([0.0; 3], 2.0);
    let expected = 2f64.powi(m.dim().n() as i32);
    match CorrespondenceMap::between(m.clone(), scaled).and_then(|f| f.jacobian_field()) {
        Ok(field) => {
            let (_, dev) = field.max_relative_deviation(expected);
            suite.record(origin, "scaling by 2 has constant jacobian 2^n", dev <= ROUNDING_SLACK, fmt_f64(dev));
            let image = expected * vol;
            suite.record(
                origin,
                "jacobian integrates to the image volume",
                rel_gap(field.integral(), image) <= ROUNDING_SLACK,
                fmt_f64(field.integral()),
            );
            let phi = field.total_distortion();
            let bound = phi_min(vol, image).unwrap_or(f64::NAN);
            suite.record(
                origin,
                "scaling attains phi_min",
                rel_gap(phi, bound) <= ROUNDING_SLACK,
                format!("phi {} bound {}", fmt_f64(phi), fmt_f64(bound)),
            );
        }
        Err(e) => suite.record(origin, "scaling by 2 has constant jacobian 2^n", false, e),
    }
}

fn verify_morph(suite: &mut Suite, origin: &str, morph: &Morph) {
    let volumes = morph.volumes();
    let v0 = volumes[0];
    // Jensen: every frame map costs at least phi_min.
    let mut worst = f64::INFINITY;
    let mut worst_frame = 0;
    for (k, &vk) in volumes.iter().enumerate().skip(1) {
        let field = morph.frame_map(k).jacobian_field();
        let Ok(field) = field else {
            suite.record(origin, "frame maps are orientation preserving", false, format!("frame {k}"));
            return;
        };
        let bound = phi_min(v0, vk).unwrap_or(f64::NAN);
        let margin = field.total_distortion() - bound * (1.0 - ROUNDING_SLACK);
        if margin < worst {
            worst = margin;
            worst_frame = k;
        }
    }
    suite.record(
        origin,
        "frame maps are orientation preserving",
        true,
        format!("{} maps", morph.num_frames() - 1),
    );
    suite.record(
        origin,
        "every frame map is at least phi_min",
        worst >= 0.0,
        format!("smallest margin {} at frame {worst_frame}", fmt_f64(worst)),
    );
    let report = morph.total_distortion();
    suite.record(
        origin,
        "total distortion is at least the closed-form bound",
        report.phi_total >= report.phi_lower_bound * (1.0 - MORPH_BOUND_SLACK),
        format!("phi_total {} bound {}", fmt_f64(report.phi_total), fmt_f64(report.phi_lower_bound)),
    );
    suite.record(
        origin,
        "sampled distortions are nonnegative",
        report.per_time.iter().all(|s| s.epsilon >= 0.0),
        format!("{} samples", report.per_time.len()),
    );
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(command: Command) -> RunConfig {
        RunConfig::new(command)
    }

    #[test]
    fn validate_rejects_bad_flags() {
        let base = config(Command::Schedule { v0: 1.0, v1: 2.0, brute_force: false });
        assert!(base.validate().is_ok());
        let cases = [
            RunConfig { frames: 1, ..base.clone() },
            RunConfig { rel_tol: 0.0, ..base.clone() },
            RunConfig { grad_tol: f64::NAN, ..base.clone() },
            RunConfig { step_scale: -1.0, ..base.clone() },
            RunConfig { max_iters: Some(0), ..base.clone() },
            RunConfig { output: Some(PathBuf::new()), ..base.clone() },
            config(Command::Verify { inputs: vec![] }),
            config(Command::Volume { input: PathBuf::new() }),
        ];
        for c in cases {
            assert_eq!(c.validate().unwrap_err().exit_code(), EXIT_VALIDATION, "{c:?}");
        }
    }

    #[test]
    fn schedule_footer_is_the_closed_form() {
        let pi = std::f64::consts::PI;
        let out = run(&config(Command::Schedule { v0: 4.0 * pi, v1: 16.0 * pi, brute_force: false })).unwrap();
        let psi = report::footer_value(&out.text, "psi").unwrap();
        assert!((psi - 16.0 * pi).abs() <= 1e-12, "{psi}");
        assert_eq!(out.text.lines().filter(|l| !l.starts_with('#')).count(), 1 + DEFAULT_FRAMES);
    }

    #[test]
    fn brute_force_footer_is_above_the_closed_form() {
        let mut c = config(Command::Schedule { v0: 1.0, v1: 9.0, brute_force: true });
        c.frames = 41;
        c.grad_tol = 1e-6;
        let out = run(&c).unwrap();
        let psi = report::footer_value(&out.text, "psi").unwrap();
        let brute = report::footer_value(&out.text, "psi_brute_force").unwrap();
        assert!(brute >= psi - 1e-6 && brute <= psi * 1.01, "{brute} vs {psi}");
    }

    #[test]
    fn shapes_validate_and_bad_parameters_are_rejected() {
        let good = [
            ShapeSpec::Polygon { vertices: 5, radius: 1.0 },
            ShapeSpec::Ellipse { vertices: 16, a: 2.0, b: 1.0, cluster: 0.5 },
            ShapeSpec::Square { per_side: 2 },
            ShapeSpec::Tetrahedron,
            ShapeSpec::Icosphere { subdivisions: 1, radius: 1.0 },
        ];
        for s in good {
            assert!(build_shape(&s).is_ok(), "{s:?}");
        }
        let bad = [
            ShapeSpec::Polygon { vertices: 2, radius: 1.0 },
            ShapeSpec::Polygon { vertices: 5, radius: 0.0 },
            ShapeSpec::Ellipse { vertices: 16, a: 2.0, b: 1.0, cluster: 1.0 },
            ShapeSpec::Square { per_side: 0 },
            ShapeSpec::Icosphere { subdivisions: 9, radius: 1.0 },
        ];
        for s in bad {
            assert_eq!(build_shape(&s).unwrap_err().exit_code(), EXIT_VALIDATION, "{s:?}");
        }
    }

    #[test]
    fn verify_passes_a_minimal_morph_and_a_sphere() {
        let morph = scaling_morph(shapes::regular_polygon(16, 1.0), 3.0, 21).unwrap();
        let mut suite = Suite { text: String::new(), failed: 0, passed: 0 };
        verify_morph(&mut suite, "m", &morph);
        assert_eq!(suite.failed, 0, "{}", suite.text);
        verify_manifold(&mut suite, "s", &shapes::icosphere(1, 1.0));
        assert_eq!(suite.failed, 0, "{}", suite.text);
    }

    #[test]
    fn verify_reports_open_meshes() {
        let open = DiscreteManifold::surface(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 2, 1], [0, 1, 3], [0, 3, 2]],
        )
        .unwrap();
        let mut suite = Suite { text: String::new(), failed: 0, passed: 0 };
        verify_manifold(&mut suite, "open", &open);
        assert!(suite.failed > 0);
        assert!(suite.text.contains("FAIL open: closed"), "{}", suite.text);
    }
}
