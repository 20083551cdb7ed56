//! Command-line front end: argument parsing, config resolution, report
//! emission and exit codes.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::bundle::{background_connection, Configuration};
use crate::energy::{
    bogomolny_split, diagnostics, energy, gradient_norm, identity_residuals, vortex_census, EnergyBreakdown,
    IdentityResiduals, Winding,
};
use crate::error::{Error, Result};
use crate::io::config::{parse_raw, ExperimentConfig, OutputPaths, RawConfig, SphereBlock, TorusBlock};
use crate::io::fields::{dump_fields, load_fields, write_table};
use crate::io::snapshot::{read_snapshot, write_snapshot, Provenance};
use crate::mesh::{Geometry, Mesh, MeshSummary};
use crate::solver::{minimize_logged, random_configuration, MinimizeResult, SolveOptions, StopReason};
use crate::stability::{
    configuration_verdict, magnetic_laplacian_eigs_with, smallest_hessian_eigs_with, zero_section_report_with,
    SpectrumResult, StabilityVerdict,
};

pub const THREADS_ENV: &str = "VORTEXLAB_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "vortexlab",
    version,
    about = "Abelian Yang-Mills-Higgs vortex laboratory on the torus and the sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Mesh counts, area and checksum
    MeshInfo(CommonArgs),
    /// Minimize the energy from a seeded random start
    Minimize(MinimizeArgs),
    /// Smallest second-variation eigenvalues modulo gauge
    Spectrum(InputArgs),
    /// Lowest magnetic Laplacian eigenvalues of the background connection
    Kuwabara(CommonArgs),
    /// Stability of the zero section with the background connection
    ZeroSection(CommonArgs),
    /// Continuation in epsilon across the vortex to normal-state transition
    BradlowScan(ScanArgs),
    /// Recompute fields and scalar diagnostics of a configuration
    Diagnose(InputArgs),
    /// Stability and vortex-equation verdict for a critical point
    Verdict(InputArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GeometryKind {
    Torus,
    Sphere,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// TOML configuration (or a JSON report whose config is reused)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// JSON report path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for whitespace-separated field and table dumps
    #[arg(long)]
    pub fields_dir: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-iteration progress log
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryKind>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub lx: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub ly: Option<f64>,
    #[arg(long, alias = "subdivisions")]
    pub subdiv: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub radius: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub degree: Option<i64>,
    #[arg(long, allow_hyphen_values = true)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub grad_tolerance: Option<f64>,
    /// Number of eigenvalues
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub spectrum_tolerance: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Also write the final configuration as a snapshot
    #[arg(long)]
    pub snapshot: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Snapshot, minimize report, or field-dump directory; a fresh
    /// minimization is run when absent
    #[arg(long)]
    pub input: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// `start:stop:count`, inclusive and evenly spaced
    #[arg(long)]
    pub epsilons: String,
}

#[derive(Serialize)]
struct ThreadInfo {
    requested: Option<usize>,
    used: usize,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    command: &'static str,
    version: &'static str,
    config: ExperimentConfig,
    seed: u64,
    threads: ThreadInfo,
    result: T,
}

/// Scalars recomputed from a configuration alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Scalars {
    pub degree: i64,
    pub epsilon: f64,
    pub energy: EnergyBreakdown,
    pub gradient_norm: f64,
    pub defect_plus: f64,
    pub defect_minus: f64,
    pub topological: f64,
    pub sup_norm: f64,
    pub max_f_minus_h: f64,
    pub max_negf_minus_h: f64,
    pub mean_f: f64,
    pub total_winding: i64,
    pub identities: IdentityResiduals,
}

impl Scalars {
    pub fn of(config: &Configuration) -> Scalars {
        let split = bogomolny_split(config);
        let diag = diagnostics(config);
        Scalars {
            degree: config.degree(),
            epsilon: config.epsilon,
            energy: energy(config),
            gradient_norm: gradient_norm(config),
            defect_plus: split.defect_plus,
            defect_minus: split.defect_minus,
            topological: split.topological,
            sup_norm: config.section.sup_norm(),
            max_f_minus_h: diag.max_f_minus_h,
            max_negf_minus_h: diag.max_negf_minus_h,
            mean_f: diag.mean_f,
            total_winding: vortex_census(config).total_winding,
            identities: identity_residuals(config),
        }
    }
}

#[derive(Serialize)]
struct MinimizeReport {
    converged: bool,
    stop_reason: StopReason,
    iterations: usize,
    grad_norm: f64,
    tolerance: f64,
    max_gauge_fix_drift: f64,
    energy_history: Vec<f64>,
    scalars: Scalars,
    snapshot: Value,
}

#[derive(Serialize)]
struct SpectrumReport {
    source: String,
    spectrum: SpectrumResult,
}

#[derive(Serialize)]
struct KuwabaraReport {
    degree: i64,
    total_area: f64,
    expected_lambda1: f64,
    lambda1: f64,
    relative_error: f64,
    spectrum: SpectrumResult,
}

#[derive(Serialize)]
struct ZeroSectionReport {
    /// `ε⁻²|Σ|/4π`, the degree at which the zero section solves the vortex equations.
    critical_degree: f64,
    verdict: StabilityVerdict,
}

#[derive(Clone, Serialize)]
struct ScanRow {
    epsilon: f64,
    sup_norm: f64,
    energy: f64,
    defect_plus: f64,
    defect_minus: f64,
    normal_state_energy: f64,
    converged: bool,
    iterations: usize,
}

#[derive(Serialize)]
struct ScanReport {
    /// Largest ε admitting vortex solutions, `√(|Σ|/4π|d|)`.
    threshold_epsilon: Option<f64>,
    rows: Vec<ScanRow>,
}

#[derive(Serialize)]
struct DiagnoseReport {
    source: String,
    scalars: Scalars,
    windings: Vec<Winding>,
}

#[derive(Serialize)]
struct VerdictReport {
    source: String,
    verdict: StabilityVerdict,
}

/// Outcome of a command: a report plus an optional numerical failure that
/// still lets the report be written.
struct Outcome {
    report: Value,
    failure: Option<Error>,
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Reports without `--out` go to `stdout`; error
/// JSON goes to `stderr`.
pub fn run(argv: &[String], stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            emit_error(stderr, "usage", &e.to_string(), 1);
            return 1;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(None) => 0,
        Ok(Some(err)) | Err(err) => {
            let code = err.exit_code();
            emit_error(stderr, err.kind(), &err.to_string(), code);
            code
        }
    }
}

fn emit_error(stderr: &mut dyn Write, kind: &str, message: &str, code: i32) {
    let body = json!({ "error": kind, "message": message.trim_end(), "exit_code": code });
    let _ = writeln!(stderr, "{body}");
}

fn common(cmd: &Command) -> &CommonArgs {
    match cmd {
        Command::MeshInfo(c) | Command::Kuwabara(c) | Command::ZeroSection(c) => c,
        Command::Minimize(m) => &m.common,
        Command::Spectrum(i) | Command::Diagnose(i) | Command::Verdict(i) => &i.common,
        Command::BradlowScan(s) => &s.common,
    }
}

fn name(cmd: &Command) -> &'static str {
    match cmd {
        Command::MeshInfo(_) => "mesh-info",
        Command::Minimize(_) => "minimize",
        Command::Spectrum(_) => "spectrum",
        Command::Kuwabara(_) => "kuwabara",
        Command::ZeroSection(_) => "zero-section",
        Command::BradlowScan(_) => "bradlow-scan",
        Command::Diagnose(_) => "diagnose",
        Command::Verdict(_) => "verdict",
    }
}

/// Thread cap from the environment; computations here run on one thread.
fn threads() -> Result<ThreadInfo> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Some(n),
            _ => return Err(Error::Config(vec![format!("{THREADS_ENV} must be a positive integer, got {s:?}")])),
        },
        Err(_) => None,
    };
    Ok(ThreadInfo { requested, used: 1 })
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// A config document: TOML, or JSON holding either a config or a report.
fn load_raw(path: &Path) -> Result<RawConfig> {
    let text = std::fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        let v: Value = serde_json::from_str(&text)?;
        return config_from_json(v.get("config").cloned().unwrap_or(v));
    }
    parse_raw(&text)
}

/// Config embedded in a report; its output paths belong to the earlier run.
fn config_from_json(v: Value) -> Result<RawConfig> {
    let mut raw: RawConfig = serde_json::from_value(v).map_err(|e| Error::Config(vec![e.to_string()]))?;
    raw.output = None;
    Ok(raw)
}

fn apply_overrides(raw: &mut RawConfig, a: &CommonArgs, default_geometry: GeometryKind) -> Result<()> {
    let mut v = Vec::new();
    let kind = match (a.geometry, &raw.torus, &raw.sphere) {
        (Some(k), _, _) => Some(k),
        (None, Some(_), Some(_)) => None,
        (None, None, Some(_)) => Some(GeometryKind::Sphere),
        (None, Some(_), None) => Some(GeometryKind::Torus),
        (None, None, None) => Some(default_geometry),
    };
    let torus_flags = a.nx.is_some() || a.ny.is_some() || a.lx.is_some() || a.ly.is_some();
    let sphere_flags = a.subdiv.is_some() || a.radius.is_some();
    match kind {
        // both blocks given: left for validation to report
        None => {}
        Some(GeometryKind::Torus) => {
            if sphere_flags {
                v.push("--subdiv/--radius apply only to the sphere geometry".to_string());
            }
            raw.sphere = None;
            let t = raw.torus.get_or_insert_with(TorusBlock::default);
            t.nx = a.nx.or(t.nx);
            t.ny = a.ny.or(t.ny);
            t.lx = a.lx.or(t.lx);
            t.ly = a.ly.or(t.ly);
        }
        Some(GeometryKind::Sphere) => {
            if torus_flags {
                v.push("--nx/--ny/--lx/--ly apply only to the torus geometry".to_string());
            }
            raw.torus = None;
            let s = raw.sphere.get_or_insert_with(SphereBlock::default);
            s.subdivisions = a.subdiv.or(s.subdivisions);
            s.radius = a.radius.or(s.radius);
        }
    }
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    raw.degree = a.degree.or(raw.degree);
    raw.epsilon = a.epsilon.or(raw.epsilon);
    if let Some(seed) = a.seed {
        raw.seed = Some(seed);
        if let Some(s) = raw.solve.as_mut() {
            s.seed = seed;
        }
    }
    if a.max_iterations.is_some() || a.grad_tolerance.is_some() {
        let s = raw.solve.get_or_insert_with(SolveOptions::default);
        if a.max_iterations.is_some() {
            s.max_iterations = a.max_iterations;
        }
        s.grad_tolerance = a.grad_tolerance.unwrap_or(s.grad_tolerance);
    }
    if a.k.is_some() || a.spectrum_tolerance.is_some() {
        let s = raw.spectrum.get_or_insert_with(Default::default);
        s.k = a.k.unwrap_or(s.k);
        s.tolerance = a.spectrum_tolerance.unwrap_or(s.tolerance);
    }
    let o = raw.output.get_or_insert_with(OutputPaths::default);
    o.out = a.out.clone().or(o.out.take());
    o.fields_dir = a.fields_dir.clone().or(o.fields_dir.take());
    o.log = a.log.clone().or(o.log.take());
    Ok(())
}

fn resolve(cmd: &Command, input_report: Option<&Value>) -> Result<ExperimentConfig> {
    let a = common(cmd);
    let mut raw = match (&a.config, input_report) {
        (Some(p), _) => load_raw(p)?,
        (None, Some(v)) => match v.get("config") {
            Some(c) => config_from_json(c.clone())?,
            None => RawConfig::default(),
        },
        (None, None) => RawConfig::default(),
    };
    let default_geometry = match cmd {
        Command::Kuwabara(_) | Command::ZeroSection(_) => GeometryKind::Sphere,
        _ => GeometryKind::Torus,
    };
    apply_overrides(&mut raw, a, default_geometry)?;
    raw.resolve()
}

fn build_mesh(cfg: &ExperimentConfig) -> Result<Arc<Mesh>> {
    Ok(Arc::new(cfg.geometry().build()?))
}

fn open_log(path: &Option<PathBuf>) -> Result<Option<BufWriter<File>>> {
    Ok(match path {
        Some(p) => Some(BufWriter::new(File::create(p)?)),
        None => None,
    })
}

fn run_minimize(cfg: &ExperimentConfig) -> Result<MinimizeResult> {
    let mesh = build_mesh(cfg)?;
    let start = random_configuration(mesh, cfg.degree, cfg.epsilon, cfg.seed)?;
    let mut log = open_log(&cfg.output.log)?;
    let r = minimize_logged(&start, &cfg.solve, log.as_mut().map(|w| w as &mut dyn Write))?;
    if let Some(mut w) = log {
        w.flush()?;
    }
    Ok(r)
}

fn unconverged(r: &MinimizeResult) -> Option<Error> {
    (!r.converged).then(|| Error::NonConvergence {
        what: "minimization",
        iterations: r.iterations,
        residual: r.grad_norm,
    })
}

/// Makes the embedded config describe the configuration actually analysed.
fn describe(cfg: &mut ExperimentConfig, config: &Configuration) {
    match config.mesh().geometry {
        Geometry::Torus { nx, ny, lx, ly } => {
            cfg.torus = Some(TorusBlock {
                nx: Some(nx),
                ny: Some(ny),
                lx: Some(lx),
                ly: Some(ly),
            });
            cfg.sphere = None;
        }
        Geometry::Sphere { subdivisions, radius } => {
            cfg.sphere = Some(SphereBlock {
                subdivisions: Some(subdivisions),
                radius: Some(radius),
            });
            cfg.torus = None;
        }
    }
    cfg.degree = config.degree();
    cfg.epsilon = config.epsilon;
}

/// Loads `--input` or runs a fresh minimization.
fn obtain(
    args: &InputArgs,
    cmd: &Command,
) -> Result<(ExperimentConfig, Configuration, String, Option<Error>)> {
    match &args.input {
        Some(path) if path.is_dir() => {
            let mut cfg = resolve(cmd, None)?;
            let config = load_fields(path)?;
            describe(&mut cfg, &config);
            Ok((cfg, config, path.display().to_string(), None))
        }
        Some(path) => {
            let value = read_json(path)?;
            let snapshot = if value.get("format_version").is_some() {
                value.clone()
            } else {
                value
                    .pointer("/result/snapshot")
                    .cloned()
                    .ok_or_else(|| Error::Invalid(format!("{}: neither a snapshot nor a minimize report", path.display())))?
            };
            let report = value.get("config").map(|_| &value);
            let mut cfg = resolve(cmd, report)?;
            let config = read_snapshot(&serde_json::to_string(&snapshot)?)?.config;
            describe(&mut cfg, &config);
            Ok((cfg, config, path.display().to_string(), None))
        }
        None => {
            let cfg = resolve(cmd, None)?;
            let r = run_minimize(&cfg)?;
            let failure = unconverged(&r);
            Ok((cfg, r.config, "fresh minimization".into(), failure))
        }
    }
}

/// `start:stop:count`, inclusive linear spacing.
pub fn parse_epsilons(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(vec![format!("epsilons must be start:stop:count, got {text:?}")]);
    let parts: Vec<&str> = text.split(':').collect();
    let [a, b, n] = parts.as_slice() else {
        return Err(bad());
    };
    let start: f64 = a.trim().parse().map_err(|_| bad())?;
    let stop: f64 = b.trim().parse().map_err(|_| bad())?;
    let count: usize = n.trim().parse().map_err(|_| bad())?;
    let mut v = Vec::new();
    if count == 0 {
        v.push("epsilons count must be at least 1".to_string());
    }
    for (what, x) in [("start", start), ("stop", stop)] {
        if !(x > 0.0 && x.is_finite()) {
            v.push(format!("epsilons {what} must be positive, got {x}"));
        }
    }
    if count == 1 && start != stop {
        v.push("a single-entry epsilon scan needs start = stop".to_string());
    }
    if !v.is_empty() {
        return Err(Error::Config(v));
    }
    Ok((0..count)
        .map(|i| {
            if i + 1 == count {
                stop
            } else {
                start + (stop - start) * i as f64 / (count - 1).max(1) as f64
            }
        })
        .collect())
}

fn spectrum_table(dir: &Path, s: &SpectrumResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_table(
        &dir.join("eigenvalues.csv"),
        &["index", "eigenvalue", "residual"],
        s.eigenvalues
            .iter()
            .zip(&s.residuals)
            .enumerate()
            .map(|(i, (l, r))| vec![i as f64, *l, *r]),
    )
}

fn spectrum_failure(s: &SpectrumResult) -> Option<Error> {
    (!s.converged).then(|| Error::NonConvergence {
        what: "eigensolver",
        iterations: s.iterations,
        residual: s.residuals.iter().fold(0.0, |m: f64, r| m.max(*r)),
    })
}

fn to_value<T: Serialize>(cmd: &'static str, cfg: ExperimentConfig, threads: ThreadInfo, result: T) -> Result<Value> {
    Ok(serde_json::to_value(Report {
        command: cmd,
        version: env!("CARGO_PKG_VERSION"),
        seed: cfg.seed,
        config: cfg,
        threads,
        result,
    })?)
}

fn dispatch(cmd: &Command) -> Result<Outcome> {
    let threads = threads()?;
    let cmd_name = name(cmd);
    let outcome = match cmd {
        Command::MeshInfo(_) => {
            let cfg = resolve(cmd, None)?;
            let summary: MeshSummary = build_mesh(&cfg)?.summary();
            Outcome {
                report: to_value(cmd_name, cfg, threads, summary)?,
                failure: None,
            }
        }
        Command::Minimize(m) => {
            let cfg = resolve(cmd, None)?;
            let r = run_minimize(&cfg)?;
            let provenance = Provenance::now(cmd_name, cfg.seed);
            let text = write_snapshot(&r.config, &provenance)?;
            if let Some(p) = &m.snapshot {
                std::fs::write(p, &text)?;
            }
            if let Some(dir) = &cfg.output.fields_dir {
                dump_fields(&r.config, dir)?;
            }
            let failure = unconverged(&r);
            let report = MinimizeReport {
                converged: r.converged,
                stop_reason: r.stop_reason,
                iterations: r.iterations,
                grad_norm: r.grad_norm,
                tolerance: r.tolerance,
                max_gauge_fix_drift: r.max_gauge_fix_drift,
                energy_history: r.energy_history.clone(),
                scalars: Scalars::of(&r.config),
                snapshot: serde_json::from_str(&text)?,
            };
            Outcome {
                report: to_value(cmd_name, cfg, threads, report)?,
                failure,
            }
        }
        Command::Spectrum(args) => {
            let (cfg, config, source, failure) = obtain(args, cmd)?;
            let spectrum = smallest_hessian_eigs_with(&config, &cfg.spectrum)?;
            if let Some(dir) = &cfg.output.fields_dir {
                spectrum_table(dir, &spectrum)?;
            }
            let failure = failure.or_else(|| spectrum_failure(&spectrum));
            Outcome {
                report: to_value(cmd_name, cfg, threads, SpectrumReport { source, spectrum })?,
                failure,
            }
        }
        Command::Kuwabara(_) => {
            let cfg = resolve(cmd, None)?;
            let mesh = build_mesh(&cfg)?;
            let area = mesh.total_area;
            let spectrum = magnetic_laplacian_eigs_with(&background_connection(mesh, cfg.degree), &cfg.spectrum)?;
            if let Some(dir) = &cfg.output.fields_dir {
                spectrum_table(dir, &spectrum)?;
            }
            let expected = 2.0 * PI * cfg.degree.unsigned_abs() as f64 / area;
            let lambda1 = spectrum.lambda_min();
            let failure = spectrum_failure(&spectrum);
            let report = KuwabaraReport {
                degree: cfg.degree,
                total_area: area,
                expected_lambda1: expected,
                lambda1,
                relative_error: if expected > 0.0 {
                    (lambda1 - expected).abs() / expected
                } else {
                    lambda1.abs()
                },
                spectrum,
            };
            Outcome {
                report: to_value(cmd_name, cfg, threads, report)?,
                failure,
            }
        }
        Command::ZeroSection(_) => {
            let cfg = resolve(cmd, None)?;
            let mesh = build_mesh(&cfg)?;
            let critical_degree = mesh.total_area / (4.0 * PI * cfg.epsilon * cfg.epsilon);
            let verdict = zero_section_report_with(mesh, cfg.degree, cfg.epsilon, &cfg.verdict_tolerances())?;
            let failure = spectrum_failure(&verdict.spectrum);
            Outcome {
                report: to_value(
                    cmd_name,
                    cfg,
                    threads,
                    ZeroSectionReport {
                        critical_degree,
                        verdict,
                    },
                )?,
                failure,
            }
        }
        Command::BradlowScan(s) => {
            let epsilons = parse_epsilons(&s.epsilons)?;
            let cfg = resolve(cmd, None)?;
            let mesh = build_mesh(&cfg)?;
            let area = mesh.total_area;
            let d = cfg.degree;
            let mut current = random_configuration(mesh, d, epsilons[0], cfg.seed)?;
            let mut log = open_log(&cfg.output.log)?;
            let mut rows = Vec::with_capacity(epsilons.len());
            let mut failure = None;
            for &eps in &epsilons {
                if let Some(w) = log.as_mut() {
                    writeln!(w, "# epsilon = {eps}")?;
                }
                let r = minimize_logged(
                    &current.with_epsilon(eps),
                    &cfg.solve,
                    log.as_mut().map(|w| w as &mut dyn Write),
                )?;
                failure = failure.or_else(|| unconverged(&r));
                let split = bogomolny_split(&r.config);
                rows.push(ScanRow {
                    epsilon: eps,
                    sup_norm: r.config.section.sup_norm(),
                    energy: r.energy.total,
                    defect_plus: split.defect_plus,
                    defect_minus: split.defect_minus,
                    normal_state_energy: normal_state_energy(area, d, eps),
                    converged: r.converged,
                    iterations: r.iterations,
                });
                current = r.config;
            }
            if let Some(mut w) = log {
                w.flush()?;
            }
            if let Some(dir) = &cfg.output.fields_dir {
                std::fs::create_dir_all(dir)?;
                write_table(
                    &dir.join("bradlow.csv"),
                    &["epsilon", "sup_u", "energy", "defect_plus"],
                    rows.iter().map(|r| vec![r.epsilon, r.sup_norm, r.energy, r.defect_plus]),
                )?;
            }
            let threshold_epsilon = (d != 0).then(|| (area / (4.0 * PI * d.unsigned_abs() as f64)).sqrt());
            Outcome {
                report: to_value(cmd_name, cfg, threads, ScanReport { threshold_epsilon, rows })?,
                failure,
            }
        }
        Command::Diagnose(args) => {
            let (cfg, config, source, failure) = obtain(args, cmd)?;
            if let Some(dir) = &cfg.output.fields_dir {
                if args.input.as_deref() != Some(dir.as_path()) {
                    dump_fields(&config, dir)?;
                }
            }
            let report = DiagnoseReport {
                source,
                scalars: Scalars::of(&config),
                windings: vortex_census(&config).windings,
            };
            Outcome {
                report: to_value(cmd_name, cfg, threads, report)?,
                failure,
            }
        }
        Command::Verdict(args) => {
            let (cfg, config, source, failure) = obtain(args, cmd)?;
            if let Some(f) = failure {
                return Err(f);
            }
            let verdict = configuration_verdict(&config, cfg.solve.grad_tolerance, &cfg.verdict_tolerances())?;
            let failure = spectrum_failure(&verdict.spectrum);
            Outcome {
                report: to_value(cmd_name, cfg, threads, VerdictReport { source, verdict })?,
                failure,
            }
        }
    };
    Ok(outcome)
}

/// Energy of `u ≡ 0` with constant curvature `2πd/|Σ|`.
pub fn normal_state_energy(area: f64, d: i64, epsilon: f64) -> f64 {
    let flux = 2.0 * PI * d as f64;
    epsilon * epsilon * flux * flux / area + area / (4.0 * epsilon * epsilon)
}

fn execute(cmd: &Command, stdout: &mut dyn Write) -> Result<Option<Error>> {
    let Outcome { report, failure } = dispatch(cmd)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    let out = report
        .pointer("/config/output/out")
        .and_then(Value::as_str)
        .map(PathBuf::from);
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(failure)
}
