//! Command-line front end: `fdisynth synth` and `fdisynth analyze`.
//!
//! Exit codes: 0 success, 1 input error, 2 infeasible problem (including the
//! structural H- diagnostic), 3 nonconvergence or numerical failure.

mod output;
mod problem;

pub use output::{
    analysis_report, sweep_csv, sweep_svg, synthesis_report, tolerance_header, Certificates,
    LmiCertificate, Measurements, CSV_HEADER,
};
pub use problem::{
    FilterFile, LoadedProblem, LoopTransfers, PlantSection, ProblemFile, SynthesisSection,
    SCHEMA_VERSION,
};

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::lmi::SlackVars;
use crate::sdp::{BarrierSolver, PrimalDualSolver, SdpSolver};
use crate::synth::{
    build_filter_step, post_scale_update, synthesize_with, verify_with_tol, SynthesisConfig,
    SynthesisResult, SynthesisStatus,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_NONCONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "fdisynth",
    version,
    about = "H-/H-infinity fault detection filter synthesis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a residual filter for a problem file.
    Synth(SynthArgs),
    /// Measure a given filter on a problem's plant.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    /// Primal-dual interior point.
    Pd,
    /// Primal log-barrier.
    Barrier,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    pub problem: PathBuf,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long = "max-iters")]
    pub max_iters: Option<usize>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long = "shared-lyapunov", value_enum)]
    pub shared_lyapunov: Option<OnOff>,
    #[arg(long, value_enum, default_value = "pd")]
    pub solver: Backend,
    #[arg(long = "gap-tol")]
    pub gap_tol: Option<f64>,
    #[arg(long = "feas-tol")]
    pub feas_tol: Option<f64>,
    #[arg(long = "max-sdp-iters")]
    pub max_sdp_iters: Option<usize>,
    #[arg(long = "variable-bound")]
    pub variable_bound: Option<f64>,
    #[arg(long = "norm-tol")]
    pub norm_tol: Option<f64>,
    #[arg(long = "report-tol")]
    pub report_tol: Option<f64>,
    /// Also write `sweep.svg`.
    #[arg(long)]
    pub svg: bool,
    /// Also write the final filter-step LMI as sparse triplets (`lmi_step1.txt`).
    #[arg(long = "dump-lmi")]
    pub dump_lmi: bool,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    pub problem: PathBuf,
    #[arg(long)]
    pub filter: PathBuf,
    /// Replace the filter by `γ₀ T_εd⁻¹ Q` before measuring.
    #[arg(long = "post-scale")]
    pub post_scale: bool,
    /// Multiply the filter output by this factor.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub gamma0: Option<f64>,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long = "norm-tol")]
    pub norm_tol: Option<f64>,
    #[arg(long)]
    pub svg: bool,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InfeasibleAtStep1(_) | Error::ImproperScaling | Error::UnstableScaling => {
            EXIT_INFEASIBLE
        }
        Error::Solver(_)
        | Error::SingularRecovery
        | Error::SingularCompletion
        | Error::SingularResolvent { .. } => EXIT_NONCONVERGED,
        _ => EXIT_INPUT,
    }
}

/// Outcome of a successful run (possibly nonconverged).
#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: u8,
    pub summary: String,
    pub files: Vec<PathBuf>,
}

/// Parses arguments, runs, prints a summary or the error, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(o) => {
            println!("{}", o.summary);
            o.code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(main_with_args(std::env::args_os()))
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Synth(a) => run_synthesize(a),
        Command::Analyze(a) => run_analyze(a),
    }
}

/// Synthesis settings from the file with command-line overrides.
pub fn synthesis_config(section: &SynthesisSection, a: &SynthArgs) -> Result<SynthesisConfig> {
    let mut cfg = SynthesisConfig::default();
    cfg.gamma0 = a.gamma0.or(section.gamma0).ok_or_else(|| {
        Error::InvalidProblem("missing field `synthesis.gamma0` (or pass --gamma0)".into())
    })?;
    positive("gamma0", cfg.gamma0)?;
    if let Some(v) = a.mu.or(section.mu) {
        cfg.mu = nonneg("mu", v)?;
    }
    if let Some(v) = a.max_iters.or(section.max_outer_iters) {
        cfg.max_outer_iters = v;
    }
    if let Some(v) = &section.disturbance_channel {
        cfg.disturbance_channel = v.clone();
    }
    if let Some(v) = &section.fault_channel {
        cfg.fault_channel = v.clone();
    }
    if let Some(v) = a
        .shared_lyapunov
        .map(|s| s == OnOff::On)
        .or(section.shared_lyapunov)
    {
        cfg.shared_lyapunov = v;
    }
    if let Some(v) = a.gap_tol.or(section.gap_tol) {
        cfg.solver.gap_tol = positive("gap_tol", v)?;
    }
    if let Some(v) = a.feas_tol.or(section.feas_tol) {
        cfg.solver.feas_tol = positive("feas_tol", v)?;
    }
    if let Some(v) = a.max_sdp_iters.or(section.max_sdp_iters) {
        cfg.solver.max_iter = v;
    }
    if let Some(v) = a.variable_bound.or(section.variable_bound) {
        cfg.solver.variable_bound = Some(positive("variable_bound", v)?);
    }
    if let Some(v) = a.norm_tol.or(section.norm_tol) {
        cfg.norm_tol = positive("norm_tol", v)?;
    }
    if let Some(v) = a.report_tol {
        cfg.report_tol = positive("report_tol", v)?;
    }
    Ok(cfg)
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidProblem(format!(
            "`{name}` must be positive and finite, got {v}"
        )))
    }
}

fn nonneg(name: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::InvalidProblem(format!(
            "`{name}` must be nonnegative and finite, got {v}"
        )))
    }
}

fn out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| {
        Error::InvalidProblem(format!(
            "cannot create output directory {}: {e}",
            dir.display()
        ))
    })
}

pub fn run_synthesize(a: &SynthArgs) -> Result<Outcome> {
    let loaded = ProblemFile::read(&a.problem)?.load()?;
    let cfg = synthesis_config(&loaded.synthesis, a)?;
    let p = &loaded.plant;
    out_dir(&a.out_dir)?;
    let (solver, name): (Box<dyn SdpSolver>, &str) = match a.solver {
        Backend::Pd => (
            Box::new(PrimalDualSolver {
                options: cfg.solver.clone(),
            }),
            "primal-dual interior point",
        ),
        Backend::Barrier => (
            Box::new(BarrierSolver {
                options: cfg.solver.clone(),
            }),
            "primal log-barrier",
        ),
    };
    let r = synthesize_with(p, &cfg, solver.as_ref())?;
    let mut files = write_synthesis(&a.out_dir, &cfg, &r, &loaded, name, a.svg)?;
    if a.dump_lmi {
        files.push(dump_lmi(&a.out_dir, &loaded, &cfg, &r.slacks)?);
    }
    let code = match r.status {
        SynthesisStatus::Converged => EXIT_OK,
        SynthesisStatus::MaxIterations => EXIT_NONCONVERGED,
    };
    let summary = format!(
        "{}: nu = {:.6} (certified {:.6}), ||T_ed||_inf = {:.6}, gamma0 = {}, {} iterations",
        match r.status {
            SynthesisStatus::Converged => "converged",
            SynthesisStatus::MaxIterations => "not converged",
        },
        r.nu_reported,
        r.nu_certified,
        r.hinf_measured,
        r.gamma0,
        r.iterations
    );
    Ok(Outcome {
        code,
        summary,
        files,
    })
}

fn write_synthesis(
    dir: &Path,
    cfg: &SynthesisConfig,
    r: &SynthesisResult,
    loaded: &LoadedProblem,
    solver: &str,
    svg: bool,
) -> Result<Vec<PathBuf>> {
    let p = &loaded.plant;
    let mut files = Vec::new();
    let path = dir.join("filter.json");
    FilterFile::new(&r.filter).write(&path)?;
    files.push(path);
    let path = dir.join("certificates.json");
    output::write_json(&path, &Certificates::new(r))?;
    files.push(path);
    let sweep = r.verification.sweep(
        &r.verification.grid(),
        r.gamma0,
        r.nu_reported,
        loaded.weights.as_ref(),
    )?;
    let path = dir.join("sweep.csv");
    std::fs::write(&path, sweep_csv(&sweep))?;
    files.push(path);
    if svg {
        let path = dir.join("sweep.svg");
        std::fs::write(&path, sweep_svg(&sweep, "closed-loop singular values"))?;
        files.push(path);
    }
    let path = dir.join("report.txt");
    std::fs::write(
        &path,
        synthesis_report(cfg, r, solver, (p.n(), p.p_z(), p.p_y())),
    )?;
    files.push(path);
    Ok(files)
}

fn dump_lmi(
    dir: &Path,
    loaded: &LoadedProblem,
    cfg: &SynthesisConfig,
    slacks: &SlackVars,
) -> Result<PathBuf> {
    let step = build_filter_step(&loaded.plant, cfg, slacks)?;
    let path = dir.join("lmi_step1.txt");
    step.problem.dump(&path)?;
    Ok(path)
}

pub fn run_analyze(a: &AnalyzeArgs) -> Result<Outcome> {
    let loaded = ProblemFile::read(&a.problem)?.load()?;
    let p = &loaded.plant;
    let mut q = FilterFile::read(&a.filter)?;
    let section = &loaded.synthesis;
    let gamma0 = a
        .gamma0
        .or(section.gamma0)
        .map(|g| positive("gamma0", g))
        .transpose()?;
    let norm_tol = match a.norm_tol.or(section.norm_tol) {
        Some(v) => positive("norm_tol", v)?,
        None => crate::lti::DEFAULT_NORM_TOL,
    };
    let fault = section.fault_channel.clone().unwrap_or_else(|| "f".into());
    let dist = section
        .disturbance_channel
        .clone()
        .unwrap_or_else(|| "d".into());
    let scale = a.scale.unwrap_or(1.0);
    if !scale.is_finite() || scale == 0.0 {
        return Err(Error::InvalidProblem(format!(
            "`scale` must be finite and nonzero, got {scale}"
        )));
    }
    q = q.scale(scale);
    out_dir(&a.out_dir)?;
    let mut files = Vec::new();
    if a.post_scale {
        let g = gamma0.ok_or_else(|| {
            Error::InvalidProblem("--post-scale needs `synthesis.gamma0` (or pass --gamma0)".into())
        })?;
        q = post_scale_update(p, &q, g, &dist)?;
        let path = a.out_dir.join("filter_post_scaled.json");
        FilterFile::new(&q).write(&path)?;
        files.push(path);
    }
    let v = verify_with_tol(p, &q, &fault, &dist, norm_tol)?;
    let m = Measurements::new(&v, scale, a.post_scale, gamma0);
    let path = a.out_dir.join("measurements.json");
    output::write_json(&path, &m)?;
    files.push(path);
    let sweep = v.sweep(
        &v.grid(),
        gamma0.unwrap_or(v.hinf_disturbance),
        v.hminus_fault,
        loaded.weights.as_ref(),
    )?;
    let path = a.out_dir.join("sweep.csv");
    std::fs::write(&path, sweep_csv(&sweep))?;
    files.push(path);
    if a.svg {
        let path = a.out_dir.join("sweep.svg");
        std::fs::write(&path, sweep_svg(&sweep, "closed-loop singular values"))?;
        files.push(path);
    }
    let path = a.out_dir.join("report.txt");
    std::fs::write(&path, analysis_report(&m, q.n(), norm_tol))?;
    files.push(path);
    let summary = format!(
        "||T_ed||_inf = {:.6}, ||T_ef||_- = {:.6}, J = {:.6}",
        m.hinf_disturbance, m.hminus_fault, m.ratio
    );
    Ok(Outcome {
        code: EXIT_OK,
        summary,
        files,
    })
}
