//! Command-line front end: compute decay certificates, run verified
//! simulations, and sweep parameter ranges.
//!
//! Exit codes: 0 success (or the expected outcome), 1 bound violated,
//! 2 input error, 3 runtime error.

mod config;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use config::{DampingConfig, EpsPolicy, InitialData, Lambda1Source, RunSpec};
use wavedecay::analysis::{check_bound_with_window, DecayReport, Verdict, DEFAULT_FIT_START};
use wavedecay::certificate::{compute_certificate, DampingBounds, DecayCertificate, SpectralGap};
use wavedecay::spectral::{lambda1_box, lambda1_discrete, DomainSpec, Grid};
use wavedecay::wavesim::{
    grad_energy, l2_energy, simulate, simulate_counterexample, sine_mode, DampingKind,
    DampingSpec, EnergyTrace, NonlinearKind, WaveProblem,
};

const EXIT_BOUND: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(
    name = "wavedecay",
    version,
    about = "Decay certificates and verified energy traces for the damped wave equation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the decay certificate for given damping bounds and lambda1
    Certificate(CertificateArgs),
    /// Integrate a configured problem; write the energy trace CSV and report JSON
    Simulate(SimulateArgs),
    /// Tabulate certificates over parameter ranges as CSV
    Sweep(SweepArgs),
}

#[derive(Args)]
struct CertificateArgs {
    /// Infimum of the damping coefficient
    #[arg(long)]
    sigma0: f64,
    /// Supremum of the damping coefficient
    #[arg(long)]
    sigma1: f64,
    /// First Dirichlet eigenvalue, supplied directly
    #[arg(long, conflicts_with_all = ["interval_length", "box_lengths", "discrete"])]
    lambda1: Option<f64>,
    /// Interval length; lambda1 = pi^2 / L^2 (or the discrete eigenvalue with --discrete)
    #[arg(long, conflicts_with = "box_lengths")]
    interval_length: Option<f64>,
    /// Rectangle side lengths, comma separated
    #[arg(long, value_delimiter = ',')]
    box_lengths: Option<Vec<f64>>,
    /// Use the finite-difference eigenvalue of the domain instead of the analytic one
    #[arg(long)]
    discrete: bool,
    /// Interior grid points per axis for --discrete (default 999 in 1D, 99 per axis in 2D)
    #[arg(long, value_delimiter = ',')]
    points: Option<Vec<usize>>,
    /// Write the JSON here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Path to a flat `key = value` run configuration
    config: PathBuf,
    /// Succeed when the verdict is growth_detected instead of decay_certified
    #[arg(long)]
    expect_growth: bool,
}

#[derive(Args)]
struct SweepArgs {
    /// Range for sigma0: `v`, `v1,v2,...`, or `lo:hi:count`
    #[arg(long)]
    sigma0: String,
    /// Range for sigma1
    #[arg(long)]
    sigma1: String,
    /// Range for lambda1
    #[arg(long)]
    lambda1: String,
    /// Write the CSV here instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

struct Failure {
    code: u8,
    message: String,
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.into(),
    }
}

fn runtime_error(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        message: message.into(),
    }
}

/// Setup-phase failures are input errors regardless of the variant.
fn setup_failure(e: wavedecay::Error) -> Failure {
    input_error(e.to_string())
}

/// Run-phase failures keep their character: bad values are input errors,
/// everything else (CFL, bounds, convergence) is a runtime error.
fn run_failure(e: wavedecay::Error) -> Failure {
    match e {
        wavedecay::Error::InvalidParameter(_) => input_error(e.to_string()),
        _ => runtime_error(e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Certificate(args) => run_certificate(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Sweep(args) => run_sweep(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[derive(Serialize)]
struct CertificateJson {
    sigma0: f64,
    sigma1: f64,
    lambda1: f64,
    lambda1_provenance: String,
    eps_star: f64,
    eta_star: f64,
    alpha_star: f64,
    discriminant: f64,
    regime: String,
    critical_points: Vec<f64>,
    f_at_star: f64,
    g_at_star: f64,
}

fn certificate_json(bounds: &DampingBounds, gap: &SpectralGap, cert: &DecayCertificate) -> CertificateJson {
    CertificateJson {
        sigma0: bounds.sigma0(),
        sigma1: bounds.sigma1(),
        lambda1: gap.lambda1(),
        lambda1_provenance: gap.provenance().to_string(),
        eps_star: cert.eps_star,
        eta_star: cert.eta_star,
        alpha_star: cert.alpha_star,
        discriminant: cert.discriminant,
        regime: cert.regime.to_string(),
        critical_points: cert.critical_points.clone(),
        f_at_star: cert.f_at_star,
        g_at_star: cert.g_at_star,
    }
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serialization cannot fail");
    s.push('\n');
    s
}

fn emit(output: Option<&Path>, content: &str) -> Result<(), Failure> {
    match output {
        Some(path) => fs::write(path, content)
            .map_err(|e| runtime_error(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run_certificate(args: CertificateArgs) -> Result<u8, Failure> {
    let bounds = DampingBounds::new(args.sigma0, args.sigma1).map_err(setup_failure)?;
    let lengths: Option<Vec<f64>> = match (args.interval_length, args.box_lengths) {
        (Some(l), None) => Some(vec![l]),
        (None, Some(ls)) => Some(ls),
        (None, None) => None,
        (Some(_), Some(_)) => unreachable!("clap marks the flags as conflicting"),
    };
    let gap = match (args.lambda1, lengths) {
        (Some(v), None) => SpectralGap::user_supplied(v).map_err(setup_failure)?,
        (None, Some(lengths)) => {
            if args.discrete {
                let default_points = if lengths.len() == 1 { vec![999] } else { vec![99; 2] };
                let points = args.points.unwrap_or(default_points);
                let domain =
                    DomainSpec::new(lengths, vec![0.0; points.len().min(2)]).map_err(setup_failure)?;
                let grid = Grid::new(domain, &points).map_err(setup_failure)?;
                let lam = lambda1_discrete(&grid).map_err(run_failure)?;
                SpectralGap::discrete(lam).map_err(setup_failure)?
            } else {
                let lam = lambda1_box(&lengths).map_err(setup_failure)?;
                SpectralGap::analytic(lam).map_err(setup_failure)?
            }
        }
        (None, None) => {
            return Err(input_error(
                "one of --lambda1, --interval-length or --box-lengths is required",
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap marks the flags as conflicting"),
    };
    let cert = compute_certificate(&bounds, &gap).map_err(run_failure)?;
    let json = to_pretty_json(&certificate_json(&bounds, &gap, &cert));
    emit(args.output.as_deref(), &json)?;
    Ok(0)
}

#[derive(Serialize)]
struct DecayReportJson {
    alpha_star: f64,
    fitted_slope: Option<f64>,
    fitted_rate: Option<f64>,
    bound_satisfied: bool,
    max_bound_ratio: f64,
    fit_window: [f64; 2],
    verdict: String,
}

impl From<&DecayReport> for DecayReportJson {
    fn from(r: &DecayReport) -> Self {
        DecayReportJson {
            alpha_star: r.alpha_star,
            fitted_slope: r.fitted_slope,
            fitted_rate: r.fitted_rate,
            bound_satisfied: r.bound_satisfied,
            max_bound_ratio: r.max_bound_ratio,
            fit_window: [r.fit_window.0, r.fit_window.1],
            verdict: r.verdict.to_string(),
        }
    }
}

#[derive(Serialize)]
struct SimulationReportJson {
    lambda1: Option<f64>,
    lambda1_provenance: Option<String>,
    certificate: Option<CertificateJson>,
    eps_for_v: f64,
    samples: usize,
    report: DecayReportJson,
    initial_energy_bound: f64,
    max_bound_ratio_vs_initial_bound: f64,
}

fn trace_csv(trace: &EnergyTrace) -> String {
    let mut out = String::from("t,energy_total,energy_grad,energy_v\n");
    for s in trace.samples() {
        writeln!(out, "{},{},{},{}", s.t, s.total, s.grad, s.velocity).unwrap();
    }
    out
}

fn ratio_against(trace: &EnergyTrace, e0: f64, alpha: f64) -> f64 {
    let mut max_ratio: f64 = 0.0;
    for s in trace.samples() {
        let envelope = e0 * (-2.0 * alpha * s.t).exp();
        let ratio = if envelope > 0.0 {
            s.total / envelope
        } else if s.total == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_ratio = max_ratio.max(ratio);
    }
    max_ratio
}

fn load_nodal_values(path: &Path, expected: usize) -> Result<Vec<f64>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    let values: Vec<f64> = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| input_error(format!("{}: cannot parse '{p}'", path.display())))
        })
        .collect::<Result<_, _>>()?;
    if values.len() != expected {
        return Err(input_error(format!(
            "{}: expected {expected} nodal values, got {}",
            path.display(),
            values.len()
        )));
    }
    Ok(values)
}

fn load_damping_table(path: &Path, nodes: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>), Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
    let mut times = Vec::new();
    let mut frames = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut row = Vec::with_capacity(nodes + 1);
        for p in line.split(',') {
            row.push(p.trim().parse::<f64>().map_err(|_| {
                input_error(format!("{}: line {}: cannot parse '{p}'", path.display(), idx + 1))
            })?);
        }
        if row.len() != nodes + 1 {
            return Err(input_error(format!(
                "{}: line {}: expected t plus {nodes} values, got {} fields",
                path.display(),
                idx + 1,
                row.len()
            )));
        }
        times.push(row[0]);
        frames.push(row[1..].to_vec());
    }
    if times.is_empty() {
        return Err(input_error(format!("{}: no frames", path.display())));
    }
    Ok((times, frames))
}

fn build_initial(data: &InitialData, grid: &Grid) -> Result<Vec<f64>, Failure> {
    match data {
        InitialData::Zero => Ok(vec![0.0; grid.node_count()]),
        InitialData::Sine { modes, amplitude } => {
            sine_mode(grid, modes, *amplitude).map_err(setup_failure)
        }
        InitialData::File(path) => load_nodal_values(path, grid.node_count()),
    }
}

struct RunOutcome {
    trace: EnergyTrace,
    report: DecayReport,
    json: SimulationReportJson,
}

fn run_standard(spec: &RunSpec) -> Result<RunOutcome, Failure> {
    let domain =
        DomainSpec::new(spec.lengths.clone(), spec.offsets.clone()).map_err(setup_failure)?;
    let grid = Grid::new(domain, &spec.points).map_err(setup_failure)?;

    let gap = match &spec.lambda1 {
        Lambda1Source::Analytic => {
            SpectralGap::analytic(lambda1_box(&spec.lengths).map_err(setup_failure)?)
                .map_err(setup_failure)?
        }
        Lambda1Source::Discrete => {
            SpectralGap::discrete(lambda1_discrete(&grid).map_err(run_failure)?)
                .map_err(setup_failure)?
        }
        Lambda1Source::Value(v) => SpectralGap::user_supplied(*v).map_err(setup_failure)?,
    };

    let (s0, s1) = spec.bounds.expect("standard runs carry bounds");
    let bounds = DampingBounds::new(s0, s1).map_err(setup_failure)?;
    let cert = compute_certificate(&bounds, &gap).map_err(run_failure)?;
    let eps = match &spec.eps {
        EpsPolicy::Certificate => cert.eps_star,
        EpsPolicy::Value(v) => *v,
    };

    let kind = match &spec.damping {
        DampingConfig::Constant(a) => DampingKind::Constant(*a),
        DampingConfig::Sinusoidal {
            base,
            amplitude,
            omega,
            spatial,
        } => DampingKind::Sinusoidal {
            base: *base,
            amplitude: *amplitude,
            omega: *omega,
            spatial: *spatial,
        },
        DampingConfig::Tabulated(path) => {
            let (times, frames) = load_damping_table(path, grid.node_count())?;
            DampingKind::Tabulated { times, frames }
        }
        DampingConfig::TwoPlusSin => DampingKind::Nonlinear(NonlinearKind::TwoPlusSin),
        DampingConfig::Rational { m0, m1 } => {
            DampingKind::Nonlinear(NonlinearKind::Rational { m0: *m0, m1: *m1 })
        }
        DampingConfig::Counterexample => unreachable!("dispatched before run_standard"),
    };
    let damping = DampingSpec::new(kind, &bounds);

    let u0 = build_initial(&spec.u0, &grid)?;
    let u1 = build_initial(&spec.u1, &grid)?;

    // the analytic prefactor of the bound, from the discrete initial data
    let v0: Vec<f64> = u1.iter().zip(&u0).map(|(a, b)| a + eps * b).collect();
    let initial_bound = grad_energy(&grid, &u0) + l2_energy(&grid, &v0);

    let problem = WaveProblem::new(grid, damping, u0, u1, spec.t_end, spec.cfl_factor)
        .map_err(setup_failure)?;
    let trace = simulate(&problem, eps, spec.sample_every).map_err(run_failure)?;

    let window = fit_window(spec, &trace);
    let report = check_bound_with_window(&trace, cert.alpha_star, spec.bound_tol, window)
        .map_err(run_failure)?;
    let ratio_analytic = ratio_against(&trace, initial_bound, cert.alpha_star);

    let json = SimulationReportJson {
        lambda1: Some(gap.lambda1()),
        lambda1_provenance: Some(gap.provenance().to_string()),
        certificate: Some(certificate_json(&bounds, &gap, &cert)),
        eps_for_v: eps,
        samples: trace.samples().len(),
        report: DecayReportJson::from(&report),
        initial_energy_bound: initial_bound,
        max_bound_ratio_vs_initial_bound: ratio_analytic,
    };
    Ok(RunOutcome {
        trace,
        report,
        json,
    })
}

fn run_counterexample(spec: &RunSpec) -> Result<RunOutcome, Failure> {
    let trace = simulate_counterexample(spec.points[0], spec.t_end, spec.cfl_factor, spec.sample_every)
        .map_err(run_failure)?;
    let window = fit_window(spec, &trace);
    let report =
        check_bound_with_window(&trace, 0.0, spec.bound_tol, window).map_err(run_failure)?;
    let initial_bound = trace.samples().first().map(|s| s.total).unwrap_or(0.0);
    let ratio_analytic = ratio_against(&trace, initial_bound, 0.0);
    let json = SimulationReportJson {
        lambda1: None,
        lambda1_provenance: None,
        certificate: None,
        eps_for_v: 0.0,
        samples: trace.samples().len(),
        report: DecayReportJson::from(&report),
        initial_energy_bound: initial_bound,
        max_bound_ratio_vs_initial_bound: ratio_analytic,
    };
    Ok(RunOutcome {
        trace,
        report,
        json,
    })
}

fn fit_window(spec: &RunSpec, trace: &EnergyTrace) -> (f64, f64) {
    let t_end = trace.samples().last().map(|s| s.t).unwrap_or(0.0);
    let lo = spec.fit_lo.unwrap_or(if t_end > DEFAULT_FIT_START {
        DEFAULT_FIT_START
    } else {
        0.0
    });
    (lo, spec.fit_hi.unwrap_or(t_end))
}

fn run_simulate(args: SimulateArgs) -> Result<u8, Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| input_error(format!("cannot read {}: {e}", args.config.display())))?;
    let dir = args.config.parent().unwrap_or(Path::new("."));
    let spec = RunSpec::from_text(&text, dir)
        .map_err(|e| input_error(format!("{}: {e}", args.config.display())))?;

    let outcome = match spec.damping {
        DampingConfig::Counterexample => run_counterexample(&spec)?,
        _ => run_standard(&spec)?,
    };

    fs::write(&spec.trace_path, trace_csv(&outcome.trace))
        .map_err(|e| runtime_error(format!("cannot write {}: {e}", spec.trace_path.display())))?;
    fs::write(&spec.report_path, to_pretty_json(&outcome.json))
        .map_err(|e| runtime_error(format!("cannot write {}: {e}", spec.report_path.display())))?;

    println!(
        "verdict: {} (max bound ratio {}, trace {}, report {})",
        outcome.report.verdict,
        outcome.report.max_bound_ratio,
        spec.trace_path.display(),
        spec.report_path.display()
    );

    let ok = if args.expect_growth {
        outcome.report.verdict == Verdict::GrowthDetected
    } else {
        outcome.report.verdict == Verdict::DecayCertified
    };
    Ok(if ok { 0 } else { EXIT_BOUND })
}

fn run_sweep(args: SweepArgs) -> Result<u8, Failure> {
    let mut sigma0s = config::parse_range(&args.sigma0).map_err(input_error)?;
    let mut sigma1s = config::parse_range(&args.sigma1).map_err(input_error)?;
    let mut lambda1s = config::parse_range(&args.lambda1).map_err(input_error)?;
    // canonical lexicographic row order, independent of how ranges were written
    for r in [&mut sigma0s, &mut sigma1s, &mut lambda1s] {
        r.sort_by(|a, b| a.partial_cmp(b).expect("ranges are finite"));
        r.dedup();
    }

    let mut out = String::from("sigma0,sigma1,lambda1,eps_star,alpha_star,discriminant,regime\n");
    for &s0 in &sigma0s {
        for &s1 in &sigma1s {
            for &l1 in &lambda1s {
                let bounds = DampingBounds::new(s0, s1).map_err(|e| {
                    input_error(format!("tuple ({s0}, {s1}, {l1}): {e}"))
                })?;
                let gap = SpectralGap::user_supplied(l1).map_err(|e| {
                    input_error(format!("tuple ({s0}, {s1}, {l1}): {e}"))
                })?;
                let cert = compute_certificate(&bounds, &gap).map_err(run_failure)?;
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    s0, s1, l1, cert.eps_star, cert.alpha_star, cert.discriminant, cert.regime
                )
                .unwrap();
            }
        }
    }
    emit(args.output.as_deref(), &out)?;
    Ok(0)
}
