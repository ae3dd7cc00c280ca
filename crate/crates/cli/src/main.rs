//! `fspair`: build summation pairs, verify them and probe the associated
//! holomorphic function from the command line.
//!
//! Exit codes: 0 on success, 1 when a computed residual misses the requested
//! tolerance or a numerical routine gives up (reports are still written), 2 on
//! usage errors and invalid inputs.

mod cplx;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use fspair::measures::{load_pair, make_guinand, make_meyer, make_poisson, FSPair};
use fspair::nevanlinna::{
    bridge_rhs, bridge_sum, ef_coeff, fit_sample, min_k, neg_index, nev_matrix, random_points,
    recover_measure, HolomorphicModel, DEFAULT_NEG_TOL,
};
use fspair::qseries::{guinand_coeffs, r3_sequence, theta_coeffs};
use fspair::quadrature::{integrate, QuadOptions};
use fspair::testfn::{verify_pair, Profile, TestFunctionSpec};
use fspair::{Complex64, Error};

use cplx::parse_complex;

const POISSON_TRUNC: usize = 64;
const GUINAND_TRUNC: usize = 512;
const MEYER_TRUNC: usize = 2000;

#[derive(Parser)]
#[command(name = "fspair", version, about = "Fourier summation pairs: construction, verification and analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Built-in pairs.
    Pairs {
        #[command(subcommand)]
        action: PairsAction,
    },
    /// Compare both sides of the summation formula for one test function.
    Verify(VerifyArgs),
    /// Coefficient tables as CSV.
    Coeffs(CoeffsArgs),
    /// Tapered sum against the measure integral of the bridge kernel.
    Bridge(BridgeArgs),
    /// Horizontal-line mean coefficient of the holomorphic function.
    Efcoef(EfcoefArgs),
    /// Weighted measure of an interval from boundary values.
    Recover(RecoverArgs),
    /// Negative index of random Hermitian test matrices.
    Nevindex(NevindexArgs),
}

#[derive(Subcommand)]
enum PairsAction {
    List,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PairKind {
    Poisson,
    Guinand,
    Meyer,
    File,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long, value_enum)]
    pair: PairKind,
    /// Pair file for `--pair file`.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Eta-quotient parameter for `--pair guinand`.
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Truncation: t_max = λ_max for poisson, n_max otherwise.
    #[arg(long)]
    trunc: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestFnKind {
    Bump,
    Plateau,
    Gaussian,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Record the wall clock in `runtime_ms` (otherwise 0).
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, value_enum)]
    testfn: TestFnKind,
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    shift: f64,
    /// Plateau radius where the profile starts to fall.
    #[arg(long, default_value_t = 0.5)]
    inner: f64,
    /// Plateau radius where the profile reaches 0.
    #[arg(long, default_value_t = 1.0)]
    outer: f64,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Family {
    Guinand,
    Theta,
    R3,
}

#[derive(Args)]
struct CoeffsArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, allow_negative_numbers = true)]
    c: Option<f64>,
    /// Largest index written.
    #[arg(long)]
    n: usize,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BridgeArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, value_parser = parse_complex)]
    z: Complex64,
    #[arg(long, value_parser = parse_complex)]
    w: Complex64,
    #[arg(long)]
    tmax: f64,
    /// Also evaluate at T = 32, 64, … up to tmax.
    #[arg(long)]
    sweep: bool,
    /// Fail (exit 1) when the residual at tmax exceeds this.
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct EfcoefArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long)]
    y: f64,
    #[arg(long = "T")]
    t: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct RecoverArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, allow_negative_numbers = true)]
    a: f64,
    #[arg(long, allow_negative_numbers = true)]
    b: f64,
    /// Height of the contour above the real axis.
    #[arg(long)]
    s: f64,
    #[arg(long)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct NevindexArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    points: usize,
    #[arg(long)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

/// Why a run did not end with exit 0.
enum Failure {
    Usage(String),
    Numerical(String),
    Tolerance,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Quadrature { .. } | Error::IllConditioned(_) | Error::ResidualFloor { .. } => {
                Failure::Numerical(e.to_string())
            }
            other => Failure::Usage(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = match cli.command {
        Command::Pairs { action: PairsAction::List } => list_pairs(),
        Command::Verify(a) => verify(a),
        Command::Coeffs(a) => coeffs(a),
        Command::Bridge(a) => bridge(a),
        Command::Efcoef(a) => efcoef(a),
        Command::Recover(a) => recover(a),
        Command::Nevindex(a) => nevindex(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance) => ExitCode::from(1),
        Err(Failure::Numerical(msg)) => {
            eprintln!("fspair: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("fspair: {msg}");
            ExitCode::from(2)
        }
    }
}

fn list_pairs() -> Outcome {
    println!("poisson  Dirac comb, self-dual; --trunc sets t_max = lambda_max (default {POISSON_TRUNC})");
    println!("guinand  eta-quotient family, needs --c; --trunc sets n_max (default {GUINAND_TRUNC})");
    println!("meyer    odd measure from sums of three squares; --trunc sets n_max (default {MEYER_TRUNC})");
    println!("file     JSON pair file given by --file");
    Ok(())
}

fn build_pair(args: &PairArgs) -> Result<FSPair, Failure> {
    let usage = |m: &str| Failure::Usage(m.to_owned());
    if args.pair != PairKind::File && args.file.is_some() {
        return Err(usage("--file only applies to --pair file"));
    }
    if args.pair != PairKind::Guinand && args.c.is_some() {
        return Err(usage("--c only applies to --pair guinand"));
    }
    let pair = match args.pair {
        PairKind::Poisson => {
            let t = args.trunc.unwrap_or(POISSON_TRUNC) as f64;
            make_poisson(t, t)?
        }
        PairKind::Guinand => {
            let c = args.c.ok_or_else(|| usage("--pair guinand needs --c"))?;
            make_guinand(c, args.trunc.unwrap_or(GUINAND_TRUNC))?
        }
        PairKind::Meyer => make_meyer(args.trunc.unwrap_or(MEYER_TRUNC))?,
        PairKind::File => {
            if args.trunc.is_some() {
                return Err(usage("--trunc does not apply to --pair file"));
            }
            let path = args.file.as_ref().ok_or_else(|| usage("--pair file needs --file"))?;
            load_pair(path)?
        }
    };
    Ok(pair)
}

fn pair_params(pair: &FSPair) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("pair".into(), json!(pair.name));
    m.insert("mu_truncation".into(), json!(pair.mu.truncation_radius()));
    m.insert("a_truncation".into(), json!(pair.a.truncation()));
    m.insert("strip_constant".into(), json!(pair.strip_constant));
    m
}

fn elapsed_ms(start: Instant, timing: bool) -> u64 {
    if timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn emit<T: Serialize>(report: &T, out: &OutputArgs) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| Failure::Numerical(e.to_string()))?;
    text.push('\n');
    match &out.json {
        Some(path) => write_text(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// The flat report shared by the analysis subcommands.
#[derive(Serialize)]
struct ValueReport {
    value_re: f64,
    value_im: f64,
    target_re: f64,
    target_im: f64,
    abs_residual: f64,
    /// Error estimate attached to the target, where one exists.
    target_error: f64,
    params: Map<String, Value>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    sweep: Vec<SweepRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    eigenvalues: Vec<f64>,
    runtime_ms: u64,
}

#[derive(Serialize)]
struct SweepRow {
    tmax: f64,
    value_re: f64,
    value_im: f64,
    abs_residual: f64,
}

impl ValueReport {
    fn new(value: Complex64, target: Complex64, target_error: f64, params: Map<String, Value>) -> Self {
        Self {
            value_re: value.re,
            value_im: value.im,
            target_re: target.re,
            target_im: target.im,
            abs_residual: (value - target).norm(),
            target_error,
            params,
            sweep: Vec::new(),
            eigenvalues: Vec::new(),
            runtime_ms: 0,
        }
    }
}

fn check_tol(residual: f64, tol: Option<f64>) -> Outcome {
    match tol {
        Some(t) if !(residual <= t) => {
            eprintln!("fspair: residual {residual:e} exceeds tolerance {t:e}");
            Err(Failure::Tolerance)
        }
        _ => Ok(()),
    }
}

fn verify(args: VerifyArgs) -> Outcome {
    let start = Instant::now();
    let pair = build_pair(&args.pair)?;
    let profile = match args.testfn {
        TestFnKind::Bump => Profile::Bump,
        TestFnKind::Plateau => Profile::Plateau {
            inner: args.inner,
            outer: args.outer,
        },
        TestFnKind::Gaussian => Profile::GaussianDiag,
    };
    let spec = TestFunctionSpec::new(profile, args.scale, args.shift)?;
    let mut report = verify_pair(&pair, &spec, args.tol)?;
    report.runtime_ms = elapsed_ms(start, args.out.timing);
    emit(&report, &args.out)?;
    if report.degraded() {
        eprintln!("fspair: report is degraded (truncation or quadrature limited)");
    }
    check_tol(report.abs_residual(), Some(args.tol))
}

fn coeffs(args: CoeffsArgs) -> Outcome {
    if args.family != Family::Guinand && args.c.is_some() {
        return Err(Failure::Usage("--c only applies to --family guinand".into()));
    }
    let mut csv = String::from("n,alpha_n\n");
    match args.family {
        Family::Guinand => {
            let c = args
                .c
                .ok_or_else(|| Failure::Usage("--family guinand needs --c".into()))?;
            let s = guinand_coeffs(c, args.n)?;
            for (n, v) in s.coeffs().iter().enumerate() {
                let _ = writeln!(csv, "{n},{v}");
            }
        }
        Family::Theta => {
            for (n, v) in theta_coeffs(args.n).coeffs().iter().enumerate() {
                let _ = writeln!(csv, "{n},{v}");
            }
        }
        Family::R3 => {
            for (n, v) in r3_sequence(args.n).values().iter().enumerate() {
                let _ = writeln!(csv, "{n},{v}");
            }
        }
    }
    match &args.csv {
        Some(path) => write_text(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn bridge(args: BridgeArgs) -> Outcome {
    let start = Instant::now();
    let pair = build_pair(&args.pair)?;
    let target = bridge_rhs(&pair, args.k, args.w, args.z)?;
    let value = bridge_sum(&pair, args.k, args.w, args.z, args.tmax)?;
    let mut params = pair_params(&pair);
    params.insert("k".into(), json!(args.k));
    params.insert("z".into(), json!([args.z.re, args.z.im]));
    params.insert("w".into(), json!([args.w.re, args.w.im]));
    params.insert("tmax".into(), json!(args.tmax));
    let mut report = ValueReport::new(value, target.value, target.error, params);
    if args.sweep {
        let mut t = 32.0;
        while t < args.tmax {
            let v = bridge_sum(&pair, args.k, args.w, args.z, t)?;
            report.sweep.push(SweepRow {
                tmax: t,
                value_re: v.re,
                value_im: v.im,
                abs_residual: (v - target.value).norm(),
            });
            t *= 2.0;
        }
        report.sweep.push(SweepRow {
            tmax: args.tmax,
            value_re: value.re,
            value_im: value.im,
            abs_residual: report.abs_residual,
        });
    }
    report.runtime_ms = elapsed_ms(start, args.out.timing);
    emit(&report, &args.out)?;
    check_tol(report.abs_residual, args.tol)
}

fn efcoef(args: EfcoefArgs) -> Outcome {
    let start = Instant::now();
    let pair = build_pair(&args.pair)?;
    let value = ef_coeff(&pair, args.lambda, args.y, args.t)?;
    // the series is ½a(0) + Σ_{λ>0} a(λ) e^{2πiλz}
    let target = if args.lambda > 0.0 {
        pair.a.value(args.lambda)
    } else if args.lambda == 0.0 {
        0.5 * pair.a.value(0.0)
    } else {
        Complex64::new(0.0, 0.0)
    };
    let mut params = pair_params(&pair);
    params.insert("lambda".into(), json!(args.lambda));
    params.insert("y".into(), json!(args.y));
    params.insert("T".into(), json!(args.t));
    let mut report = ValueReport::new(value, target, 0.0, params);
    report.runtime_ms = elapsed_ms(start, args.out.timing);
    emit(&report, &args.out)?;
    check_tol(report.abs_residual, args.tol)
}

/// `½ ∫_a^b dμ/(1+t²)^{k+1}` straight from the stored measure.
fn recovery_target(pair: &FSPair, k: usize, a: f64, b: f64) -> Result<(f64, f64), Failure> {
    let weight = |t: f64| (1.0 + t * t).powi(-(k as i32 + 1));
    let atoms: f64 = pair
        .mu
        .atoms_in(a, b)
        .iter()
        .map(|at| at.weight.re * weight(at.location))
        .sum();
    let (density, error) = match pair.mu.density() {
        Some(d) => {
            let r = integrate(
                |t| Complex64::new(d.eval(t) * weight(t), 0.0),
                a,
                b,
                &QuadOptions::with_abs_tol(1e-12),
            )
            .into_result()?;
            (r.value.re, r.error)
        }
        None => (0.0, 0.0),
    };
    Ok((0.5 * (atoms + density), 0.5 * error))
}

fn recover(args: RecoverArgs) -> Outcome {
    let start = Instant::now();
    let pair = build_pair(&args.pair)?;
    if !pair.mu.is_real() {
        return Err(Failure::Usage(format!("{} has a complex measure; recovery needs a real one", pair.name)));
    }
    let (target, target_error) = recovery_target(&pair, args.k, args.a, args.b)?;
    let sample = fit_sample(args.k, pair.strip_constant);
    let mut params = pair_params(&pair);
    let model = HolomorphicModel::fit(pair, args.k, &sample)?;
    let value = recover_measure(&model, args.a, args.b, args.s)?;
    params.insert("k".into(), json!(args.k));
    params.insert("a".into(), json!(args.a));
    params.insert("b".into(), json!(args.b));
    params.insert("s".into(), json!(args.s));
    let mut report = ValueReport::new(
        Complex64::new(value, 0.0),
        Complex64::new(target, 0.0),
        target_error,
        params,
    );
    report.runtime_ms = elapsed_ms(start, args.out.timing);
    emit(&report, &args.out)?;
    check_tol(report.abs_residual, args.tol)
}

fn nevindex(args: NevindexArgs) -> Outcome {
    let start = Instant::now();
    let pair = build_pair(&args.pair)?;
    let mut params = pair_params(&pair);
    let model = HolomorphicModel::fitted(pair)?;
    let points = random_points(args.points, args.seed);
    let m = nev_matrix(&model, &points)?;
    let index = neg_index(&m, DEFAULT_NEG_TOL)?;
    let bound = min_k(model.pair().mu.degree_bound());
    // a signed measure gives a difference of two such functions, with no bound
    let bounded = model.pair().mu.is_nonnegative();
    params.insert("points".into(), json!(args.points));
    params.insert("seed".into(), json!(args.seed));
    params.insert("k".into(), json!(model.k()));
    params.insert("q_poly".into(), json!(model.q_poly()));
    params.insert("neg_tol".into(), json!(DEFAULT_NEG_TOL));
    params.insert("hermitian_defect".into(), json!(m.hermitian_defect()));
    params.insert("bound_applies".into(), json!(bounded));
    // value is the index, target the bound it may not exceed
    let mut report = ValueReport::new(
        Complex64::new(index as f64, 0.0),
        Complex64::new(bound as f64, 0.0),
        0.0,
        params,
    );
    report.abs_residual = if bounded { index.saturating_sub(bound) as f64 } else { 0.0 };
    report.eigenvalues = m.eigenvalues();
    report.runtime_ms = elapsed_ms(start, args.out.timing);
    emit(&report, &args.out)?;
    if bounded && index > bound {
        eprintln!("fspair: {index} negative eigenvalues exceed the bound {bound}");
        return Err(Failure::Tolerance);
    }
    Ok(())
}
