//! Command-line front end: problem files in, JSON reports and CSV samples out.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::audit::{fourier_type_report, multiplier_apply, step1_audit, step2_audit, step3_audit};
use crate::besov::{besov_breakdown, BesovParams, DyadicPartition};
use crate::delay::verify_transfer;
use crate::error::Error;
use crate::fd::{compare, consistency_residual, observed_orders, solve_fd};
use crate::fourier::{sample, TrigPolynomial};
use crate::io::{write_samples_csv, ProblemFile};
use crate::solver::{margins, residual, resolvent_sequence, solve_with_limit, uniqueness_probe};
use crate::symbol::{ProblemSpec, DEFAULT_COND_LIMIT};

pub const THREADS_ENV: &str = "PERISOLVE_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_RESONANCE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "perisolve",
    version,
    about = "Periodic solutions of linear delay differential equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve by resolvent application and write time samples.
    Solve(SolveArgs),
    /// Solve with the finite-difference oracle.
    Oracle(OracleArgs),
    /// Solve, check residuals and compare against the oracle.
    Verify(VerifyArgs),
    /// M-boundedness, step and Fourier-type audits.
    Audit(AuditArgs),
    /// Besov norm of a trigonometric polynomial or of the solution.
    Besov(BesovArgs),
    /// Per-frequency singular values of the characteristic matrix.
    Scan(ScanArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub problem: PathBuf,
    /// Truncation K; defaults to the largest forcing frequency.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub modes: Option<u64>,
    /// Sample count for the CSV.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: u64,
    #[arg(long, default_value_t = DEFAULT_COND_LIMIT, value_parser = positive)]
    pub cond_limit: f64,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Solution coefficients as JSON.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 512, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub modes: Option<u64>,
    /// Coarsest oracle grid; the ladder doubles it `levels − 1` times.
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: u64,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..=8))]
    pub levels: u64,
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_COND_LIMIT, value_parser = positive)]
    pub cond_limit: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(8..))]
    pub kmax: u64,
    /// Exponent for the Fourier-type check on the forcing.
    #[arg(long, default_value_t = 1.5, value_parser = positive)]
    pub fourier_exponent: f64,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BesovArgs {
    /// Problem file; the norm is taken of its solution and derivatives.
    #[arg(
        long,
        conflicts_with = "function",
        required_unless_present = "function"
    )]
    pub problem: Option<PathBuf>,
    /// Trigonometric polynomial JSON.
    #[arg(long)]
    pub function: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    pub s: f64,
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub grid: Option<u64>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub problem: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub modes: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("expected a positive number, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub threads: usize,
}

#[derive(Debug)]
pub struct UsageError(clap::Error);

impl UsageError {
    /// Help and version requests are reported through this path with exit code 0.
    pub fn exit_code(&self) -> i32 {
        use clap::error::ErrorKind;
        match self.0.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
            _ => EXIT_INPUT,
        }
    }

    pub fn print(&self) {
        let _ = self.0.print();
    }
}

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    parse_with_threads(argv, std::env::var(THREADS_ENV).ok().as_deref())
}

/// [`parse_args`] with the thread-count variable passed explicitly.
pub fn parse_with_threads<I, T>(argv: I, threads: Option<&str>) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(UsageError)?;
    let threads = match threads {
        None => 1,
        Some(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => n,
            _ => {
                let msg = format!("{THREADS_ENV} must be a positive integer, got `{raw}`");
                return Err(UsageError(clap::Error::raw(
                    clap::error::ErrorKind::InvalidValue,
                    msg,
                )));
            }
        },
    };
    Ok(RunConfig {
        command: cli.command,
        threads,
    })
}

#[derive(Debug)]
enum Failure {
    Solver(Error),
    Input(String),
    Output(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Solver(e)
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Solver(Error::Resonance { .. } | Error::SingularSystem { .. }) => {
                EXIT_RESONANCE
            }
            Failure::Solver(_) | Failure::Input(_) => EXIT_INPUT,
            Failure::Output(_) => EXIT_OUTPUT,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Solver(e) => write!(f, "{e}"),
            Failure::Input(msg) | Failure::Output(msg) => f.write_str(msg),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

/// Runs the command on a pool of `config.threads` workers and returns the exit code.
pub fn run(config: RunConfig) -> i32 {
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_OUTPUT;
        }
    };
    match pool.install(|| dispatch(&config.command)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: &Command) -> Outcome {
    match command {
        Command::Solve(a) => cmd_solve(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Besov(a) => cmd_besov(a),
        Command::Scan(a) => cmd_scan(a),
    }
}

fn load_problem(path: &Path) -> std::result::Result<(ProblemSpec, TrigPolynomial), Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(ProblemFile::from_json(&text)?.into_parts()?)
}

fn load_function(path: &Path) -> std::result::Result<TrigPolynomial, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Outcome {
    let fail = |e: io::Error| {
        let target = path.map_or_else(
            || "standard output".to_string(),
            |p| p.display().to_string(),
        );
        Failure::Output(format!("{target}: {e}"))
    };
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p).map_err(fail)?);
            write(&mut file).map_err(fail)?;
            file.flush().map_err(fail)
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock).map_err(fail)?;
            lock.flush().map_err(fail)
        }
    }
}

fn emit_json(path: Option<&Path>, value: &impl Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Output(e.to_string()))?;
    emit(path, |w| writeln!(w, "{text}"))
}

fn modes_for(requested: Option<u64>, f: &TrigPolynomial) -> u64 {
    requested.unwrap_or_else(|| f.max_frequency().max(1))
}

fn cmd_solve(a: &SolveArgs) -> Outcome {
    let (p, f) = load_problem(&a.problem)?;
    let sol = solve_with_limit(&p, &f, modes_for(a.modes, &f), a.cond_limit)?;
    let grid = a.grid as usize;
    if grid as u64 <= 2 * sol.u.max_frequency() {
        return Err(Error::NyquistViolation {
            grid,
            freq: sol.u.max_frequency(),
        }
        .into());
    }
    emit(a.out.as_deref(), |w| {
        write_samples_csv(w, &sample(&sol.u, grid))
    })?;
    if let Some(path) = &a.coeffs {
        emit_json(Some(path), &sol.u)?;
    }
    if let Some(path) = &a.report {
        emit_json(
            Some(path),
            &json!({
                "modes": sol.modes,
                "residual_coeff": sol.residual_coeff,
                "resonance_margin": sol.resonance_margin,
                "frequencies": sol.u.len(),
            }),
        )?;
    }
    Ok(())
}

fn cmd_oracle(a: &OracleArgs) -> Outcome {
    let (p, f) = load_problem(&a.problem)?;
    let fd = solve_fd(&p, &f, a.grid as usize)?;
    emit(a.out.as_deref(), |w| write_samples_csv(w, &fd.samples))?;
    if let Some(path) = &a.report {
        emit_json(Some(path), &json!({ "grid": fd.grid, "cond": fd.cond }))?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct OracleRow {
    grid: usize,
    sup_error: f64,
    consistency_residual: f64,
    cond: f64,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    modes: u64,
    coeff_defect: f64,
    grid_defect: f64,
    residual_coeff: f64,
    multiplier_defect: f64,
    transfer_defect: f64,
    transfer_bound: f64,
    resonance_margin: f64,
    uniqueness_margin: f64,
    oracle: Vec<OracleRow>,
    observed_orders: Vec<f64>,
    pass: bool,
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let (p, f) = load_problem(&a.problem)?;
    let modes = modes_for(a.modes, &f);
    let sol = solve_with_limit(&p, &f, modes, a.cond_limit)?;
    let res = residual(&p, &sol.u, &f)?;
    let (resolvents, _) = resolvent_sequence(&p, modes, a.cond_limit)?;
    let multiplier_defect = multiplier_apply(&resolvents, &f)?.max_coeff_distance(&sol.u);
    let transfer_grid = 4 * sol.u.max_frequency() as usize + 8;
    let transfer = verify_transfer(p.delay(), &sol.u, sol.u.max_frequency(), transfer_grid)?;

    let mut oracle = Vec::new();
    let mut grid = a.grid as usize;
    for _ in 0..a.levels {
        let fd = solve_fd(&p, &f, grid)?;
        oracle.push(OracleRow {
            grid,
            sup_error: compare(&fd, &sol),
            consistency_residual: consistency_residual(&p, &sol.u, &f, grid)?,
            cond: fd.cond,
        });
        grid *= 2;
    }
    let errors: Vec<f64> = oracle.iter().map(|r| r.sup_error).collect();
    let report = VerifyReport {
        modes,
        coeff_defect: res.coeff_defect,
        grid_defect: res.grid_defect,
        residual_coeff: sol.residual_coeff,
        multiplier_defect,
        transfer_defect: transfer.defect,
        transfer_bound: transfer.quadrature_bound,
        resonance_margin: sol.resonance_margin,
        uniqueness_margin: uniqueness_probe(&p, modes),
        observed_orders: observed_orders(&errors),
        pass: res.coeff_defect <= a.tol && transfer.defect <= transfer.quadrature_bound.max(a.tol),
        oracle,
    };
    emit_json(a.report.as_deref(), &report)
}

fn cmd_audit(a: &AuditArgs) -> Outcome {
    let (p, f) = load_problem(&a.problem)?;
    let n = p.order() as u64;
    let step3 = step3_audit(&p, a.kmax)?;
    let step1 = step1_audit(n, a.kmax)?;
    let step2 = step2_audit(n, a.kmax)?;
    let fourier_type = if f.is_empty() {
        serde_json::Value::Null
    } else {
        let grid = 8 * f.max_frequency() as usize + 64;
        serde_json::to_value(fourier_type_report(&f, a.fourier_exponent, grid)?)
            .map_err(|e| Failure::Output(e.to_string()))?
    };
    emit_json(
        a.report.as_deref(),
        &json!({
            "kmax": a.kmax,
            "order": n,
            "m_bound": step3.families,
            "resolvent_identity_defect": step3.resolvent_identity_defect,
            "resolvent_identity_pass": step3.resolvent_identity_pass,
            "algebraic_identity_defect": step3.algebraic_identity_defect,
            "step1": step1,
            "step2": step2,
            "fourier_type": fourier_type,
        }),
    )
}

fn cmd_besov(a: &BesovArgs) -> Outcome {
    let params = BesovParams::new(a.s, a.p, a.q)?;
    let (targets, labels): (Vec<TrigPolynomial>, Vec<String>) = match (&a.function, &a.problem) {
        (Some(path), _) => (vec![load_function(path)?], vec!["f".to_string()]),
        (None, Some(path)) => {
            let (p, f) = load_problem(path)?;
            let sol = solve_with_limit(&p, &f, modes_for(None, &f), DEFAULT_COND_LIMIT)?;
            let mut out = vec![sol.u.clone()];
            for j in 1..=p.order() as u32 {
                out.push(crate::fourier::derivative(&sol.u, j));
            }
            let labels = (0..out.len()).map(|j| format!("u^({j})")).collect();
            (out, labels)
        }
        (None, None) => {
            return Err(Failure::Input(
                "either --function or --problem is required".into(),
            ))
        }
    };
    let max_freq = targets
        .iter()
        .map(TrigPolynomial::max_frequency)
        .max()
        .unwrap_or(0);
    let part = DyadicPartition::covering(max_freq);
    let grid = a.grid.map_or(4 * max_freq as usize + 8, |g| g as usize);
    let mut entries = Vec::new();
    for (g, label) in targets.iter().zip(&labels) {
        crate::fourier::check_nyquist(grid, g.max_frequency())?;
        let b = besov_breakdown(g, params, &part, grid)?;
        println!("{label}\t{:.16e}", b.norm);
        entries.push(json!({ "label": label, "norm": b.norm, "blocks": b.blocks }));
    }
    if let Some(path) = &a.report {
        emit_json(
            Some(path),
            &json!({ "params": params, "jmax": part.jmax(), "grid": grid, "norms": entries }),
        )?;
    }
    Ok(())
}

fn cmd_scan(a: &ScanArgs) -> Outcome {
    let (p, _) = load_problem(&a.problem)?;
    let rows = margins(&p, a.modes);
    emit(a.out.as_deref(), |w| {
        writeln!(w, "k,sigma_min,sigma_max,cond")?;
        for r in &rows {
            writeln!(
                w,
                "{},{:.16e},{:.16e},{:.16e}",
                r.k, r.sigma_min, r.sigma_max, r.cond
            )?;
        }
        Ok(())
    })
}
