//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 non-convergence
//! or incomplete table rows, 3 verification failure.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use proxadmm::config::{self, InverseConfig, SolveConfig};
use proxadmm::diagnostics::{
    check_monotonicity_suite, decay_envelope, fit_rate, RateFit, RateModel, SuiteReport,
    TraceColumns,
};
use proxadmm::gravity::{
    self, level_rng, run_table1, GravityConfig, GravityProblem, Table1Row, DEEP_LEVELS,
    STANDARD_LEVELS,
};
use proxadmm::illposed::{run_regularized, RegState, RegStop, Truth};
use proxadmm::io::{self as pio, RunSummary, VerifyReference};
use proxadmm::padmm::{ergodic_iterate, run, RunOptions};
use proxadmm::reference::reference_point;

const SUCCESS: u8 = 0;
const USAGE: u8 = 1;
const INCOMPLETE: u8 = 2;
const VERIFY_FAILED: u8 = 3;

/// Slack for inequality checks, relative to the magnitudes involved.
const CHECK_SLACK: f64 = 1e-8;

#[derive(Parser)]
#[command(
    name = "proxadmm",
    version,
    about = "Proximal ADMM solver, convergence diagnostics and regularization benchmark"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run proximal ADMM on a two-block problem.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Diagnostics report; defaults to the trace path with a .json extension.
        #[arg(long)]
        diagnostics: Option<PathBuf>,
        #[arg(long)]
        store_iterates: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Also report the ergodic average of the first k iterates (needs --store-iterates).
        #[arg(long)]
        ergodic: Option<usize>,
    },
    /// Run the regularizing scheme on noisy data with a priori stopping.
    Regularize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        delta: f64,
        /// Stop at ceil(c_stop / delta).
        #[arg(long, default_value_t = 1.0)]
        c_stop: f64,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// One gravity-surveying run at a single noise level.
    Gravity {
        #[arg(long)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = gravity::DEFAULT_N)]
        n: usize,
        /// Iteration cap; defaults by noise level.
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// The noise-level study: minimal errors and their ratios to δ^{1/2}, δ^{1/4}.
    Table1 {
        /// Comma-separated, strictly descending noise levels.
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// Append the long-running levels 1e-5, 1e-6, 1e-7.
        #[arg(long)]
        deep: bool,
        #[arg(long)]
        out: PathBuf,
        /// Directory for per-level trace CSVs.
        #[arg(long)]
        traces: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = gravity::DEFAULT_N)]
        n: usize,
    },
    /// Re-check the convergence inequalities on a trace CSV.
    Verify {
        #[arg(long)]
        trace: PathBuf,
        /// Diagnostics report or run summary supplying γ, H_*, δ, ρ₁.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Write a bundled example config.
    Example {
        #[arg(long, value_enum, default_value_t = ExampleKind::Solve)]
        kind: ExampleKind,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExampleKind {
    Solve,
    Inverse,
}

/// An error carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: USAGE,
            error: e.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { SUCCESS };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve {
            config,
            trace,
            diagnostics,
            store_iterates,
            tol,
            max_iter,
            ergodic,
        } => cmd_solve(
            &config,
            &trace,
            diagnostics,
            store_iterates,
            tol,
            max_iter,
            ergodic,
        ),
        Command::Regularize {
            config,
            delta,
            c_stop,
            trace,
            summary,
        } => cmd_regularize(&config, delta, c_stop, trace, summary),
        Command::Gravity {
            noise,
            seed,
            n,
            max_iter,
            trace,
            summary,
        } => cmd_gravity(noise, seed, n, max_iter, trace, summary),
        Command::Table1 {
            levels,
            deep,
            out,
            traces,
            seed,
            n,
        } => cmd_table1(levels, deep, &out, traces, seed, n),
        Command::Verify { trace, reference } => cmd_verify(&trace, reference),
        Command::Example { kind, out } => cmd_example(kind, &out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct NamedFit {
    series: &'static str,
    fit: RateFit,
}

#[derive(Serialize)]
struct SolveReport {
    converged: bool,
    iterations: usize,
    gamma: f64,
    h_star: Option<f64>,
    final_step_g: f64,
    checks: SuiteReport,
    rates: Vec<NamedFit>,
}

/// Both rate models on the decay envelope of each series, from `k = 1`.
fn rate_fits(cols: &TraceColumns) -> Vec<NamedFit> {
    let mut fits = Vec::new();
    for (series, values) in [("du_G2", &cols.du_g2), ("feasibility", &cols.feasibility)] {
        let env = decay_envelope(&values[1.min(values.len())..]);
        for model in [RateModel::Power, RateModel::Geometric] {
            if let Ok(fit) = fit_rate(&env, model) {
                fits.push(NamedFit { series, fit });
            }
        }
    }
    fits
}

fn cmd_solve(
    path: &Path,
    trace_path: &Path,
    diagnostics: Option<PathBuf>,
    store_iterates: bool,
    tol: Option<f64>,
    max_iter: Option<usize>,
    ergodic: Option<usize>,
) -> Outcome {
    let (cfg, base): (SolveConfig, _) = config::load(path)?;
    let problem = cfg.problem.build(&base).context("building the problem")?;
    let init = cfg.initial_state(&problem)?;
    let mut stop = cfg.stop;
    if let Some(t) = tol {
        stop.tol = t;
    }
    if let Some(m) = max_iter {
        stop.max_iter = m;
    }
    if stop.tol.is_nan() || stop.tol < 0.0 || stop.max_iter == 0 {
        return Err(anyhow!("tol must be nonnegative and max_iter positive").into());
    }
    if ergodic.is_some() && !store_iterates {
        return Err(
            anyhow!("the ergodic average needs the iterates; rerun with --store-iterates").into(),
        );
    }
    let reference = if cfg.reference {
        Some(reference_point(&problem, &init).context("computing the reference point")?)
    } else {
        None
    };
    let trace = run(
        &problem,
        &init,
        stop.into(),
        &RunOptions {
            store_iterates,
            reference,
        },
    )?;
    pio::write_padmm_trace(&trace, create(trace_path)?)?;

    let cols = TraceColumns::from_trace(&trace);
    let checks = check_monotonicity_suite(&cols, CHECK_SLACK)?;
    let report = SolveReport {
        converged: trace.converged,
        iterations: trace.iterations(),
        gamma: trace.gamma,
        h_star: trace.h_star,
        final_step_g: cols.du_g2.last().copied().unwrap_or(f64::NAN).sqrt(),
        rates: rate_fits(&cols),
        checks,
    };
    let diag_path = diagnostics.unwrap_or_else(|| trace_path.with_extension("json"));
    write_json(&diag_path, &report)?;

    let s = &trace.final_state;
    println!(
        "{} after {} iterations; x = {:?}, y = {:?}, lambda = {:?}",
        if trace.converged {
            "converged"
        } else {
            "stopped at max_iter"
        },
        trace.iterations(),
        s.x.as_slice(),
        s.y.as_slice(),
        s.lambda.as_slice()
    );
    println!(
        "checks {}; report in {}",
        if report.checks.pass() { "pass" } else { "FAIL" },
        diag_path.display()
    );
    if let Some(k) = ergodic {
        let (x, y) = ergodic_iterate(&trace, k)?;
        println!(
            "ergodic average over {k} iterates: x = {:?}, y = {:?}",
            x.as_slice(),
            y.as_slice()
        );
    }
    Ok(if trace.converged { SUCCESS } else { INCOMPLETE })
}

fn cmd_regularize(
    path: &Path,
    delta: f64,
    c_stop: f64,
    trace: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Outcome {
    let (cfg, base): (InverseConfig, _) = config::load(path)?;
    let exact = cfg.build(&base).context("building the inverse problem")?;
    let b_delta = gravity::add_noise(exact.b_delta(), delta, &mut level_rng(cfg.seed, 0))?;
    let spec = exact.with_data(b_delta, delta)?;
    let x_true = cfg.x_true();
    let certificate = cfg.source_certificate()?;
    let run = run_regularized(
        &spec,
        &RegState::zeros(&spec, cfg.scheme.into()),
        RegStop::APriori { c_stop },
        Truth {
            x_true: x_true.as_ref(),
            certificate: certificate.as_ref(),
        },
    )?;
    if let Some(p) = trace {
        pio::write_reg_trace(&run, create(&p)?)?;
    }
    let s = RunSummary::from_trace(&run, x_true.as_ref().map(|x| x.norm()));
    emit_summary(&s, summary)?;
    println!("x = {:?}", run.final_state.x.as_slice());
    Ok(SUCCESS)
}

fn emit_summary(s: &RunSummary, path: Option<PathBuf>) -> anyhow::Result<()> {
    match path {
        Some(p) => write_json(&p, s),
        None => {
            println!("{}", serde_json::to_string_pretty(s)?);
            Ok(())
        }
    }
}

fn cmd_gravity(
    noise: f64,
    seed: u64,
    n: usize,
    max_iter: Option<usize>,
    trace: Option<PathBuf>,
    summary: Option<PathBuf>,
) -> Outcome {
    let cfg = GravityConfig {
        n,
        seed,
        levels: vec![noise],
        caps: max_iter.into_iter().collect(),
        ..Default::default()
    };
    cfg.validate()?;
    let problem = GravityProblem::build(&cfg)?;
    let run = problem.run_level(noise, &mut level_rng(seed, 0), cfg.cap(0))?;
    if let Some(p) = trace {
        pio::write_reg_trace(&run.trace, create(&p)?)?;
    }
    let mut s = RunSummary::from_trace(&run.trace, Some(problem.truth.x_true.norm()));
    let row = run.row();
    s.err_min = Some(row.err_min);
    s.iter_min = Some(row.iter_min);
    emit_summary(&s, summary)?;
    print_rows(&[row]);
    Ok(if row.complete { SUCCESS } else { INCOMPLETE })
}

fn print_rows(rows: &[Table1Row]) {
    println!(
        "{:>8} {:>12} {:>9} {:>12} {:>12}",
        "delta", "err_min", "iter_min", "ratio_half", "ratio_quarter"
    );
    for r in rows {
        println!(
            "{:>8.0e} {:>12.4e} {:>9} {:>12.6} {:>12.6}{}",
            r.delta,
            r.err_min,
            r.iter_min,
            r.ratio_half,
            r.ratio_quarter,
            if r.complete {
                ""
            } else {
                "  incomplete: error still at its minimum at the cap"
            }
        );
    }
}

fn cmd_table1(
    levels: Option<Vec<f64>>,
    deep: bool,
    out: &Path,
    traces: Option<PathBuf>,
    seed: u64,
    n: usize,
) -> Outcome {
    let mut levels = levels.unwrap_or_else(|| STANDARD_LEVELS.to_vec());
    if deep {
        let last = levels.last().copied().unwrap_or(f64::INFINITY);
        levels.extend(DEEP_LEVELS.iter().filter(|d| **d < last));
    }
    let cfg = GravityConfig {
        n,
        seed,
        levels,
        ..Default::default()
    };
    let study = run_table1(&cfg)?;
    let rows = study.rows();
    pio::write_table1(&rows, create(out)?)?;
    if let Some(dir) = traces {
        for run in &study.runs {
            let p = dir.join(format!("trace_delta_{:e}.csv", run.delta));
            pio::write_reg_trace(&run.trace, create(&p)?)?;
        }
    }
    print_rows(&rows);
    Ok(if rows.iter().all(|r| r.complete) {
        SUCCESS
    } else {
        INCOMPLETE
    })
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    pass: bool,
    first_violation: Option<(&'a str, Option<usize>)>,
    checks: &'a SuiteReport,
}

fn cmd_verify(trace: &Path, reference: Option<PathBuf>) -> Outcome {
    let file = File::open(trace).with_context(|| format!("opening {}", trace.display()))?;
    let parsed = pio::read_trace(BufReader::new(file))
        .with_context(|| format!("reading {}", trace.display()))?;
    let reference = match reference {
        Some(p) => {
            let f = File::open(&p).with_context(|| format!("opening {}", p.display()))?;
            pio::read_verify_reference(BufReader::new(f))
                .with_context(|| format!("reading {}", p.display()))?
        }
        None => VerifyReference::default(),
    };
    let report = pio::verify_trace(&parsed, &reference, CHECK_SLACK)?;
    let first = report.first_failure().map(|c| (c.check.as_str(), c.index));
    println!(
        "{}",
        serde_json::to_string_pretty(&VerifyReport {
            pass: report.pass(),
            first_violation: first,
            checks: &report,
        })?
    );
    match first {
        None => Ok(SUCCESS),
        Some((check, index)) => {
            eprintln!(
                "verification failed: {check} first violated at k = {}",
                index.map_or("?".into(), |k| k.to_string())
            );
            Ok(VERIFY_FAILED)
        }
    }
}

fn cmd_example(kind: ExampleKind, out: &Path) -> Outcome {
    let text = match kind {
        ExampleKind::Solve => config::to_toml(&config::example_solve_config())?,
        ExampleKind::Inverse => config::to_toml(&config::example_inverse_config())?,
    };
    if out.exists() {
        return Err(anyhow!("{} exists; refusing to overwrite", out.display()).into());
    }
    let mut w = create(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    println!("wrote {}", out.display());
    Ok(SUCCESS)
}
