//! Argument parsing and exit-code mapping for the `fwheb` binary.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::harness::{
    default_out_dir, load_suite, resolve_problem, resolve_seed, run_checks, run_suite, summarize, CheckOptions,
    SuiteConfig, CHECK_NAMES,
};
use crate::solver::{fw_solve, SolverConfig, StepRule};

pub const EXIT_OK: u8 = 0;
pub const EXIT_RUNTIME: u8 = 1;
pub const EXIT_INVALID_SPEC: u8 = 2;
pub const EXIT_SOLVER_CONFIG: u8 = 3;
pub const EXIT_CHECK_FAILED: u8 = 4;
pub const EXIT_PARTIAL_SUITE: u8 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "fwheb",
    version,
    about = "Frank-Wolfe over strongly convex sets, with rate checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve one problem and write its trace and summary.
    Run(RunArgs),
    /// Run analysis checks against one problem.
    Check(CheckArgs),
    /// Run a batch of solver runs and aggregate fitted rates.
    Suite(SuiteArgs),
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Canned problem name or path to a problem-spec JSON file.
    #[arg(long)]
    pub problem: String,
    /// Step rule: I, II or fixed.
    #[arg(long, default_value = "I")]
    pub option: String,
    #[arg(long, default_value_t = 1000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0.0)]
    pub stop_gap: f64,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub problem: String,
    /// Comma-separated subset of lmo,set_sc,grad,heb,lemma1,lemma2,envelope.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "lmo,set_sc,grad,heb,lemma1,lemma2,envelope"
    )]
    pub checks: Vec<String>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Strong-convexity modulus to certify instead of the problem's own.
    #[arg(long)]
    pub alpha_claim: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SuiteArgs {
    /// Suite JSON; the built-in suite is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => EXIT_SOLVER_CONFIG,
        Error::Io(_) | Error::OracleFailure(_) | Error::Invariant(_) => EXIT_RUNTIME,
        _ => EXIT_INVALID_SPEC,
    }
}

fn fail(err: Error, code: u8) -> u8 {
    eprintln!("error: {err}");
    code
}

fn cmd_run(args: RunArgs) -> u8 {
    let seed = match resolve_seed(args.seed) {
        Ok(s) => s,
        Err(e) => return fail(e, EXIT_INVALID_SPEC),
    };
    let problem = match resolve_problem(&args.problem, args.dim, seed) {
        Ok(p) => p,
        Err(e) => return fail(e, EXIT_INVALID_SPEC),
    };
    let rule: StepRule = match args.option.parse() {
        Ok(r) => r,
        Err(e) => return fail(e, EXIT_SOLVER_CONFIG),
    };
    if !(args.stop_gap >= 0.0) {
        return fail(
            Error::Config(format!("stop gap must be >= 0, got {}", args.stop_gap)),
            EXIT_SOLVER_CONFIG,
        );
    }
    let config = SolverConfig::new(rule, args.max_iters).stop_gap(args.stop_gap);
    let trace = match fw_solve(&problem, &config, None) {
        Ok(t) => t,
        Err(e) => {
            let code = exit_code_for(&e);
            return fail(e, code);
        }
    };
    let summary = summarize(&problem, rule, &trace);
    let written = (|| -> crate::Result<()> {
        if let Some(path) = &args.trace {
            fs::write(path, trace.to_csv_string())?;
        }
        let json = serde_json::to_string_pretty(&summary)?;
        match &args.summary {
            Some(path) => fs::write(path, json)?,
            None => println!("{json}"),
        }
        Ok(())
    })();
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => fail(e, EXIT_RUNTIME),
    }
}

fn cmd_check(args: CheckArgs) -> u8 {
    let seed = match resolve_seed(args.seed) {
        Ok(s) => s,
        Err(e) => return fail(e, EXIT_INVALID_SPEC),
    };
    let problem = match resolve_problem(&args.problem, args.dim, seed) {
        Ok(p) => p,
        Err(e) => return fail(e, EXIT_INVALID_SPEC),
    };
    let checks: Vec<String> = args
        .checks
        .iter()
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    if let Some(bad) = checks.iter().find(|c| !CHECK_NAMES.contains(&c.as_str())) {
        return fail(Error::InvalidInput(format!("unknown check `{bad}`")), EXIT_INVALID_SPEC);
    }
    let opts = CheckOptions {
        seed,
        alpha_claim: args.alpha_claim,
        iters: args.iters,
        samples: args.samples,
    };
    let report = match run_checks(&problem, &checks, &opts) {
        Ok(r) => r,
        Err(e) => {
            let code = exit_code_for(&e);
            return fail(e, code);
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("reports serialize");
    let written = match &args.report {
        Some(path) => fs::write(path, &json).map_err(Error::from),
        None => {
            println!("{json}");
            Ok(())
        }
    };
    for c in &report.checks {
        eprintln!("{:<9} {:?}", c.report.check, c.status);
    }
    if let Err(e) = written {
        return fail(e, EXIT_RUNTIME);
    }
    if report.pass {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn cmd_suite(args: SuiteArgs) -> u8 {
    let seed = match resolve_seed(args.seed) {
        Ok(s) => s,
        Err(e) => return fail(e, EXIT_INVALID_SPEC),
    };
    let config = match &args.config {
        Some(path) => match load_suite(path) {
            Ok(c) => c,
            Err(e) => return fail(e, EXIT_INVALID_SPEC),
        },
        None => SuiteConfig::default_suite(),
    };
    let out = args.out.unwrap_or_else(default_out_dir);
    match run_suite(&config, &out, args.jobs, seed) {
        Ok(index) => {
            for e in &index.entries {
                eprintln!("{:<18} {:<10} {}", e.problem, e.step_rule, e.status);
            }
            if index.all_ok {
                EXIT_OK
            } else {
                EXIT_PARTIAL_SUITE
            }
        }
        Err(e) => {
            let code = exit_code_for(&e);
            fail(e, code)
        }
    }
}

pub fn run(cli: Cli) -> u8 {
    match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Check(a) => cmd_check(a),
        Command::Suite(a) => cmd_suite(a),
    }
}

pub fn main_entry() -> ExitCode {
    ExitCode::from(run(Cli::parse()))
}
