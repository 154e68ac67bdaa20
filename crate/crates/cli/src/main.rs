//! `srcurv` command-line tool.
//!
//! Exit codes: 0 success, 1 runtime error or failed check, 2 unreliable fit,
//! 64 bad flags, 65 model rejected.

use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use srcurv::checks::{run_all, run_suite, CheckResult, SUITES};
use srcurv::jacobi::{FitOptions, DEFAULT_GRID};
use srcurv_cli::{load_model, parse_grid, parse_reals, sweep, write_csv};

const EXIT_ERROR: u8 = 1;
const EXIT_UNRELIABLE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_MODEL: u8 = 65;

#[derive(Parser)]
#[command(name = "srcurv", version, about = "Curvature of affine control and sub-Riemannian structures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone, Copy)]
struct FitArgs {
    /// Upper end of the fit window; chosen from the covector when omitted.
    #[arg(long)]
    window: Option<f64>,
    /// Number of fit samples.
    #[arg(long, default_value_t = DEFAULT_GRID)]
    grid: usize,
    /// Highest power of t in the fitted polynomial.
    #[arg(long, default_value_t = 8)]
    degree: i32,
}

impl FitArgs {
    fn options(self) -> FitOptions {
        FitOptions { window: self.window, grid: self.grid, degree: self.degree }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Curvature report for one covector at the model's base point.
    Analyze {
        /// Model file (TOML) or built-in `name[:params]`.
        #[arg(long)]
        model: String,
        /// Initial covector, comma separated.
        #[arg(long, allow_hyphen_values = true)]
        covector: String,
        #[command(flatten)]
        fit: FitArgs,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in self-check suites.
    Check {
        #[arg(long, default_value = "all", value_parser = suite_names())]
        suite: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// CSV table over a Cartesian grid of covectors.
    Sweep {
        #[arg(long)]
        model: String,
        /// `;`-separated axes, each `start:stop:count` or a comma list.
        #[arg(long, allow_hyphen_values = true)]
        covector_grid: String,
        #[command(flatten)]
        fit: FitArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn suite_names() -> clap::builder::PossibleValuesParser {
    let mut names = vec!["all"];
    names.extend_from_slice(SUITES);
    clap::builder::PossibleValuesParser::new(names)
}

/// A failure carrying its exit code.
struct Fail(u8, String);

fn fail(code: u8) -> impl Fn(String) -> Fail {
    move |m| Fail(code, m)
}

fn output(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Fail> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Fail(EXIT_ERROR, format!("{}: {e}", p.display())))?),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn check_dimension(covector: &[f64], n: usize) -> Result<(), Fail> {
    if covector.len() != n {
        return Err(Fail(EXIT_USAGE, format!("covector has {} components, model has dimension {n}", covector.len())));
    }
    Ok(())
}

fn run(cmd: Command) -> Result<u8, Fail> {
    match cmd {
        Command::Analyze { model, covector, fit, out } => {
            let p = parse_reals(&covector).map_err(fail(EXIT_USAGE))?;
            let m = load_model(&model).map_err(|e| Fail(EXIT_MODEL, e.to_string()))?;
            check_dimension(&p, m.n())?;
            let rep = srcurv::report::analyze(&m, &p, fit.options()).map_err(|e| Fail(EXIT_ERROR, e.to_string()))?;
            let json = rep.to_json().map_err(|e| Fail(EXIT_ERROR, e.to_string()))?;
            writeln!(output(&out)?, "{json}").map_err(|e| Fail(EXIT_ERROR, e.to_string()))?;
            Ok(if rep.reliable { 0 } else { EXIT_UNRELIABLE })
        }
        Command::Check { suite, seed } => {
            let results: Vec<CheckResult> = if suite == "all" {
                run_all(seed)
            } else {
                run_suite(&suite, seed).map_err(|e| Fail(EXIT_USAGE, e.to_string()))?
            };
            let mut stdout = std::io::stdout().lock();
            let passed = results.iter().filter(|r| r.pass).count();
            let io = |e: std::io::Error| Fail(EXIT_ERROR, e.to_string());
            for r in &results {
                writeln!(
                    stdout,
                    "{} {}/{}: expected {}, actual {}, tolerance {}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.suite,
                    r.name,
                    r.expected,
                    r.actual,
                    r.tolerance
                )
                .map_err(io)?;
            }
            writeln!(stdout, "{passed}/{} checks passed", results.len()).map_err(io)?;
            Ok(if passed == results.len() { 0 } else { EXIT_ERROR })
        }
        Command::Sweep { model, covector_grid, fit, out } => {
            let grid = parse_grid(&covector_grid).map_err(fail(EXIT_USAGE))?;
            let m = load_model(&model).map_err(|e| Fail(EXIT_MODEL, e.to_string()))?;
            if let Some(p) = grid.first() {
                check_dimension(p, m.n())?;
            }
            let mut reports = Vec::with_capacity(grid.len());
            for (p, r) in grid.iter().zip(sweep(&m, &grid, fit.options())) {
                reports.push(r.map_err(|e| Fail(EXIT_ERROR, format!("covector {p:?}: {e}")))?);
            }
            write_csv(output(&out)?, m.n(), &reports).map_err(|e| Fail(EXIT_ERROR, e.to_string()))?;
            Ok(if reports.iter().all(|r| r.reliable) { 0 } else { EXIT_UNRELIABLE })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("srcurv: {msg}");
            ExitCode::from(code)
        }
    }
}
