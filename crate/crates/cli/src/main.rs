//! `jetcalc` — build and verify the multimomentum phase spaces of a
//! first-order Lagrangian field theory.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 input error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jetcalc::checks::{self, CliError};
use jetcalc::report::{CheckSection, Report};
use jetcalc::runspec::RunSpec;
use jetcalc_core::chart::BundleSpec;

#[derive(Parser)]
#[command(name = "jetcalc", version, about = "Multimomentum phase spaces, canonical forms and Legendre maps of first-order field theories")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite described by a spec file.
    Check(CommonArgs),
    /// Print the five Legendre maps in coordinates.
    Legendre(CommonArgs),
    /// Invert the reduced Legendre map at the [invert] target point.
    Invert(CommonArgs),
    /// Print the dimension table and its structural relations.
    Dims(DimsArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// System spec file (TOML).
    file: PathBuf,
    /// Emit the report as JSON instead of text.
    #[arg(long)]
    json: bool,
    /// Write the report to a file instead of standard output.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Override the number of sample points.
    #[arg(long)]
    samples: Option<usize>,
    /// Override the PRNG seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the identity-residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Omit timings (byte-stable output for fixed input and seed).
    #[arg(long = "no-timings")]
    no_timings: bool,
}

#[derive(Args)]
struct DimsArgs {
    /// System spec file (TOML); alternatively give --m and --N.
    file: Option<PathBuf>,
    /// Base dimension, used when no file is given.
    #[arg(long)]
    m: Option<usize>,
    /// Fiber dimension, used when no file is given.
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    json: bool,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long = "no-timings")]
    no_timings: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("jetcalc: {error}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Check(args) => {
            let spec = load_with_overrides(&args)?;
            let mut report = checks::run_check(&spec, !args.no_timings)?;
            if args.no_timings {
                report.strip_timings();
            }
            emit(&report, args.json, args.out.as_deref())?;
            Ok(exit_for(&report))
        }
        Command::Legendre(args) => {
            let spec = load_with_overrides(&args)?;
            let system = checks::build_system(&spec)?;
            let section = CheckSection::new("legendre-maps", checks::legendre_items(&system));
            let report = Report::new(&spec, vec![section]);
            emit(&report, args.json, args.out.as_deref())?;
            Ok(exit_for(&report))
        }
        Command::Invert(args) => {
            let mut spec = load_with_overrides(&args)?;
            if spec.invert_target.is_none() {
                return Err(CliError::Input(jetcalc::runspec::InputError::Toml(
                    "spec file has no [invert] section".to_string(),
                )));
            }
            // Run only the inversion section.
            spec.toggles = jetcalc::runspec::Toggles {
                dimensions: false,
                canonical_forms: false,
                pullbacks: false,
                diagram: false,
                tautology: false,
                regularity: false,
                inversion: true,
            };
            let mut report = checks::run_check(&spec, !args.no_timings)?;
            if args.no_timings {
                report.strip_timings();
            }
            emit(&report, args.json, args.out.as_deref())?;
            Ok(exit_for(&report))
        }
        Command::Dims(args) => {
            let spec = match (&args.file, args.m, args.n) {
                (Some(path), _, _) => RunSpec::load(path)?,
                (None, Some(m), Some(n)) => synthetic_dims_spec(m, n)?,
                _ => {
                    return Err(CliError::Input(jetcalc::runspec::InputError::Toml(
                        "dims needs a spec file or both --m and --N".to_string(),
                    )))
                }
            };
            let mut report = checks::dimension_report(&spec, !args.no_timings);
            if args.no_timings {
                report.strip_timings();
            }
            emit(&report, args.json, args.out.as_deref())?;
            Ok(exit_for(&report))
        }
    }
}

fn synthetic_dims_spec(m: usize, n: usize) -> Result<RunSpec, CliError> {
    let bundle = BundleSpec::new(m, n)
        .map_err(|e| CliError::Input(jetcalc::runspec::InputError::Bundle(e.to_string())))?;
    Ok(RunSpec {
        bundle,
        lagrangian_src: None,
        name: "dims".to_string(),
        toggles: jetcalc::runspec::Toggles {
            dimensions: true,
            canonical_forms: false,
            pullbacks: false,
            diagram: false,
            tautology: false,
            regularity: false,
            inversion: false,
        },
        samples: jetcalc_core::numeric::DEFAULT_SAMPLES,
        seed: 0,
        tol: jetcalc_core::numeric::DEFAULT_TOL,
        range: jetcalc_core::numeric::DEFAULT_RANGE,
        require_regular: false,
        invert_target: None,
    })
}

fn load_with_overrides(args: &CommonArgs) -> Result<RunSpec, CliError> {
    let mut spec = RunSpec::load(&args.file)?;
    if let Some(samples) = args.samples {
        spec.samples = samples;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(tol) = args.tol {
        spec.tol = tol;
    }
    Ok(spec)
}

fn emit(report: &Report, json: bool, out: Option<&std::path::Path>) -> Result<(), CliError> {
    let rendered = if json { report.to_json() } else { report.to_text() };
    match out {
        Some(path) => std::fs::write(path, rendered).map_err(|e| {
            CliError::Input(jetcalc::runspec::InputError::Io(format!("{path:?}: {e}")))
        }),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

fn exit_for(report: &Report) -> ExitCode {
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
