//! `wsobolev`: run estimate suites and render their reports.
//!
//! Exit status: 0 when every check passes, 1 when a check fails or a run
//! breaks, 2 for a bad suite file, bad flags or a malformed report.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use wsobolev::config::{run_suite, write_report, Overrides, SuiteConfig};
use wsobolev::harness::{EstimateId, SuiteReport};
use wsobolev::Error;

#[derive(Parser)]
#[command(name = "wsobolev", version, about = "Check weighted Sobolev estimates on manufactured solutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Summary,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Run a suite file, write its JSON and CSV reports and print a summary.
    Verify {
        config: PathBuf,
        /// Replaces the suite seed.
        #[arg(long, env = "WSOB_SEED")]
        seed: Option<u64>,
        /// Worker threads; 0 uses every core.
        #[arg(long, env = "WSOB_JOBS")]
        jobs: Option<usize>,
        /// Directory for `<suite>.json` and `<suite>.csv`.
        #[arg(long, env = "WSOB_OUT")]
        out: Option<PathBuf>,
        /// Comma-separated estimate ids to keep.
        #[arg(long, env = "WSOB_ONLY", value_delimiter = ',')]
        only: Option<Vec<String>>,
        /// What to print on standard output.
        #[arg(long, env = "WSOB_FORMAT", value_enum, default_value = "summary")]
        format: Format,
    },
    /// Render a JSON report.
    Report {
        report: PathBuf,
        #[arg(long, env = "WSOB_FORMAT", value_enum, default_value = "summary")]
        format: Format,
    },
}

/// Exit status for an error: input problems are 2, runtime failures 1.
fn status(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Report(_)
        | Error::InvalidParameter(_)
        | Error::Unknown { .. }
        | Error::Hypothesis(_)
        | Error::Expression(_)
        | Error::NotAWeight(_)
        | Error::Ellipticity { .. }
        | Error::InvalidFiltration(_)
        | Error::NonPositiveThreshold(_) => 2,
        _ => 1,
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(status(e))
}

fn render(report: &SuiteReport, format: Format) -> Result<String, Error> {
    match format {
        Format::Summary => Ok(report.summary()),
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv(),
    }
}

fn verify(
    config: PathBuf,
    seed: Option<u64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    only: Option<Vec<String>>,
    format: Format,
) -> ExitCode {
    let only = match only
        .map(|v| v.iter().map(|s| s.trim().parse::<EstimateId>()).collect::<Result<Vec<_>, _>>())
        .transpose()
    {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let mut cfg = match SuiteConfig::load(&config) {
        Ok(c) => c,
        Err(e) => return fail(&e),
    };
    cfg.apply(&Overrides { seed, jobs, out, only });
    let report = match run_suite(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let (json, csv) = match write_report(&cfg, &report) {
        Ok(p) => p,
        Err(e) => return fail(&e),
    };
    match render(&report, format) {
        Ok(text) => print!("{text}"),
        Err(e) => return fail(&e),
    }
    eprintln!("wrote {} and {}", json.display(), csv.display());
    if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match cli.command {
        Command::Verify {
            config,
            seed,
            jobs,
            out,
            only,
            format,
        } => verify(config, seed, jobs, out, only, format),
        Command::Report { report, format } => match SuiteReport::read(&report).and_then(|r| render(&r, format)) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => fail(&e),
        },
    }
}
