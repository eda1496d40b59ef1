//! `certify`: decide whether a polynomial optimization problem is unbounded
//! below by searching for feasible descent directions at infinity.
//!
//! Exit codes: 0 for any completed run, 1 for input or parse errors, 2 for
//! internal errors. With `--exit-on-verdict`, a completed run exits 10 when
//! the verdict is UNBOUNDED and 11 when it is INCONCLUSIVE, so shell
//! pipelines can gate a downstream solver on the result.

use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use polycert::asymptotics::{ProblemDecompositions, Tolerance};
use polycert::certify::run_with_decompositions;
use polycert::error::Error;
use polycert::report::{build_report, ReportContext, Timing};
use polycert::sampling::{clopper_pearson, AlphaEstimate, SampleConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Human,
    Machine,
}

#[derive(Debug, Parser)]
#[command(
    name = "certify",
    version,
    about = "Certify unboundedness of polynomial optimization problems",
    long_about = "Reads a problem file (dim/objective/constraint lines) and searches the unit\n\
                  sphere for directions along which the objective and all constraints diverge\n\
                  to -infinity. Finding one proves the problem is unbounded below."
)]
struct Cli {
    /// Problem file to analyze.
    problem: PathBuf,

    /// Number of directions to sample.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,

    /// Seed for the deterministic direction stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Confidence level in (0,1); prints the sample count needed for each
    /// alpha floor in the residual grid.
    #[arg(long)]
    delta: Option<f64>,

    /// Assumed lower bound on the certifying measure, added to the residual
    /// table.
    #[arg(long = "alpha-floor")]
    alpha_floor: Option<f64>,

    /// Direction to test before sampling, as comma-separated coordinates
    /// (e.g. "1,1"). Repeatable; normalized internally.
    #[arg(long = "direction", value_name = "V1,V2,...")]
    directions: Vec<String>,

    /// Search degenerate strata (zero sets of leading forms) when sampling
    /// fails. Heuristic and off by default.
    #[arg(long)]
    probe: bool,

    /// Evaluate all samples and report the certifying fraction with a 95%
    /// Clopper-Pearson interval.
    #[arg(long = "estimate-alpha")]
    estimate_alpha: bool,

    /// Evaluate all samples even after a certificate is found and record
    /// every certifying index.
    #[arg(long)]
    exhaustive: bool,

    /// Absolute zero tolerance for ray coefficients.
    #[arg(long = "tol-abs", default_value_t = Tolerance::default().abs)]
    tol_abs: f64,

    /// Relative zero tolerance (scaled by each part's coefficient l1 norm).
    #[arg(long = "tol-rel", default_value_t = Tolerance::default().rel)]
    tol_rel: f64,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,

    /// Worker threads (0 = automatic). The CERTIFY_THREADS environment
    /// variable overrides this flag.
    #[arg(long, default_value_t = 0)]
    threads: usize,

    /// Exit 10 on UNBOUNDED and 11 on INCONCLUSIVE instead of 0.
    #[arg(long = "exit-on-verdict")]
    exit_on_verdict: bool,
}

fn parse_direction(arg: &str) -> Result<Vec<f64>, Error> {
    arg.split(',')
        .map(|part| {
            part.trim().parse::<f64>().map_err(|_| {
                Error::InvalidInput(format!(
                    "--direction expects comma-separated numbers, got '{arg}'"
                ))
            })
        })
        .collect()
}

fn resolve_threads(flag: usize) -> Result<usize, Error> {
    match std::env::var("CERTIFY_THREADS") {
        Err(_) => Ok(flag),
        Ok(value) => value.trim().parse::<usize>().map_err(|_| {
            Error::InvalidInput(format!(
                "CERTIFY_THREADS must be a non-negative integer, got '{value}'"
            ))
        }),
    }
}

fn run(cli: &Cli) -> Result<(String, bool), Error> {
    let threads = resolve_threads(cli.threads)?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    }

    let source = std::fs::read_to_string(&cli.problem).map_err(|e| {
        Error::InvalidInput(format!("cannot read '{}': {e}", cli.problem.display()))
    })?;
    let problem = polycert::parser::parse_problem(&source).map_err(|e| {
        Error::InvalidInput(format!("{}: {e}", cli.problem.display()))
    })?;

    let tolerance = Tolerance::new(cli.tol_abs, cli.tol_rel)?;
    let mut config = SampleConfig::new(cli.samples, cli.seed);
    config.delta = cli.delta;
    config.alpha_floor = cli.alpha_floor;
    config.exhaustive = cli.exhaustive || cli.estimate_alpha;

    let directions = cli
        .directions
        .iter()
        .map(|d| parse_direction(d))
        .collect::<Result<Vec<_>, _>>()?;
    let probe_config = cli.probe.then(polycert::probe::ProbeConfig::default);

    let total_start = Instant::now();
    let decomposition_start = Instant::now();
    let decompositions = ProblemDecompositions::new(&problem);
    let decomposition_ms = decomposition_start.elapsed().as_secs_f64() * 1e3;

    let outcome = run_with_decompositions(
        &decompositions,
        &config,
        &tolerance,
        &directions,
        probe_config.as_ref(),
    )?;

    // In exhaustive mode every sample was evaluated, so the certifying list
    // doubles as the hit count for the alpha estimate.
    let alpha_estimate: Option<AlphaEstimate> = if cli.estimate_alpha {
        let hit_indices = match &outcome {
            polycert::CertificateOutcome::Unbounded(cert) => {
                cert.certifying_samples.clone().unwrap_or_default()
            }
            polycert::CertificateOutcome::Inconclusive(_) => Vec::new(),
        };
        let hits = hit_indices.len() as u64;
        let alpha_hat = hits as f64 / config.count as f64;
        let interval = clopper_pearson(hits, config.count, 0.95)?;
        Some(AlphaEstimate {
            hits,
            samples: config.count,
            alpha_hat,
            interval,
            hit_indices,
        })
    } else {
        None
    };

    let total_ms = total_start.elapsed().as_secs_f64() * 1e3;
    let samples_evaluated = match &outcome {
        polycert::CertificateOutcome::Unbounded(cert) => cert.samples_used.max(1),
        polycert::CertificateOutcome::Inconclusive(inc) => inc.samples_used.max(1),
    };
    let timing = Timing {
        decomposition_ms,
        per_1k_samples_ms: (total_ms - decomposition_ms) / (samples_evaluated as f64 / 1e3),
        total_ms,
    };

    let context = ReportContext {
        tolerance,
        probe_enabled: cli.probe,
        threads,
        timing,
    };
    let report = build_report(&problem, &config, &outcome, alpha_estimate.as_ref(), &context)?;
    let rendered = match cli.format {
        Format::Machine => report.to_json(),
        Format::Human => report.render_human(),
    };
    Ok((rendered, outcome.is_unbounded()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((rendered, unbounded)) => {
            println!("{rendered}");
            if cli.exit_on_verdict {
                ExitCode::from(if unbounded { 10 } else { 11 })
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
