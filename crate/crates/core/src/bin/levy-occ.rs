use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use levy_occupation::cli::{self, EXIT_CONFIG, EXIT_PASS, EXIT_PROPERTY};
use levy_occupation::config::{ExperimentConfig, OutputFormat, Overrides};
use levy_occupation::report;
use levy_occupation::{Error, Result};

#[derive(Parser)]
#[command(name = "levy-occ", version, about = "Occupation-time functionals of symmetric Lévy processes")]
struct Args {
    /// TOML experiment file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Curvature at the origin, Hartman–Wintner and local-time conditions.
    Classify,
    /// Transition density p_t(x) by Fourier inversion.
    Density,
    /// Simulate paths; one summary row per path unless --dump-paths.
    Simulate {
        /// Write every grid point (path_index, step_index, t, x).
        #[arg(long)]
        dump_paths: bool,
    },
    /// Monte-Carlo moments of I_n and its split against the limits and bounds.
    Moments,
    /// Per-path Fourier split of I_n.
    Decompose {
        /// Where to write the JSON summary; stderr when omitted.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Geometry and increment-law property suite.
    Verify {
        /// Name of a check to force into failure.
        #[arg(long)]
        inject_failure: Option<String>,
    },
}

fn run(args: &Args, cfg: &ExperimentConfig) -> Result<u8> {
    let out = cfg.out.as_deref();
    let failures = match &args.command {
        Command::Classify => {
            report::emit(&cli::cmd_classify(cfg)?, cfg.format_or(OutputFormat::Json), out)?;
            Vec::new()
        }
        Command::Density => {
            let o = cli::cmd_density(cfg)?;
            report::emit(&o.rows, cfg.format_or(OutputFormat::Csv), out)?;
            o.failures
        }
        Command::Simulate { dump_paths } => {
            let mut sink = report::sink(cfg.format_or(OutputFormat::Csv), out)?;
            cli::cmd_simulate(cfg, *dump_paths, &mut sink)?;
            sink.finish()?;
            Vec::new()
        }
        Command::Moments => {
            let (study, failures) = cli::cmd_moments(cfg)?;
            report::emit(&study.reports, cfg.format_or(OutputFormat::Csv), out)?;
            failures
        }
        Command::Decompose { summary } => {
            let (o, s) = cli::cmd_decompose(cfg)?;
            report::emit(&o.rows, cfg.format_or(OutputFormat::Csv), out)?;
            if s.limit_comparison == "suppressed" {
                eprintln!("note: f̂(0) = 0, limit comparison suppressed");
            }
            match summary {
                Some(p) => report::emit_json(&s, Some(p))?,
                None => eprintln!("{}", serde_json::to_string_pretty(&s).map_err(|e| Error::Io(e.into()))?),
            }
            o.failures
        }
        Command::Verify { inject_failure } => {
            let o = cli::cmd_verify(cfg, inject_failure.clone())?;
            report::emit(&o.rows, cfg.format_or(OutputFormat::Json), out)?;
            o.failures
        }
    };
    for f in &failures {
        eprintln!("FAIL {f}");
    }
    Ok(if failures.is_empty() { EXIT_PASS } else { EXIT_PROPERTY })
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        seed: args.seed,
        threads: args.threads,
        out: args.out.clone(),
        format: args.format.map(|f| match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        }),
    };
    let cfg = match ExperimentConfig::load(args.config.as_deref(), &overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match pool.install(|| run(&args, &cfg)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e))
        }
    }
}
