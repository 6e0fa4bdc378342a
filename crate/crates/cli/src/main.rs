//! `prun` — allocation inspection and scenario execution.
//!
//! Exit codes: 0 success, 2 usage error, 3 I/O failure.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use prun_cli::{cores, report, resolve, stats};
use prun_core::model::{Batch, Variant};
use prun_core::scenarios::{Backend, RunOpts, ScenarioError};
use prun_core::{allocator, JobSpec};

#[derive(Parser)]
#[command(name = "prun", version, about = "Divide-and-conquer thread scheduling harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the allocation plan and weights for a batch of part sizes.
    Allocate {
        /// Comma-separated part sizes, e.g. 256,16,16,16.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        /// Available cores (the paper setup uses 16).
        #[arg(long)]
        cores: usize,
        /// Allocation variant: prun-def, prun-1, prun-eq, base or no-batch.
        #[arg(long, default_value = "prun-def")]
        variant: Variant,
    },
    /// Execute a scenario on a backend and emit a report.
    Run {
        /// Built-in scenario (preset:16-64-256, homog:4x256, hetero:X=4,
        /// long-short:X=3, pipeline:boxes=6) or a scenario JSON file.
        #[arg(long)]
        scenario: String,
        /// Execution backend.
        #[arg(long, default_value = "sim")]
        backend: Backend,
        /// Core budget; defaults to the detected physical core count.
        #[arg(long)]
        cores: Option<usize>,
        /// Comma-separated variants to run; defaults to the scenario's own.
        #[arg(long, value_delimiter = ',')]
        variants: Option<Vec<Variant>>,
        /// Repetitions per batch and variant (the simulator collapses
        /// these after verifying determinism).
        #[arg(long, default_value_t = 5)]
        reps: usize,
        /// Report file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report format.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// Pin workers round-robin to distinct cores.
        #[arg(long)]
        pin: bool,
        /// Number of random batches for hetero scenarios.
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Seed for generated scenario content.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Kernel width for the cpu backend.
        #[arg(long, default_value_t = JobSpec::DEFAULT_HIDDEN_DIM)]
        hidden_dim: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Errors mapped onto process exit codes.
enum CliError {
    Usage(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) => msg,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("error: {}", err.message());
        std::process::exit(err.code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Allocate { sizes, cores, variant } => cmd_allocate(&sizes, cores, variant),
        Command::Run {
            scenario,
            backend,
            cores,
            variants,
            reps,
            out,
            format,
            pin,
            trials,
            seed,
            hidden_dim,
        } => {
            let opts = RunArgs {
                backend,
                cores,
                variants,
                reps,
                out,
                format,
                pin,
                trials,
                seed,
                hidden_dim,
            };
            cmd_run(&scenario, opts)
        }
    }
}

fn cmd_allocate(sizes: &[usize], cores: usize, variant: Variant) -> Result<(), CliError> {
    let batch =
        Batch::from_sizes(sizes, cores).map_err(|e| CliError::Usage(e.to_string()))?;
    let plan = allocator::plan_for_variant(&batch, variant).ok_or_else(|| {
        CliError::Usage(format!("variant `{variant}` runs one merged kernel; no per-part plan"))
    })?;
    let threads: Vec<String> = plan.threads().iter().map(|t| t.to_string()).collect();
    println!("{}", threads.join(","));
    let weights: Vec<String> =
        allocator::compute_weights(&batch).iter().map(|w| w.to_string()).collect();
    println!("# weights: {}", weights.join(","));
    if plan.is_sequential() {
        println!("# sequential: parts run one at a time");
    }
    Ok(())
}

struct RunArgs {
    backend: Backend,
    cores: Option<usize>,
    variants: Option<Vec<Variant>>,
    reps: usize,
    out: Option<PathBuf>,
    format: Format,
    pin: bool,
    trials: usize,
    seed: u64,
    hidden_dim: usize,
}

fn cmd_run(scenario: &str, args: RunArgs) -> Result<(), CliError> {
    let resolve_opts = resolve::ResolveOpts { trials: args.trials, seed: args.seed };
    let mut spec = resolve::resolve(scenario, &resolve_opts).map_err(|e| match e {
        resolve::ResolveError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Usage(other.to_string()),
    })?;
    if let Some(variants) = args.variants {
        spec.variants = variants;
    }

    let opts = RunOpts {
        cores: args.cores.unwrap_or_else(cores::physical_cores),
        reps: args.reps,
        pinning: args.pin,
        hidden_dim: args.hidden_dim,
    };
    if opts.cores < 1 || opts.reps < 1 || opts.hidden_dim < 1 {
        return Err(CliError::Usage("cores, reps and hidden-dim must be >= 1".into()));
    }

    let records =
        prun_core::scenarios::run_scenario(&spec, args.backend, &opts).map_err(|e| match e {
            ScenarioError::Engine(_) => CliError::Io(e.to_string()),
            other => CliError::Usage(other.to_string()),
        })?;

    match args.out {
        Some(path) => {
            let file = std::fs::File::create(&path)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            write_report(file, &records, args.format)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            println!("wrote {} records to {}", records.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout().lock();
            write_report(stdout, &records, args.format)
                .map_err(|e| CliError::Io(e.to_string()))?;
        }
    }
    for (key, s) in stats::summarize(&records) {
        let stddev = s.stddev.map(|v| format!(" stddev={v:.4}")).unwrap_or_default();
        eprintln!("{key}: n={} mean={:.4}{stddev} min={:.4} max={:.4}", s.n, s.mean, s.min, s.max);
    }
    Ok(())
}

fn write_report<W: Write>(out: W, records: &[prun_core::RunRecord], format: Format) -> std::io::Result<()> {
    match format {
        Format::Csv => report::write_csv(out, records),
        Format::Json => report::write_json(out, records),
    }
}
