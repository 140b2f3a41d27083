use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fredlab_cli::emit::{self, Format};
use fredlab_cli::{config, convergence, run, Record, EXIT_INVALID, EXIT_PASS, EXIT_TOLERANCE};

#[derive(Parser)]
#[command(name = "fredlab", version, about = "Fredholm determinant identity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an experiment at its base resolution.
    Run(RunArgs),
    /// Evaluate every rung of the experiment's ladder.
    Convergence(RunArgs),
    /// Re-emit a structured record, e.g. as CSV.
    Emit {
        /// Structured record written by `run --format record`.
        record: PathBuf,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Seed for det-swap trials, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct Output {
    /// Output file (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match jobs {
        Some(0) => Err("--jobs must be positive".into()),
        #[cfg(feature = "parallel")]
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| e.to_string()),
        #[cfg(not(feature = "parallel"))]
        Some(_) => Ok(f()),
        None => Ok(f()),
    }
}

fn evaluate(args: &RunArgs, ladder: bool) -> Result<Record, String> {
    let experiment = config::load(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?
        .with_seed(args.seed);
    with_jobs(args.jobs, || {
        if ladder {
            convergence(&experiment).map(Record::Convergence)
        } else {
            run(&experiment).map(Record::Run)
        }
    })?
    .map_err(|e| format!("{}: {e}", args.config.display()))
}

fn emit_to(record: &Record, output: &Output) -> Result<(), String> {
    let bytes = emit::render(record, output.format).map_err(|e| e.to_string())?;
    emit::write(&bytes, output.out.as_deref()).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => evaluate(args, false).and_then(|r| emit_to(&r, &args.output).map(|_| r)),
        Command::Convergence(args) => evaluate(args, true).and_then(|r| emit_to(&r, &args.output).map(|_| r)),
        Command::Emit { record, output } => emit::read_record(record)
            .map_err(|e| e.to_string())
            .and_then(|r| emit_to(&r, output).map(|_| r)),
    };
    let code = match result {
        Ok(record) if record.pass() => EXIT_PASS,
        Ok(_) => {
            eprintln!("fredlab: residuals exceed their tolerance tier");
            EXIT_TOLERANCE
        }
        Err(message) => {
            eprintln!("fredlab: {message}");
            EXIT_INVALID
        }
    };
    ExitCode::from(code as u8)
}
