use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use sparsedom_harness::{io, run_parallel, Experiment, ExperimentKind};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Command {
    Constants,
    Dominate,
    Thm11,
    Thm12,
    Thm13,
    Buckley,
    Lemma32,
    Lemma44,
    Endpoint,
}

impl From<Command> for ExperimentKind {
    fn from(c: Command) -> Self {
        match c {
            Command::Constants => Self::Constants,
            Command::Dominate => Self::Dominate,
            Command::Thm11 => Self::Thm11,
            Command::Thm12 => Self::Thm12,
            Command::Thm13 => Self::Thm13,
            Command::Buckley => Self::Buckley,
            Command::Lemma32 => Self::Lemma32,
            Command::Lemma44 => Self::Lemma44,
            Command::Endpoint => Self::Endpoint,
        }
    }
}

/// Runs one experiment and writes CSV rows, a JSON report and a text summary.
#[derive(Debug, Parser)]
#[command(name = "sparsedom", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// INI file overriding the built-in preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Single resolution `r` (`3·2^r` cells) replacing the ladder.
    #[arg(long)]
    resolution: Option<u32>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn execute(cli: &Cli) -> sparsedom_harness::Result<()> {
    let kind = ExperimentKind::from(cli.command);
    let mut e = match &cli.config {
        Some(path) => Experiment::from_path(path, Some(kind))?,
        None => Experiment::preset(kind),
    };
    if let Some(seed) = cli.seed {
        e.seed = seed;
    }
    if let Some(r) = cli.resolution {
        e = e.at_resolution(r)?;
    }
    let report = run_parallel(&e, cli.parallel.max(1))?;
    print!("{}", io::summary(&report));
    for path in io::write_all(&report, &cli.out)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
