use std::path::PathBuf;
use std::process::ExitCode;

use breaker::commands;
use breaker::error::{exit, Error};
use breaker_core::verify::Fault;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "breaker", version, about = "Single-slot recommender with user clustering and multi-tower heads")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum InjectFault {
    FlipCentroidSign,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic randomized-exposure dataset.
    Gen {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on a dataset directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// breaker, breaker1- or breaker2-
        #[arg(long)]
        variant: Option<String>,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check analytic gradients against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, hide = true)]
        inject_fault: Option<InjectFault>,
    },
    /// Write user representations and cluster assignments of test users.
    ExportReps {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<String, Error> {
    match cli.command {
        Command::Gen { config, out } => commands::gen(&config, &out),
        Command::Train {
            data,
            config,
            out,
            variant,
        } => commands::train(&data, config.as_deref(), &out, variant.as_deref()),
        Command::Eval {
            data,
            ckpt,
            report,
            config,
        } => commands::eval(&data, &ckpt, &report, config.as_deref()),
        Command::Gradcheck { seed, inject_fault } => {
            let fault = inject_fault.map(|InjectFault::FlipCentroidSign| Fault::FlipCentroidSign);
            let (report, lines) = commands::gradcheck(seed, fault)?;
            print!("{lines}");
            let failed: Vec<&str> = report.failures().map(|g| g.group.as_str()).collect();
            if failed.is_empty() {
                Ok("all gradient checks passed".into())
            } else {
                Err(Error::Verification(failed.join(", ")))
            }
        }
        Command::ExportReps {
            data,
            ckpt,
            out,
            config,
        } => commands::export_reps(&data, &ckpt, &out, config.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG } else { exit::OK });
        }
    };
    match run(cli) {
        Ok(line) => {
            println!("{line}");
            ExitCode::from(exit::OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
