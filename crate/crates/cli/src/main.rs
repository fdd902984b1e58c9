use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use blackout_cli::commands::{self, Format};
use blackout_cli::server;
use clap::{Parser, Subcommand};

/// Learn players' action models from Sokoban (or any STRIPS) play traces.
#[derive(Parser)]
#[command(name = "blackout", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Learn an action model from one or more trace files.
    Learn {
        #[arg(long)]
        domain: PathBuf,
        /// 1 = successful actions, 2 = + failed actions, 3 = + invariants.
        #[arg(long, default_value_t = 3)]
        stage: u8,
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Execute a plan against a problem (or `.sok` level) and record the trace.
    Simulate {
        #[arg(long)]
        domain: PathBuf,
        /// PDDL problem, or a `.sok` level.
        #[arg(long, alias = "level")]
        problem: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// End the trace at the first failed action.
        #[arg(long)]
        stop_on_failure: bool,
    },
    /// Replay keypresses (u/d/l/r) on a level and record the trace.
    Play {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        level: PathBuf,
        /// Moves such as `urrrr`.
        #[arg(
            long,
            conflicts_with = "moves_file",
            required_unless_present = "moves_file"
        )]
        moves: Option<String>,
        #[arg(long)]
        moves_file: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile a `.sok` level into a PDDL problem.
    CompileLevel {
        #[arg(long)]
        level: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a learned model against the ground-truth domain.
    Eval {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Serve the play-session HTTP API.
    Serve {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        levels: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
    /// Write a trace without failed actions in FAMA's trajectory layout.
    ExportFama {
        #[arg(long)]
        domain: PathBuf,
        input: PathBuf,
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<String> {
    match cli.command {
        Command::Learn {
            domain,
            stage,
            out,
            traces,
        } => commands::learn(&domain, &traces, stage, &out),
        Command::Simulate {
            domain,
            problem,
            plan,
            out,
            stop_on_failure,
        } => commands::simulate(&domain, &problem, &plan, &out, stop_on_failure),
        Command::Play {
            domain,
            level,
            moves,
            moves_file,
            out,
        } => {
            let moves = match (moves, moves_file) {
                (Some(m), _) => m,
                (None, Some(f)) => commands::read(&f)?,
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::play(&domain, &level, &moves, &out)
        }
        Command::CompileLevel { level, out } => commands::compile_level(&level, &out),
        Command::Eval {
            truth,
            model,
            format,
        } => commands::eval(&truth, &model, format),
        Command::Serve {
            domain,
            levels,
            bind,
        } => {
            let state = server::AppState::from_dir(commands::load_domain(&domain)?, &levels)?;
            tokio::runtime::Runtime::new()?.block_on(server::serve(state, &bind))?;
            Ok(String::new())
        }
        Command::ExportFama { domain, input, out } => commands::export_fama(&domain, &input, &out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
