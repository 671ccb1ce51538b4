use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use lpwave_cli::{parse_config, run, CliError, Command};

/// Simulate the locally damped wave equation and check its energy estimates.
#[derive(Parser, Debug)]
#[command(name = "lpwave", version)]
struct Args {
    /// Configuration file; built-in defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Only warnings and errors on stderr, no summary on stdout.
    #[arg(long)]
    quiet: bool,
    /// Overrides `[run] command`: simulate, decay, global-bound,
    /// oracle-compare, verify-inequalities or plot.
    command: Option<String>,
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(c) = &args.command {
        cfg.command = c.parse::<Command>().map_err(CliError::Usage)?;
    }
    let outcome = run(&cfg)?;
    if !args.quiet {
        print!("{}", outcome.summary);
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }
    if !outcome.passed {
        log::error!("{} reported a failure", cfg.command);
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let level = if args.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let code = match execute(&args) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
