use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pmm_core::harness::{error_document, exit_code, parse_config, run, Mode};
use pmm_core::Error;

#[derive(Parser)]
#[command(name = "pmm", version, about = "Porous medium model with slow reservoirs")]
struct Cli {
    #[command(subcommand)]
    mode: Command,
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: the config's `output`, else `.`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    replicas: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run particle trajectories and record observables
    Simulate,
    /// Solve the hydrodynamic equation
    Solve,
    /// Write the closed-form stationary profile
    Stationary,
    /// Compare replica averages with the PDE
    Compare,
    /// Martingale, mass-balance and schedule checks
    Diagnose,
}

impl Command {
    fn mode(self) -> Mode {
        match self {
            Command::Simulate => Mode::Simulate,
            Command::Solve => Mode::Solve,
            Command::Stationary => Mode::Stationary,
            Command::Compare => Mode::Compare,
            Command::Diagnose => Mode::Diagnose,
        }
    }
}

fn main_inner(cli: Cli) -> Result<Vec<PathBuf>, Error> {
    let mut text = match &cli.config {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Error::Usage { key: "--config".into(), message: format!("{}: {e}", path.display()) })?,
        None => String::new(),
    };
    // command-line flags override the file
    let mut overrides = vec![format!("mode={}", cli.mode.mode())];
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(r) = cli.replicas {
        overrides.push(format!("replicas={r}"));
    }
    for o in &overrides {
        let key = o.split('=').next().unwrap_or_default();
        text = text
            .lines()
            .map(|line| {
                let body = line.split('#').next().unwrap_or("");
                body.split_whitespace()
                    .filter(|tok| tok.split('=').next() != Some(key))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join("\n");
        text.push('\n');
        text.push_str(o);
    }
    let cfg = parse_config(&text)?;
    let dir = cli
        .out
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    run(&cfg, &dir)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = Error::Usage { key: "command line".into(), message: e.to_string() };
            eprintln!("{}", error_document(&err, 2));
            return ExitCode::from(2);
        }
    };
    match main_inner(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", error_document(&e, code));
            ExitCode::from(code as u8)
        }
    }
}
