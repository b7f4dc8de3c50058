use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semispec_cli::commands::{run, Command};
use semispec_cli::config::RunConfig;
use semispec_cli::{CliError, EXIT_CONFIG};

/// Semiclassical spectral analysis of critical energy levels.
#[derive(Parser)]
#[command(name = "semispec", version)]
struct Args {
    #[command(subcommand)]
    command: Cmd,
    /// Run configuration (JSON, or TOML with a .toml extension).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; overrides the config.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Eigenvalues in the window at one h.
    Spectrum,
    /// |Upsilon| over the energy window at fixed h.
    Scan,
    /// Upsilon at one energy over the h list, with the power-log fit.
    Sweep,
    /// Scan for candidate levels and classify each.
    Detect,
    /// Linearized-flow density recovered from the spectrum.
    Density,
    /// Full local analysis of critical levels.
    Invert,
    /// Singularity exponents for small n and k.
    Tables,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::Scan => Command::Scan,
            Cmd::Sweep => Command::Sweep,
            Cmd::Detect => Command::Detect,
            Cmd::Density => Command::Density,
            Cmd::Invert => Command::Invert,
            Cmd::Tables => Command::Tables,
        }
    }
}

fn report(err: &CliError, out: &std::path::Path) {
    let json = serde_json::to_string(err).expect("error serializes");
    eprintln!("{json}");
    if std::fs::create_dir_all(out).is_ok() {
        let _ = std::fs::write(out.join("error.json"), format!("{json}\n"));
    }
}

fn execute(args: &Args) -> Result<i32, CliError> {
    let cmd = Command::from(args.command);
    let cfg = match &args.config {
        Some(p) => Some(RunConfig::load(p)?),
        None if cmd.needs_config() => {
            return Err(CliError::config("cli", format!("`{}` needs --config", cmd.name())));
        }
        None => None,
    };
    let workers = args.workers.or(cfg.as_ref().and_then(|c| c.workers));
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::config("cli", "workers must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::solver("cli", format!("thread pool: {e}")))?;
    }
    let outcome = run(cmd, cfg.as_ref(), &args.out)?;
    for m in &outcome.messages {
        eprintln!("{m}");
    }
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.code)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    match execute(&args) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            report(&e, &args.out);
            ExitCode::from(e.code as u8)
        }
    }
}
