use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fpt_barrier::cli::{self, CliError, Command, OutputFormat, RunConfig, RunOptions};
use fpt_barrier::{BarrierSpec, Zone};

#[derive(Parser)]
#[command(name = "fpt-barrier", version, about = "First passage risk zones, bounds and Monte Carlo checks for GBM against a moving barrier")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Assign a risk zone from the barrier's asymptotics.
    Classify(Common),
    /// Compute every applicable bound on the mean first passage time.
    Bounds(Common),
    /// Simulate first passage times.
    Simulate(Common),
    /// Classify, then check the zone's predictions by simulation.
    Verify(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Barrier spec JSON document.
    #[arg(long)]
    spec: PathBuf,
    /// Optional JSON file with run options; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report destination (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "n-paths")]
    n_paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// One or more horizons, comma separated.
    #[arg(long, value_delimiter = ',')]
    horizon: Option<Vec<f64>>,
    /// Exponent of the critical comparison barrier.
    #[arg(long)]
    alpha: Option<f64>,
    /// Assert that the barrier dominates the critical one past the scan horizon.
    #[arg(long = "attest-tail")]
    attest_tail: bool,
    /// Check this zone instead of the classified one (verify only).
    #[arg(long = "assume-zone")]
    assume_zone: Option<String>,
    #[arg(long = "no-bridge")]
    no_bridge: bool,
    #[arg(long)]
    antithetic: bool,
    /// Run paths on a single thread.
    #[arg(long)]
    serial: bool,
}

fn read(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::new("IoError", format!("{}: {e}", path.display())))
}

fn build(c: &Common) -> Result<RunConfig, CliError> {
    let spec: BarrierSpec = serde_json::from_str(&read(&c.spec)?)
        .map_err(|e| CliError::new("SpecError", e))?;
    let file = match &c.config {
        Some(p) => serde_json::from_str::<RunOptions>(&read(p)?)
            .map_err(|e| CliError::new("ConfigError", e))?,
        None => RunOptions::default(),
    };
    let assume_zone = match &c.assume_zone {
        Some(z) => Some(
            Zone::parse(z).ok_or_else(|| CliError::new("ConfigError", format!("unknown zone {z}")))?,
        ),
        None => None,
    };
    let flags = RunOptions {
        alpha: c.alpha,
        horizon: c.horizon.clone(),
        n_paths: c.n_paths,
        dt: c.dt,
        seed: c.seed,
        bridge_correction: c.no_bridge.then_some(false),
        antithetic: c.antithetic.then_some(true),
        parallel: c.serial.then_some(false),
        attest_tail: c.attest_tail.then_some(true),
        assume_zone,
    };
    Ok(RunConfig {
        spec,
        options: file.merge(flags),
        format: match c.format {
            Format::Json => OutputFormat::Json,
            Format::Csv => OutputFormat::Csv,
        },
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common) = match &cli.command {
        Cmd::Classify(c) => (Command::Classify, c),
        Cmd::Bounds(c) => (Command::Bounds, c),
        Cmd::Simulate(c) => (Command::Simulate, c),
        Cmd::Verify(c) => (Command::Verify, c),
    };
    let result = build(common).and_then(|cfg| cli::run(command, &cfg)).and_then(|out| {
        for w in &out.warnings {
            eprintln!("{w}");
        }
        match &common.out {
            Some(p) => std::fs::write(p, &out.body)
                .map_err(|e| CliError::new("IoError", format!("{}: {e}", p.display())))?,
            None => print!("{}", out.body),
        }
        Ok(out.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            ExitCode::from(cli::EXIT_ERROR as u8)
        }
    }
}
