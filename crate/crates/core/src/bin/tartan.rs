use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tartan::cli::{
    cmd_compare, cmd_explore, cmd_simulate, cmd_verify, exit_code, parse_engines, CmdOutput, OutputFormat, RunConfig,
    EXIT_USAGE,
};
use tartan::Result;

/// Bit-serial accelerator simulator: cycle, energy and precision studies.
#[derive(Parser)]
#[command(name = "tartan", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Per-layer cycles, speedup, overhead and energy ratio against the baseline.
    Simulate(Common),
    /// Search per-layer precisions on a small network with shipped weights.
    Explore(Common),
    /// Random bit-serial vs bit-parallel equivalence trials.
    Verify(Common),
    /// Cross-network summary of STR and TRT speedups and efficiency.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// Network fixture name or path (comma-separated for several).
    #[arg(long)]
    net: Option<String>,
    /// Profile fixture name or path, one per network (default `<net>-100`).
    #[arg(long)]
    profile: Option<String>,
    /// Engines to simulate: dadn, str, trt.
    #[arg(long, default_value = "dadn,trt")]
    engines: String,
    #[arg(long = "arch.bits-per-cycle", default_value_t = 1)]
    bits_per_cycle: u8,
    #[arg(long, default_value_t = 16)]
    tiles: usize,
    #[arg(long, default_value_t = 16)]
    brick_size: usize,
    /// csv or table.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Output file (simulate, verify, compare) or directory (explore).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    clock_mhz: Option<f64>,
    /// Energy coefficient file (default: shipped calibration).
    #[arg(long)]
    coefficients: Option<PathBuf>,
    #[arg(long)]
    trials: Option<u64>,
    /// Disable the activation sign-bit negation in the bit-serial engines.
    #[arg(long)]
    inject_fault: bool,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    evalset: Option<PathBuf>,
    /// Relative accuracy thresholds, e.g. 1.0,0.99.
    #[arg(long)]
    threshold: Option<String>,
    /// Accuracy levels for compare, e.g. 100,99.
    #[arg(long)]
    accuracy: Option<String>,
}

fn list(s: &Option<String>) -> Vec<String> {
    s.as_deref()
        .map(|s| s.split(',').map(|p| p.trim().to_string()).filter(|p| !p.is_empty()).collect())
        .unwrap_or_default()
}

fn config(c: &Common) -> Result<RunConfig> {
    let mut cfg = RunConfig {
        networks: list(&c.net),
        profiles: list(&c.profile),
        engines: parse_engines(&c.engines)?,
        bits_per_cycle: c.bits_per_cycle,
        tiles: c.tiles,
        brick_size: c.brick_size,
        format: c.format.parse::<OutputFormat>()?,
        out: c.out.clone(),
        coefficients: c.coefficients.clone(),
        inject_fault: c.inject_fault,
        weights: c.weights.clone(),
        evalset: c.evalset.clone(),
        ..RunConfig::default()
    };
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(m) = c.clock_mhz {
        cfg.clock_mhz = m;
    }
    if let Some(n) = c.trials {
        cfg.trials = n;
    }
    if c.threshold.is_some() {
        cfg.thresholds = list(&c.threshold)
            .iter()
            .map(|t| {
                t.parse()
                    .map_err(|_| tartan::Error::Usage(format!("`{t}` is not a threshold")))
            })
            .collect::<Result<_>>()?;
    }
    if c.accuracy.is_some() {
        cfg.accuracy_levels = list(&c.accuracy);
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<CmdOutput> {
    match &cli.cmd {
        Cmd::Simulate(c) => cmd_simulate(&config(c)?),
        Cmd::Explore(c) => cmd_explore(&config(c)?),
        Cmd::Verify(c) => cmd_verify(&config(c)?),
        Cmd::Compare(c) => cmd_compare(&config(c)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            print!("{}", out.text);
            ExitCode::from(out.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
