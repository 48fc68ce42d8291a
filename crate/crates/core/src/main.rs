use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use rsiot::harness::{self, Scenario};

#[derive(Parser)]
#[command(name = "rsiot", version, about = "Relay-sharing IoT proof-of-delivery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or builtin scenario name.
    Run {
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long = "gas-table")]
        gas_table: Option<PathBuf>,
        /// Write the transcript and gas report into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the tamper detection rate by simulation.
    TamperMc {
        #[arg(long)]
        l: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Summarise gas usage from a transcript file.
    GasReport { transcript: PathBuf },
    /// List builtin scenarios.
    ListScenarios,
}

fn load_scenario(arg: &str) -> Result<Scenario> {
    let path = Path::new(arg);
    if path.exists() {
        return Scenario::load(path).with_context(|| format!("loading {arg}"));
    }
    Ok(harness::builtin(arg)?)
}

fn run(scenario: &str, seed: Option<u64>, gas_table: Option<PathBuf>, out: Option<PathBuf>) -> Result<bool> {
    let mut scenario = load_scenario(scenario)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if gas_table.is_some() {
        scenario.gas.table = gas_table;
    }
    let t = harness::run(&scenario)?;
    let text = t.to_text();
    if let Some(dir) = out {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let stem = format!("{}-{}", t.scenario, t.seed);
        let transcript = dir.join(format!("{stem}.transcript"));
        std::fs::write(&transcript, &text).with_context(|| format!("writing {}", transcript.display()))?;
        let report = dir.join(format!("{stem}.gas"));
        std::fs::write(&report, harness::gas_report(&text).to_text())
            .with_context(|| format!("writing {}", report.display()))?;
        println!("transcript path={}", transcript.display());
    }
    println!("scenario name={} seed={} lines={}", t.scenario, t.seed, t.lines.len());
    for line in text.lines().filter(|l| l.starts_with("outcome ") || l.starts_with("balance ")) {
        println!("{line}");
    }
    println!("{}", t.lines.last().map(String::as_str).unwrap_or("verdict fail"));
    Ok(t.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, seed, gas_table, out } => run(&scenario, seed, gas_table, out),
        Command::TamperMc { l, n, m, trials, seed } => harness::monte_carlo_tamper(l, n, m, trials, seed)
            .map(|e| {
                println!("{}", e.to_line());
                true
            })
            .map_err(Into::into),
        Command::GasReport { transcript } => std::fs::read_to_string(&transcript)
            .with_context(|| format!("reading {}", transcript.display()))
            .map(|text| {
                print!("{}", harness::gas_report(&text).to_text());
                true
            }),
        Command::ListScenarios => {
            for s in harness::builtins() {
                println!("scenario name={} description={:?}", s.name, s.description);
            }
            Ok(true)
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
