use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use formulads_cli::{run_scenario, CliError, Report, Scenario, ScenarioConfig};

/// Runs a maintenance scenario against exact oracles.
#[derive(Debug, Parser)]
#[command(name = "formulads", version)]
struct Args {
    /// maintain, determinant, rank, matching or bits-sweep
    scenario: String,
    /// JSON or TOML scenario file
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config
    #[arg(long)]
    seed: Option<u64>,
    /// JSON-lines report destination; overrides the config
    #[arg(long)]
    out: Option<PathBuf>,
    /// Print the JSON-lines report on stdout instead of a one-line summary
    #[arg(long)]
    json: bool,
    /// Also write the records as a CSV table
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(args: &Args) -> Result<Report, CliError> {
    let scenario: Scenario = args.scenario.parse()?;
    let mut cfg = ScenarioConfig::load(&args.config)?;
    if cfg.scenario.is_some_and(|s| s != scenario) {
        return Err(CliError::Config(format!(
            "config is for {} but {} was requested",
            cfg.scenario.unwrap(),
            scenario
        )));
    }
    cfg.scenario = Some(scenario);
    if let Some(seed) = args.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    let report = run_scenario(&cfg)?;
    if let Some(out) = &cfg.out {
        let mut w = create(out)?;
        report.write_jsonl(&mut w)?;
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    if let Some(path) = &args.csv {
        report.write_csv(create(path)?)?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(report) => {
            if args.json {
                if report.write_jsonl(io::stdout().lock()).is_err() {
                    return ExitCode::from(2);
                }
            } else {
                let s = &report.summary;
                println!(
                    "{} seed={} steps={} failures={} max_abs_error={:e} {}",
                    s.scenario,
                    s.seed,
                    s.steps,
                    s.failures,
                    s.max_abs_error,
                    if s.pass { "PASS" } else { "FAIL" }
                );
            }
            if report.pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("formulads: {e}");
            ExitCode::from(2)
        }
    }
}
