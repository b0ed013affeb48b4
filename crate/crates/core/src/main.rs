use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use easer_sim::runner::{run_and_write, OutputFormat, Overrides, Scenario, ScenarioConfig};

/// Stimulated emission of polarization-entangled photon pairs: scenario runner.
///
/// Scenarios: distribution, delay-scan, fringe-scan, amplify, project,
/// montecarlo. Delays are optical path delays in micrometres (twice the
/// translation-stage travel for a retro-reflecting mirror).
#[derive(Debug, Parser)]
#[command(name = "easer-sim", version)]
struct Cli {
    /// Scenario to run.
    scenario: Scenario,

    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,

    /// Interaction parameter; sets pdc.tau and both double-pass strengths.
    #[arg(long)]
    tau: Option<f64>,

    /// Relative pump phase between the passes, radians.
    #[arg(long)]
    theta: Option<f64>,

    /// Truncation in photon pairs for single and double pass.
    #[arg(long)]
    cutoff: Option<u32>,

    /// Seed for the Monte-Carlo scenario.
    #[arg(long)]
    seed: Option<u64>,

    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    /// csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = ScenarioConfig::load(&cli.config).and_then(|mut cfg| {
        cfg.apply(&Overrides {
            tau: cli.tau,
            theta: cli.theta,
            cutoff: cli.cutoff,
            seed: cli.seed,
            out: cli.out.clone(),
            format: cli.format,
        });
        run_and_write(cli.scenario, &cfg)
    });
    match result {
        Ok(Some(bytes)) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(&bytes).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("easer-sim: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
