use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use elasto_core::config::{parse_grid, Config};
use elasto_core::dynamics::scenarios::Scenario;
use elasto_core::harness::{self, CheckOptions, Corruption, HaltReason};
use elasto_core::Result;

#[derive(Parser)]
#[command(name = "elasto", version, about = "Free-boundary neo-Hookean elastodynamics on a periodic slab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration (defaults to the elastic-mode preset).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV, snapshots and JSON reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed of the random test ensembles; overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid as N1xN2xNz; overrides `[grid]`.
    #[arg(long, global = true)]
    grid: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorruptArg {
    Dn,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario, writing diagnostics.csv, snapshots and summary.json.
    Run,
    /// Run the property suite and print a JSON pass/fail report.
    Checks {
        /// Random samples for the operator properties.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Steps of the transport-invariant run.
        #[arg(long, default_value_t = 20)]
        transport_steps: usize,
        /// Inject a solver defect (negative control).
        #[arg(long, value_enum, hide = true)]
        corrupt: Option<CorruptArg>,
    },
    /// Refinement studies with observed orders.
    Convergence,
    /// Measured vs linear frequency for single-mode runs.
    Dispersion,
}

fn load(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::preset(Scenario::ElasticMode),
    };
    if let Some(g) = &cli.grid {
        cfg.grid = parse_grid(g)?;
    }
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(out: Option<&Path>, name: &str, json: &str) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(name), format!("{json}\n"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let cfg = load(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Run => {
            let result = harness::run(&cfg, out)?;
            let s = &result.summary;
            println!("{}", serde_json::to_string_pretty(s).expect("summary serializes"));
            Ok(s.halt == HaltReason::Completed)
        }
        Command::Checks {
            samples,
            transport_steps,
            corrupt,
        } => {
            let opts = CheckOptions {
                seed: cfg.run.seed,
                samples: *samples,
                transport_steps: *transport_steps,
                corruption: corrupt.map(|CorruptArg::Dn| Corruption::Dn),
            };
            let report = harness::checks(&cfg, opts)?;
            let json = report.to_json();
            println!("{json}");
            write_json(out, "checks.json", &json)?;
            Ok(report.passed)
        }
        Command::Convergence => {
            let report = harness::convergence(&cfg)?;
            print!("{}", report.table());
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            write_json(out, "convergence.json", &json)?;
            Ok(report.passed())
        }
        Command::Dispersion => {
            let report = harness::dispersion(&cfg)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{json}");
            write_json(out, "dispersion.json", &json)?;
            Ok(report.passed())
        }
    }
}
