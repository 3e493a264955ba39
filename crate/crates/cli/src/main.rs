use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use airguard::harness::{brute_force_oracle, run_montecarlo, SweepConfig, ORACLE_MAX_TASKS};
use airguard::losses::TaskTable;
use airguard::report::{emit_report, Report, ReportFormat};
use airguard::scenario::tasks_from_intruders;
use airguard::simulator::{opening_scene, Episode};
use airguard::{load_scenario, resolve, ScenarioConfig};

/// Decentralized airspace defense: allocation, simulation and sweeps.
#[derive(Debug, Parser)]
#[command(name = "airguard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Allocate the opening wave of intruders once and print the result.
    Allocate(Common),
    /// Run one episode and emit its event stream and metrics.
    Simulate(Common),
    /// Sweep radial separation and evader count over many epochs.
    Montecarlo(Sweep),
    /// Solve the opening wave exhaustively.
    Oracle(Common),
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario file (TOML). Built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// RNG seed. Defaults to the scenario's `rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file. Standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, report or events.
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Debug, Args)]
struct Sweep {
    #[command(flatten)]
    common: Common,
    /// Epochs per cell.
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// Comma-separated radial separations in meters.
    #[arg(long, value_delimiter = ',', default_values_t = SweepConfig::DEFAULT_SEPARATIONS)]
    sep_grid: Vec<f64>,
    /// Comma-separated evader counts. Defaults to the scenario's count.
    #[arg(long, value_delimiter = ',')]
    evaders_grid: Vec<usize>,
    /// Worker threads. Defaults to the available cores.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let Some(path) = &self.scenario else {
            return Ok(ScenarioConfig::default());
        };
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        load_scenario(&text).with_context(|| format!("invalid scenario {}", path.display()))
    }

    fn seed(&self, cfg: &ScenarioConfig) -> u64 {
        self.seed.unwrap_or(cfg.rng_seed)
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
            }
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn opening_tasks(common: &Common) -> Result<(ScenarioConfig, airguard::WorldState, TaskTable)> {
    let cfg = common.config()?;
    let world = opening_scene(&cfg, common.seed(&cfg));
    let tasks = TaskTable::from_parts(
        &tasks_from_intruders(&world.intruders, &cfg),
        &world.intruders,
    );
    Ok((cfg, world, tasks))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Allocate(common) => {
            let (cfg, world, tasks) = opening_tasks(&common)?;
            let allocation = resolve(&world.evaders, &tasks, &cfg)?;
            let format = common.format.unwrap_or(ReportFormat::Report);
            common.write(&emit_report(Report::Allocation(&allocation), format)?)
        }
        Command::Oracle(common) => {
            let (cfg, world, tasks) = opening_tasks(&common)?;
            let solution = brute_force_oracle(&world.evaders, &tasks, &cfg, ORACLE_MAX_TASKS)?;
            let format = common.format.unwrap_or(ReportFormat::Report);
            common.write(&emit_report(
                Report::Allocation(&solution.as_allocation(&tasks)),
                format,
            )?)
        }
        Command::Simulate(common) => {
            let cfg = common.config()?;
            let outcome = Episode::new(&cfg, common.seed(&cfg), 0).run()?;
            let format = common.format.unwrap_or(ReportFormat::Events);
            let report = Report::Episode {
                metrics: &outcome.metrics,
                events: &outcome.events,
            };
            common.write(&emit_report(report, format)?)
        }
        Command::Montecarlo(sweep) => {
            let cfg = sweep.common.config()?;
            let mut config = SweepConfig::new(cfg.clone());
            config.base_seed = sweep.common.seed(&cfg);
            config.epochs = sweep.epochs;
            config.separations = sweep.sep_grid.clone();
            if !sweep.evaders_grid.is_empty() {
                config.evader_counts = sweep.evaders_grid.clone();
            }
            let jobs = match sweep.jobs {
                Some(0) => bail!("--jobs must be at least 1"),
                Some(n) => n,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            };
            let result = run_montecarlo(&config, jobs)?;
            let format = sweep.common.format.unwrap_or(ReportFormat::Csv);
            sweep
                .common
                .write(&emit_report(Report::Sweep(&result), format)?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
