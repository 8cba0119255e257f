use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use qsts::analyzer::{resolution_study, MetricWindow};
use qsts::ess::{compute_limits, PeriodMap, SigmaEstimator};
use qsts::io::{analyze, run, write_run_directory, Inputs, RunDirectory, METRICS};
use qsts::profiles::read_profiles;

#[derive(Parser)]
#[command(name = "qsts", version, about = "Annual quasi-static time-series grid simulation")]
struct Cli {
    /// Machine-readable summary on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and check a run configuration and everything it references.
    Validate { config: PathBuf },
    /// Simulate and write the run directory.
    Run {
        config: PathBuf,
        /// Overrides the configured output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Metrics over a finished run directory.
    Analyze {
        run_dir: PathBuf,
        /// Repeatable; defaults to `summary`.
        #[arg(long = "metric")]
        metrics: Vec<String>,
        /// all, steps:A..B, day:YYYY-MM-DD, days:A..B, week:YYYY-Www, year:YYYY, period:N
        #[arg(long, default_value = "all")]
        window: String,
    },
    /// Run the configured horizon at several resolutions.
    ResolutionStudy {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "5,15,30,60")]
        resolutions: Vec<u32>,
    },
    /// Generation limits of every column of a profile file.
    Limits {
        profiles: PathBuf,
        /// Twelve comma-separated period numbers, January first.
        #[arg(long, default_value = "1,1,1,2,2,3,3,3,4,4,5,5")]
        periods: String,
        #[arg(long, value_enum, default_value = "sample")]
        estimator: Estimator,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Sample,
    Population,
}

/// Exit status with the message that goes with it.
enum Failure {
    Validation(String),
    Simulation(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Simulation(_) => 2,
        }
    }
}

fn emit(json: bool, value: serde_json::Value, human: impl FnOnce()) {
    if json {
        println!("{}", serde_json::to_string_pretty(&value).expect("json value"));
    } else {
        human();
    }
}

fn load(config: &Path) -> Result<Inputs, Failure> {
    Inputs::load(config).map_err(|e| Failure::Validation(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Validation(m) | Failure::Simulation(m)) = &f;
            eprintln!("error: {m}");
            if cli.json {
                println!("{}", json!({ "ok": false, "exit_code": f.code(), "error": m }));
            }
            ExitCode::from(f.code())
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Validate { config } => {
            let inputs = load(config)?;
            let g = &inputs.grid;
            emit(
                cli.json,
                json!({
                    "ok": true,
                    "network": g.name,
                    "buses": g.bus_count(),
                    "branches": g.branches.len(),
                    "transformers": g.transformers.len(),
                    "generators": g.generators.len(),
                    "storage_units": g.ess.len(),
                    "profile_rows": inputs.profiles.len(),
                    "resolution_min": inputs.engine.resolution_min,
                    "config_hash": inputs.loaded.hash,
                }),
                || {
                    println!(
                        "{}: {} buses, {} branches, {} generators, {} profile rows at {} min",
                        g.name,
                        g.bus_count(),
                        g.branches.len(),
                        g.generators.len(),
                        inputs.profiles.len(),
                        inputs.engine.resolution_min
                    );
                    println!("configuration OK ({})", inputs.loaded.hash);
                },
            );
            Ok(())
        }
        Command::Run { config, output } => {
            let inputs = load(config)?;
            let outcome = run(&inputs).map_err(|e| Failure::Simulation(e.to_string()))?;
            let dir = output.clone().unwrap_or_else(|| inputs.loaded.config.output_dir.clone());
            let paths = write_run_directory(&dir, &inputs, &outcome).map_err(|e| Failure::Simulation(e.to_string()))?;
            let summary = qsts::io::summarize(&inputs.grid, &outcome.store, inputs.engine.resolution_min);
            let failed = !outcome.store.failures.is_empty();
            emit(
                cli.json,
                json!({
                    "ok": !failed,
                    "run_dir": paths.dir,
                    "elapsed_s": outcome.elapsed_s,
                    "segments": outcome.plan.segments.len(),
                    "store_digest": outcome.store.digest(),
                    "summary": summary,
                }),
                || {
                    println!(
                        "{} steps in {} segments, {:.1} s; mean loss {:.2} MW, max {:.2} MW",
                        summary.recorded_steps,
                        outcome.plan.segments.len(),
                        outcome.elapsed_s,
                        summary.loss_mean_mw,
                        summary.loss_max_mw
                    );
                    println!("run directory: {}", paths.dir.display());
                },
            );
            if failed {
                let f = &outcome.store.failures[0];
                return Err(Failure::Simulation(format!(
                    "{} segment(s) failed; first at step {} sub-step {}: {}",
                    outcome.store.failures.len(),
                    f.step,
                    f.sub_step,
                    f.message
                )));
            }
            Ok(())
        }
        Command::Analyze {
            run_dir,
            metrics,
            window,
        } => {
            let dir = RunDirectory::open(run_dir).map_err(|e| Failure::Validation(e.to_string()))?;
            let window: MetricWindow = window.parse().map_err(Failure::Validation)?;
            let metrics = if metrics.is_empty() {
                vec!["summary".to_string()]
            } else if metrics.iter().any(|m| m == "all") {
                METRICS.iter().map(|s| s.to_string()).collect()
            } else {
                metrics.clone()
            };
            let report = analyze(&dir, &metrics, &window).map_err(Failure::Validation)?;
            println!("{}", serde_json::to_string_pretty(&report).expect("json value"));
            Ok(())
        }
        Command::ResolutionStudy { config, resolutions } => {
            let inputs = load(config)?;
            let s = &inputs.loaded.config.scheduler;
            let rows = resolution_study(
                &inputs.grid,
                &inputs.profiles,
                &inputs.engine,
                resolutions,
                s.mode,
                s.workers,
                inputs.limits.clone(),
            )
            .map_err(|e| Failure::Simulation(e.to_string()))?;
            emit(cli.json, json!({ "ok": true, "rows": rows }), || {
                println!("{:>8} {:>8} {:>10} {:>12} {:>12}", "res_min", "steps", "runtime_s", "mean_MW", "max_MW");
                for r in &rows {
                    println!(
                        "{:>8} {:>8} {:>10.2} {:>12.3} {:>12.3}",
                        r.resolution_min, r.steps, r.runtime_s, r.loss_mean_mw, r.loss_max_mw
                    );
                }
            });
            Ok(())
        }
        Command::Limits {
            profiles,
            periods,
            estimator,
        } => {
            let map: PeriodMap = periods.parse().map_err(|e: qsts::EssError| Failure::Validation(e.to_string()))?;
            let ds = read_profiles(profiles).map_err(|e| Failure::Validation(e.to_string()))?;
            let per_row: Vec<u8> = (0..ds.len()).map(|t| map.period(ds.timestamp(t))).collect();
            let est = match estimator {
                Estimator::Sample => SigmaEstimator::Sample,
                Estimator::Population => SigmaEstimator::Population,
            };
            let table = compute_limits(&ds.series, &per_row, est).map_err(|e| Failure::Validation(e.to_string()))?;
            emit(cli.json, serde_json::to_value(&table).expect("limit table"), || {
                println!("{:<12} {:>6} {:>12} {:>12} {:>12} {:>12}", "zone", "period", "mean", "sigma", "max", "min");
                for l in &table.entries {
                    println!(
                        "{:<12} {:>6} {:>12.4} {:>12.4} {:>12.4} {:>12.4}",
                        l.zone, l.period, l.mu, l.sigma, l.gen_max_lim, l.gen_min_lim
                    );
                }
            });
            Ok(())
        }
    }
}
