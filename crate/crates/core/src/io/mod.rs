//! Run configuration, input loading and the run directory.
//!
//! A run directory holds everything `analyze` needs:
//!
//! ```text
//! manifest.json        config hash, versions, plan, store digest
//! config.toml          the configuration as read
//! network.toml         the network in per-unit
//! states/states.jsonl  one recorded state per line
//! states/voltages.csv  |V| per bus per recorded step
//! actions/actions.csv  operator actions
//! ess/records.csv      storage decisions
//! ess/limits.json      generation limits in force
//! diagnostics/         per-step diagnostics, segment failures
//! metrics/summary.json headline metrics
//! ```

use std::env;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::analyzer::{self, MetricWindow};
use crate::engine::{EngineConfig, FailureRecord, Simulator, StepDiagnostics};
use crate::error::{ConfigError, SchedulerError};
use crate::ess::{LimitTable, PeakCalendar};
use crate::network::{load_network_file, to_toml, Grid};
use crate::operator::OperatorAction;
use crate::profiles::synthetic::{self, SyntheticSpec};
use crate::profiles::{load_profiles, TimeSeriesDataset};
use crate::scheduler::{execute, AnnualResultStore, RunMode, RunPlan, DEFAULT_WARM_IN};
use crate::state::SystemState;

pub const FORMAT_VERSION: u32 = 1;
pub const ENV_OUTPUT_DIR: &str = "QSTS_OUTPUT_DIR";
pub const ENV_WORKERS: &str = "QSTS_WORKERS";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum LimitSource {
    /// From the run's own profiles.
    Computed,
    /// A JSON limit table as printed by `qsts limits --json`.
    Supplied { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileSource {
    /// Wide CSV files sharing start, spacing and length.
    Files { paths: Vec<PathBuf> },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SchedulerSettings {
    pub mode: RunMode,
    pub workers: usize,
    pub warm_in: usize,
}

impl Default for SchedulerSettings {
    fn default() -> Self {
        SchedulerSettings {
            mode: RunMode::Parallel,
            workers: 1,
            warm_in: DEFAULT_WARM_IN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub network: PathBuf,
    pub profiles: ProfileSource,
    /// TOML peak calendar; replaces `engine.ess.calendar` when given.
    #[serde(default)]
    pub peak_calendar: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Reserved: runs are deterministic.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub engine: EngineConfig,
    #[serde(default = "default_limits")]
    pub limits: LimitSource,
    #[serde(default)]
    pub scheduler: SchedulerSettings,
}

fn default_output() -> PathBuf {
    PathBuf::from("runs/latest")
}

fn default_limits() -> LimitSource {
    LimitSource::Computed
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ConfigError + '_ {
    move |source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn invalid(path: &Path, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// A configuration file read from disk with its paths made absolute.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub text: String,
    /// SHA-256 of the file bytes.
    pub hash: String,
    pub config: RunConfig,
}

impl LoadedConfig {
    /// Reads and parses `path`, resolves relative paths against its
    /// directory, applies the environment overrides and checks that every
    /// referenced file exists.
    pub fn read(path: &Path) -> Result<LoadedConfig, ConfigError> {
        let text = fs::read_to_string(path).map_err(|e| {
            if e.kind() == std::io::ErrorKind::NotFound {
                ConfigError::MissingFile {
                    path: path.to_path_buf(),
                }
            } else {
                ConfigError::Io {
                    path: path.to_path_buf(),
                    source: e,
                }
            }
        })?;
        let mut config: RunConfig = toml::from_str(&text).map_err(|e| invalid(path, e))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        config.resolve(dir);
        config.apply_env(|k| env::var(k).ok()).map_err(|m| invalid(path, m))?;
        config.check_files()?;
        config.engine.check().map_err(|e| invalid(path, e))?;
        Ok(LoadedConfig {
            path: path.to_path_buf(),
            hash: sha256_hex(text.as_bytes()),
            text,
            config,
        })
    }
}

impl RunConfig {
    fn resolve(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        fix(&mut self.network);
        if let ProfileSource::Files { paths } = &mut self.profiles {
            paths.iter_mut().for_each(fix);
        }
        if let Some(p) = &mut self.peak_calendar {
            fix(p);
        }
        if let LimitSource::Supplied { path } = &mut self.limits {
            fix(path);
        }
        fix(&mut self.output_dir);
    }

    /// Output directory and worker count only; everything else comes from
    /// the file.
    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), String> {
        if let Some(d) = var(ENV_OUTPUT_DIR) {
            self.output_dir = PathBuf::from(d);
        }
        if let Some(w) = var(ENV_WORKERS) {
            self.scheduler.workers = w
                .parse()
                .ok()
                .filter(|&n: &usize| n > 0)
                .ok_or_else(|| format!("{ENV_WORKERS}=`{w}` is not a positive integer"))?;
        }
        Ok(())
    }

    /// Every input file the configuration names.
    pub fn input_files(&self) -> Vec<&Path> {
        let mut out = vec![self.network.as_path()];
        if let ProfileSource::Files { paths } = &self.profiles {
            out.extend(paths.iter().map(PathBuf::as_path));
        }
        if let Some(p) = &self.peak_calendar {
            out.push(p);
        }
        if let LimitSource::Supplied { path } = &self.limits {
            out.push(path);
        }
        out
    }

    fn check_files(&self) -> Result<(), ConfigError> {
        for p in self.input_files() {
            if !p.is_file() {
                return Err(ConfigError::MissingFile { path: p.to_path_buf() });
            }
        }
        Ok(())
    }
}

/// Everything a run needs, loaded and validated.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub loaded: LoadedConfig,
    pub grid: Grid,
    pub profiles: TimeSeriesDataset,
    /// Engine settings with the peak calendar and resolution filled in.
    pub engine: EngineConfig,
    pub limits: Option<LimitTable>,
}

pub fn read_limits(path: &Path) -> Result<LimitTable, ConfigError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| invalid(path, e))
}

impl Inputs {
    pub fn load(config_path: &Path) -> Result<Inputs, ConfigError> {
        let loaded = LoadedConfig::read(config_path)?;
        let c = &loaded.config;
        let grid = Grid::new(load_network_file(&c.network)?)?;
        let mut engine = c.engine.clone();
        if let Some(p) = &c.peak_calendar {
            let text = fs::read_to_string(p).map_err(io_err(p))?;
            let cal: PeakCalendar = toml::from_str(&text).map_err(|e| invalid(p, e))?;
            cal.check()?;
            engine.ess.calendar = cal;
        }
        let profiles = match &c.profiles {
            ProfileSource::Files { paths } => {
                let refs: Vec<&Path> = paths.iter().map(PathBuf::as_path).collect();
                load_profiles(&refs, grid.model(), None)?
            }
            ProfileSource::Synthetic(spec) => synthetic::generate(grid.model(), spec),
        };
        if profiles.resolution_min != engine.resolution_min {
            return Err(invalid(
                config_path,
                format!(
                    "profiles are at {} min but engine.resolution_min is {}",
                    profiles.resolution_min, engine.resolution_min
                ),
            ));
        }
        let limits = match &c.limits {
            LimitSource::Computed => None,
            LimitSource::Supplied { path } => Some(read_limits(path)?),
        };
        // building the simulator checks the remaining cross-references
        Simulator::new(&grid, &profiles, &engine, limits.clone()).map_err(|e| invalid(config_path, e))?;
        Ok(Inputs {
            loaded,
            grid,
            profiles,
            engine,
            limits,
        })
    }

    pub fn simulator(&self) -> Simulator<'_> {
        Simulator::new(&self.grid, &self.profiles, &self.engine, self.limits.clone())
            .expect("inputs were checked when loaded")
    }

    pub fn plan(&self, sim: &Simulator) -> RunPlan {
        let s = &self.loaded.config.scheduler;
        RunPlan::new(sim.horizon(), self.engine.resolution_min, s.mode, s.workers, s.warm_in)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub plan: RunPlan,
    pub store: AnnualResultStore,
    pub limits: LimitTable,
    pub elapsed_s: f64,
}

pub fn run(inputs: &Inputs) -> Result<RunOutcome, SchedulerError> {
    let sim = inputs.simulator();
    let plan = inputs.plan(&sim);
    let clock = Instant::now();
    let store = execute(&plan, &sim)?;
    Ok(RunOutcome {
        limits: sim.storage.as_ref().map(|s| s.limits.clone()).unwrap_or_default(),
        plan,
        store,
        elapsed_s: clock.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub qsts_version: String,
    pub config_file: PathBuf,
    pub config_hash: String,
    pub network_name: String,
    pub profile_provenance: String,
    pub resolution_min: u32,
    pub engine: EngineConfig,
    pub plan: RunPlan,
    pub recorded_steps: usize,
    pub ranges: Vec<[usize; 2]>,
    pub gaps: Vec<[usize; 2]>,
    pub failed_segments: usize,
    pub store_digest: String,
    pub elapsed_s: f64,
}

/// Headline numbers written to `metrics/summary.json` and printed by `run --json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub recorded_steps: usize,
    pub failed_segments: usize,
    pub loss_mean_mw: f64,
    pub loss_max_mw: f64,
    pub loss_max_step: Option<usize>,
    pub loss_energy_mwh: f64,
    pub worst_loss_mismatch_mw: f64,
    pub voltage_excursions: usize,
    pub actions: usize,
    pub switching: analyzer::SwitchCounts,
    pub concession_steps: usize,
    pub marketable_ratio: Option<f64>,
}

pub fn summarize(grid: &Grid, store: &AnnualResultStore, resolution_min: u32) -> Summary {
    let l = analyzer::losses(store, grid, &MetricWindow::All);
    let v = analyzer::voltage_statistics(store, grid, None, &MetricWindow::All);
    let mut switching = analyzer::SwitchCounts::default();
    for c in analyzer::switching_counts(&store.actions, 0, usize::MAX).into_values() {
        switching += c;
    }
    let ledger = ledger_of(store, resolution_min);
    let total = ledger.window(None, chrono::NaiveDate::MIN, chrono::NaiveDate::MAX);
    Summary {
        recorded_steps: store.states.len(),
        failed_segments: store.failures.len(),
        loss_mean_mw: l.mean,
        loss_max_mw: l.max,
        loss_max_step: l.max_step,
        loss_energy_mwh: l.energy_mwh(resolution_min),
        worst_loss_mismatch_mw: l.worst_mismatch(),
        voltage_excursions: v.iter().map(|s| s.excursions).sum(),
        actions: store.actions.len(),
        switching,
        concession_steps: store.diagnostics.iter().filter(|d| d.is_concession()).count(),
        marketable_ratio: total.marketable_ratio(),
    }
}

fn ledger_of(store: &AnnualResultStore, resolution_min: u32) -> crate::ess::EnergyLedger {
    let Some(first) = store.states.first() else {
        return Default::default();
    };
    let (s0, t0) = (first.step as i64, first.timestamp);
    let records = analyzer::store_ess_records(store);
    analyzer::ledger_from_records(&records, resolution_min, |k| {
        t0 + chrono::Duration::minutes((k as i64 - s0) * resolution_min as i64)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunPaths {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub states: PathBuf,
    pub actions: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, ConfigError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ConfigError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| invalid(path, e))?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), ConfigError> {
    let mut w = create(path)?;
    for it in items {
        serde_json::to_writer(&mut w, it).map_err(|e| invalid(path, e))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), ConfigError> {
    let w = create(path)?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r).map_err(|e| invalid(path, e))?;
    }
    csv.flush().map_err(io_err(path))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, ConfigError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| invalid(path, e))
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ConfigError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (k, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| invalid(path, format!("line {}: {e}", k + 1)))?);
    }
    Ok(out)
}

fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, ConfigError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| invalid(path, e))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| invalid(path, e))
}

/// Flat form of an action for the CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ActionRow {
    step: usize,
    sub_step: usize,
    round: usize,
    stage: crate::operator::Stage,
    kind: crate::operator::ActionKind,
    device: String,
    before: f64,
    after: f64,
    trigger: String,
}

impl From<&OperatorAction> for ActionRow {
    fn from(a: &OperatorAction) -> Self {
        ActionRow {
            step: a.step,
            sub_step: a.sub_step,
            round: a.round,
            stage: a.stage,
            kind: a.kind,
            device: a.device.clone(),
            before: a.before,
            after: a.after,
            trigger: a.trigger.clone(),
        }
    }
}

impl From<ActionRow> for OperatorAction {
    fn from(a: ActionRow) -> Self {
        OperatorAction {
            step: a.step,
            sub_step: a.sub_step,
            round: a.round,
            stage: a.stage,
            kind: a.kind,
            device: a.device,
            before: a.before,
            after: a.after,
            trigger: a.trigger,
        }
    }
}

fn write_voltages(path: &Path, grid: &Grid, states: &[SystemState]) -> Result<(), ConfigError> {
    let w = create(path)?;
    let mut csv = csv::Writer::from_writer(w);
    let mut header = vec!["step".to_string(), "timestamp".to_string()];
    header.extend(grid.buses.iter().map(|b| b.id.clone()));
    csv.write_record(&header).map_err(|e| invalid(path, e))?;
    for s in states {
        let mut row = vec![s.step.to_string(), s.timestamp.format("%Y-%m-%dT%H:%M:%S").to_string()];
        row.extend(s.vm.iter().map(f64::to_string));
        csv.write_record(&row).map_err(|e| invalid(path, e))?;
    }
    csv.flush().map_err(io_err(path))
}

/// Writes the run directory at `dir`. Outputs of failed segments are kept:
/// the failure trace goes to `diagnostics/failures.json` and metrics cover
/// what was recorded.
pub fn write_run_directory(dir: &Path, inputs: &Inputs, outcome: &RunOutcome) -> Result<RunPaths, ConfigError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let store = &outcome.store;
    let paths = RunPaths {
        dir: dir.to_path_buf(),
        manifest: dir.join("manifest.json"),
        states: dir.join("states/states.jsonl"),
        actions: dir.join("actions/actions.csv"),
    };
    let config_copy = dir.join("config.toml");
    fs::write(&config_copy, &inputs.loaded.text).map_err(io_err(&config_copy))?;
    let net = dir.join("network.toml");
    fs::write(&net, to_toml(inputs.grid.model())).map_err(io_err(&net))?;

    write_jsonl(&paths.states, &store.states)?;
    write_voltages(&dir.join("states/voltages.csv"), &inputs.grid, &store.states)?;
    let rows: Vec<ActionRow> = store.actions.iter().map(ActionRow::from).collect();
    write_csv(&paths.actions, &rows)?;
    write_csv(&dir.join("ess/records.csv"), &analyzer::store_ess_records(store))?;
    write_json(&dir.join("ess/limits.json"), &outcome.limits)?;
    write_jsonl(&dir.join("diagnostics/steps.jsonl"), &store.diagnostics)?;
    write_json(&dir.join("diagnostics/failures.json"), &store.failures)?;

    let res = inputs.engine.resolution_min;
    let losses = analyzer::losses(store, &inputs.grid, &MetricWindow::All);
    #[derive(Serialize)]
    struct LossRow {
        step: usize,
        balance_mw: f64,
        branch_mw: f64,
    }
    let loss_rows: Vec<LossRow> = (0..losses.steps.len())
        .map(|k| LossRow {
            step: losses.steps[k],
            balance_mw: losses.balance_mw[k],
            branch_mw: losses.branch_mw[k],
        })
        .collect();
    write_csv(&dir.join("metrics/losses.csv"), &loss_rows)?;
    write_csv(
        &dir.join("metrics/voltage.csv"),
        &analyzer::voltage_statistics(store, &inputs.grid, None, &MetricWindow::All),
    )?;
    write_json(&dir.join("metrics/summary.json"), &summarize(&inputs.grid, store, res))?;

    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        qsts_version: env!("CARGO_PKG_VERSION").to_string(),
        config_file: inputs.loaded.path.clone(),
        config_hash: inputs.loaded.hash.clone(),
        network_name: inputs.grid.name.clone(),
        profile_provenance: inputs.profiles.provenance.clone(),
        resolution_min: res,
        engine: inputs.engine.clone(),
        plan: outcome.plan.clone(),
        recorded_steps: store.states.len(),
        ranges: store.ranges.clone(),
        gaps: store.gaps.clone(),
        failed_segments: store.failures.len(),
        store_digest: store.digest(),
        elapsed_s: outcome.elapsed_s,
    };
    write_json(&paths.manifest, &manifest)?;
    Ok(paths)
}

/// A run directory read back from disk.
#[derive(Debug, Clone)]
pub struct RunDirectory {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub grid: Grid,
    pub store: AnnualResultStore,
    pub limits: LimitTable,
}

impl RunDirectory {
    pub fn open(dir: &Path) -> Result<RunDirectory, ConfigError> {
        let manifest: Manifest = read_json(&dir.join("manifest.json"))?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(invalid(
                &dir.join("manifest.json"),
                format!("format version {} is not {FORMAT_VERSION}", manifest.format_version),
            ));
        }
        let grid = Grid::new(load_network_file(&dir.join("network.toml"))?)?;
        let actions: Vec<ActionRow> = read_csv(&dir.join("actions/actions.csv"))?;
        let failures: Vec<FailureRecord> = read_json(&dir.join("diagnostics/failures.json"))?;
        let diagnostics: Vec<StepDiagnostics> = read_jsonl(&dir.join("diagnostics/steps.jsonl"))?;
        let store = AnnualResultStore {
            states: read_jsonl(&dir.join("states/states.jsonl"))?,
            actions: actions.into_iter().map(OperatorAction::from).collect(),
            diagnostics,
            ranges: manifest.ranges.clone(),
            gaps: manifest.gaps.clone(),
            failures,
        };
        let limits = read_json(&dir.join("ess/limits.json"))?;
        Ok(RunDirectory {
            dir: dir.to_path_buf(),
            manifest,
            grid,
            store,
            limits,
        })
    }

    /// SHA-256 of the copied configuration; equals the manifest's hash
    /// when the directory is intact.
    pub fn recompute_config_hash(&self) -> Result<String, ConfigError> {
        let p = self.dir.join("config.toml");
        Ok(sha256_hex(&fs::read(&p).map_err(io_err(&p))?))
    }
}

pub const METRICS: &[&str] = &[
    "summary",
    "losses",
    "switching",
    "voltage",
    "flexibility",
    "reserves",
    "ess",
    "generation",
    "heatmap",
];

/// Metrics over a run directory as one JSON object keyed by metric name.
pub fn analyze(run: &RunDirectory, metrics: &[String], window: &MetricWindow) -> Result<serde_json::Value, String> {
    let grid = &run.grid;
    let store = &run.store;
    let res = run.manifest.resolution_min;
    let selected: Vec<&SystemState> = window.states(store).collect();
    let mut out = serde_json::Map::new();
    let to_value = |v: Result<serde_json::Value, serde_json::Error>| v.map_err(|e| e.to_string());
    for m in metrics {
        let v = match m.as_str() {
            "summary" => to_value(serde_json::to_value(summarize(grid, store, res)))?,
            "losses" => {
                let l = analyzer::losses(store, grid, window);
                serde_json::json!({
                    "steps": l.steps.len(),
                    "mean_mw": l.mean,
                    "max_mw": l.max,
                    "max_step": l.max_step,
                    "energy_mwh": l.energy_mwh(res),
                    "worst_mismatch_mw": l.worst_mismatch(),
                })
            }
            "switching" => {
                let (from, to) = match (selected.first(), selected.last()) {
                    (Some(a), Some(b)) => (a.step, b.step),
                    _ => (0, 0),
                };
                let counts = analyzer::switching_counts(&store.actions, from, to);
                let mismatches = match (selected.first(), selected.last()) {
                    (Some(a), Some(b)) => analyzer::telescoping_mismatches(grid, &store.actions, a, b),
                    _ => Vec::new(),
                };
                serde_json::json!({ "from": from, "to": to, "devices": counts, "telescoping_mismatches": mismatches })
            }
            "voltage" => to_value(serde_json::to_value(analyzer::voltage_statistics(store, grid, None, window)))?,
            "flexibility" => {
                let f = analyzer::flexibility(store, grid, window);
                let mean = |g: fn(&analyzer::FlexibilityPoint) -> f64| {
                    if f.is_empty() {
                        0.0
                    } else {
                        f.iter().map(g).sum::<f64>() / f.len() as f64
                    }
                };
                serde_json::json!({
                    "steps": f.len(),
                    "pii_mean_mw": mean(|p| p.pii),
                    "pde_mean_mw": mean(|p| p.pde),
                    "pii_min_mw": f.iter().map(|p| p.pii).fold(f64::INFINITY, f64::min),
                    "pde_min_mw": f.iter().map(|p| p.pde).fold(f64::INFINITY, f64::min),
                })
            }
            "reserves" => {
                let r = analyzer::reserves(store, grid, window);
                serde_json::json!({
                    "steps": r.len(),
                    "agc_min_mw": r.iter().map(|p| p.agc_mw).fold(f64::INFINITY, f64::min),
                    "reactive_min_mvar": r.iter().map(|p| p.reactive_mvar).fold(f64::INFINITY, f64::min),
                })
            }
            "ess" => {
                let (Some(a), Some(b)) = (selected.first(), selected.last()) else {
                    out.insert(m.clone(), serde_json::Value::Null);
                    continue;
                };
                let ledger = ledger_of(store, res);
                to_value(serde_json::to_value(analyzer::ess_utilization(
                    &ledger,
                    a.timestamp.date(),
                    b.timestamp.date(),
                )))?
            }
            "generation" => {
                let map = run.manifest.engine.ess.period_map;
                let mut rows = Vec::new();
                for lim in &run.limits.entries {
                    let picked: Vec<&&SystemState> = selected
                        .iter()
                        .filter(|s| map.period(s.timestamp) == lim.period)
                        .collect();
                    let units: Vec<usize> = grid
                        .ess
                        .iter()
                        .enumerate()
                        .filter(|(_, u)| u.zone == lim.zone)
                        .map(|(k, _)| k)
                        .collect();
                    let base: Vec<f64> = picked
                        .iter()
                        .map(|s| analyzer::zone_wind_at(grid, s).get(&lim.zone).copied().unwrap_or(0.0))
                        .collect();
                    let net: Vec<f64> = picked
                        .iter()
                        .zip(&base)
                        .map(|(s, w)| w + units.iter().map(|&k| s.ess_p[k]).sum::<f64>())
                        .collect();
                    rows.push(analyzer::generation_distribution(lim, &base, &net, 20));
                }
                to_value(serde_json::to_value(rows))?
            }
            "heatmap" => {
                let sub = AnnualResultStore {
                    states: selected.iter().map(|s| (*s).clone()).collect(),
                    ..Default::default()
                };
                to_value(serde_json::to_value(analyzer::load_heatmap(
                    &sub,
                    analyzer::DailyAggregate::Peak,
                )))?
            }
            other => return Err(format!("unknown metric `{other}`; expected one of {}", METRICS.join(", "))),
        };
        out.insert(m.clone(), v);
    }
    Ok(serde_json::Value::Object(out))
}
