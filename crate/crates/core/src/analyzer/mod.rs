//! Planning metrics computed from recorded states.
//!
//! Every function here is a pure function of its inputs: a result store
//! (or a storage trace) plus the network it was produced on.

mod resolution;

pub use resolution::{resolution_study, ResolutionRow};

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::engine::EssRecord;
use crate::ess::{EnergyBuckets, EnergyLedger, GenerationLimits, PeriodMap};
use crate::network::{GeneratorKind, Grid, IntertieDirection};
use crate::operator::{agc_reserve, reactive_reserve, ActionKind, OperatorAction};
use crate::powerflow::{branch_flows, total_losses};
use crate::scheduler::AnnualResultStore;
use crate::state::SystemState;

/// Which recorded steps a metric looks at.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricWindow {
    All,
    /// Steps `[start, end)`.
    Steps { start: usize, end: usize },
    Day(NaiveDate),
    /// Days `[from, to]`.
    Days { from: NaiveDate, to: NaiveDate },
    /// ISO week of an ISO year.
    Week { year: i32, week: u32 },
    Period { period: u8, map: PeriodMap },
    Year(i32),
}

impl MetricWindow {
    pub fn contains(&self, step: usize, t: NaiveDateTime) -> bool {
        match self {
            MetricWindow::All => true,
            MetricWindow::Steps { start, end } => (*start..*end).contains(&step),
            MetricWindow::Day(d) => t.date() == *d,
            MetricWindow::Days { from, to } => t.date() >= *from && t.date() <= *to,
            MetricWindow::Week { year, week } => {
                let w = t.iso_week();
                w.year() == *year && w.week() == *week
            }
            MetricWindow::Period { period, map } => map.period(t) == *period,
            MetricWindow::Year(y) => t.year() == *y,
        }
    }

    pub fn states<'a>(&'a self, store: &'a AnnualResultStore) -> impl Iterator<Item = &'a SystemState> + 'a {
        store.states.iter().filter(move |s| self.contains(s.step, s.timestamp))
    }
}

impl std::str::FromStr for MetricWindow {
    type Err = String;

    /// `all`, `steps:A..B`, `day:YYYY-MM-DD`, `days:FROM..TO`,
    /// `week:YYYY-Www`, `year:YYYY` or `period:N` (default month map).
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("unrecognized window `{s}`");
        let date = |x: &str| NaiveDate::parse_from_str(x, "%Y-%m-%d").map_err(|_| bad());
        let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
        match kind {
            "all" => Ok(MetricWindow::All),
            "steps" => {
                let (a, b) = arg.split_once("..").ok_or_else(bad)?;
                Ok(MetricWindow::Steps {
                    start: a.parse().map_err(|_| bad())?,
                    end: b.parse().map_err(|_| bad())?,
                })
            }
            "day" => Ok(MetricWindow::Day(date(arg)?)),
            "days" => {
                let (a, b) = arg.split_once("..").ok_or_else(bad)?;
                Ok(MetricWindow::Days {
                    from: date(a)?,
                    to: date(b)?,
                })
            }
            "week" => {
                let (y, w) = arg.split_once("-W").ok_or_else(bad)?;
                Ok(MetricWindow::Week {
                    year: y.parse().map_err(|_| bad())?,
                    week: w.parse().map_err(|_| bad())?,
                })
            }
            "year" => Ok(MetricWindow::Year(arg.parse().map_err(|_| bad())?)),
            "period" => Ok(MetricWindow::Period {
                period: arg.parse().map_err(|_| bad())?,
                map: PeriodMap::default(),
            }),
            _ => Err(bad()),
        }
    }
}

/// Loss of every selected step by two independent routes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossSeries {
    pub steps: Vec<usize>,
    /// Σ injections into the network (generation, storage, interties,
    /// demand relief) minus load, MW.
    pub balance_mw: Vec<f64>,
    /// Σ branch I²R, MW.
    pub branch_mw: Vec<f64>,
    pub max: f64,
    pub max_step: Option<usize>,
    pub mean: f64,
}

impl LossSeries {
    /// Largest disagreement between the two routes, MW.
    pub fn worst_mismatch(&self) -> f64 {
        self.balance_mw
            .iter()
            .zip(&self.branch_mw)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Energy lost over the series, MWh.
    pub fn energy_mwh(&self, resolution_min: u32) -> f64 {
        self.branch_mw.iter().sum::<f64>() * resolution_min as f64 / 60.0
    }
}

pub fn losses(store: &AnnualResultStore, grid: &Grid, window: &MetricWindow) -> LossSeries {
    let mut out = LossSeries {
        max: f64::NEG_INFINITY,
        ..Default::default()
    };
    for s in window.states(store) {
        let branch = total_losses(&branch_flows(grid, &s.settings, &s.voltages()));
        out.steps.push(s.step);
        out.balance_mw.push(s.injection_losses(grid));
        out.branch_mw.push(branch);
        if branch > out.max {
            out.max = branch;
            out.max_step = Some(s.step);
        }
    }
    if out.steps.is_empty() {
        out.max = 0.0;
    } else {
        out.mean = out.branch_mw.iter().sum::<f64>() / out.steps.len() as f64;
    }
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchCounts {
    pub disconnects: u32,
    pub reconnects: u32,
    pub tap_ops: u32,
    pub shunt_ops: u32,
    pub starts: u32,
    pub stops: u32,
}

impl std::ops::AddAssign for SwitchCounts {
    fn add_assign(&mut self, o: SwitchCounts) {
        self.disconnects += o.disconnects;
        self.reconnects += o.reconnects;
        self.tap_ops += o.tap_ops;
        self.shunt_ops += o.shunt_ops;
        self.starts += o.starts;
        self.stops += o.stops;
    }
}

/// Operations per device over actions with `from < step <= to`. Tap and
/// shunt operations count one per position moved.
pub fn switching_counts(actions: &[OperatorAction], from: usize, to: usize) -> BTreeMap<String, SwitchCounts> {
    let mut out: BTreeMap<String, SwitchCounts> = BTreeMap::new();
    let counted = |k: ActionKind| {
        matches!(
            k,
            ActionKind::LineDisconnect
                | ActionKind::LineReconnect
                | ActionKind::TapStep
                | ActionKind::ShuntSwitch
                | ActionKind::GenStart
                | ActionKind::GenStop
        )
    };
    for a in actions.iter().filter(|a| a.step > from && a.step <= to && counted(a.kind)) {
        let c = out.entry(a.device.clone()).or_default();
        let moved = (a.after - a.before).abs().round() as u32;
        match a.kind {
            ActionKind::LineDisconnect => c.disconnects += 1,
            ActionKind::LineReconnect => c.reconnects += 1,
            ActionKind::TapStep => c.tap_ops += moved,
            ActionKind::ShuntSwitch => c.shunt_ops += moved,
            ActionKind::GenStart => c.starts += 1,
            ActionKind::GenStop => c.stops += 1,
            _ => {}
        }
    }
    out
}

/// Devices whose counts over `(from.step, to.step]` disagree with the
/// change of state between the two recorded states: line disconnects
/// minus reconnects against the service flag, starts minus stops
/// against commitment, and net tap and shunt moves against positions.
/// Empty when the bookkeeping is consistent.
pub fn telescoping_mismatches(grid: &Grid, actions: &[OperatorAction], from: &SystemState, to: &SystemState) -> Vec<String> {
    let counts = switching_counts(actions, from.step, to.step);
    let mut bad = Vec::new();
    for (k, b) in grid.branches.iter().enumerate() {
        let c = counts.get(&b.id).copied().unwrap_or_default();
        let expected = from.settings.branch_in_service[k] as i64 - to.settings.branch_in_service[k] as i64;
        if c.disconnects as i64 - c.reconnects as i64 != expected {
            bad.push(b.id.clone());
        }
    }
    for (k, g) in grid.generators.iter().enumerate() {
        let c = counts.get(&g.id).copied().unwrap_or_default();
        let expected = to.committed[k] as i64 - from.committed[k] as i64;
        if c.starts as i64 - c.stops as i64 != expected {
            bad.push(g.id.clone());
        }
    }
    let net = |kind: ActionKind, id: &str| -> f64 {
        actions
            .iter()
            .filter(|a| a.step > from.step && a.step <= to.step && a.kind == kind && a.device == id)
            .map(|a| a.after - a.before)
            .sum()
    };
    for (k, t) in grid.transformers.iter().enumerate() {
        let moved = (to.settings.tap_positions[k] - from.settings.tap_positions[k]) as f64;
        if net(ActionKind::TapStep, &t.id) != moved {
            bad.push(t.id.clone());
        }
    }
    for (k, sh) in grid.shunts.iter().enumerate() {
        let moved = to.settings.shunt_steps[k] as f64 - from.settings.shunt_steps[k] as f64;
        if net(ActionKind::ShuntSwitch, &sh.id) != moved {
            bad.push(sh.id.clone());
        }
    }
    bad
}

/// Quantile of sorted data by linear interpolation between order
/// statistics (`h = (n - 1) p`).
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    assert!(n > 0, "quantile of an empty sample");
    let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoltageStats {
    pub bus: String,
    pub samples: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Samples outside `[v_min, v_max]`.
    pub excursions: usize,
    /// Longest run of consecutive samples outside the limits.
    pub longest_run: usize,
}

/// Order statistics and excursion counts of one chronological series.
pub fn series_stats(bus: &str, values: &[f64], v_min: f64, v_max: f64) -> Option<VoltageStats> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut excursions = 0;
    let mut run = 0;
    let mut longest_run = 0;
    for &v in values {
        if v < v_min || v > v_max {
            excursions += 1;
            run += 1;
            longest_run = longest_run.max(run);
        } else {
            run = 0;
        }
    }
    Some(VoltageStats {
        bus: bus.to_string(),
        samples: values.len(),
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        excursions,
        longest_run,
    })
}

/// Per-bus statistics of |V| over the window; all buses if `buses` is `None`.
pub fn voltage_statistics(
    store: &AnnualResultStore,
    grid: &Grid,
    buses: Option<&[usize]>,
    window: &MetricWindow,
) -> Vec<VoltageStats> {
    let all: Vec<usize> = (0..grid.bus_count()).collect();
    let chosen = buses.unwrap_or(&all);
    let states: Vec<&SystemState> = window.states(store).collect();
    chosen
        .iter()
        .filter_map(|&i| {
            let b = &grid.buses[i];
            let series: Vec<f64> = states.iter().map(|s| s.vm[i]).collect();
            series_stats(&b.id, &series, b.v_min, b.v_max)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlexibilityPoint {
    pub step: usize,
    /// Room to raise imports, MW.
    pub pii: f64,
    /// Room to lower exports, MW.
    pub pde: f64,
}

/// Intertie schedule headroom at one state.
pub fn flexibility_at(grid: &Grid, s: &SystemState) -> FlexibilityPoint {
    let mut p = FlexibilityPoint {
        step: s.step,
        pii: 0.0,
        pde: 0.0,
    };
    for (it, &x) in grid.interties.iter().zip(&s.intertie) {
        match it.direction {
            IntertieDirection::Import => p.pii += (it.schedule_limit_max - x).max(0.0),
            IntertieDirection::Export => p.pde += (x - it.schedule_limit_min).max(0.0),
        }
    }
    p
}

pub fn flexibility(store: &AnnualResultStore, grid: &Grid, window: &MetricWindow) -> Vec<FlexibilityPoint> {
    window.states(store).map(|s| flexibility_at(grid, s)).collect()
}

/// AGC reserve and reactive availability of committed sources per step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservePoint {
    pub step: usize,
    pub agc_mw: f64,
    pub reactive_mvar: f64,
}

pub fn reserves(store: &AnnualResultStore, grid: &Grid, window: &MetricWindow) -> Vec<ReservePoint> {
    window
        .states(store)
        .map(|s| ReservePoint {
            step: s.step,
            agc_mw: agc_reserve(s, grid),
            reactive_mvar: reactive_reserve(s, grid),
        })
        .collect()
}

/// Daily ledger rebuilt from storage records; `timestamp` maps a step to
/// its clock time.
pub fn ledger_from_records(
    records: &[EssRecord],
    resolution_min: u32,
    timestamp: impl Fn(usize) -> NaiveDateTime,
) -> EnergyLedger {
    let mut ledger = EnergyLedger::default();
    for r in records {
        ledger.accumulate(&r.unit, timestamp(r.step).date(), &r.decision(), r.power_mw, resolution_min);
    }
    ledger
}

/// Storage records of every recorded step of a store, in order.
pub fn store_ess_records(store: &AnnualResultStore) -> Vec<EssRecord> {
    store.diagnostics.iter().flat_map(|d| d.ess.iter().cloned()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssUtilization {
    pub from: NaiveDate,
    pub to: NaiveDate,
    pub by_unit: BTreeMap<String, EnergyBuckets>,
    pub total: EnergyBuckets,
    /// Mitigation share of all moved energy; absent when nothing moved.
    pub marketable_ratio: Option<f64>,
}

/// Energy buckets over the days `[from, to]`.
pub fn ess_utilization(ledger: &EnergyLedger, from: NaiveDate, to: NaiveDate) -> EssUtilization {
    let mut by_unit: BTreeMap<String, EnergyBuckets> = BTreeMap::new();
    for ((u, _), _) in ledger.days.iter() {
        by_unit.entry(u.clone()).or_default();
    }
    for (u, b) in by_unit.iter_mut() {
        *b = ledger.window(Some(u), from, to);
    }
    let total = ledger.window(None, from, to);
    EssUtilization {
        from,
        to,
        by_unit,
        total,
        marketable_ratio: total.marketable_ratio(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// `(lower edge, upper edge, count)`; the last bin includes its upper edge.
    pub histogram: Vec<(f64, f64, usize)>,
}

pub fn summarize(values: &[f64], bins: usize, range: (f64, f64)) -> Summary {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (lo, hi) = range;
    let width = if bins > 0 { (hi - lo) / bins as f64 } else { 0.0 };
    let mut histogram: Vec<(f64, f64, usize)> = (0..bins)
        .map(|k| (lo + k as f64 * width, lo + (k + 1) as f64 * width, 0))
        .collect();
    if bins > 0 && width > 0.0 {
        for &x in values {
            let k = (((x - lo) / width).floor().max(0.0) as usize).min(bins - 1);
            histogram[k].2 += 1;
        }
    } else if bins > 0 {
        histogram[0].2 = n;
    }
    let q = |p| if n > 0 { quantile(&sorted, p) } else { f64::NAN };
    Summary {
        count: n,
        mean: if n > 0 { values.iter().sum::<f64>() / n as f64 } else { f64::NAN },
        min: q(0.0),
        q1: q(0.25),
        median: q(0.5),
        q3: q(0.75),
        max: q(1.0),
        histogram,
    }
}

/// Σ max(0, x − limit), in MW·steps.
pub fn mass_above(values: &[f64], limit: f64) -> f64 {
    values.iter().map(|&x| (x - limit).max(0.0)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationDistribution {
    pub zone: String,
    pub period: u8,
    pub gen_max_lim: f64,
    pub gen_min_lim: f64,
    /// Zone wind output.
    pub base: Summary,
    /// Wind plus the zone's storage injection.
    pub net: Summary,
    pub base_mass_above: f64,
    pub net_mass_above: f64,
}

/// Distribution of a zone's wind with and without its storage, for the
/// samples falling in one period.
pub fn generation_distribution(
    limits: &GenerationLimits,
    base: &[f64],
    net: &[f64],
    bins: usize,
) -> GenerationDistribution {
    let lo = base.iter().chain(net).cloned().fold(f64::INFINITY, f64::min);
    let hi = base.iter().chain(net).cloned().fold(f64::NEG_INFINITY, f64::max);
    let range = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    GenerationDistribution {
        zone: limits.zone.clone(),
        period: limits.period,
        gen_max_lim: limits.gen_max_lim,
        gen_min_lim: limits.gen_min_lim,
        base: summarize(base, bins, range),
        net: summarize(net, bins, range),
        base_mass_above: mass_above(base, limits.gen_max_lim),
        net_mass_above: mass_above(net, limits.gen_max_lim),
    }
}

/// Zone wind and wind-plus-storage series over the steps of `records`.
/// `wind(zone, step)` supplies the zone's wind output.
pub fn zone_net_generation(
    grid: &Grid,
    records: &[EssRecord],
    wind: impl Fn(&str, usize) -> f64,
) -> BTreeMap<String, (Vec<usize>, Vec<f64>, Vec<f64>)> {
    let zone_of: BTreeMap<&str, &str> = grid.ess.iter().map(|u| (u.id.as_str(), u.zone.as_str())).collect();
    let mut by_step: BTreeMap<(String, usize), f64> = BTreeMap::new();
    for r in records {
        if let Some(z) = zone_of.get(r.unit.as_str()) {
            *by_step.entry((z.to_string(), r.step)).or_default() += r.power_mw;
        }
    }
    let mut out: BTreeMap<String, (Vec<usize>, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for ((zone, step), ess) in by_step {
        let w = wind(&zone, step);
        let e = out.entry(zone).or_default();
        e.0.push(step);
        e.1.push(w);
        e.2.push(w + ess);
    }
    out
}

/// Total wind output per zone in a state, MW.
pub fn zone_wind_at(grid: &Grid, s: &SystemState) -> BTreeMap<String, f64> {
    let mut out = BTreeMap::new();
    for (k, g) in grid.generators.iter().enumerate() {
        if g.kind == GeneratorKind::Wind {
            let zone = grid.buses[grid.generator_bus(k)].zone.clone().unwrap_or_default();
            *out.entry(zone).or_insert(0.0) += s.gen_p[k];
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DailyAggregate {
    #[default]
    Peak,
    Mean,
}

/// Total demand per day laid out as weekday rows by week columns,
/// counting weeks from the first recorded day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadHeatmap {
    pub first_day: NaiveDate,
    pub aggregate: DailyAggregate,
    /// `cells[row][col]`, 7 rows; absent where no day was recorded.
    pub cells: Vec<Vec<Option<f64>>>,
}

impl LoadHeatmap {
    pub fn columns(&self) -> usize {
        self.cells.first().map_or(0, Vec::len)
    }

    pub fn max(&self) -> Option<f64> {
        self.cells.iter().flatten().flatten().cloned().reduce(f64::max)
    }
}

/// Σ load, MW, per recorded state keyed by day.
pub fn daily_demand(store: &AnnualResultStore, aggregate: DailyAggregate) -> BTreeMap<NaiveDate, f64> {
    let mut days: BTreeMap<NaiveDate, (f64, f64, usize)> = BTreeMap::new();
    for s in &store.states {
        let total: f64 = s.load_p.iter().sum();
        let e = days.entry(s.timestamp.date()).or_insert((f64::NEG_INFINITY, 0.0, 0));
        e.0 = e.0.max(total);
        e.1 += total;
        e.2 += 1;
    }
    days.into_iter()
        .map(|(d, (peak, sum, n))| {
            let v = match aggregate {
                DailyAggregate::Peak => peak,
                DailyAggregate::Mean => sum / n as f64,
            };
            (d, v)
        })
        .collect()
}

pub fn load_heatmap(store: &AnnualResultStore, aggregate: DailyAggregate) -> Option<LoadHeatmap> {
    let days = daily_demand(store, aggregate);
    let first = *days.keys().next()?;
    let last = *days.keys().next_back()?;
    let span = (last - first).num_days() as usize + 1;
    let cols = span.div_ceil(7);
    let mut cells = vec![vec![None; cols]; 7];
    for (d, v) in days {
        let k = (d - first).num_days() as usize;
        cells[k % 7][k / 7] = Some(v);
    }
    Some(LoadHeatmap {
        first_day: first,
        aggregate,
        cells,
    })
}
