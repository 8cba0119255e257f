use std::collections::BTreeMap;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::EssSettings;
use crate::error::EngineError;
use crate::ess::{
    compute_limits, step_unit, CapKind, Classification, EnergyLedger, EssDecision, EssMode, EssStep, LimitTable,
    ModeBranch,
};
use crate::network::{EssUnit, Grid};
use crate::profiles::TimeSeriesDataset;

/// One storage unit's step, flattened for output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssRecord {
    pub step: usize,
    pub unit: String,
    pub mode: EssMode,
    pub power_mw: f64,
    pub classification: Classification,
    pub branch: ModeBranch,
    pub cap: CapKind,
    pub soc_before: f64,
    pub soc_after: f64,
    pub clipped: bool,
}

impl EssRecord {
    pub fn new(step: usize, unit: &str, e: &EssStep) -> Self {
        EssRecord {
            step,
            unit: unit.to_string(),
            mode: e.decision.mode,
            power_mw: e.decision.power,
            classification: e.decision.classification,
            branch: e.decision.branch,
            cap: e.cap,
            soc_before: e.soc_before,
            soc_after: e.soc_after,
            clipped: e.clipped,
        }
    }

    pub fn decision(&self) -> EssDecision {
        EssDecision {
            mode: self.mode,
            power: self.power_mw,
            classification: self.classification,
            branch: self.branch,
        }
    }
}

/// Storage decisions over a range of rows without the network.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StorageTrace {
    pub records: Vec<EssRecord>,
    pub ledger: EnergyLedger,
}

/// Storage policy bound to the zonal wind of a profile set.
pub struct StorageController {
    pub units: Vec<EssUnit>,
    pub limits: LimitTable,
    settings: EssSettings,
    zone_wind: BTreeMap<String, Vec<f64>>,
    resolution_min: u32,
    start: NaiveDateTime,
}

impl StorageController {
    pub fn new(
        grid: &Grid,
        profiles: &TimeSeriesDataset,
        settings: &EssSettings,
        limits: Option<LimitTable>,
    ) -> Result<Self, EngineError> {
        let zone_wind = profiles.zone_wind(grid.model());
        let limits = match limits {
            Some(l) => l,
            None => {
                let periods: Vec<u8> = (0..profiles.len())
                    .map(|t| settings.period_map.period(profiles.timestamp(t)))
                    .collect();
                compute_limits(&zone_wind, &periods, settings.estimator)
                    .map_err(|e| EngineError::Config(format!("storage limits: {e}")))?
            }
        };
        let mut units = grid.ess.clone();
        if let Some(b) = settings.soc_balance {
            for u in &mut units {
                u.soc_balance = b;
            }
        }
        for u in &units {
            if !zone_wind.contains_key(&u.zone) {
                return Err(EngineError::Config(format!("storage `{}` watches unknown zone `{}`", u.id, u.zone)));
            }
        }
        Ok(StorageController {
            units,
            limits,
            settings: settings.clone(),
            zone_wind,
            resolution_min: profiles.resolution_min,
            start: profiles.start,
        })
    }

    pub(crate) fn idle(soc: f64) -> EssStep {
        EssStep {
            decision: EssDecision {
                mode: EssMode::Standby,
                power: 0.0,
                classification: Classification::None,
                branch: ModeBranch::AtBalance,
            },
            cap: CapKind::None,
            soc_before: soc,
            soc_after: soc,
            clipped: false,
        }
    }

    pub fn zone_output(&self, zone: &str, t: usize) -> Option<f64> {
        self.zone_wind.get(zone).and_then(|s| s.get(t)).copied()
    }

    /// Every unit's step at row `t` (timestamp `ts`) from the given state of charge.
    pub fn step(&self, ts: NaiveDateTime, t: usize, soc: &[f64]) -> Result<Vec<EssStep>, EngineError> {
        let period = self.settings.period_map.period(ts);
        let in_peak = self.settings.calendar.is_peak(ts);
        self.units
            .iter()
            .zip(soc)
            .map(|(u, &s)| {
                let limits = self.limits.get(&u.zone, period).ok_or_else(|| {
                    EngineError::Config(format!("no storage limits for zone `{}` period {period}", u.zone))
                })?;
                let gen = self.zone_output(&u.zone, t).ok_or_else(|| EngineError::MissingProfile {
                    device: u.zone.clone(),
                    step: t,
                })?;
                Ok(step_unit(u, s, gen, limits, in_peak, self.settings.peak_rule, self.resolution_min))
            })
            .collect()
    }

    fn timestamp(&self, t: usize) -> NaiveDateTime {
        self.start + chrono::Duration::minutes(self.resolution_min as i64 * t as i64)
    }

    /// Decisions for rows `from..to` starting from `soc0`.
    pub fn trace(&self, from: usize, to: usize, soc0: &[f64]) -> Result<StorageTrace, EngineError> {
        let mut out = StorageTrace::default();
        let mut soc = soc0.to_vec();
        for t in from..to {
            let ts = self.timestamp(t);
            for (u, e) in self.units.iter().zip(self.step(ts, t, &soc)?) {
                out.ledger
                    .accumulate(&u.id, ts.date(), &e.decision, e.decision.power, self.resolution_min);
                out.records.push(EssRecord::new(t, &u.id, &e));
            }
            soc = out.records[out.records.len() - self.units.len()..]
                .iter()
                .map(|r| r.soc_after)
                .collect();
        }
        Ok(out)
    }

    /// State of charge entering row `t` when the run starts at row
    /// `origin` with the units' initial state of charge.
    pub fn soc_before(&self, origin: usize, t: usize) -> Result<Vec<f64>, EngineError> {
        let mut soc: Vec<f64> = self.units.iter().map(|u| u.soc).collect();
        for k in origin..t {
            soc = self.step(self.timestamp(k), k, &soc)?.iter().map(|e| e.soc_after).collect();
        }
        Ok(soc)
    }
}
