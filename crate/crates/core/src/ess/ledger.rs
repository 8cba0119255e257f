use std::collections::BTreeMap;
use std::ops::AddAssign;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Classification, EssDecision, EssMode};

/// Energy moved by one unit, in MWh, split by direction and purpose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyBuckets {
    pub charge_mitigation: f64,
    pub charge_balancing: f64,
    pub discharge_mitigation: f64,
    pub discharge_balancing: f64,
}

impl EnergyBuckets {
    pub fn mitigation(&self) -> f64 {
        self.charge_mitigation + self.discharge_mitigation
    }

    pub fn balancing(&self) -> f64 {
        self.charge_balancing + self.discharge_balancing
    }

    pub fn total(&self) -> f64 {
        self.mitigation() + self.balancing()
    }

    /// Share of moved energy that served variability mitigation; absent
    /// when nothing moved.
    pub fn marketable_ratio(&self) -> Option<f64> {
        let total = self.total();
        if total > 0.0 {
            Some(self.mitigation() / total)
        } else {
            None
        }
    }
}

impl AddAssign for EnergyBuckets {
    fn add_assign(&mut self, o: EnergyBuckets) {
        self.charge_mitigation += o.charge_mitigation;
        self.charge_balancing += o.charge_balancing;
        self.discharge_mitigation += o.discharge_mitigation;
        self.discharge_balancing += o.discharge_balancing;
    }
}

/// Daily energy buckets per unit.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub days: BTreeMap<(String, NaiveDate), EnergyBuckets>,
}

impl EnergyLedger {
    /// Adds `|power| × hours` to the bucket matching the decision.
    pub fn accumulate(&mut self, unit: &str, day: NaiveDate, decision: &EssDecision, power: f64, resolution_min: u32) {
        let energy = power.abs() * resolution_min as f64 / 60.0;
        if energy == 0.0 {
            return;
        }
        let b = self.days.entry((unit.to_string(), day)).or_default();
        match (decision.mode, decision.classification) {
            (EssMode::Charging, Classification::VariabilityMitigation) => b.charge_mitigation += energy,
            (EssMode::Charging, _) => b.charge_balancing += energy,
            (EssMode::Discharging, Classification::VariabilityMitigation) => b.discharge_mitigation += energy,
            (EssMode::Discharging, _) => b.discharge_balancing += energy,
            (EssMode::Standby, _) => {}
        }
    }

    /// Sum over the days in `[from, to]` for `unit` (all units if `None`).
    pub fn window(&self, unit: Option<&str>, from: NaiveDate, to: NaiveDate) -> EnergyBuckets {
        let mut out = EnergyBuckets::default();
        for ((u, d), b) in &self.days {
            if unit.map_or(true, |x| x == u) && *d >= from && *d <= to {
                out += *b;
            }
        }
        out
    }

    pub fn merge(&mut self, other: &EnergyLedger) {
        for (k, b) in &other.days {
            *self.days.entry(k.clone()).or_default() += *b;
        }
    }
}
