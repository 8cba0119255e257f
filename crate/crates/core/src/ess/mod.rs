//! Storage control for wind smoothing.
//!
//! Each storage aggregation watches the total wind output of its zone.
//! Output at or above the zone's upper limit is absorbed (except inside a
//! peak-load window), output at or below the lower limit is backed up, and
//! between the limits the unit drifts back towards its balance state of
//! charge. Limits are the seasonal mean ± 1.5 standard deviations.
//!
//! Everything here is a pure function of time-t inputs.

mod calendar;
mod ledger;
mod limits;

pub use calendar::{PeakCalendar, PeakWindow};
pub use ledger::{EnergyBuckets, EnergyLedger};
pub use limits::{compute_limits, GenerationLimits, LimitTable, PeriodMap, SigmaEstimator, LIMIT_SIGMAS};

use serde::{Deserialize, Serialize};

use crate::network::EssUnit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EssMode {
    Charging,
    Discharging,
    Standby,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    VariabilityMitigation,
    SocBalancing,
    None,
}

/// Which branch of the mode-selection rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeBranch {
    /// Surplus during a peak window.
    SurplusInPeak,
    Surplus,
    Shortage,
    BelowBalance,
    AboveBalance,
    AtBalance,
    /// Charging toward balance suppressed by the peak window (only with
    /// [`PeakRule::AllCharging`]).
    BalancingInPeak,
    /// Inputs were not finite numbers.
    Undefined,
}

/// Scope of the no-charging-during-peak rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakRule {
    /// Only surplus absorption is suppressed during peaks.
    #[default]
    SurplusOnly,
    /// Every kind of charging is suppressed during peaks.
    AllCharging,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssDecision {
    pub mode: EssMode,
    /// Injection into the grid in MW; charging is negative.
    pub power: f64,
    pub classification: Classification,
    pub branch: ModeBranch,
}

impl EssDecision {
    fn new(mode: EssMode, classification: Classification, branch: ModeBranch) -> Self {
        EssDecision {
            mode,
            power: 0.0,
            classification,
            branch,
        }
    }
}

/// Chooses the operating mode from the zone's wind output `gen` (MW).
pub fn select_mode(
    gen: f64,
    limits: &GenerationLimits,
    soc: f64,
    soc_balance: f64,
    in_peak: bool,
    rule: PeakRule,
) -> EssDecision {
    use Classification::*;
    use EssMode::*;
    let finite = [gen, limits.gen_max_lim, limits.gen_min_lim, soc, soc_balance]
        .iter()
        .all(|x| x.is_finite());
    if !finite {
        return EssDecision::new(Standby, None, ModeBranch::Undefined);
    }
    if gen >= limits.gen_max_lim {
        if in_peak {
            EssDecision::new(Standby, None, ModeBranch::SurplusInPeak)
        } else {
            EssDecision::new(Charging, VariabilityMitigation, ModeBranch::Surplus)
        }
    } else if gen <= limits.gen_min_lim {
        EssDecision::new(Discharging, VariabilityMitigation, ModeBranch::Shortage)
    } else if soc < soc_balance {
        if in_peak && rule == PeakRule::AllCharging {
            EssDecision::new(Standby, None, ModeBranch::BalancingInPeak)
        } else {
            EssDecision::new(Charging, SocBalancing, ModeBranch::BelowBalance)
        }
    } else if soc > soc_balance {
        EssDecision::new(Discharging, SocBalancing, ModeBranch::AboveBalance)
    } else {
        EssDecision::new(Standby, None, ModeBranch::AtBalance)
    }
}

/// What limited the dispatched power below its target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapKind {
    None,
    /// Converter rating.
    Power,
    /// Stored energy or remaining headroom.
    Energy,
    /// Surplus left unabsorbed because of a peak window.
    PeakBlocked,
    /// Balancing power that would carry zone output across a generation limit.
    Band,
}

/// Power magnitude (MW) for a decision and the binding cap, if any.
///
/// Charging and discharging targets follow the decision's purpose:
/// mitigation brings zone output back to the violated limit, balancing
/// returns the state of charge to `soc_balance` within one step. Both are
/// capped by the power rating and by what the state of charge allows over
/// `resolution_min` minutes. Balancing is further held to the room left
/// inside the generation band, so it never creates the violation that
/// mitigation exists to remove.
pub fn dispatch_power(
    decision: &EssDecision,
    gen: f64,
    limits: &GenerationLimits,
    unit: &EssUnit,
    soc: f64,
    resolution_min: u32,
) -> (f64, CapKind) {
    let hours = resolution_min as f64 / 60.0;
    let e = unit.energy_capacity;
    let (target, energy_cap) = match (decision.mode, decision.classification) {
        (EssMode::Charging, c) => {
            let target = match c {
                Classification::VariabilityMitigation => gen - limits.gen_max_lim,
                _ => (unit.soc_balance - soc) / 100.0 * e / unit.charge_efficiency / hours,
            };
            let headroom = (100.0 - soc).max(0.0) / 100.0 * e;
            (target, headroom / (hours * unit.charge_efficiency))
        }
        (EssMode::Discharging, c) => {
            let target = match c {
                Classification::VariabilityMitigation => limits.gen_min_lim - gen,
                _ => (soc - unit.soc_balance) / 100.0 * e * unit.discharge_efficiency / hours,
            };
            let stored = soc.max(0.0) / 100.0 * e;
            (target, stored * unit.discharge_efficiency / hours)
        }
        (EssMode::Standby, _) => {
            let cap = if decision.branch == ModeBranch::SurplusInPeak {
                CapKind::PeakBlocked
            } else {
                CapKind::None
            };
            return (0.0, cap);
        }
    };
    let target = target.max(0.0);
    let mut power = target;
    let mut cap = CapKind::None;
    if unit.power_capacity < power {
        power = unit.power_capacity;
        cap = CapKind::Power;
    }
    if energy_cap < power {
        power = energy_cap.max(0.0);
        cap = CapKind::Energy;
    }
    if decision.classification == Classification::SocBalancing {
        let room = match decision.mode {
            EssMode::Charging => gen - limits.gen_min_lim,
            _ => limits.gen_max_lim - gen,
        };
        if room.max(0.0) < power {
            power = room.max(0.0);
            cap = CapKind::Band;
        }
    }
    (power, cap)
}

/// State of charge after applying `injection` MW (charging negative) for
/// `resolution_min` minutes, and whether it had to be clipped to [0, 100].
pub fn update_soc(unit: &EssUnit, soc: f64, injection: f64, resolution_min: u32) -> (f64, bool) {
    let hours = resolution_min as f64 / 60.0;
    let delta = if injection < 0.0 {
        -injection * hours * unit.charge_efficiency / unit.energy_capacity * 100.0
    } else {
        -injection * hours / (unit.discharge_efficiency * unit.energy_capacity) * 100.0
    };
    let next = soc + delta;
    if next > 100.0 {
        (100.0, true)
    } else if next < 0.0 {
        (0.0, true)
    } else {
        (next, false)
    }
}

/// Outcome of one storage step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssStep {
    pub decision: EssDecision,
    pub cap: CapKind,
    pub soc_before: f64,
    pub soc_after: f64,
    pub clipped: bool,
}

/// Mode selection, dispatch and state-of-charge update for one unit.
pub fn step_unit(
    unit: &EssUnit,
    soc: f64,
    gen: f64,
    limits: &GenerationLimits,
    in_peak: bool,
    rule: PeakRule,
    resolution_min: u32,
) -> EssStep {
    let mut decision = select_mode(gen, limits, soc, unit.soc_balance, in_peak, rule);
    let (magnitude, cap) = dispatch_power(&decision, gen, limits, unit, soc, resolution_min);
    decision.power = match decision.mode {
        EssMode::Charging => -magnitude,
        EssMode::Discharging => magnitude,
        EssMode::Standby => 0.0,
    };
    let (soc_after, clipped) = update_soc(unit, soc, decision.power, resolution_min);
    EssStep {
        decision,
        cap,
        soc_before: soc,
        soc_after,
        clipped,
    }
}

#[cfg(test)]
mod tests;
