//! Static grid description: buses, branches, transformers, shunt banks,
//! generators, loads, storage, interties and demand resources.
//!
//! A [`NetworkModel`] is plain data keyed by string identifiers so that it
//! can carry unresolved references for [`validate`] to report. Simulation
//! code works on a [`Grid`], the validated and index-resolved form.

mod admittance;
mod file;
mod grid;
mod per_unit;
mod validate;

pub use admittance::{build_admittance, branch_admittance, AdmittanceMatrix, BranchStamp};
pub use file::{load_network_file, parse_network, to_toml, ImpedanceUnit, NetworkFile};
pub use grid::{DeviceSettings, Grid};
pub use per_unit::{from_per_unit, to_per_unit, Quantity};
pub use validate::{validate, ValidationReport, Violation, ViolationKind};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoltageClass {
    /// Distribution interface level (25 kV in the reference system).
    Low,
    /// Extra-high voltage backbone (735 kV in the reference system).
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: String,
    pub base_kv: f64,
    pub kind: BusKind,
    /// Regulation target in per-unit. Required for slack and PV buses; on
    /// PQ buses it is the set point used by the voltage controllers.
    #[serde(default)]
    pub voltage_target: Option<f64>,
    pub v_min: f64,
    pub v_max: f64,
    pub voltage_class: VoltageClass,
    #[serde(default)]
    pub zone: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    /// Series resistance, per-unit on the system base.
    pub resistance: f64,
    /// Series reactance, per-unit on the system base.
    pub reactance: f64,
    /// Total line charging susceptance, per-unit on the system base.
    #[serde(default)]
    pub charging_susceptance: f64,
    /// MVA rating.
    pub thermal_limit: f64,
    #[serde(default)]
    pub switchable: bool,
    #[serde(default = "default_true")]
    pub in_service: bool,
}

/// Two-winding transformer with an off-nominal ratio on the from side.
///
/// The ratio at tap position `k` is `1 + k * tap_step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transformer {
    pub id: String,
    pub from_bus: String,
    pub to_bus: String,
    #[serde(default)]
    pub resistance: f64,
    pub reactance: f64,
    pub tap_min: f64,
    pub tap_max: f64,
    pub tap_step: f64,
    #[serde(default)]
    pub tap_position: i32,
    #[serde(default)]
    pub regulated_bus: Option<String>,
    pub deadband: f64,
    /// MVA rating; unrated transformers are not thermally monitored.
    #[serde(default)]
    pub thermal_limit: Option<f64>,
}

impl Transformer {
    pub fn ratio(&self, position: i32) -> f64 {
        1.0 + position as f64 * self.tap_step
    }

    /// Lowest and highest tap positions whose ratio stays within
    /// `[tap_min, tap_max]`.
    pub fn position_range(&self) -> (i32, i32) {
        let eps = 1e-9;
        let lo = ((self.tap_min - 1.0) / self.tap_step - eps).ceil() as i32;
        let hi = ((self.tap_max - 1.0) / self.tap_step + eps).floor() as i32;
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShuntKind {
    Capacitor,
    Reactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuntBank {
    pub id: String,
    pub bus: String,
    pub kind: ShuntKind,
    /// Reactive power per energized step at 1.0 pu voltage.
    pub step_mvar: f64,
    pub steps_total: u32,
    #[serde(default)]
    pub steps_on: u32,
}

impl ShuntBank {
    /// Signed susceptance in MVAr at 1 pu for `steps` energized steps
    /// (capacitors positive).
    pub fn mvar_at(&self, steps: u32) -> f64 {
        let sign = match self.kind {
            ShuntKind::Capacitor => 1.0,
            ShuntKind::Reactor => -1.0,
        };
        sign * self.step_mvar * steps as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    #[default]
    Conventional,
    /// Synchronous or static compensator: no active power, continuous Q.
    Compensator,
    /// Profile-driven wind farm; not dispatchable, unity power factor.
    Wind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub id: String,
    pub bus: String,
    #[serde(default)]
    pub kind: GeneratorKind,
    #[serde(default)]
    pub p_min: f64,
    #[serde(default)]
    pub p_max: f64,
    #[serde(default)]
    pub q_min: f64,
    #[serde(default)]
    pub q_max: f64,
    /// MW per minute.
    #[serde(default)]
    pub ramp_up: f64,
    /// MW per minute.
    #[serde(default)]
    pub ramp_down: f64,
    #[serde(default)]
    pub agc_participant: bool,
    #[serde(default)]
    pub optimal_dispatch: f64,
    #[serde(default = "default_true")]
    pub committed: bool,
    #[serde(default)]
    pub startup_priority: u32,
}

impl Generator {
    pub fn regulates_voltage(&self) -> bool {
        !matches!(self.kind, GeneratorKind::Wind)
    }

    pub fn is_dispatchable(&self) -> bool {
        matches!(self.kind, GeneratorKind::Conventional)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub id: String,
    pub bus: String,
    pub p_mw: f64,
    #[serde(default)]
    pub q_mvar: f64,
}

impl Load {
    /// Reactive demand at active demand `p` under a constant power factor.
    pub fn q_at(&self, p: f64) -> f64 {
        if self.p_mw.abs() > 0.0 {
            p * self.q_mvar / self.p_mw
        } else {
            self.q_mvar
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssUnit {
    pub id: String,
    pub bus: String,
    pub zone: String,
    /// MW.
    pub power_capacity: f64,
    /// MWh.
    pub energy_capacity: f64,
    /// Percent.
    pub soc: f64,
    /// Percent.
    pub soc_balance: f64,
    #[serde(default = "default_one")]
    pub charge_efficiency: f64,
    #[serde(default = "default_one")]
    pub discharge_efficiency: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntertieDirection {
    Import,
    Export,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intertie {
    pub id: String,
    pub bus: String,
    pub direction: IntertieDirection,
    pub schedule_limit_min: f64,
    pub schedule_limit_max: f64,
    pub current_schedule: f64,
}

impl Intertie {
    /// Net injection into the bus in MW for a given schedule.
    pub fn injection(&self, schedule: f64) -> f64 {
        match self.direction {
            IntertieDirection::Import => schedule,
            IntertieDirection::Export => -schedule,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandKind {
    InterruptibleDemand,
    VoltageReductionBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandResource {
    pub id: String,
    pub bus: String,
    pub kind: DemandKind,
    /// MW of relief once active.
    pub capacity: f64,
    /// Steps between the request and the relief taking effect.
    #[serde(default)]
    pub activation_delay: u32,
    /// Steps the relief stays in effect.
    pub max_duration: u32,
    #[serde(default)]
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub name: String,
    #[serde(default)]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkModel {
    #[serde(default)]
    pub name: String,
    pub system_base_mva: f64,
    #[serde(default)]
    pub buses: Vec<Bus>,
    #[serde(default)]
    pub branches: Vec<Branch>,
    #[serde(default)]
    pub transformers: Vec<Transformer>,
    #[serde(default)]
    pub shunts: Vec<ShuntBank>,
    #[serde(default)]
    pub generators: Vec<Generator>,
    #[serde(default)]
    pub loads: Vec<Load>,
    #[serde(default)]
    pub ess: Vec<EssUnit>,
    #[serde(default)]
    pub interties: Vec<Intertie>,
    #[serde(default)]
    pub demand_resources: Vec<DemandResource>,
    #[serde(default)]
    pub zones: Vec<Zone>,
}

impl NetworkModel {
    pub fn new(name: impl Into<String>, system_base_mva: f64) -> Self {
        NetworkModel {
            name: name.into(),
            system_base_mva,
            buses: Vec::new(),
            branches: Vec::new(),
            transformers: Vec::new(),
            shunts: Vec::new(),
            generators: Vec::new(),
            loads: Vec::new(),
            ess: Vec::new(),
            interties: Vec::new(),
            demand_resources: Vec::new(),
            zones: Vec::new(),
        }
    }

    pub fn bus_position(&self, id: &str) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }
}

fn default_true() -> bool {
    true
}

fn default_one() -> f64 {
    1.0
}
