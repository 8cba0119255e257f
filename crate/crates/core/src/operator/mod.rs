//! Rule-based virtual operator.
//!
//! After every power-flow solve the operator works through four stages in
//! a fixed order: supply–demand balance, deviation of units from their
//! optimal operating point (DGUOO), AGC reserve with its corrective
//! hierarchy, and voltage control (25 kV side first, then EHV). Every
//! discrete or dispatch change is logged as an [`OperatorAction`].

mod balance;
mod commitment;
mod reserve;
mod voltage;

pub use balance::{allocate, restore_balance};
pub use commitment::{enforce_dguoo, equalize};
pub use reserve::{corrective_hierarchy, relieve_surplus};
pub use voltage::{control_voltage_high, control_voltage_low, settle_taps};

use serde::{Deserialize, Serialize};

use crate::error::OperatorError;
use crate::network::Grid;
use crate::powerflow::{PowerFlowResult, PowerFlowSettings};
use crate::state::SystemState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OperatorThresholds {
    /// Largest swing residual (MW) left alone.
    pub balance_threshold: f64,
    /// Allowed deviation of each unit from its optimal dispatch, MW.
    pub dguoo_band: f64,
    pub agc_reserve_min: f64,
    /// Half-width of the acceptable band around the target, 25 kV side.
    pub deadband_low: f64,
    /// Same for EHV buses.
    pub deadband_high: f64,
    /// Steps during which a toggled device may not be toggled back.
    pub switching_cooldown: usize,
    /// Target reduction applied by one voltage-reduction block, pu.
    pub voltage_reduction_block: f64,
    /// Compensator set-point increment, pu.
    pub setpoint_step: f64,
    /// Largest distance of a compensator set point from its bus target.
    pub setpoint_range: f64,
    /// Passes over the violated buses per voltage-control call.
    pub max_voltage_passes: usize,
}

impl Default for OperatorThresholds {
    fn default() -> Self {
        OperatorThresholds {
            balance_threshold: 1.0,
            dguoo_band: 100.0,
            agc_reserve_min: 300.0,
            deadband_low: 0.01,
            deadband_high: 0.02,
            switching_cooldown: 3,
            voltage_reduction_block: 0.02,
            setpoint_step: 0.01,
            setpoint_range: 0.03,
            max_voltage_passes: 3,
        }
    }
}

impl OperatorThresholds {
    pub fn check(&self) -> Result<(), String> {
        let positive = [
            ("balance_threshold", self.balance_threshold),
            ("dguoo_band", self.dguoo_band),
            ("agc_reserve_min", self.agc_reserve_min),
            ("deadband_low", self.deadband_low),
            ("deadband_high", self.deadband_high),
            ("voltage_reduction_block", self.voltage_reduction_block),
            ("setpoint_step", self.setpoint_step),
        ];
        for (name, x) in positive {
            if !(x > 0.0) {
                return Err(format!("{name} must be positive"));
            }
        }
        if self.switching_cooldown == 0 || self.max_voltage_passes == 0 {
            return Err("switching_cooldown and max_voltage_passes must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Balance,
    Dguoo,
    Reserve,
    Voltage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    GenRedispatch,
    GenStart,
    GenStop,
    TapStep,
    ShuntSwitch,
    LineDisconnect,
    LineReconnect,
    CompensatorSetpoint,
    VoltageReduction,
    DemandActivation,
    IntertieAdjust,
}

impl ActionKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ActionKind::GenRedispatch => "gen_redispatch",
            ActionKind::GenStart => "gen_start",
            ActionKind::GenStop => "gen_stop",
            ActionKind::TapStep => "tap_step",
            ActionKind::ShuntSwitch => "shunt_switch",
            ActionKind::LineDisconnect => "line_disconnect",
            ActionKind::LineReconnect => "line_reconnect",
            ActionKind::CompensatorSetpoint => "compensator_setpoint",
            ActionKind::VoltageReduction => "voltage_reduction",
            ActionKind::DemandActivation => "demand_activation",
            ActionKind::IntertieAdjust => "intertie_adjust",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorAction {
    pub step: usize,
    pub sub_step: usize,
    pub round: usize,
    pub stage: Stage,
    pub kind: ActionKind,
    pub device: String,
    pub before: f64,
    pub after: f64,
    pub trigger: String,
}

/// Reactive power asked for by a temporary fictitious generator and what
/// the discrete devices delivered against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FictitiousPass {
    pub step: usize,
    pub sub_step: usize,
    pub bus: String,
    pub held_voltage: f64,
    /// MVAr the fictitious generator injected.
    pub q_required: f64,
    /// MVAr added by the shunt steps switched in response, at the held
    /// voltage.
    pub q_delivered: f64,
    pub residual: f64,
}

/// Everything an operator stage needs besides the state it edits.
#[derive(Debug, Clone, Copy)]
pub struct OperatorContext<'a> {
    pub grid: &'a Grid,
    pub thresholds: &'a OperatorThresholds,
    pub powerflow: &'a PowerFlowSettings,
    pub resolution_min: u32,
    pub step: usize,
    pub sub_step: usize,
    pub round: usize,
    /// Unit outputs at the start of the step, the reference for ramp limits.
    pub start_p: &'a [f64],
    pub start_committed: &'a [bool],
}

impl OperatorContext<'_> {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn action(
        &self,
        stage: Stage,
        kind: ActionKind,
        device: &str,
        before: f64,
        after: f64,
        trigger: String,
    ) -> OperatorAction {
        OperatorAction {
            step: self.step,
            sub_step: self.sub_step,
            round: self.round,
            stage,
            kind,
            device: device.to_string(),
            before,
            after,
            trigger,
        }
    }

    pub(crate) fn solve(&self, state: &mut SystemState) -> Result<PowerFlowResult, OperatorError> {
        Ok(state.solve(self.grid, self.powerflow)?)
    }
}

/// Units taking part in automatic generation control that are online.
pub(crate) fn agc_units(grid: &Grid, state: &SystemState) -> Vec<usize> {
    grid.generators
        .iter()
        .enumerate()
        .filter(|(k, g)| g.is_dispatchable() && g.agc_participant && state.committed[*k])
        .map(|(k, _)| k)
        .collect()
}

/// Spinning headroom of the committed AGC units: Σ (p_max − P), MW.
pub fn agc_reserve(state: &SystemState, grid: &Grid) -> f64 {
    agc_units(grid, state)
        .into_iter()
        .map(|k| (grid.generators[k].p_max - state.gen_p[k]).max(0.0))
        .sum()
}

/// Reactive headroom of committed voltage-regulating units, Σ (q_max − Q).
pub fn reactive_reserve(state: &SystemState, grid: &Grid) -> f64 {
    grid.generators
        .iter()
        .enumerate()
        .filter(|(k, g)| g.regulates_voltage() && state.committed[*k])
        .map(|(k, g)| (g.q_max - state.gen_q[k]).max(0.0))
        .sum()
}
