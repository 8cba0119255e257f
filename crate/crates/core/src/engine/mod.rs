//! Chained time-step simulation.
//!
//! Each step moves every profiled injection from its current value to the
//! next profile row in `J` equal increments, sized so no bus changes by
//! more than `max_injection_per_substep` MW at once. After every increment
//! the power flow is solved and the virtual operator runs until it has
//! nothing left to do (or its round budget is spent). Only the end-of-step
//! state is recorded.

mod storage;

pub use storage::{EssRecord, StorageController, StorageTrace};

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{EngineError, OperatorError, PowerFlowError};
use crate::ess::{EssStep, LimitTable, PeakCalendar, PeakRule, PeriodMap, SigmaEstimator};
use crate::network::{DemandKind, GeneratorKind, Grid};
use crate::operator::{
    control_voltage_high, control_voltage_low, corrective_hierarchy, enforce_dguoo, relieve_surplus,
    restore_balance, settle_taps, ActionKind, FictitiousPass, OperatorAction, OperatorContext, OperatorThresholds, Stage,
};
use crate::powerflow::{branch_flows, check_security, total_losses, PowerFlowSettings, Rung, SecurityViolation};
use crate::profiles::TimeSeriesDataset;
use crate::state::SystemState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EssSettings {
    pub enabled: bool,
    pub peak_rule: PeakRule,
    pub period_map: PeriodMap,
    pub calendar: PeakCalendar,
    pub estimator: SigmaEstimator,
    /// Overrides every unit's balance state of charge, percent.
    pub soc_balance: Option<f64>,
}

impl Default for EssSettings {
    fn default() -> Self {
        EssSettings {
            enabled: true,
            peak_rule: PeakRule::default(),
            period_map: PeriodMap::default(),
            calendar: PeakCalendar::default(),
            estimator: SigmaEstimator::default(),
            soc_balance: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineConfig {
    /// Minutes per step; must divide 60.
    pub resolution_min: u32,
    /// Profile rows `[start, end)` to simulate; the whole dataset if absent.
    pub horizon: Option<[usize; 2]>,
    /// Largest change of net injection at any bus within one sub-step, MW.
    pub max_injection_per_substep: f64,
    /// Keep every n-th state of a segment (the first is always kept).
    pub record_every: usize,
    /// Operator rounds after each sub-step.
    pub max_vo_rounds: usize,
    pub powerflow: PowerFlowSettings,
    pub operator: OperatorThresholds,
    pub ess: EssSettings,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            resolution_min: 60,
            horizon: None,
            max_injection_per_substep: 100.0,
            record_every: 1,
            max_vo_rounds: 4,
            powerflow: PowerFlowSettings::default(),
            operator: OperatorThresholds::default(),
            ess: EssSettings::default(),
        }
    }
}

impl EngineConfig {
    pub fn check(&self) -> Result<(), EngineError> {
        let bad = |m: String| Err(EngineError::Config(m));
        if self.resolution_min == 0 || 60 % self.resolution_min != 0 {
            return bad(format!("resolution of {} min does not divide 60", self.resolution_min));
        }
        if let Some([a, b]) = self.horizon {
            if a >= b {
                return bad(format!("horizon [{a}, {b}) is empty"));
            }
        }
        if !(self.max_injection_per_substep > 0.0) {
            return bad("max_injection_per_substep must be positive".into());
        }
        if self.record_every == 0 || self.max_vo_rounds == 0 {
            return bad("record_every and max_vo_rounds must be at least 1".into());
        }
        self.powerflow.check().map_err(EngineError::Config)?;
        self.operator.check().map_err(EngineError::Config)?;
        self.ess.calendar.check().map_err(|e| EngineError::Config(e.to_string()))?;
        Ok(())
    }
}

/// Device values a step moves towards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceTargets {
    pub load_p: Vec<f64>,
    pub load_q: Vec<f64>,
    /// Per generator; only wind units are profile-driven.
    pub gen_p: Vec<f64>,
    pub intertie: Vec<f64>,
    pub ess: Vec<EssStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepPlan {
    /// Index of the step being produced.
    pub step: usize,
    /// Net change of scheduled injection per bus, MW.
    pub delta_p: Vec<f64>,
    pub delta_q: Vec<f64>,
    /// Reactive part of the change coming from wind and storage, MVAr.
    pub delta_q_der: Vec<f64>,
    pub sub_steps: usize,
    pub fractions: Vec<f64>,
    pub targets: DeviceTargets,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub sub_steps: usize,
    /// Swing residual right after each sub-step's first solve, MW.
    pub pre_vo_residuals: Vec<f64>,
    /// Rung that solved each sub-step's first power flow.
    pub rungs: Vec<Rung>,
    pub fictitious: Vec<FictitiousPass>,
    /// Reasons the accepted state is allowed to carry violations.
    pub concessions: Vec<String>,
    pub violations: Vec<SecurityViolation>,
    pub ess: Vec<EssRecord>,
    /// Branch losses, MW.
    pub losses_mw: f64,
    /// Losses from the injection balance, MW.
    pub balance_losses_mw: f64,
}

impl StepDiagnostics {
    pub fn worst_pre_vo_residual(&self) -> f64 {
        self.pre_vo_residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn is_concession(&self) -> bool {
        !self.concessions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub state: SystemState,
    pub actions: Vec<OperatorAction>,
    pub diagnostics: StepDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub step: usize,
    pub sub_step: usize,
    pub message: String,
}

/// Recorded output of a contiguous range of steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentResult {
    pub range: [usize; 2],
    pub states: Vec<SystemState>,
    pub actions: Vec<OperatorAction>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub failure: Option<FailureRecord>,
    /// Last state reached, recorded or not.
    #[serde(skip)]
    pub final_state: Option<SystemState>,
}

/// Engine bound to one network, one profile set and one configuration.
/// Holds no mutable state; segments can share it across threads.
pub struct Simulator<'a> {
    pub grid: &'a Grid,
    pub profiles: &'a TimeSeriesDataset,
    pub config: &'a EngineConfig,
    pub storage: Option<StorageController>,
    load_cols: Vec<Option<&'a [f64]>>,
    load_q_cols: Vec<Option<&'a [f64]>>,
    gen_cols: Vec<Option<&'a [f64]>>,
    intertie_cols: Vec<Option<&'a [f64]>>,
}

fn step_failure(step: usize, sub_step: usize, e: impl std::fmt::Display) -> EngineError {
    EngineError::StepFailure {
        step,
        sub_step,
        trace: e.to_string(),
    }
}

impl<'a> Simulator<'a> {
    /// Storage limits are computed from the profiles' own zonal wind
    /// unless `limits` is given.
    pub fn new(
        grid: &'a Grid,
        profiles: &'a TimeSeriesDataset,
        config: &'a EngineConfig,
        limits: Option<LimitTable>,
    ) -> Result<Self, EngineError> {
        config.check()?;
        if profiles.resolution_min != config.resolution_min {
            return Err(EngineError::Config(format!(
                "profiles are at {} min, configuration asks for {} min",
                profiles.resolution_min, config.resolution_min
            )));
        }
        if profiles.is_empty() {
            return Err(EngineError::Config("profiles are empty".into()));
        }
        if let Some([_, end]) = config.horizon {
            if end > profiles.len() {
                return Err(EngineError::MissingProfile {
                    device: profiles.series.keys().next().cloned().unwrap_or_default(),
                    step: profiles.len(),
                });
            }
        }
        let storage = if config.ess.enabled && !grid.ess.is_empty() {
            Some(StorageController::new(grid, profiles, &config.ess, limits)?)
        } else {
            None
        };
        Ok(Simulator {
            grid,
            profiles,
            config,
            storage,
            load_cols: grid.loads.iter().map(|l| profiles.column(&l.id)).collect(),
            load_q_cols: grid.loads.iter().map(|l| profiles.column(&format!("{}:q", l.id))).collect(),
            gen_cols: grid
                .generators
                .iter()
                .map(|g| if g.kind == GeneratorKind::Wind { profiles.column(&g.id) } else { None })
                .collect(),
            intertie_cols: grid.interties.iter().map(|i| profiles.column(&i.id)).collect(),
        })
    }

    /// Profile rows covered by the run.
    pub fn horizon(&self) -> Range<usize> {
        match self.config.horizon {
            Some([a, b]) => a..b,
            None => 0..self.profiles.len(),
        }
    }

    fn value(&self, col: Option<&[f64]>, id: &str, t: usize) -> Result<Option<f64>, EngineError> {
        match col {
            None => Ok(None),
            Some(c) => match c.get(t) {
                Some(&x) if x.is_finite() => Ok(Some(x)),
                _ => Err(EngineError::MissingProfile {
                    device: id.to_string(),
                    step: t,
                }),
            },
        }
    }

    /// Device values at profile row `t`. Devices without a profile keep
    /// their current value, except interties, which return to the model
    /// schedule.
    pub fn targets(&self, current: &SystemState, t: usize) -> Result<DeviceTargets, EngineError> {
        let grid = self.grid;
        let mut load_p = current.load_p.clone();
        let mut load_q = current.load_q.clone();
        for (k, l) in grid.loads.iter().enumerate() {
            if let Some(p) = self.value(self.load_cols[k], &l.id, t)? {
                load_p[k] = p;
                load_q[k] = match self.value(self.load_q_cols[k], &l.id, t)? {
                    Some(q) => q,
                    None => l.q_at(p),
                };
            }
        }
        let mut gen_p = current.gen_p.clone();
        for (k, g) in grid.generators.iter().enumerate() {
            if let Some(p) = self.value(self.gen_cols[k], &g.id, t)? {
                gen_p[k] = p;
            }
        }
        let mut intertie = Vec::with_capacity(grid.interties.len());
        for (k, it) in grid.interties.iter().enumerate() {
            intertie.push(self.value(self.intertie_cols[k], &it.id, t)?.unwrap_or(it.current_schedule));
        }
        let ess = match &self.storage {
            Some(s) => s.step(self.profiles.timestamp(t), t, &current.soc)?,
            None => current
                .soc
                .iter()
                .map(|&soc| StorageController::idle(soc))
                .collect(),
        };
        Ok(DeviceTargets {
            load_p,
            load_q,
            gen_p,
            intertie,
            ess,
        })
    }

    /// Increments taking `current` to the profile row after it.
    pub fn plan_step(&self, current: &SystemState) -> Result<StepPlan, EngineError> {
        let t = current.step + 1;
        if t >= self.profiles.len() {
            let device = self.profiles.series.keys().next().cloned().unwrap_or_default();
            return Err(EngineError::MissingProfile { device, step: t });
        }
        let targets = self.targets(current, t)?;
        Ok(self.plan_to(current, targets, t))
    }

    /// Plan from `current` to explicit targets, producing step `step`.
    pub fn plan_to(&self, current: &SystemState, targets: DeviceTargets, step: usize) -> StepPlan {
        let grid = self.grid;
        let n = grid.bus_count();
        let mut delta_p = vec![0.0; n];
        let mut delta_q = vec![0.0; n];
        for k in 0..grid.loads.len() {
            let b = grid.load_bus(k);
            delta_p[b] -= targets.load_p[k] - current.load_p[k];
            delta_q[b] -= targets.load_q[k] - current.load_q[k];
        }
        for (k, g) in grid.generators.iter().enumerate() {
            if g.kind == GeneratorKind::Wind {
                delta_p[grid.generator_bus(k)] += targets.gen_p[k] - current.gen_p[k];
            }
        }
        for (k, it) in grid.interties.iter().enumerate() {
            delta_p[grid.intertie_bus(k)] += it.injection(targets.intertie[k]) - it.injection(current.intertie[k]);
        }
        for (k, e) in targets.ess.iter().enumerate() {
            delta_p[grid.ess_bus(k)] += e.decision.power - current.ess_p[k];
        }
        let largest = delta_p.iter().fold(0.0_f64, |a, d| a.max(d.abs()));
        let j = ((largest / self.config.max_injection_per_substep).ceil() as usize).max(1);
        StepPlan {
            step,
            delta_p,
            delta_q,
            delta_q_der: vec![0.0; n],
            sub_steps: j,
            fractions: vec![1.0 / j as f64; j],
            targets,
        }
    }

    /// Produces the state one step after `current`.
    pub fn advance(&self, current: &SystemState) -> Result<StepOutcome, EngineError> {
        let plan = self.plan_step(current)?;
        self.execute(current, &plan, true)
    }

    /// Applies a plan sub-step by sub-step with operator rounds after each.
    /// `ramp_limits` is false only when re-targeting a base case, which is
    /// not a physical transition.
    pub fn execute(&self, current: &SystemState, plan: &StepPlan, ramp_limits: bool) -> Result<StepOutcome, EngineError> {
        let grid = self.grid;
        let cfg = self.config;
        let step = plan.step;
        let mut s = current.clone();
        s.step = step;
        s.timestamp = self.profiles.timestamp(step);
        self.roll_demand(&mut s);

        let start_p: Vec<f64> = if ramp_limits {
            current.gen_p.clone()
        } else {
            vec![f64::NAN; current.gen_p.len()]
        };
        let start_committed = current.committed.clone();
        let target_ess: Vec<f64> = plan.targets.ess.iter().map(|e| e.decision.power).collect();
        let mut actions = Vec::new();
        let mut diag = StepDiagnostics {
            step,
            sub_steps: plan.sub_steps,
            ..Default::default()
        };
        let mut last_intertie = current.intertie.clone();
        let j_total = plan.sub_steps;
        let mut concessions = Vec::new();
        for j in 1..=j_total {
            let lerp = |a: f64, b: f64| if j == j_total { b } else { a + (b - a) * (j as f64 / j_total as f64) };
            for k in 0..grid.loads.len() {
                s.load_p[k] = lerp(current.load_p[k], plan.targets.load_p[k]);
                s.load_q[k] = lerp(current.load_q[k], plan.targets.load_q[k]);
            }
            for (k, g) in grid.generators.iter().enumerate() {
                if g.kind == GeneratorKind::Wind {
                    s.gen_p[k] = lerp(current.gen_p[k], plan.targets.gen_p[k]);
                }
            }
            for k in 0..grid.interties.len() {
                let base = lerp(current.intertie[k], plan.targets.intertie[k]);
                // keep any operator adjustment made earlier in this step
                s.intertie[k] = base + (s.intertie[k] - last_intertie[k]);
                last_intertie[k] = base;
            }
            for k in 0..grid.ess.len() {
                s.ess_p[k] = lerp(current.ess_p[k], target_ess[k]);
            }
            let result = s.solve(grid, &cfg.powerflow).map_err(|e| step_failure(step, j, e))?;
            diag.rungs.push(result.rung);
            diag.pre_vo_residuals.push(s.swing_residual);

            concessions.clear();
            for round in 0..cfg.max_vo_rounds {
                let ctx = OperatorContext {
                    grid,
                    thresholds: &cfg.operator,
                    powerflow: &cfg.powerflow,
                    resolution_min: if ramp_limits { cfg.resolution_min } else { u32::MAX / 4 },
                    step,
                    sub_step: j,
                    round,
                    start_p: &start_p,
                    start_committed: &start_committed,
                };
                let before = actions.len();
                concessions.clear();
                self.operator_round(&ctx, &mut s, &mut actions, &mut diag.fictitious, &mut concessions)
                    .map_err(|e| step_failure(step, j, e))?;
                if actions.len() == before {
                    break;
                }
            }
        }
        let moved: BTreeSet<usize> = actions
            .iter()
            .filter(|a| a.kind == ActionKind::TapStep)
            .filter_map(|a| grid.transformers.iter().position(|t| t.id == a.device))
            .collect();
        if !moved.is_empty() {
            let ctx = OperatorContext {
                grid,
                thresholds: &cfg.operator,
                powerflow: &cfg.powerflow,
                resolution_min: if ramp_limits { cfg.resolution_min } else { u32::MAX / 4 },
                step,
                sub_step: j_total,
                round: cfg.max_vo_rounds,
                start_p: &start_p,
                start_committed: &start_committed,
            };
            let moved: Vec<usize> = moved.into_iter().collect();
            if let Err(e) = settle_taps(&ctx, &mut s, &mut actions, &moved) {
                match e {
                    OperatorError::PowerFlow(p) => return Err(step_failure(step, j_total, p)),
                    other => concessions.push(other.to_string()),
                }
            }
        }
        for (k, e) in plan.targets.ess.iter().enumerate() {
            s.soc[k] = e.soc_after;
            s.ess_p[k] = e.decision.power;
        }
        diag.ess = plan
            .targets
            .ess
            .iter()
            .zip(&grid.ess)
            .map(|(e, u)| EssRecord::new(step, &u.id, e))
            .collect();
        self.finish(&s, &mut diag);
        if s.swing_residual.abs() > cfg.operator.balance_threshold {
            concessions.push(format!("swing residual {:+.3} MW left on the slack", s.swing_residual));
        }
        if !diag.violations.is_empty() && concessions.is_empty() {
            concessions.push(format!("{} security violation(s) with no remedy left", diag.violations.len()));
        }
        diag.concessions = concessions;
        Ok(StepOutcome {
            state: s,
            actions,
            diagnostics: diag,
        })
    }

    fn operator_round(
        &self,
        ctx: &OperatorContext,
        s: &mut SystemState,
        actions: &mut Vec<OperatorAction>,
        fictitious: &mut Vec<FictitiousPass>,
        concessions: &mut Vec<String>,
    ) -> Result<(), PowerFlowError> {
        let lift = |e: OperatorError, concessions: &mut Vec<String>| match e {
            OperatorError::PowerFlow(p) => Err(p),
            other => {
                concessions.push(other.to_string());
                Ok(())
            }
        };
        let escalated = match restore_balance(ctx, Stage::Balance, s, actions) {
            Ok(x) => x,
            Err(e) => {
                lift(e, concessions)?;
                0.0
            }
        };
        if escalated < 0.0 {
            match relieve_surplus(ctx, s, actions) {
                Ok(left) if left > 0.0 => concessions.push(format!("surplus of {left:.1} MW with no outlet left")),
                Ok(_) => {}
                Err(e) => lift(e, concessions)?,
            }
        }
        let before = actions.len();
        match enforce_dguoo(ctx, s, actions) {
            Ok(true) => concessions.push("unit outside its DGUOO band with no commitment option left".into()),
            Ok(false) => {}
            Err(e) => lift(e, concessions)?,
        }
        if actions.len() > before {
            // commitment changes move losses; settle before judging reserve
            if let Err(e) = restore_balance(ctx, Stage::Dguoo, s, actions) {
                lift(e, concessions)?;
            }
        }
        if let Err(e) = corrective_hierarchy(ctx, s, actions) {
            lift(e, concessions)?;
        }
        if let Err(e) = control_voltage_low(ctx, s, actions, fictitious) {
            lift(e, concessions)?;
        }
        if let Err(e) = control_voltage_high(ctx, s, actions) {
            lift(e, concessions)?;
        }
        Ok(())
    }

    /// Start-of-step demand bookkeeping: delayed activations take effect,
    /// expired ones are released, and last step's voltage-reduction block
    /// is lifted.
    fn roll_demand(&self, s: &mut SystemState) {
        let step = s.step;
        for (d, r) in self.grid.demand_resources.iter().enumerate() {
            let st = &mut s.demand[d];
            if r.kind == DemandKind::VoltageReductionBlock {
                if s.voltage_reduction {
                    *st = Default::default();
                }
                continue;
            }
            if let (Some(req), None) = (st.requested_at, st.active_since) {
                if step >= req + r.activation_delay as usize {
                    st.active_since = Some(step);
                    st.relief = r.capacity;
                }
            }
            if let Some(since) = st.active_since {
                if step >= since + r.max_duration as usize {
                    *st = Default::default();
                }
            }
        }
        s.voltage_reduction = false;
    }

    fn finish(&self, s: &SystemState, diag: &mut StepDiagnostics) {
        let grid = self.grid;
        diag.violations = check_security(grid, &s.settings, &s.voltages(), &s.gen_q, &s.committed);
        diag.losses_mw = total_losses(&branch_flows(grid, &s.settings, &s.voltages()));
        diag.balance_losses_mw = s.injection_losses(grid);
    }

    /// The model's own operating point solved and cleared by the operator:
    /// set points at their targets, then balance, commitment, reserve and
    /// voltage stages until nothing changes. Fails when a regulator cannot
    /// hold its target or the operator cannot produce a secure state.
    pub fn base_case(&self) -> Result<SystemState, EngineError> {
        self.base_case_logged().map(|(s, _)| s)
    }

    /// [`Simulator::base_case`] with the operator actions that produced it.
    pub fn base_case_logged(&self) -> Result<(SystemState, Vec<OperatorAction>), EngineError> {
        let grid = self.grid;
        let cfg = self.config;
        let t0 = self.horizon().start;
        let fail = |m: String| EngineError::InitializationFailure(m);
        let mut s = SystemState::from_model(grid, t0, self.profiles.timestamp(t0));
        let limited = |s: &SystemState| -> Result<Vec<String>, EngineError> {
            let problem = s.problem(grid).map_err(|e| fail(e.to_string()))?;
            let result = crate::powerflow::solve_with_fallbacks(&problem, &s.voltages(), &cfg.powerflow)
                .map_err(|e| fail(format!("preliminary power flow: {e}")))?;
            Ok(result.q_limited(&problem).into_iter().map(|i| grid.buses[i].id.clone()).collect())
        };
        s.solve(grid, &cfg.powerflow)
            .map_err(|e| fail(format!("preliminary power flow: {e}")))?;
        let capped = limited(&s)?;
        if !capped.is_empty() {
            return Err(fail(format!(
                "voltage target unreachable at {}: regulating units at their reactive limit",
                capped.join(", ")
            )));
        }
        let start_p = vec![f64::NAN; s.gen_p.len()];
        let start_committed = s.committed.clone();
        let mut actions = Vec::new();
        let mut fictitious = Vec::new();
        let mut concessions = Vec::new();
        for round in 0..4 * cfg.max_vo_rounds {
            let ctx = OperatorContext {
                grid,
                thresholds: &cfg.operator,
                powerflow: &cfg.powerflow,
                resolution_min: u32::MAX / 4,
                step: t0,
                sub_step: 0,
                round,
                start_p: &start_p,
                start_committed: &start_committed,
            };
            let before = actions.len();
            concessions.clear();
            self.operator_round(&ctx, &mut s, &mut actions, &mut fictitious, &mut concessions)
                .map_err(|e| fail(format!("operator pass: {e}")))?;
            if actions.len() == before {
                break;
            }
        }
        if !concessions.is_empty() {
            return Err(fail(concessions.join("; ")));
        }
        let violations = check_security(grid, &s.settings, &s.voltages(), &s.gen_q, &s.committed);
        if let Some(v) = violations.first() {
            return Err(fail(format!(
                "{} violation(s) left, first {:?} at {} ({:.4} vs {:.4})",
                violations.len(),
                v.kind,
                v.element,
                v.value,
                v.limit
            )));
        }
        let capped = limited(&s)?;
        if !capped.is_empty() {
            return Err(fail(format!("regulating units at their reactive limit at {}", capped.join(", "))));
        }
        s.memory = crate::state::OperatorMemory::new(grid);
        Ok((s, actions))
    }

    /// `base` moved to the profile values of row `t`. Storage state of
    /// charge is replayed from the start of the profiles, so it matches a
    /// chained run exactly; operator memory and demand actions start fresh.
    pub fn retarget(&self, base: &SystemState, t: usize) -> Result<StepOutcome, EngineError> {
        let mut from = base.clone();
        if let Some(storage) = &self.storage {
            from.soc = storage.soc_before(self.horizon().start, t)?;
        }
        from.ess_p = vec![0.0; self.grid.ess.len()];
        from.memory = crate::state::OperatorMemory::new(self.grid);
        for d in from.demand.iter_mut() {
            *d = Default::default();
        }
        from.voltage_reduction = false;
        let targets = self.targets(&from, t)?;
        let plan = self.plan_to(&from, targets, t);
        self.execute(&from, &plan, false)
    }

    /// Base case re-targeted to the first row of the horizon.
    pub fn initialize(&self) -> Result<StepOutcome, EngineError> {
        let base = self.base_case()?;
        self.retarget(&base, self.horizon().start)
    }

    /// Like [`Simulator::run_segment`] from the outcome of the step at
    /// `range.start`, keeping that step's actions and diagnostics.
    pub fn run_segment_from(&self, first: StepOutcome, range: Range<usize>) -> Result<SegmentResult, EngineError> {
        let mut out = self.run_segment(&first.state, range)?;
        if let Some(d) = out.diagnostics.first_mut() {
            *d = first.diagnostics;
        }
        out.actions.splice(0..0, first.actions);
        Ok(out)
    }

    /// Runs `range` from `from`, which must be the state at `range.start`
    /// (recorded as is) or at `range.start - 1`. Stops at the first step
    /// failure and returns what was recorded up to it.
    pub fn run_segment(&self, from: &SystemState, range: Range<usize>) -> Result<SegmentResult, EngineError> {
        let mut out = SegmentResult {
            range: [range.start, range.end],
            states: Vec::new(),
            actions: Vec::new(),
            diagnostics: Vec::new(),
            failure: None,
            final_state: None,
        };
        if range.is_empty() {
            return Ok(out);
        }
        let mut current = from.clone();
        if from.step == range.start {
            let mut diag = StepDiagnostics {
                step: from.step,
                ..Default::default()
            };
            self.finish(from, &mut diag);
            out.states.push(from.clone());
            out.diagnostics.push(diag);
        } else if from.step + 1 != range.start {
            return Err(EngineError::Config(format!(
                "segment [{}, {}) cannot start from the state of step {}",
                range.start, range.end, from.step
            )));
        }
        while current.step + 1 < range.end {
            match self.advance(&current) {
                Ok(o) => {
                    let keep = (o.state.step - range.start) % self.config.record_every == 0;
                    out.actions.extend(o.actions);
                    out.diagnostics.push(o.diagnostics);
                    if keep {
                        out.states.push(o.state.clone());
                    }
                    current = o.state;
                }
                Err(EngineError::StepFailure { step, sub_step, trace }) => {
                    out.failure = Some(FailureRecord {
                        step,
                        sub_step,
                        message: trace,
                    });
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        out.final_state = Some(current);
        Ok(out)
    }
}

#[cfg(test)]
mod tests;
