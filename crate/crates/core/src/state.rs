//! The operating point carried from one time-step to the next.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::PowerFlowError;
use crate::network::{BusKind, DeviceSettings, GeneratorKind, Grid, VoltageClass};
use crate::powerflow::{solve_with_fallbacks, PowerFlowProblem, PowerFlowResult, PowerFlowSettings, Voltages};

/// Lifecycle of one demand resource.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DemandStatus {
    /// Step at which activation was requested.
    pub requested_at: Option<usize>,
    /// Step at which relief started.
    pub active_since: Option<usize>,
    /// MW currently removed from the bus.
    pub relief: f64,
}

impl DemandStatus {
    pub fn is_active(&self) -> bool {
        self.active_since.is_some()
    }
}

/// Direction and step of the last toggle of each switchable device, used
/// to block quick reversals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorMemory {
    pub shunts: Vec<Option<(usize, i8)>>,
    pub branches: Vec<Option<(usize, i8)>>,
    pub generators: Vec<Option<(usize, i8)>>,
}

impl OperatorMemory {
    pub fn new(grid: &Grid) -> Self {
        OperatorMemory {
            shunts: vec![None; grid.shunts.len()],
            branches: vec![None; grid.branches.len()],
            generators: vec![None; grid.generators.len()],
        }
    }

    /// True when moving in `direction` at `step` would reverse a toggle
    /// made less than `cooldown` steps ago.
    pub fn blocked(last: Option<(usize, i8)>, step: usize, direction: i8, cooldown: usize) -> bool {
        match last {
            Some((s, d)) => d != direction && step < s + cooldown,
            None => false,
        }
    }
}

/// One converged, operator-accepted operating point.
///
/// Holds everything `advance` reads, so re-running a step from a recorded
/// state reproduces the next recorded state exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub step: usize,
    pub timestamp: NaiveDateTime,
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
    /// MW. Scheduled output for conventional units, profile output for
    /// wind, zero for compensators.
    pub gen_p: Vec<f64>,
    /// MVAr.
    pub gen_q: Vec<f64>,
    pub committed: Vec<bool>,
    pub settings: DeviceSettings,
    /// Per-bus voltage set point: held at slack and PV buses, the control
    /// target elsewhere.
    pub v_set: Vec<f64>,
    pub load_p: Vec<f64>,
    pub load_q: Vec<f64>,
    /// Intertie schedules in MW, profile value plus any operator
    /// adjustment.
    pub intertie: Vec<f64>,
    /// Storage injection in MW, charging negative.
    pub ess_p: Vec<f64>,
    /// Percent.
    pub soc: Vec<f64>,
    pub demand: Vec<DemandStatus>,
    /// A voltage-reduction block is in effect for this step.
    pub voltage_reduction: bool,
    /// Slack output beyond its schedule, MW.
    pub swing_residual: f64,
    pub memory: OperatorMemory,
}

impl SystemState {
    /// The model as written: committed units at their optimal dispatch,
    /// loads at base, interties at their current schedule, wind and
    /// storage idle, flat voltages.
    pub fn from_model(grid: &Grid, step: usize, timestamp: NaiveDateTime) -> SystemState {
        let n = grid.bus_count();
        SystemState {
            step,
            timestamp,
            vm: grid.buses.iter().map(|b| b.voltage_target.unwrap_or(1.0)).collect(),
            va: vec![0.0; n],
            gen_p: grid
                .generators
                .iter()
                .map(|g| if g.is_dispatchable() && g.committed { g.optimal_dispatch } else { 0.0 })
                .collect(),
            gen_q: vec![0.0; grid.generators.len()],
            committed: grid.generators.iter().map(|g| g.committed).collect(),
            settings: grid.initial_settings(),
            v_set: grid.buses.iter().map(|b| b.voltage_target.unwrap_or(1.0)).collect(),
            load_p: grid.loads.iter().map(|l| l.p_mw).collect(),
            load_q: grid.loads.iter().map(|l| l.q_mvar).collect(),
            intertie: grid.interties.iter().map(|i| i.current_schedule).collect(),
            ess_p: vec![0.0; grid.ess.len()],
            soc: grid.ess.iter().map(|e| e.soc).collect(),
            demand: grid
                .demand_resources
                .iter()
                .map(|d| DemandStatus {
                    active_since: d.active.then_some(step),
                    relief: if d.active { d.capacity } else { 0.0 },
                    ..Default::default()
                })
                .collect(),
            voltage_reduction: false,
            swing_residual: 0.0,
            memory: OperatorMemory::new(grid),
        }
    }

    /// Net scheduled injection per bus in MW and MVAr.
    pub fn bus_injections_mw(&self, grid: &Grid) -> (Vec<f64>, Vec<f64>) {
        let n = grid.bus_count();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for (k, g) in grid.generators.iter().enumerate() {
            let carries_p = match g.kind {
                GeneratorKind::Conventional => self.committed[k],
                GeneratorKind::Wind => true,
                GeneratorKind::Compensator => false,
            };
            if carries_p {
                p[grid.generator_bus(k)] += self.gen_p[k];
            }
        }
        for k in 0..grid.loads.len() {
            let b = grid.load_bus(k);
            p[b] -= self.load_p[k];
            q[b] -= self.load_q[k];
        }
        for (k, d) in self.demand.iter().enumerate() {
            p[grid.demand_bus(k)] += d.relief;
        }
        for (k, e) in self.ess_p.iter().enumerate() {
            p[grid.ess_bus(k)] += e;
        }
        for (k, it) in grid.interties.iter().enumerate() {
            p[grid.intertie_bus(k)] += it.injection(self.intertie[k]);
        }
        (p, q)
    }

    /// Power-flow problem for the current devices and injections. PV buses
    /// without a committed regulating unit are solved as PQ.
    pub fn problem(&self, grid: &Grid) -> Result<PowerFlowProblem, PowerFlowError> {
        let base = grid.base_mva();
        let (p, q) = self.bus_injections_mw(grid);
        let mut pr = PowerFlowProblem::new(
            grid,
            &self.settings,
            p.iter().map(|x| x / base).collect(),
            q.iter().map(|x| x / base).collect(),
        )?;
        pr.v_set.clone_from(&self.v_set);
        let n = grid.bus_count();
        let mut range: Vec<Option<(f64, f64)>> = vec![None; n];
        for (k, g) in grid.generators.iter().enumerate() {
            if self.committed[k] && g.regulates_voltage() {
                let r = range[grid.generator_bus(k)].get_or_insert((0.0, 0.0));
                r.0 += g.q_min / base;
                r.1 += g.q_max / base;
            }
        }
        for i in 0..n {
            if pr.kinds[i] == BusKind::Pv {
                match range[i] {
                    Some(r) => pr.q_limits[i] = Some(r),
                    None => pr.kinds[i] = BusKind::Pq,
                }
            }
        }
        Ok(pr)
    }

    pub fn voltages(&self) -> Voltages {
        Voltages {
            vm: self.vm.clone(),
            va: self.va.clone(),
        }
    }

    /// Solves from the current voltages and stores the solution.
    pub fn solve(&mut self, grid: &Grid, settings: &PowerFlowSettings) -> Result<PowerFlowResult, PowerFlowError> {
        let problem = self.problem(grid)?;
        let result = solve_with_fallbacks(&problem, &self.voltages(), settings)?;
        self.apply(grid, &problem, &result);
        Ok(result)
    }

    /// Copies voltages into the state, shares each bus's regulator Q among
    /// its committed units in proportion to their reactive ranges and
    /// records the slack residual.
    pub fn apply(&mut self, grid: &Grid, problem: &PowerFlowProblem, result: &PowerFlowResult) {
        let base = grid.base_mva();
        self.vm.clone_from(&result.voltages.vm);
        self.va.clone_from(&result.voltages.va);
        let n = grid.bus_count();
        let mut lo = vec![0.0; n];
        let mut span = vec![0.0; n];
        for (k, g) in grid.generators.iter().enumerate() {
            if self.committed[k] && g.regulates_voltage() {
                let b = grid.generator_bus(k);
                lo[b] += g.q_min;
                span[b] += g.q_max - g.q_min;
            }
        }
        for (k, g) in grid.generators.iter().enumerate() {
            let b = grid.generator_bus(k);
            self.gen_q[k] = if self.committed[k] && g.regulates_voltage() && problem.kinds[b] != BusKind::Pq {
                let total = result.q_control[b] * base;
                if span[b] > 0.0 {
                    let f = (total - lo[b]) / span[b];
                    g.q_min + f * (g.q_max - g.q_min)
                } else {
                    total
                }
            } else {
                0.0
            };
        }
        let s = grid.slack();
        self.swing_residual = (result.p_injection[s] - problem.p_spec[s]) * base;
    }

    /// Losses in MW from the injection balance: generation (slack residual
    /// included) plus storage and net imports minus served load.
    pub fn injection_losses(&self, grid: &Grid) -> f64 {
        let (p, _) = self.bus_injections_mw(grid);
        p.iter().sum::<f64>() + self.swing_residual
    }

    /// Voltage the controllers aim for at bus `i`, including any active
    /// voltage-reduction block on the low-voltage side.
    pub fn control_target(&self, grid: &Grid, i: usize, block: f64) -> f64 {
        if self.voltage_reduction && grid.buses[i].voltage_class == VoltageClass::Low {
            self.v_set[i] - block
        } else {
            self.v_set[i]
        }
    }

    /// Total served load in MW.
    pub fn served_load(&self) -> f64 {
        self.load_p.iter().sum::<f64>() - self.demand.iter().map(|d| d.relief).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::powerflow::{branch_flows, total_losses};

    fn t0() -> NaiveDateTime {
        chrono::NaiveDate::from_ymd_opt(2035, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
    }

    #[test]
    fn snapshot_matches_state_problem() {
        let grid = Grid::new(cases::desk30()).unwrap();
        let state = SystemState::from_model(&grid, 0, t0());
        let a = PowerFlowProblem::snapshot(&grid).unwrap();
        let b = state.problem(&grid).unwrap();
        assert_eq!(a.p_spec, b.p_spec);
        assert_eq!(a.q_spec, b.q_spec);
        assert_eq!(a.kinds, b.kinds);
        assert_eq!(a.q_limits, b.q_limits);
    }

    #[test]
    fn injection_losses_match_branch_losses() {
        let grid = Grid::new(cases::desk30()).unwrap();
        let mut state = SystemState::from_model(&grid, 0, t0());
        state.solve(&grid, &PowerFlowSettings::default()).unwrap();
        let branch = total_losses(&branch_flows(&grid, &state.settings, &state.voltages()));
        assert!((state.injection_losses(&grid) - branch).abs() < 1e-6, "{} vs {branch}", state.injection_losses(&grid));
    }

    #[test]
    fn reversal_blocked_only_inside_cooldown() {
        assert!(OperatorMemory::blocked(Some((10, 1)), 12, -1, 3));
        assert!(!OperatorMemory::blocked(Some((10, 1)), 13, -1, 3));
        assert!(!OperatorMemory::blocked(Some((10, 1)), 11, 1, 3));
        assert!(!OperatorMemory::blocked(None, 0, -1, 3));
    }
}
