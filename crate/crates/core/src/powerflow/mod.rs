//! Steady-state AC power flow.
//!
//! [`solve`] runs one method (full Newton–Raphson in polar form, or the
//! XB fast-decoupled variant) with optional generator Q-limit enforcement
//! by PV→PQ switching. [`solve_with_fallbacks`] walks the ladder
//! full Newton → damped Newton → fast-decoupled → relaxed Q-limits and
//! reports which rung succeeded.

mod decoupled;
mod flows;
mod newton;
mod security;

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use flows::{branch_flows, bus_injections, total_losses, BranchFlow};
pub use security::{check_security, SecurityViolation, SecurityViolationKind};

use crate::error::{ModelError, PowerFlowError};
use crate::network::{AdmittanceMatrix, BusKind, DeviceSettings, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    NewtonRaphson,
    FastDecoupled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerFlowSettings {
    /// Largest acceptable per-unit mismatch.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Step multipliers tried, in order, by the damped rung.
    pub damping_schedule: Vec<f64>,
    pub mode: SolverMode,
    pub enforce_q_limits: bool,
}

impl Default for PowerFlowSettings {
    fn default() -> Self {
        PowerFlowSettings {
            tolerance: 1e-8,
            max_iterations: 30,
            damping_schedule: vec![0.5, 0.25],
            mode: SolverMode::NewtonRaphson,
            enforce_q_limits: true,
        }
    }
}

impl PowerFlowSettings {
    pub fn check(&self) -> Result<(), String> {
        if !(self.tolerance > 0.0) {
            return Err("tolerance must be positive".into());
        }
        if self.max_iterations < 1 {
            return Err("max_iterations must be at least 1".into());
        }
        if self.damping_schedule.iter().any(|&m| !(m > 0.0 && m <= 1.0)) {
            return Err("damping multipliers must lie in (0, 1]".into());
        }
        Ok(())
    }
}

/// One power-flow problem: network admittance, bus roles, set points and
/// scheduled injections, all in per-unit.
#[derive(Debug, Clone)]
pub struct PowerFlowProblem {
    pub ybus: AdmittanceMatrix,
    pub kinds: Vec<BusKind>,
    /// Voltage magnitude held at slack and PV buses.
    pub v_set: Vec<f64>,
    /// Scheduled net active injection.
    pub p_spec: Vec<f64>,
    /// Scheduled net reactive injection, excluding the Q supplied by
    /// voltage-controlling units at PV and slack buses.
    pub q_spec: Vec<f64>,
    /// Reactive capability of the voltage-controlling units at each bus.
    /// `None` means unlimited.
    pub q_limits: Vec<Option<(f64, f64)>>,
    pub bus_ids: Vec<String>,
}

impl PowerFlowProblem {
    /// Problem for `grid` under `settings` with the given per-unit
    /// injections. Bus roles come from the model; PV buses use their
    /// `voltage_target` and have no reactive limits.
    pub fn new(
        grid: &Grid,
        settings: &DeviceSettings,
        p_spec: Vec<f64>,
        q_spec: Vec<f64>,
    ) -> Result<PowerFlowProblem, PowerFlowError> {
        let ybus = AdmittanceMatrix::assemble(grid, settings).map_err(islanded)?;
        Ok(PowerFlowProblem {
            ybus,
            kinds: grid.buses.iter().map(|b| b.kind).collect(),
            v_set: grid.buses.iter().map(|b| b.voltage_target.unwrap_or(1.0)).collect(),
            p_spec,
            q_spec,
            q_limits: vec![None; grid.bus_count()],
            bus_ids: grid.buses.iter().map(|b| b.id.clone()).collect(),
        })
    }

    /// Snapshot of the model as written: committed conventional units at
    /// their optimal dispatch, interties at their current schedule, loads
    /// at their base values, wind and storage idle. PV buses without a
    /// committed regulating unit are solved as PQ.
    pub fn snapshot(grid: &Grid) -> Result<PowerFlowProblem, PowerFlowError> {
        let n = grid.bus_count();
        let base = grid.base_mva();
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        let mut regulating = vec![false; n];
        let mut q_range = vec![(0.0, 0.0); n];
        for (k, g) in grid.generators.iter().enumerate() {
            if !g.committed {
                continue;
            }
            let b = grid.generator_bus(k);
            if g.is_dispatchable() {
                p[b] += g.optimal_dispatch / base;
            }
            if g.regulates_voltage() {
                regulating[b] = true;
                q_range[b].0 += g.q_min / base;
                q_range[b].1 += g.q_max / base;
            }
        }
        for (k, it) in grid.interties.iter().enumerate() {
            p[grid.intertie_bus(k)] += it.injection(it.current_schedule) / base;
        }
        for (k, l) in grid.loads.iter().enumerate() {
            let b = grid.load_bus(k);
            p[b] -= l.p_mw / base;
            q[b] -= l.q_mvar / base;
        }
        let mut problem = PowerFlowProblem::new(grid, &grid.initial_settings(), p, q)?;
        for i in 0..n {
            if problem.kinds[i] == BusKind::Pv {
                if regulating[i] {
                    problem.q_limits[i] = Some(q_range[i]);
                } else {
                    problem.kinds[i] = BusKind::Pq;
                }
            }
        }
        Ok(problem)
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn slack(&self) -> usize {
        self.kinds.iter().position(|k| *k == BusKind::Slack).unwrap_or(0)
    }

    /// Holds `bus` at `v` with unlimited reactive capability.
    pub fn add_fictitious_generator(&mut self, bus: usize, v: f64) {
        if self.kinds[bus] != BusKind::Slack {
            self.kinds[bus] = BusKind::Pv;
            self.v_set[bus] = v;
            self.q_limits[bus] = None;
        }
    }

    /// Voltages at set point on slack/PV buses, 1.0 elsewhere, zero angles.
    pub fn flat_start(&self) -> Voltages {
        let vm = self
            .kinds
            .iter()
            .zip(&self.v_set)
            .map(|(k, &v)| if *k == BusKind::Pq { 1.0 } else { v })
            .collect();
        Voltages {
            vm,
            va: vec![0.0; self.len()],
        }
    }
}

fn islanded(e: ModelError) -> PowerFlowError {
    match e {
        ModelError::IslandWithoutSlack(names) => {
            PowerFlowError::IslandedBus(names.into_iter().next().unwrap_or_default())
        }
        other => PowerFlowError::Model(other),
    }
}

/// Bus voltage magnitudes (pu) and angles (rad).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Voltages {
    pub vm: Vec<f64>,
    pub va: Vec<f64>,
}

impl Voltages {
    pub fn complex(&self) -> Vec<Complex64> {
        self.vm
            .iter()
            .zip(&self.va)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rung", content = "multiplier")]
pub enum Rung {
    FullNewton,
    DampedNewton(f64),
    FastDecoupled,
    RelaxedQLimits,
}

impl fmt::Display for Rung {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rung::FullNewton => write!(f, "newton"),
            Rung::DampedNewton(m) => write!(f, "damped_newton({m})"),
            Rung::FastDecoupled => write!(f, "fast_decoupled"),
            Rung::RelaxedQLimits => write!(f, "relaxed_q_limits"),
        }
    }
}

/// Record of one solver attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub rung: Rung,
    pub converged: bool,
    pub iterations: usize,
    /// Infinity-norm mismatch before each update, then after the last one.
    pub mismatch: Vec<f64>,
    pub note: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LadderTrace {
    pub attempts: Vec<Attempt>,
}

impl LadderTrace {
    /// One line per iteration: `rung=<r> iter=<k> mismatch=<m>`.
    pub fn log_lines(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.attempts {
            for (k, m) in a.mismatch.iter().enumerate() {
                out.push(format!("rung={} iter={} mismatch={:.6e}", a.rung, k, m));
            }
            out.push(format!(
                "rung={} converged={} iterations={} note={}",
                a.rung, a.converged, a.iterations, a.note
            ));
        }
        out
    }
}

impl fmt::Display for LadderTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .attempts
            .iter()
            .map(|a| {
                format!(
                    "{}: {} after {} it (mismatch {:.3e}){}",
                    a.rung,
                    if a.converged { "ok" } else { "failed" },
                    a.iterations,
                    a.mismatch.last().copied().unwrap_or(f64::NAN),
                    if a.note.is_empty() { String::new() } else { format!(", {}", a.note) }
                )
            })
            .collect();
        write!(f, "[{}]", parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerFlowResult {
    pub converged: bool,
    pub iterations: usize,
    pub voltages: Voltages,
    pub max_mismatch: f64,
    /// Computed net injections at the solution, per-unit.
    pub p_injection: Vec<f64>,
    pub q_injection: Vec<f64>,
    /// Bus roles at the solution; PV buses that hit a reactive limit appear
    /// as PQ.
    pub kinds: Vec<BusKind>,
    /// Reactive output of the voltage-controlling units per bus, per-unit.
    pub q_control: Vec<f64>,
    pub rung: Rung,
    pub trace: LadderTrace,
}

impl PowerFlowResult {
    /// Buses that were switched from PV to PQ to respect reactive limits.
    pub fn q_limited(&self, problem: &PowerFlowProblem) -> Vec<usize> {
        (0..self.kinds.len())
            .filter(|&i| problem.kinds[i] == BusKind::Pv && self.kinds[i] == BusKind::Pq)
            .collect()
    }
}

/// Result of an inner iteration loop.
pub(crate) struct Inner {
    pub converged: bool,
    pub iterations: usize,
    pub voltages: Voltages,
    pub mismatch: Vec<f64>,
}

pub(crate) fn injections(ybus: &AdmittanceMatrix, v: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
    let y = ybus.matrix();
    let n = v.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        let mut current = Complex64::new(0.0, 0.0);
        for k in 0..n {
            current += y[(i, k)] * v[k];
        }
        let s = v[i] * current.conj();
        p[i] = s.re;
        q[i] = s.im;
    }
    (p, q)
}

pub(crate) fn mismatch_norm(
    kinds: &[BusKind],
    p_spec: &[f64],
    q_spec: &[f64],
    p: &[f64],
    q: &[f64],
) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..kinds.len() {
        if kinds[i] != BusKind::Slack {
            worst = worst.max((p_spec[i] - p[i]).abs());
        }
        if kinds[i] == BusKind::Pq {
            worst = worst.max((q_spec[i] - q[i]).abs());
        }
    }
    if worst.is_nan() {
        f64::INFINITY
    } else {
        worst
    }
}

const MAX_Q_LIMIT_PASSES: usize = 10;
const Q_LIMIT_SLACK: f64 = 1e-7;

/// Runs one method with the PV→PQ outer loop.
fn solve_method(
    problem: &PowerFlowProblem,
    initial: &Voltages,
    settings: &PowerFlowSettings,
    method: Rung,
    enforce_q_limits: bool,
) -> (Option<PowerFlowResult>, Attempt) {
    let mut kinds = problem.kinds.clone();
    let mut q_spec = problem.q_spec.clone();
    let mut start = initial.clone();
    for i in 0..problem.len() {
        if kinds[i] != BusKind::Pq {
            start.vm[i] = problem.v_set[i];
        }
    }
    let mut attempt = Attempt {
        rung: method,
        converged: false,
        iterations: 0,
        mismatch: Vec::new(),
        note: String::new(),
    };
    for _pass in 0..=MAX_Q_LIMIT_PASSES {
        let inner = match method {
            Rung::FullNewton | Rung::RelaxedQLimits => newton::run(
                problem,
                &kinds,
                &q_spec,
                &start,
                settings.tolerance,
                settings.max_iterations,
                1.0,
            ),
            Rung::DampedNewton(m) => newton::run(
                problem,
                &kinds,
                &q_spec,
                &start,
                settings.tolerance,
                (settings.max_iterations as f64 / m).ceil() as usize,
                m,
            ),
            Rung::FastDecoupled => decoupled::run(
                problem,
                &kinds,
                &q_spec,
                &start,
                settings.tolerance,
                settings.max_iterations * 4,
            ),
        };
        attempt.iterations += inner.iterations;
        attempt.mismatch.extend(inner.mismatch.iter().copied());
        if !inner.converged {
            return (None, attempt);
        }
        let v = inner.voltages.complex();
        let (p, q) = injections(&problem.ybus, &v);
        let q_control: Vec<f64> = (0..problem.len()).map(|i| q[i] - problem.q_spec[i]).collect();

        let mut switched = false;
        if enforce_q_limits {
            for i in 0..problem.len() {
                if kinds[i] != BusKind::Pv {
                    continue;
                }
                if let Some((lo, hi)) = problem.q_limits[i] {
                    let limit = if q_control[i] > hi + Q_LIMIT_SLACK {
                        Some(hi)
                    } else if q_control[i] < lo - Q_LIMIT_SLACK {
                        Some(lo)
                    } else {
                        None
                    };
                    if let Some(limit) = limit {
                        kinds[i] = BusKind::Pq;
                        q_spec[i] = problem.q_spec[i] + limit;
                        switched = true;
                    }
                }
            }
        }
        if switched {
            start = inner.voltages;
            if !attempt.note.is_empty() {
                attempt.note.push(' ');
            }
            attempt.note.push_str("pv->pq");
            continue;
        }
        let max_mismatch = mismatch_norm(&kinds, &problem.p_spec, &q_spec, &p, &q);
        attempt.converged = true;
        let result = PowerFlowResult {
            converged: true,
            iterations: attempt.iterations,
            voltages: inner.voltages,
            max_mismatch,
            p_injection: p,
            q_injection: q,
            kinds,
            q_control,
            rung: method,
            trace: LadderTrace::default(),
        };
        return (Some(result), attempt);
    }
    attempt.note.push_str(" q-limit switching did not settle");
    (None, attempt)
}

/// Solves the problem with the method selected in `settings`.
pub fn solve(
    problem: &PowerFlowProblem,
    initial: &Voltages,
    settings: &PowerFlowSettings,
) -> Result<PowerFlowResult, PowerFlowError> {
    let method = match settings.mode {
        SolverMode::NewtonRaphson => Rung::FullNewton,
        SolverMode::FastDecoupled => Rung::FastDecoupled,
    };
    let (result, attempt) = solve_method(problem, initial, settings, method, settings.enforce_q_limits);
    let trace = LadderTrace {
        attempts: vec![attempt],
    };
    match result {
        Some(mut r) => {
            r.trace = trace;
            Ok(r)
        }
        None => Err(PowerFlowError::NonConvergence(trace)),
    }
}

/// Solves with the fallback ladder: full Newton, Newton with each damping
/// multiplier, fast-decoupled, then Newton with reactive limits relaxed
/// followed by a re-tightened solve from that point. Returns the first
/// success; the trace lists every attempt.
pub fn solve_with_fallbacks(
    problem: &PowerFlowProblem,
    initial: &Voltages,
    settings: &PowerFlowSettings,
) -> Result<PowerFlowResult, PowerFlowError> {
    let enforce = settings.enforce_q_limits;
    let mut trace = LadderTrace::default();

    let mut rungs = vec![Rung::FullNewton];
    rungs.extend(settings.damping_schedule.iter().map(|&m| Rung::DampedNewton(m)));
    rungs.push(Rung::FastDecoupled);
    for rung in rungs {
        let (result, attempt) = solve_method(problem, initial, settings, rung, enforce);
        trace.attempts.push(attempt);
        if let Some(mut r) = result {
            r.trace = trace;
            return Ok(r);
        }
    }

    let (relaxed, attempt) = solve_method(problem, initial, settings, Rung::RelaxedQLimits, false);
    trace.attempts.push(attempt);
    if let Some(relaxed) = relaxed {
        if !enforce {
            let mut r = relaxed;
            r.trace = trace;
            return Ok(r);
        }
        let (tight, mut attempt) =
            solve_method(problem, &relaxed.voltages, settings, Rung::RelaxedQLimits, true);
        attempt.note = format!("re-tightened {}", attempt.note).trim().to_string();
        trace.attempts.push(attempt);
        if let Some(mut r) = tight {
            r.trace = trace;
            return Ok(r);
        }
    }
    Err(PowerFlowError::NonConvergence(trace))
}
