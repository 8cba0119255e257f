use std::collections::VecDeque;

use super::{ActionKind, FictitiousPass, OperatorAction, OperatorContext, Stage};
use crate::error::OperatorError;
use crate::network::{BusKind, GeneratorKind, Grid, VoltageClass};
use crate::powerflow::{check_security, solve_with_fallbacks, SecurityViolationKind};
use crate::state::{OperatorMemory, SystemState};

/// Cap on the shunt-step combinations examined at one bus.
const MAX_COMBINATIONS: usize = 4096;

fn shunts_at(grid: &Grid, bus: usize) -> Vec<usize> {
    let mut v: Vec<usize> = (0..grid.shunts.len()).filter(|&k| grid.shunt_bus(k) == bus).collect();
    v.sort_by(|&a, &b| grid.shunts[a].id.cmp(&grid.shunts[b].id));
    v
}

fn outside_limits(grid: &Grid, state: &SystemState, class: VoltageClass) -> Option<(String, f64)> {
    grid.buses
        .iter()
        .enumerate()
        .filter(|(_, b)| b.voltage_class == class)
        .filter_map(|(i, b)| {
            let v = state.vm[i];
            if v > b.v_max {
                Some((b.id.clone(), v - b.v_max))
            } else if v < b.v_min {
                Some((b.id.clone(), v - b.v_min))
            } else {
                None
            }
        })
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
}

fn set_shunt(ctx: &OperatorContext, state: &mut SystemState, actions: &mut Vec<OperatorAction>, k: usize, steps: u32, trigger: &str) {
    let before = state.settings.shunt_steps[k];
    if before == steps {
        return;
    }
    state.settings.shunt_steps[k] = steps;
    state.memory.shunts[k] = Some((ctx.step, if steps > before { 1 } else { -1 }));
    actions.push(ctx.action(
        Stage::Voltage,
        ActionKind::ShuntSwitch,
        &ctx.grid.shunts[k].id,
        before as f64,
        steps as f64,
        trigger.to_string(),
    ));
}

/// Best combination of steps for `banks` against `q_required` MVAr at
/// voltage `v`: smallest residual, then fewest banks changed, then bank
/// ids. `None` when nothing beats leaving the banks alone.
fn discretize(ctx: &OperatorContext, state: &SystemState, banks: &[usize], q_required: f64, v: f64) -> Option<(Vec<u32>, f64)> {
    let grid = ctx.grid;
    let cooldown = ctx.thresholds.switching_cooldown;
    let current: Vec<u32> = banks.iter().map(|&k| state.settings.shunt_steps[k]).collect();
    let options: Vec<Vec<u32>> = banks
        .iter()
        .map(|&k| {
            let now = state.settings.shunt_steps[k];
            (0..=grid.shunts[k].steps_total)
                .filter(|&s| {
                    s == now || {
                        let dir = if s > now { 1 } else { -1 };
                        !OperatorMemory::blocked(state.memory.shunts[k], ctx.step, dir, cooldown)
                    }
                })
                .collect()
        })
        .collect();
    let count: usize = options.iter().map(Vec::len).product();
    if count > MAX_COMBINATIONS || count == 0 {
        return None;
    }
    let mut best: Option<(f64, usize, Vec<u32>, f64)> = None;
    let mut idx = vec![0usize; banks.len()];
    for _ in 0..count {
        let combo: Vec<u32> = idx.iter().enumerate().map(|(j, &i)| options[j][i]).collect();
        let delivered: f64 = banks
            .iter()
            .zip(&combo)
            .zip(&current)
            .map(|((&k, &s), &c)| (grid.shunts[k].mvar_at(s) - grid.shunts[k].mvar_at(c)) * v * v)
            .sum();
        let residual = (q_required - delivered).abs();
        let changed = combo.iter().zip(&current).filter(|(a, b)| a != b).count();
        // combos are visited in bank-id order, so the first of equals wins the id tie-break
        let better = match &best {
            None => true,
            Some((r, c, _, _)) => residual < r - 1e-9 || ((residual - r).abs() <= 1e-9 && changed < *c),
        };
        if better {
            best = Some((residual, changed, combo, delivered));
        }
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < options[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
    let (residual, changed, combo, delivered) = best?;
    if changed == 0 || residual >= q_required.abs() - 1e-9 {
        return None;
    }
    Some((combo, delivered))
}

/// 25 kV voltage control. Each low-voltage bus outside its deadband gets
/// a temporary fictitious generator holding the target; the reactive
/// power it supplies is matched by the closest combination of local shunt
/// steps, then the supplying transformer's tap is stepped until the bus
/// is inside the transformer deadband or the tap range ends.
pub fn control_voltage_low(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    passes: &mut Vec<FictitiousPass>,
) -> Result<(), OperatorError> {
    let grid = ctx.grid;
    let t = ctx.thresholds;
    let base = grid.base_mva();
    for _ in 0..t.max_voltage_passes {
        let mut violated: Vec<(usize, f64)> = (0..grid.bus_count())
            .filter(|&i| grid.buses[i].voltage_class == VoltageClass::Low)
            .map(|i| (i, state.vm[i] - state.control_target(grid, i, t.voltage_reduction_block)))
            .filter(|(_, d)| d.abs() > t.deadband_low)
            .collect();
        if violated.is_empty() {
            break;
        }
        violated.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        let mut acted = false;
        for (i, _) in violated {
            let target = state.control_target(grid, i, t.voltage_reduction_block);
            let dev = state.vm[i] - target;
            if dev.abs() <= t.deadband_low {
                continue;
            }
            let bus_id = grid.buses[i].id.clone();
            let trigger = format!("{bus_id} at {:.4} pu, target {target:.4}", state.vm[i]);

            let mut problem = state.problem(grid)?;
            problem.add_fictitious_generator(i, target);
            if let Ok(held) = solve_with_fallbacks(&problem, &state.voltages(), ctx.powerflow) {
                let q_required = held.q_control[i] * base;
                let banks = shunts_at(grid, i);
                let mut q_delivered = 0.0;
                if let Some((combo, delivered)) = discretize(ctx, state, &banks, q_required, target) {
                    for (&k, &s) in banks.iter().zip(&combo) {
                        set_shunt(ctx, state, actions, k, s, &trigger);
                    }
                    q_delivered = delivered;
                    ctx.solve(state)?;
                    acted = true;
                }
                passes.push(FictitiousPass {
                    step: ctx.step,
                    sub_step: ctx.sub_step,
                    bus: bus_id.clone(),
                    held_voltage: target,
                    q_required,
                    q_delivered,
                    residual: q_required - q_delivered,
                });
            }

            for tr in 0..grid.transformers.len() {
                if grid.transformer_regulated(tr) != Some(i) {
                    continue;
                }
                let x = &grid.transformers[tr];
                let (lo, hi) = x.position_range();
                let to_side = grid.transformer_ends(tr).1 == i;
                loop {
                    let dev = state.vm[i] - target;
                    if dev.abs() <= x.deadband {
                        break;
                    }
                    // a higher ratio on the from side lowers the to-side voltage
                    let raise = dev < 0.0;
                    let dir = if raise == to_side { -1 } else { 1 };
                    let pos = state.settings.tap_positions[tr];
                    let next = pos + dir;
                    if next < lo || next > hi {
                        break;
                    }
                    let saved = state.clone();
                    state.settings.tap_positions[tr] = next;
                    if ctx.solve(state).is_err() || (state.vm[i] - target).abs() >= dev.abs() {
                        *state = saved;
                        break;
                    }
                    actions.push(ctx.action(Stage::Voltage, ActionKind::TapStep, &x.id, pos as f64, next as f64, trigger.clone()));
                    acted = true;
                }
            }
        }
        if !acted {
            break;
        }
    }
    match outside_limits(grid, state, VoltageClass::Low) {
        Some((bus, residual)) => Err(OperatorError::UnresolvedVoltage { bus, residual }),
        None => Ok(()),
    }
}

/// End-of-step settling for the taps in `moved`: each one keeps stepping
/// while that strictly brings its regulated bus nearer its target. Inside
/// the deadband a tap otherwise stops wherever the order of earlier moves
/// left it, so the accepted state would depend on how the step was split.
pub fn settle_taps(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    moved: &[usize],
) -> Result<(), OperatorError> {
    let grid = ctx.grid;
    let limits_ok = |s: &SystemState| {
        outside_limits(grid, s, VoltageClass::Low).is_none() && outside_limits(grid, s, VoltageClass::High).is_none()
    };
    for _ in 0..ctx.thresholds.max_voltage_passes {
        let mut acted = false;
        for &tr in moved {
            let Some(i) = grid.transformer_regulated(tr) else {
                continue;
            };
            let x = &grid.transformers[tr];
            let (lo, hi) = x.position_range();
            let target = state.control_target(grid, i, ctx.thresholds.voltage_reduction_block);
            for dir in [-1, 1] {
                let pos = state.settings.tap_positions[tr];
                let next = pos + dir;
                if next < lo || next > hi {
                    continue;
                }
                let dev = (state.vm[i] - target).abs();
                let was_ok = limits_ok(state);
                let saved = state.clone();
                state.settings.tap_positions[tr] = next;
                let better = ctx.solve(state).is_ok()
                    && (state.vm[i] - target).abs() < dev - SETTLE_MARGIN
                    && (limits_ok(state) || !was_ok);
                if !better {
                    *state = saved;
                    continue;
                }
                let trigger = format!("{} settling at {:.4} pu, target {target:.4}", grid.buses[i].id, state.vm[i]);
                actions.push(ctx.action(Stage::Voltage, ActionKind::TapStep, &x.id, pos as f64, next as f64, trigger));
                acted = true;
                break;
            }
        }
        if !acted {
            break;
        }
    }
    Ok(())
}

/// Improvement a settling move must make, pu; keeps solver noise from
/// flipping a tap back and forth.
const SETTLE_MARGIN: f64 = 1e-6;

/// Buses hosting a committed compensator that holds their voltage, nearest
/// (in hops over in-service elements) to `from` first.
fn compensators_by_distance(grid: &Grid, state: &SystemState, from: usize) -> Vec<usize> {
    let n = grid.bus_count();
    let mut adj = vec![Vec::new(); n];
    for (k, &(f, t)) in grid.branch_ends.iter().enumerate() {
        if state.settings.branch_in_service[k] {
            adj[f].push(t);
            adj[t].push(f);
        }
    }
    for &(f, t) in &grid.transformer_ends {
        adj[f].push(t);
        adj[t].push(f);
    }
    let mut dist = vec![usize::MAX; n];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut buses: Vec<usize> = grid
        .generators
        .iter()
        .enumerate()
        .filter(|(k, g)| g.kind == GeneratorKind::Compensator && state.committed[*k])
        .map(|(k, _)| grid.generator_bus(k))
        .filter(|&b| grid.buses[b].kind == BusKind::Pv && dist[b] != usize::MAX)
        .collect();
    buses.sort_by_key(|&b| (dist[b], b));
    buses.dedup();
    buses
}

enum Outcome {
    Acted,
    Nothing,
}

/// EHV voltage and thermal control along the operator's remedy ladders.
///
/// Overvoltage: switch a capacitor out or a reactor in, then open an
/// adjacent switchable line if the network still carries its transfers
/// securely, then lower the nearest compensator set point. Undervoltage
/// and overloads: reclose an adjacent switchable line, then switch a
/// capacitor in or a reactor out, then raise a compensator set point.
/// Devices switched within the cooldown are skipped in favour of the next
/// remedy.
pub fn control_voltage_high(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
) -> Result<(), OperatorError> {
    let grid = ctx.grid;
    let t = ctx.thresholds;
    let budget = 4 * t.max_voltage_passes * grid.bus_count().max(1);
    for _ in 0..budget {
        let mut problems: Vec<(usize, f64)> = (0..grid.bus_count())
            .filter(|&i| grid.buses[i].voltage_class == VoltageClass::High)
            .map(|i| (i, state.vm[i] - state.v_set[i]))
            .filter(|(_, d)| d.abs() > t.deadband_high)
            .collect();
        problems.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        let overloaded: Vec<usize> = check_security(grid, &state.settings, &state.voltages(), &state.gen_q, &state.committed)
            .into_iter()
            .filter(|v| v.kind == SecurityViolationKind::Thermal)
            .filter_map(|v| element_ends(grid, &v.element))
            .flat_map(|(f, t)| [f, t])
            .collect();

        let mut acted = false;
        for &(i, dev) in &problems {
            let trigger = format!("{} at {:.4} pu, set point {:.4}", grid.buses[i].id, state.vm[i], state.v_set[i]);
            let outcome = if dev > 0.0 {
                overvoltage(ctx, state, actions, i, dev, &trigger)?
            } else {
                undervoltage(ctx, state, actions, i, &trigger)?
            };
            if let Outcome::Acted = outcome {
                acted = true;
                break;
            }
        }
        if !acted {
            for &i in &overloaded {
                let trigger = format!("overload next to {}", grid.buses[i].id);
                if let Outcome::Acted = reconnect_adjacent(ctx, state, actions, i, &trigger)? {
                    acted = true;
                    break;
                }
            }
        }
        if !acted {
            break;
        }
    }
    match outside_limits(grid, state, VoltageClass::High) {
        Some((bus, residual)) => Err(OperatorError::UnresolvedVoltage { bus, residual }),
        None => Ok(()),
    }
}

fn element_ends(grid: &Grid, id: &str) -> Option<(usize, usize)> {
    if let Some(k) = grid.branches.iter().position(|b| b.id == id) {
        return Some(grid.branch_ends(k));
    }
    grid.transformers.iter().position(|x| x.id == id).map(|k| grid.transformer_ends(k))
}

fn shunt_step(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    bus: usize,
    raise: bool,
    trigger: &str,
) -> Result<Outcome, OperatorError> {
    use crate::network::ShuntKind::*;
    let grid = ctx.grid;
    let cooldown = ctx.thresholds.switching_cooldown;
    let banks = shunts_at(grid, bus);
    // raising voltage: capacitor in (+1) or reactor out (-1); lowering: the reverse
    let order = if raise { [(Capacitor, 1i8), (Reactor, -1)] } else { [(Capacitor, -1), (Reactor, 1)] };
    for (kind, dir) in order {
        for &k in &banks {
            let s = &grid.shunts[k];
            let now = state.settings.shunt_steps[k];
            let possible = if dir > 0 { now < s.steps_total } else { now > 0 };
            if s.kind != kind || !possible || OperatorMemory::blocked(state.memory.shunts[k], ctx.step, dir, cooldown) {
                continue;
            }
            let next = if dir > 0 { now + 1 } else { now - 1 };
            let saved = state.clone();
            set_shunt(ctx, state, actions, k, next, trigger);
            if ctx.solve(state).is_err() {
                actions.pop();
                *state = saved;
                continue;
            }
            return Ok(Outcome::Acted);
        }
    }
    Ok(Outcome::Nothing)
}

fn reconnect_adjacent(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    bus: usize,
    trigger: &str,
) -> Result<Outcome, OperatorError> {
    let grid = ctx.grid;
    let cooldown = ctx.thresholds.switching_cooldown;
    for k in 0..grid.branches.len() {
        let (f, t) = grid.branch_ends(k);
        if (f != bus && t != bus)
            || !grid.branches[k].switchable
            || state.settings.branch_in_service[k]
            || OperatorMemory::blocked(state.memory.branches[k], ctx.step, 1, cooldown)
        {
            continue;
        }
        let saved = state.clone();
        state.settings.branch_in_service[k] = true;
        if ctx.solve(state).is_err() {
            *state = saved;
            continue;
        }
        state.memory.branches[k] = Some((ctx.step, 1));
        actions.push(ctx.action(Stage::Voltage, ActionKind::LineReconnect, &grid.branches[k].id, 0.0, 1.0, trigger.to_string()));
        return Ok(Outcome::Acted);
    }
    Ok(Outcome::Nothing)
}

fn move_setpoint(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    bus: usize,
    raise: bool,
    trigger: &str,
) -> Result<Outcome, OperatorError> {
    let grid = ctx.grid;
    let t = ctx.thresholds;
    for j in compensators_by_distance(grid, state, bus) {
        let target = grid.buses[j].voltage_target.unwrap_or(1.0);
        let now = state.v_set[j];
        let next = if raise { now + t.setpoint_step } else { now - t.setpoint_step };
        let next = (next * 1e6).round() / 1e6;
        if (next - target).abs() > t.setpoint_range + 1e-9 || next > grid.buses[j].v_max || next < grid.buses[j].v_min {
            continue;
        }
        let saved = state.clone();
        state.v_set[j] = next;
        if ctx.solve(state).is_err() {
            *state = saved;
            continue;
        }
        actions.push(ctx.action(Stage::Voltage, ActionKind::CompensatorSetpoint, &grid.buses[j].id, now, next, trigger.to_string()));
        return Ok(Outcome::Acted);
    }
    Ok(Outcome::Nothing)
}

fn overvoltage(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    bus: usize,
    dev: f64,
    trigger: &str,
) -> Result<Outcome, OperatorError> {
    if let Outcome::Acted = shunt_step(ctx, state, actions, bus, false, trigger)? {
        return Ok(Outcome::Acted);
    }
    let grid = ctx.grid;
    let cooldown = ctx.thresholds.switching_cooldown;
    for k in 0..grid.branches.len() {
        let (f, t) = grid.branch_ends(k);
        if (f != bus && t != bus)
            || !grid.branches[k].switchable
            || !state.settings.branch_in_service[k]
            || OperatorMemory::blocked(state.memory.branches[k], ctx.step, -1, cooldown)
        {
            continue;
        }
        let saved = state.clone();
        state.settings.branch_in_service[k] = false;
        let secure = grid.check_connected(&state.settings).is_ok()
            && ctx.solve(state).is_ok()
            && (state.vm[bus] - state.v_set[bus]) < dev
            && check_security(grid, &state.settings, &state.voltages(), &state.gen_q, &state.committed)
                .iter()
                .all(|v| !matches!(v.kind, SecurityViolationKind::Thermal | SecurityViolationKind::Undervoltage));
        if !secure {
            *state = saved;
            continue;
        }
        state.memory.branches[k] = Some((ctx.step, -1));
        actions.push(ctx.action(Stage::Voltage, ActionKind::LineDisconnect, &grid.branches[k].id, 1.0, 0.0, trigger.to_string()));
        return Ok(Outcome::Acted);
    }
    move_setpoint(ctx, state, actions, bus, false, trigger)
}

fn undervoltage(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    bus: usize,
    trigger: &str,
) -> Result<Outcome, OperatorError> {
    if let Outcome::Acted = reconnect_adjacent(ctx, state, actions, bus, trigger)? {
        return Ok(Outcome::Acted);
    }
    if let Outcome::Acted = shunt_step(ctx, state, actions, bus, true, trigger)? {
        return Ok(Outcome::Acted);
    }
    move_setpoint(ctx, state, actions, bus, true, trigger)
}
