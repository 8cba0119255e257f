use super::{agc_reserve, agc_units, ActionKind, OperatorAction, OperatorContext, Stage};
use crate::error::OperatorError;
use crate::network::{BusKind, Grid};
use crate::state::{OperatorMemory, SystemState};

/// Puts every committed AGC unit at the same fraction of its range while
/// keeping their total output, as far as the ranges allow.
pub fn equalize(grid: &Grid, state: &mut SystemState) {
    let units = agc_units(grid, state);
    let total: f64 = units.iter().map(|&k| state.gen_p[k]).sum();
    let floor: f64 = units.iter().map(|&k| grid.generators[k].p_min).sum();
    let span: f64 = units.iter().map(|&k| grid.generators[k].p_max - grid.generators[k].p_min).sum();
    if span <= 0.0 {
        return;
    }
    let f = ((total - floor) / span).clamp(0.0, 1.0);
    for k in units {
        let g = &grid.generators[k];
        state.gen_p[k] = g.p_min + f * (g.p_max - g.p_min);
    }
}

/// Next idle dispatchable unit in start-up order whose start would not
/// reverse a recent stop.
pub(crate) fn next_to_start(ctx: &OperatorContext, state: &SystemState) -> Option<usize> {
    let grid = ctx.grid;
    let cooldown = ctx.thresholds.switching_cooldown;
    grid.generators
        .iter()
        .enumerate()
        .filter(|(k, g)| {
            g.is_dispatchable()
                && !state.committed[*k]
                && !OperatorMemory::blocked(state.memory.generators[*k], ctx.step, 1, cooldown)
        })
        .min_by_key(|(k, g)| (g.startup_priority, *k))
        .map(|(k, _)| k)
}

/// Commits unit `k` at its minimum output and evens out the fleet.
pub(crate) fn start_unit(
    ctx: &OperatorContext,
    stage: Stage,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
    k: usize,
    trigger: String,
) -> Result<(), OperatorError> {
    let g = &ctx.grid.generators[k];
    state.committed[k] = true;
    state.gen_p[k] = g.p_min;
    state.memory.generators[k] = Some((ctx.step, 1));
    actions.push(ctx.action(stage, ActionKind::GenStart, &g.id, 0.0, g.p_min, trigger));
    equalize(ctx.grid, state);
    ctx.solve(state)?;
    Ok(())
}

/// Keeps every committed unit within `dguoo_band` of its optimal dispatch
/// (boundary included). Above the band the next unit in start-up order is
/// committed; below it the last-started unit that may be stopped is
/// decommitted. Output is then spread evenly over the fleet. Returns true
/// when a unit is still outside the band with no option left.
pub fn enforce_dguoo(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
) -> Result<bool, OperatorError> {
    let grid = ctx.grid;
    let band = ctx.thresholds.dguoo_band;
    for _ in 0..grid.generators.len() {
        let deviation = |state: &SystemState, k: usize| state.gen_p[k] - grid.generators[k].optimal_dispatch;
        let online: Vec<usize> = (0..grid.generators.len())
            .filter(|&k| grid.generators[k].is_dispatchable() && state.committed[k])
            .collect();
        let above = online.iter().copied().filter(|&k| deviation(state, k) > band).max_by(|&a, &b| {
            deviation(state, a).total_cmp(&deviation(state, b)).then(b.cmp(&a))
        });
        let below = online.iter().copied().filter(|&k| deviation(state, k) < -band).min_by(|&a, &b| {
            deviation(state, a).total_cmp(&deviation(state, b)).then(a.cmp(&b))
        });
        if let Some(worst) = above {
            let Some(k) = next_to_start(ctx, state) else {
                return Ok(true);
            };
            let trigger = format!(
                "{} {:+.1} MW from optimum, band ±{band}",
                grid.generators[worst].id,
                deviation(state, worst)
            );
            start_unit(ctx, Stage::Dguoo, state, actions, k, trigger)?;
        } else if let Some(worst) = below {
            let Some(k) = next_to_stop(ctx, state) else {
                return Ok(true);
            };
            let trigger = format!(
                "{} {:+.1} MW from optimum, band ±{band}",
                grid.generators[worst].id,
                deviation(state, worst)
            );
            let g = &grid.generators[k];
            let before = state.gen_p[k];
            let total: f64 = agc_units(grid, state).iter().map(|&u| state.gen_p[u]).sum();
            state.committed[k] = false;
            state.gen_p[k] = 0.0;
            state.memory.generators[k] = Some((ctx.step, -1));
            let rest = agc_units(grid, state);
            if let Some(&first) = rest.first() {
                // hand the stopped unit's output to the others before evening out
                state.gen_p[first] += total - rest.iter().map(|&u| state.gen_p[u]).sum::<f64>();
            }
            equalize(grid, state);
            actions.push(ctx.action(Stage::Dguoo, ActionKind::GenStop, &g.id, before, 0.0, trigger));
            ctx.solve(state)?;
        } else {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Online unit with the latest start-up order that may be stopped: not the
/// last regulating unit at a voltage-controlled bus, not recently started,
/// and not needed to keep the AGC reserve at its minimum.
fn next_to_stop(ctx: &OperatorContext, state: &SystemState) -> Option<usize> {
    let grid = ctx.grid;
    let cooldown = ctx.thresholds.switching_cooldown;
    let reserve = agc_reserve(state, grid);
    grid.generators
        .iter()
        .enumerate()
        .filter(|(k, g)| {
            if !g.is_dispatchable() || !state.committed[*k] {
                return false;
            }
            if OperatorMemory::blocked(state.memory.generators[*k], ctx.step, -1, cooldown) {
                return false;
            }
            let bus = grid.generator_bus(*k);
            if grid.buses[bus].kind != BusKind::Pq {
                let others = grid
                    .generators
                    .iter()
                    .enumerate()
                    .any(|(j, h)| j != *k && state.committed[j] && h.regulates_voltage() && grid.generator_bus(j) == bus);
                if !others {
                    return false;
                }
            }
            let lost = if g.agc_participant { g.p_max - state.gen_p[*k] } else { 0.0 };
            // the stopped output moves onto the others' headroom as well
            reserve - lost - state.gen_p[*k] >= ctx.thresholds.agc_reserve_min
        })
        .max_by_key(|(k, g)| (g.startup_priority, *k))
        .map(|(k, _)| k)
}
