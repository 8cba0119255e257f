use super::{agc_units, ActionKind, OperatorAction, OperatorContext, Stage};
use crate::error::OperatorError;
use crate::state::SystemState;

/// Residuals below this (MW) end the rebalancing iterations.
pub(crate) const BALANCE_EPS: f64 = 1e-6;
const MAX_BALANCE_ITERATIONS: usize = 20;

/// Splits `amount` MW over units in proportion to `headroom`, never giving
/// a unit more than `min(headroom, cap)`. Units that saturate drop out and
/// the rest is re-split among the others. Returns the shares and the part
/// that could not be placed.
pub fn allocate(amount: f64, headroom: &[f64], cap: &[f64]) -> (Vec<f64>, f64) {
    let n = headroom.len();
    let mut share = vec![0.0; n];
    let limit: Vec<f64> = (0..n).map(|k| headroom[k].min(cap[k]).max(0.0)).collect();
    let mut active: Vec<usize> = (0..n).filter(|&k| limit[k] > 0.0 && headroom[k] > 0.0).collect();
    let mut remaining = amount.max(0.0);
    while remaining > 0.0 && !active.is_empty() {
        let total: f64 = active.iter().map(|&k| headroom[k]).sum();
        let saturated: Vec<usize> = active
            .iter()
            .copied()
            .filter(|&k| remaining * headroom[k] / total >= limit[k])
            .collect();
        if saturated.is_empty() {
            for &k in &active {
                share[k] = remaining * headroom[k] / total;
            }
            remaining = 0.0;
        } else {
            for &k in &saturated {
                share[k] = limit[k];
                remaining -= limit[k];
            }
            active.retain(|k| !saturated.contains(k));
            remaining = remaining.max(0.0);
        }
    }
    (share, remaining)
}

/// Moves the swing residual onto the committed AGC units in proportion to
/// their regulating margin, within ramp limits measured from the start of
/// the step, re-solving until the residual vanishes or no unit can move.
/// Returns what is left for the corrective stages: positive for a
/// deficit, negative for a surplus, zero when within the threshold.
pub fn restore_balance(
    ctx: &OperatorContext,
    stage: Stage,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
) -> Result<f64, OperatorError> {
    let grid = ctx.grid;
    let initial = state.swing_residual;
    if initial.abs() <= ctx.thresholds.balance_threshold {
        return Ok(0.0);
    }
    let units = agc_units(grid, state);
    let before: f64 = units.iter().map(|&k| state.gen_p[k]).sum();
    let hours_min = ctx.resolution_min as f64;
    let mut moved = false;
    for _ in 0..MAX_BALANCE_ITERATIONS {
        let r = state.swing_residual;
        if r.abs() < BALANCE_EPS {
            break;
        }
        let up = r > 0.0;
        let mut headroom = Vec::with_capacity(units.len());
        let mut cap = Vec::with_capacity(units.len());
        for &k in &units {
            let g = &grid.generators[k];
            let p = state.gen_p[k];
            let start = if ctx.start_committed[k] { ctx.start_p[k] } else { g.p_min };
            if up {
                headroom.push(g.p_max - p);
                cap.push(start + g.ramp_up * hours_min - p);
            } else {
                headroom.push(p - g.p_min);
                cap.push(p - (start - g.ramp_down * hours_min));
            }
        }
        let (share, _) = allocate(r.abs(), &headroom, &cap);
        if share.iter().sum::<f64>() <= 1e-12 {
            break;
        }
        for (i, &k) in units.iter().enumerate() {
            let g = &grid.generators[k];
            let p = if up { state.gen_p[k] + share[i] } else { state.gen_p[k] - share[i] };
            state.gen_p[k] = p.clamp(g.p_min, g.p_max);
        }
        moved = true;
        ctx.solve(state)?;
    }
    if moved {
        let after: f64 = units.iter().map(|&k| state.gen_p[k]).sum();
        actions.push(ctx.action(
            stage,
            ActionKind::GenRedispatch,
            "agc",
            before,
            after,
            format!("swing residual {initial:+.3} MW"),
        ));
    }
    let r = state.swing_residual;
    Ok(if r.abs() > ctx.thresholds.balance_threshold { r } else { 0.0 })
}
