use super::balance::restore_balance;
use super::commitment::{next_to_start, start_unit};
use super::{agc_reserve, ActionKind, OperatorAction, OperatorContext, Stage};
use crate::error::OperatorError;
use crate::network::{DemandKind, IntertieDirection};
use crate::state::SystemState;

const EPS: f64 = 1e-6;

fn shortfall(ctx: &OperatorContext, state: &SystemState) -> f64 {
    let t = ctx.thresholds;
    let reserve_gap = (t.agc_reserve_min - agc_reserve(state, ctx.grid)).max(0.0);
    let deficit = if state.swing_residual > t.balance_threshold {
        state.swing_residual
    } else {
        0.0
    };
    reserve_gap + deficit
}

fn settle(
    ctx: &OperatorContext,
    stage: Stage,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
) -> Result<(), OperatorError> {
    ctx.solve(state)?;
    restore_balance(ctx, stage, state, actions)?;
    Ok(())
}

/// Restores the AGC reserve (and covers any deficit the balance stage
/// could not place) with, in order: unit start-ups, one voltage-reduction
/// block, interruptible demand, and intertie schedule changes. Stops at
/// the first stage that closes the gap; each action is followed by a
/// solve and a rebalance. What cannot be closed is returned as
/// [`OperatorError::ReserveShortfall`].
pub fn corrective_hierarchy(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
) -> Result<(), OperatorError> {
    let grid = ctx.grid;
    if shortfall(ctx, state) <= EPS {
        return Ok(());
    }

    while shortfall(ctx, state) > EPS {
        let Some(k) = next_to_start(ctx, state) else { break };
        let trigger = format!("reserve short by {:.1} MW", shortfall(ctx, state));
        start_unit(ctx, Stage::Reserve, state, actions, k, trigger)?;
        restore_balance(ctx, Stage::Reserve, state, actions)?;
    }
    if shortfall(ctx, state) <= EPS {
        return Ok(());
    }

    if !state.voltage_reduction {
        let blocks: Vec<usize> = (0..grid.demand_resources.len())
            .filter(|&d| grid.demand_resources[d].kind == DemandKind::VoltageReductionBlock && !state.demand[d].is_active())
            .collect();
        if !blocks.is_empty() {
            let trigger = format!(
                "reserve short by {:.1} MW; targets -{} pu",
                shortfall(ctx, state),
                ctx.thresholds.voltage_reduction_block
            );
            state.voltage_reduction = true;
            for d in blocks {
                let r = &grid.demand_resources[d];
                state.demand[d].requested_at = Some(ctx.step);
                state.demand[d].active_since = Some(ctx.step);
                state.demand[d].relief = r.capacity;
                actions.push(ctx.action(Stage::Reserve, ActionKind::VoltageReduction, &r.id, 0.0, r.capacity, trigger.clone()));
            }
            settle(ctx, Stage::Reserve, state, actions)?;
            if shortfall(ctx, state) <= EPS {
                return Ok(());
            }
        }
    }

    for d in 0..grid.demand_resources.len() {
        let r = &grid.demand_resources[d];
        let s = state.demand[d];
        if r.kind != DemandKind::InterruptibleDemand || s.requested_at.is_some() || s.is_active() {
            continue;
        }
        if shortfall(ctx, state) <= EPS {
            return Ok(());
        }
        let trigger = format!(
            "reserve short by {:.1} MW; relief from step {}",
            shortfall(ctx, state),
            ctx.step + r.activation_delay as usize
        );
        state.demand[d].requested_at = Some(ctx.step);
        if r.activation_delay == 0 {
            state.demand[d].active_since = Some(ctx.step);
            state.demand[d].relief = r.capacity;
        }
        actions.push(ctx.action(Stage::Reserve, ActionKind::DemandActivation, &r.id, 0.0, r.capacity, trigger));
        settle(ctx, Stage::Reserve, state, actions)?;
    }
    if shortfall(ctx, state) <= EPS {
        return Ok(());
    }

    for k in 0..grid.interties.len() {
        let need = shortfall(ctx, state);
        if need <= EPS {
            return Ok(());
        }
        let it = &grid.interties[k];
        let x = state.intertie[k];
        let after = match it.direction {
            IntertieDirection::Import => (x + need).min(it.schedule_limit_max),
            IntertieDirection::Export => (x - need).max(it.schedule_limit_min),
        };
        if (after - x).abs() <= EPS {
            continue;
        }
        state.intertie[k] = after;
        actions.push(ctx.action(
            Stage::Reserve,
            ActionKind::IntertieAdjust,
            &it.id,
            x,
            after,
            format!("reserve short by {need:.1} MW"),
        ));
        settle(ctx, Stage::Reserve, state, actions)?;
    }
    let left = shortfall(ctx, state);
    if left > EPS {
        Err(OperatorError::ReserveShortfall(left))
    } else {
        Ok(())
    }
}

/// Absorbs a generation surplus the units could not take by lowering
/// imports and raising exports within their limits. Logged as part of the
/// balance stage. Returns the surplus
/// still left, MW.
pub fn relieve_surplus(
    ctx: &OperatorContext,
    state: &mut SystemState,
    actions: &mut Vec<OperatorAction>,
) -> Result<f64, OperatorError> {
    let grid = ctx.grid;
    let threshold = ctx.thresholds.balance_threshold;
    for k in 0..grid.interties.len() {
        let surplus = -state.swing_residual;
        if surplus <= threshold {
            break;
        }
        let it = &grid.interties[k];
        let x = state.intertie[k];
        let after = match it.direction {
            IntertieDirection::Import => (x - surplus).max(it.schedule_limit_min),
            IntertieDirection::Export => (x + surplus).min(it.schedule_limit_max),
        };
        if (after - x).abs() <= EPS {
            continue;
        }
        state.intertie[k] = after;
        actions.push(ctx.action(
            Stage::Balance,
            ActionKind::IntertieAdjust,
            &it.id,
            x,
            after,
            format!("surplus of {surplus:.1} MW"),
        ));
        settle(ctx, Stage::Balance, state, actions)?;
    }
    let surplus = -state.swing_residual;
    Ok(if surplus > threshold { surplus } else { 0.0 })
}
