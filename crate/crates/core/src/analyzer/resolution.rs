use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{losses, MetricWindow};
use crate::engine::{EngineConfig, Simulator};
use crate::error::{EngineError, SchedulerError};
use crate::ess::LimitTable;
use crate::network::Grid;
use crate::profiles::TimeSeriesDataset;
use crate::scheduler::{execute, RunMode, RunPlan, DEFAULT_WARM_IN};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionRow {
    pub resolution_min: u32,
    pub steps: usize,
    pub runtime_s: f64,
    pub loss_mean_mw: f64,
    pub loss_max_mw: f64,
    pub loss_energy_mwh: f64,
    /// Steps that did not get recorded because a segment failed.
    pub failed_segments: usize,
}

/// Runs the whole dataset at each resolution and tabulates wall time and
/// losses. Profiles are resampled from `profiles`; storage limits come from
/// `profiles` at its own resolution so every run uses the same bands.
pub fn resolution_study(
    grid: &Grid,
    profiles: &TimeSeriesDataset,
    base: &EngineConfig,
    resolutions: &[u32],
    mode: RunMode,
    workers: usize,
    limits: Option<LimitTable>,
) -> Result<Vec<ResolutionRow>, SchedulerError> {
    let cfg_err = |m: String| SchedulerError::SegmentFailure {
        index: 0,
        source: EngineError::Config(m),
    };
    let limits = match limits {
        Some(l) => Some(l),
        None if base.ess.enabled && !grid.ess.is_empty() => {
            let mut fine = base.clone();
            fine.resolution_min = profiles.resolution_min;
            fine.horizon = None;
            let sim = Simulator::new(grid, profiles, &fine, None).map_err(|source| SchedulerError::SegmentFailure {
                index: 0,
                source,
            })?;
            sim.storage.map(|s| s.limits)
        }
        None => None,
    };
    let mut rows = Vec::with_capacity(resolutions.len());
    for &res in resolutions {
        if res == 0 || 60 % res != 0 {
            return Err(cfg_err(format!("resolution of {res} min does not divide 60")));
        }
        let data = profiles.resample(res).map_err(cfg_err)?;
        let mut config = base.clone();
        config.resolution_min = res;
        config.horizon = None;
        let clock = Instant::now();
        let sim = Simulator::new(grid, &data, &config, limits.clone())
            .map_err(|source| SchedulerError::SegmentFailure { index: 0, source })?;
        let plan = RunPlan::new(sim.horizon(), res, mode, workers, DEFAULT_WARM_IN);
        let store = execute(&plan, &sim)?;
        let runtime_s = clock.elapsed().as_secs_f64();
        let l = losses(&store, grid, &MetricWindow::All);
        rows.push(ResolutionRow {
            resolution_min: res,
            steps: store.states.len(),
            runtime_s,
            loss_mean_mw: l.mean,
            loss_max_mw: l.max,
            loss_energy_mwh: l.energy_mwh(res),
            failed_segments: store.failures.len(),
        });
    }
    Ok(rows)
}
