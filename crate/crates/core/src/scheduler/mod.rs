//! Weekly partitioning of the horizon, segment execution and merging.
//!
//! In parallel mode every segment starts from the same base case moved to
//! its first profile row, runs a short warm-in that is discarded, and then
//! records its range. In sequential mode each segment continues from the
//! last state of the one before it, which is the same as one long run.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::{FailureRecord, SegmentResult, Simulator, StepDiagnostics};
use crate::error::{EngineError, SchedulerError};
use crate::operator::OperatorAction;
use crate::state::SystemState;

pub const DEFAULT_WARM_IN: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    BaseCase,
    Chained,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    Parallel,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub index: usize,
    pub range: [usize; 2],
    pub initialization: Initialization,
    pub warm_in_steps: usize,
}

impl SegmentSpec {
    pub fn steps(&self) -> Range<usize> {
        self.range[0]..self.range[1]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunPlan {
    pub segments: Vec<SegmentSpec>,
    pub worker_count: usize,
    pub mode: RunMode,
}

impl RunPlan {
    pub fn new(horizon: Range<usize>, resolution_min: u32, mode: RunMode, worker_count: usize, warm_in: usize) -> Self {
        let init = match mode {
            RunMode::Parallel => Initialization::BaseCase,
            RunMode::Sequential => Initialization::Chained,
        };
        let mut segments = partition(horizon, resolution_min);
        for s in &mut segments {
            s.initialization = init;
            s.warm_in_steps = if init == Initialization::BaseCase { warm_in } else { 0 };
        }
        RunPlan {
            segments,
            worker_count: worker_count.max(1),
            mode,
        }
    }
}

/// Steps in one week at the given resolution.
pub fn week_steps(resolution_min: u32) -> usize {
    7 * 24 * 60 / resolution_min as usize
}

/// Seven-day segments covering `horizon`; a remainder shorter than a week
/// is added to the last segment.
pub fn partition(horizon: Range<usize>, resolution_min: u32) -> Vec<SegmentSpec> {
    let week = week_steps(resolution_min);
    let len = horizon.len();
    let count = (len / week).max(1);
    (0..count)
        .map(|k| {
            let start = horizon.start + k * week;
            let end = if k + 1 == count { horizon.end } else { start + week };
            SegmentSpec {
                index: k,
                range: [start, end],
                initialization: Initialization::Chained,
                warm_in_steps: 0,
            }
        })
        .filter(|s| s.range[0] < s.range[1])
        .collect()
}

/// Recorded results of a whole run in chronological order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnnualResultStore {
    pub states: Vec<SystemState>,
    pub actions: Vec<OperatorAction>,
    pub diagnostics: Vec<StepDiagnostics>,
    /// Ranges that were recorded, in order.
    pub ranges: Vec<[usize; 2]>,
    /// Step ranges with no recorded states because a segment stopped.
    pub gaps: Vec<[usize; 2]>,
    pub failures: Vec<FailureRecord>,
}

impl AnnualResultStore {
    pub fn from_segment(seg: SegmentResult) -> Self {
        let mut store = AnnualResultStore {
            ranges: vec![seg.range],
            ..Default::default()
        };
        if let Some(f) = &seg.failure {
            store.gaps.push([f.step, seg.range[1]]);
        }
        store.failures.extend(seg.failure);
        store.states = seg.states;
        store.actions = seg.actions;
        store.diagnostics = seg.diagnostics;
        store
    }

    /// Appends a later store; their ranges must not overlap.
    pub fn append(mut self, other: AnnualResultStore) -> Result<Self, SchedulerError> {
        if let (Some(a), Some(b)) = (self.ranges.last(), other.ranges.first()) {
            if b[0] < a[1] {
                return Err(SchedulerError::OverlapDetected(b[0]));
            }
        }
        self.states.extend(other.states);
        self.actions.extend(other.actions);
        self.diagnostics.extend(other.diagnostics);
        self.ranges.extend(other.ranges);
        self.gaps.extend(other.gaps);
        self.failures.extend(other.failures);
        Ok(self)
    }

    pub fn steps(&self) -> impl Iterator<Item = usize> + '_ {
        self.states.iter().map(|s| s.step)
    }

    pub fn state_at(&self, step: usize) -> Option<&SystemState> {
        self.states
            .binary_search_by_key(&step, |s| s.step)
            .ok()
            .map(|k| &self.states[k])
    }

    /// SHA-256 of the store's JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("store serializes");
        format!("{:x}", Sha256::digest(&bytes))
    }
}

/// Orders segment results by start step and concatenates them.
pub fn merge(mut parts: Vec<SegmentResult>) -> Result<AnnualResultStore, SchedulerError> {
    parts.sort_by_key(|p| p.range[0]);
    parts
        .into_iter()
        .map(AnnualResultStore::from_segment)
        .try_fold(AnnualResultStore::default(), |acc, s| acc.append(s))
}

fn trim_warm_in(mut seg: SegmentResult, start: usize) -> SegmentResult {
    seg.states.retain(|s| s.step >= start);
    seg.actions.retain(|a| a.step >= start);
    seg.diagnostics.retain(|d| d.step >= start);
    seg.range[0] = start;
    if let Some(f) = &seg.failure {
        if f.step < start {
            // the failure hit during warm-in: nothing of the range was reached
            seg.failure = Some(FailureRecord {
                step: start,
                ..f.clone()
            });
        }
    }
    seg
}

fn run_independent(sim: &Simulator, base: &SystemState, spec: &SegmentSpec) -> Result<SegmentResult, SchedulerError> {
    let fail = |source: EngineError| SchedulerError::SegmentFailure {
        index: spec.index,
        source,
    };
    let horizon = sim.horizon();
    let [t0, t1] = spec.range;
    let from_step = t0.saturating_sub(spec.warm_in_steps).max(horizon.start);
    match sim.retarget(base, from_step) {
        Ok(first) => {
            let seg = sim.run_segment_from(first, from_step..t1).map_err(fail)?;
            Ok(trim_warm_in(seg, t0))
        }
        Err(EngineError::StepFailure { step, sub_step, trace }) => Ok(SegmentResult {
            range: spec.range,
            states: Vec::new(),
            actions: Vec::new(),
            diagnostics: Vec::new(),
            failure: Some(FailureRecord {
                step: step.max(t0),
                sub_step,
                message: trace,
            }),
            final_state: None,
        }),
        Err(e) => Err(fail(e)),
    }
}

/// Runs every segment of the plan and merges the results. A segment that
/// hits a step failure keeps what it recorded and leaves a gap; later
/// segments still run (in sequential mode they restart from the base case).
pub fn execute(plan: &RunPlan, sim: &Simulator) -> Result<AnnualResultStore, SchedulerError> {
    let base = sim.base_case().map_err(|source| SchedulerError::SegmentFailure { index: 0, source })?;
    let parts = match plan.mode {
        RunMode::Parallel => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(plan.worker_count)
                .build()
                .map_err(|e| SchedulerError::SegmentFailure {
                    index: 0,
                    source: EngineError::Config(format!("worker pool: {e}")),
                })?;
            pool.install(|| {
                plan.segments
                    .par_iter()
                    .map(|spec| run_independent(sim, &base, spec))
                    .collect::<Result<Vec<_>, _>>()
            })?
        }
        RunMode::Sequential => {
            let mut parts = Vec::with_capacity(plan.segments.len());
            let mut last: Option<SystemState> = None;
            for spec in &plan.segments {
                let seg = match last.take() {
                    Some(prev) if prev.step + 1 == spec.range[0] => sim
                        .run_segment(&prev, spec.steps())
                        .map_err(|source| SchedulerError::SegmentFailure {
                            index: spec.index,
                            source,
                        })?,
                    _ => {
                        let restart = SegmentSpec {
                            warm_in_steps: 0,
                            ..spec.clone()
                        };
                        run_independent(sim, &base, &restart)?
                    }
                };
                if seg.failure.is_none() {
                    last = seg.final_state.clone();
                }
                parts.push(seg);
            }
            parts
        }
    };
    merge(parts)
}

#[cfg(test)]
mod tests;
