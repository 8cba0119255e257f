use std::collections::HashMap;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use super::{validate, BusKind, NetworkModel};
use crate::error::ModelError;

/// Discrete device states that change the admittance matrix.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeviceSettings {
    pub branch_in_service: Vec<bool>,
    pub tap_positions: Vec<i32>,
    pub shunt_steps: Vec<u32>,
}

/// A validated network with every cross-reference resolved to an index.
///
/// Immutable once built; share it across segment workers by reference or
/// behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Grid {
    model: NetworkModel,
    bus_index: HashMap<String, usize>,
    slack: usize,
    pub(crate) branch_ends: Vec<(usize, usize)>,
    pub(crate) transformer_ends: Vec<(usize, usize)>,
    pub(crate) transformer_regulated: Vec<Option<usize>>,
    pub(crate) shunt_bus: Vec<usize>,
    pub(crate) generator_bus: Vec<usize>,
    pub(crate) load_bus: Vec<usize>,
    pub(crate) ess_bus: Vec<usize>,
    pub(crate) intertie_bus: Vec<usize>,
    pub(crate) demand_bus: Vec<usize>,
}

impl Deref for Grid {
    type Target = NetworkModel;

    fn deref(&self) -> &NetworkModel {
        &self.model
    }
}

impl Grid {
    /// Validates `model` and resolves its references.
    ///
    /// The simulator supports one synchronous system, so exactly one slack
    /// bus is required.
    pub fn new(model: NetworkModel) -> Result<Grid, ModelError> {
        let report = validate(&model);
        if !report.is_empty() {
            return Err(ModelError::Invalid(report));
        }
        let bus_index: HashMap<String, usize> = model
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| (b.id.clone(), i))
            .collect();
        let slacks: Vec<usize> = model
            .buses
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BusKind::Slack)
            .map(|(i, _)| i)
            .collect();
        if slacks.len() != 1 {
            let names = model.buses.iter().map(|b| b.id.clone()).collect();
            return Err(ModelError::IslandWithoutSlack(names));
        }
        let idx = |id: &str| bus_index[id];
        let grid = Grid {
            slack: slacks[0],
            branch_ends: model.branches.iter().map(|b| (idx(&b.from_bus), idx(&b.to_bus))).collect(),
            transformer_ends: model
                .transformers
                .iter()
                .map(|t| (idx(&t.from_bus), idx(&t.to_bus)))
                .collect(),
            transformer_regulated: model
                .transformers
                .iter()
                .map(|t| t.regulated_bus.as_deref().map(idx))
                .collect(),
            shunt_bus: model.shunts.iter().map(|s| idx(&s.bus)).collect(),
            generator_bus: model.generators.iter().map(|g| idx(&g.bus)).collect(),
            load_bus: model.loads.iter().map(|l| idx(&l.bus)).collect(),
            ess_bus: model.ess.iter().map(|e| idx(&e.bus)).collect(),
            intertie_bus: model.interties.iter().map(|t| idx(&t.bus)).collect(),
            demand_bus: model.demand_resources.iter().map(|d| idx(&d.bus)).collect(),
            bus_index,
            model,
        };
        Ok(grid)
    }

    pub fn model(&self) -> &NetworkModel {
        &self.model
    }

    pub fn bus_count(&self) -> usize {
        self.model.buses.len()
    }

    pub fn bus(&self, id: &str) -> Option<usize> {
        self.bus_index.get(id).copied()
    }

    pub fn slack(&self) -> usize {
        self.slack
    }

    pub fn base_mva(&self) -> f64 {
        self.model.system_base_mva
    }

    pub fn branch_ends(&self, i: usize) -> (usize, usize) {
        self.branch_ends[i]
    }

    pub fn transformer_ends(&self, i: usize) -> (usize, usize) {
        self.transformer_ends[i]
    }

    pub fn transformer_regulated(&self, i: usize) -> Option<usize> {
        self.transformer_regulated[i]
    }

    pub fn shunt_bus(&self, i: usize) -> usize {
        self.shunt_bus[i]
    }

    pub fn generator_bus(&self, i: usize) -> usize {
        self.generator_bus[i]
    }

    pub fn load_bus(&self, i: usize) -> usize {
        self.load_bus[i]
    }

    pub fn ess_bus(&self, i: usize) -> usize {
        self.ess_bus[i]
    }

    pub fn intertie_bus(&self, i: usize) -> usize {
        self.intertie_bus[i]
    }

    pub fn demand_bus(&self, i: usize) -> usize {
        self.demand_bus[i]
    }

    /// Device states as written in the model file.
    pub fn initial_settings(&self) -> DeviceSettings {
        DeviceSettings {
            branch_in_service: self.model.branches.iter().map(|b| b.in_service).collect(),
            tap_positions: self.model.transformers.iter().map(|t| t.tap_position).collect(),
            shunt_steps: self.model.shunts.iter().map(|s| s.steps_on).collect(),
        }
    }

    /// Buses reachable from the slack through in-service elements.
    pub fn energized(&self, settings: &DeviceSettings) -> Vec<bool> {
        let n = self.bus_count();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, &(f, t)) in self.branch_ends.iter().enumerate() {
            if settings.branch_in_service[k] {
                adj[f].push(t);
                adj[t].push(f);
            }
        }
        for &(f, t) in &self.transformer_ends {
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![self.slack];
        seen[self.slack] = true;
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// Buses that are energized by the slack under `settings`, or the first
    /// bus that is not.
    pub fn check_connected(&self, settings: &DeviceSettings) -> Result<(), ModelError> {
        let energized = self.energized(settings);
        let dead: Vec<String> = energized
            .iter()
            .enumerate()
            .filter(|(_, &e)| !e)
            .map(|(i, _)| self.model.buses[i].id.clone())
            .collect();
        if dead.is_empty() {
            Ok(())
        } else {
            Err(ModelError::IslandWithoutSlack(dead))
        }
    }
}
