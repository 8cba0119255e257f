//! TOML network file reader.
//!
//! The document carries the [`NetworkModel`] sections (`buses`, `branches`,
//! `transformers`, `shunts`, `generators`, `loads`, `ess`, `interties`,
//! `demand_resources`, `zones`) as arrays of tables, plus an optional
//! top-level `impedance_unit` flag. With `impedance_unit = "ohm"`, branch
//! and transformer `resistance`/`reactance` are read in ohms and line
//! `charging_susceptance` in siemens, referred to the from-bus `base_kv`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NetworkModel;
use crate::error::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpedanceUnit {
    #[default]
    Pu,
    Ohm,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    #[serde(default)]
    pub impedance_unit: ImpedanceUnit,
    #[serde(flatten)]
    pub model: NetworkModel,
}

impl NetworkFile {
    pub fn into_model(self) -> NetworkModel {
        let mut model = self.model;
        if self.impedance_unit == ImpedanceUnit::Ohm {
            let base = model.system_base_mva;
            let kv_of = |m: &NetworkModel, bus: &str| {
                m.buses.iter().find(|b| b.id == bus).map(|b| b.base_kv)
            };
            let line_bases: Vec<Option<f64>> = model
                .branches
                .iter()
                .map(|b| kv_of(&model, &b.from_bus).map(|kv| kv * kv / base))
                .collect();
            for (br, z) in model.branches.iter_mut().zip(line_bases) {
                if let Some(z) = z {
                    br.resistance /= z;
                    br.reactance /= z;
                    br.charging_susceptance *= z;
                }
            }
            let tr_bases: Vec<Option<f64>> = model
                .transformers
                .iter()
                .map(|t| kv_of(&model, &t.from_bus).map(|kv| kv * kv / base))
                .collect();
            for (tr, z) in model.transformers.iter_mut().zip(tr_bases) {
                if let Some(z) = z {
                    tr.resistance /= z;
                    tr.reactance /= z;
                }
            }
        }
        model
    }
}

pub fn parse_network(text: &str, origin: &Path) -> Result<NetworkModel, ModelError> {
    let file: NetworkFile = toml::from_str(text).map_err(|e| ModelError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(file.into_model())
}

pub fn load_network_file(path: &Path) -> Result<NetworkModel, ModelError> {
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_network(&text, path)
}

/// Serializes a model as a per-unit network file.
pub fn to_toml(model: &NetworkModel) -> String {
    let file = NetworkFile {
        impedance_unit: ImpedanceUnit::Pu,
        model: model.clone(),
    };
    toml::to_string(&file).expect("network model serializes to TOML")
}
