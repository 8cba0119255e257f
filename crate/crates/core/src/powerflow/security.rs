use serde::{Deserialize, Serialize};

use super::{branch_flows, Voltages};
use crate::network::{DeviceSettings, GeneratorKind, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SecurityViolationKind {
    Overvoltage,
    Undervoltage,
    Thermal,
    QLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecurityViolation {
    pub kind: SecurityViolationKind,
    pub element: String,
    pub value: f64,
    pub limit: f64,
    /// Distance beyond the limit, always positive (pu, MVA or MVAr).
    pub magnitude: f64,
}

/// Reactive-limit violations smaller than this (MVAr) are rounding noise.
const Q_EPS: f64 = 1e-4;

/// Lists every bus outside `[v_min, v_max]`, every element loaded above
/// its rating and every committed unit outside its reactive range.
pub fn check_security(
    grid: &Grid,
    settings: &DeviceSettings,
    voltages: &Voltages,
    gen_q: &[f64],
    committed: &[bool],
) -> Vec<SecurityViolation> {
    let mut out = Vec::new();
    for (i, bus) in grid.buses.iter().enumerate() {
        let v = voltages.vm[i];
        if v > bus.v_max {
            out.push(SecurityViolation {
                kind: SecurityViolationKind::Overvoltage,
                element: bus.id.clone(),
                value: v,
                limit: bus.v_max,
                magnitude: v - bus.v_max,
            });
        } else if v < bus.v_min {
            out.push(SecurityViolation {
                kind: SecurityViolationKind::Undervoltage,
                element: bus.id.clone(),
                value: v,
                limit: bus.v_min,
                magnitude: bus.v_min - v,
            });
        }
    }
    for f in branch_flows(grid, settings, voltages) {
        if let Some(rating) = f.rating {
            if f.in_service && f.mva > rating {
                out.push(SecurityViolation {
                    kind: SecurityViolationKind::Thermal,
                    element: f.id.clone(),
                    value: f.mva,
                    limit: rating,
                    magnitude: f.mva - rating,
                });
            }
        }
    }
    for (k, g) in grid.generators.iter().enumerate() {
        if !committed[k] || g.kind == GeneratorKind::Wind {
            continue;
        }
        let q = gen_q[k];
        if q > g.q_max + Q_EPS {
            out.push(SecurityViolation {
                kind: SecurityViolationKind::QLimit,
                element: g.id.clone(),
                value: q,
                limit: g.q_max,
                magnitude: q - g.q_max,
            });
        } else if q < g.q_min - Q_EPS {
            out.push(SecurityViolation {
                kind: SecurityViolationKind::QLimit,
                element: g.id.clone(),
                value: q,
                limit: g.q_min,
                magnitude: g.q_min - q,
            });
        }
    }
    out
}
