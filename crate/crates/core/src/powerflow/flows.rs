use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{injections, Voltages};
use crate::network::{branch_admittance, AdmittanceMatrix, DeviceSettings, Grid};

/// Flow on one series element, in MW/MVAr.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchFlow {
    pub id: String,
    pub from: usize,
    pub to: usize,
    pub in_service: bool,
    pub p_from: f64,
    pub q_from: f64,
    pub p_to: f64,
    pub q_to: f64,
    /// Larger of the two terminal apparent powers.
    pub mva: f64,
    /// MVA rating, if monitored.
    pub rating: Option<f64>,
}

impl BranchFlow {
    /// Active power dissipated in the element.
    pub fn loss_mw(&self) -> f64 {
        self.p_from + self.p_to
    }
}

/// Terminal flows of every line (first) and transformer, computed from
/// the two-port stamps and the bus voltages.
pub fn branch_flows(grid: &Grid, settings: &DeviceSettings, voltages: &Voltages) -> Vec<BranchFlow> {
    let v = voltages.complex();
    let base = grid.base_mva();
    let nl = grid.branches.len();
    let total = nl + grid.transformers.len();
    let mut out = Vec::with_capacity(total);
    for k in 0..total {
        let (id, (f, t), in_service, rating) = if k < nl {
            let b = &grid.branches[k];
            (b.id.clone(), grid.branch_ends(k), settings.branch_in_service[k], Some(b.thermal_limit))
        } else {
            let tr = &grid.transformers[k - nl];
            (tr.id.clone(), grid.transformer_ends(k - nl), true, tr.thermal_limit)
        };
        if !in_service {
            out.push(BranchFlow {
                id,
                from: f,
                to: t,
                in_service,
                p_from: 0.0,
                q_from: 0.0,
                p_to: 0.0,
                q_to: 0.0,
                mva: 0.0,
                rating,
            });
            continue;
        }
        let s = branch_admittance(grid, settings, k);
        let i_f = s.yff * v[f] + s.yft * v[t];
        let i_t = s.ytf * v[f] + s.ytt * v[t];
        let s_f: Complex64 = v[f] * i_f.conj() * base;
        let s_t: Complex64 = v[t] * i_t.conj() * base;
        out.push(BranchFlow {
            id,
            from: f,
            to: t,
            in_service,
            p_from: s_f.re,
            q_from: s_f.im,
            p_to: s_t.re,
            q_to: s_t.im,
            mva: s_f.norm().max(s_t.norm()),
            rating,
        });
    }
    out
}

/// Total active losses in MW as the sum of element losses.
pub fn total_losses(flows: &[BranchFlow]) -> f64 {
    flows.iter().map(BranchFlow::loss_mw).sum()
}

/// Net bus injections in MW/MVAr computed through the admittance matrix.
pub fn bus_injections(grid: &Grid, settings: &DeviceSettings, voltages: &Voltages) -> (Vec<f64>, Vec<f64>) {
    let ybus = AdmittanceMatrix::assemble_unchecked(grid, settings);
    let (p, q) = injections(&ybus, &voltages.complex());
    let base = grid.base_mva();
    (p.iter().map(|x| x * base).collect(), q.iter().map(|x| x * base).collect())
}
