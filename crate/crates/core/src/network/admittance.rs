use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Branch, DeviceSettings, Grid, NetworkModel, Transformer};
use crate::error::ModelError;

/// Two-port admittance stamp of a series element:
/// `[I_f; I_t] = [[yff, yft]; [ytf, ytt]] [V_f; V_t]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchStamp {
    pub yff: Complex64,
    pub yft: Complex64,
    pub ytf: Complex64,
    pub ytt: Complex64,
}

impl BranchStamp {
    pub fn line(branch: &Branch) -> BranchStamp {
        let y = Complex64::new(branch.resistance, branch.reactance).inv();
        let half = Complex64::new(0.0, branch.charging_susceptance / 2.0);
        BranchStamp {
            yff: y + half,
            yft: -y,
            ytf: -y,
            ytt: y + half,
        }
    }

    /// Ideal ratio `tap : 1` on the from side in series with the impedance.
    pub fn transformer(t: &Transformer, position: i32) -> BranchStamp {
        let y = Complex64::new(t.resistance, t.reactance).inv();
        let a = t.ratio(position);
        BranchStamp {
            yff: y / (a * a),
            yft: -y / a,
            ytf: -y / a,
            ytt: y,
        }
    }
}

/// Stamp of series element `k`, where elements are numbered lines first,
/// then transformers.
pub fn branch_admittance(grid: &Grid, settings: &DeviceSettings, k: usize) -> BranchStamp {
    let nl = grid.branches.len();
    if k < nl {
        BranchStamp::line(&grid.branches[k])
    } else {
        let t = k - nl;
        BranchStamp::transformer(&grid.transformers[t], settings.tap_positions[t])
    }
}

/// Dense complex bus admittance matrix in per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix(pub DMatrix<Complex64>);

impl AdmittanceMatrix {
    /// Assembles the matrix for the given device states. Fails if any bus is
    /// cut off from the slack.
    pub fn assemble(grid: &Grid, settings: &DeviceSettings) -> Result<AdmittanceMatrix, ModelError> {
        grid.check_connected(settings)?;
        Ok(Self::assemble_unchecked(grid, settings))
    }

    pub(crate) fn assemble_unchecked(grid: &Grid, settings: &DeviceSettings) -> AdmittanceMatrix {
        let n = grid.bus_count();
        let mut y = DMatrix::<Complex64>::zeros(n, n);
        for (k, br) in grid.branches.iter().enumerate() {
            if !settings.branch_in_service[k] {
                continue;
            }
            let (f, t) = grid.branch_ends(k);
            stamp(&mut y, f, t, &BranchStamp::line(br));
        }
        for (k, tr) in grid.transformers.iter().enumerate() {
            let (f, t) = grid.transformer_ends(k);
            stamp(&mut y, f, t, &BranchStamp::transformer(tr, settings.tap_positions[k]));
        }
        let base = grid.base_mva();
        for (k, sh) in grid.shunts.iter().enumerate() {
            let b = sh.mvar_at(settings.shunt_steps[k]) / base;
            let i = grid.shunt_bus(k);
            y[(i, i)] += Complex64::new(0.0, b);
        }
        AdmittanceMatrix(y)
    }

    pub fn size(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }
}

fn stamp(y: &mut DMatrix<Complex64>, f: usize, t: usize, s: &BranchStamp) {
    y[(f, f)] += s.yff;
    y[(f, t)] += s.yft;
    y[(t, f)] += s.ytf;
    y[(t, t)] += s.ytt;
}

/// Builds the admittance matrix of `model` at its own initial device states.
pub fn build_admittance(model: &NetworkModel) -> Result<AdmittanceMatrix, ModelError> {
    if model.buses.is_empty() {
        return Err(ModelError::Empty);
    }
    let grid = Grid::new(model.clone())?;
    AdmittanceMatrix::assemble(&grid, &grid.initial_settings())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases;
    use crate::network::{ShuntBank, ShuntKind};

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn two_bus_identity() {
        let m = cases::two_bus(0.5, 0.0);
        let y = build_admittance(&m).unwrap();
        let ys = Complex64::new(m.branches[0].resistance, m.branches[0].reactance).inv();
        assert!(close(y.get(0, 0), ys));
        assert!(close(y.get(1, 1), ys));
        assert!(close(y.get(0, 1), -ys));
        assert!(close(y.get(1, 0), -ys));
    }

    #[test]
    fn shunt_adds_to_diagonal() {
        let mut m = cases::two_bus(0.5, 0.0);
        let before = build_admittance(&m).unwrap();
        m.shunts.push(ShuntBank {
            id: "C1".into(),
            bus: "B1".into(),
            kind: ShuntKind::Capacitor,
            step_mvar: 20.0,
            steps_total: 1,
            steps_on: 1,
        });
        let after = build_admittance(&m).unwrap();
        assert!(close(after.get(0, 0) - before.get(0, 0), Complex64::new(0.0, 0.2)));
        assert!(close(after.get(1, 1), before.get(1, 1)));
    }

    #[test]
    fn triangle_hand_assembled() {
        let m = cases::triangle_lossless();
        let y = build_admittance(&m).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { Complex64::new(0.0, -20.0) } else { Complex64::new(0.0, 10.0) };
                assert!(close(y.get(i, j), want), "({i},{j}) = {}", y.get(i, j));
            }
        }
    }

    #[test]
    fn dead_island_is_named() {
        let mut m = cases::two_bus(0.5, 0.0);
        m.loads.clear();
        m.branches[0].in_service = false;
        match build_admittance(&m) {
            Err(ModelError::IslandWithoutSlack(names)) => assert_eq!(names, vec!["B2".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn toggle_round_trip_is_bitwise() {
        let grid = Grid::new(cases::desk30()).unwrap();
        let mut s = grid.initial_settings();
        let original = AdmittanceMatrix::assemble(&grid, &s).unwrap();
        let k = grid.branches.iter().position(|b| b.switchable).unwrap();
        s.branch_in_service[k] = false;
        let open = AdmittanceMatrix::assemble(&grid, &s).unwrap();
        assert_ne!(open, original);
        s.branch_in_service[k] = true;
        let again = AdmittanceMatrix::assemble(&grid, &s).unwrap();
        assert_eq!(again, original);
    }
}
