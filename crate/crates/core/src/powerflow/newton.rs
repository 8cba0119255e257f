use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{injections, mismatch_norm, Inner, PowerFlowProblem, Voltages};
use crate::network::BusKind;

/// Newton–Raphson on the polar power-balance equations.
///
/// Unknowns are the angles of all non-slack buses followed by the
/// magnitudes of PQ buses. Each update is scaled by `multiplier`.
pub(crate) fn run(
    problem: &PowerFlowProblem,
    kinds: &[BusKind],
    q_spec: &[f64],
    start: &Voltages,
    tolerance: f64,
    max_iterations: usize,
    multiplier: f64,
) -> Inner {
    let n = problem.len();
    let pvpq: Vec<usize> = (0..n).filter(|&i| kinds[i] != BusKind::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| kinds[i] == BusKind::Pq).collect();
    let (npvpq, npq) = (pvpq.len(), pq.len());
    let dim = npvpq + npq;
    let y = problem.ybus.matrix();

    let mut vm = start.vm.clone();
    let mut va = start.va.clone();
    let mut history = Vec::new();
    let mut jac = DMatrix::<f64>::zeros(dim, dim);
    let mut rhs = DVector::<f64>::zeros(dim);

    let mut iterations = 0;
    loop {
        let v: Vec<Complex64> = vm.iter().zip(&va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        let (p, q) = injections(&problem.ybus, &v);
        let norm = mismatch_norm(kinds, &problem.p_spec, q_spec, &p, &q);
        history.push(norm);
        if norm <= tolerance {
            return Inner {
                converged: true,
                iterations,
                voltages: Voltages { vm, va },
                mismatch: history,
            };
        }
        if iterations >= max_iterations || !norm.is_finite() {
            return Inner {
                converged: false,
                iterations,
                voltages: Voltages { vm, va },
                mismatch: history,
            };
        }

        let current: Vec<Complex64> = (0..n)
            .map(|i| (0..n).map(|k| y[(i, k)] * v[k]).sum())
            .collect();
        let unit: Vec<Complex64> = v.iter().zip(&vm).map(|(x, &m)| x / m).collect();
        let j = Complex64::new(0.0, 1.0);
        // dS_i/dVa_k = j V_i conj(delta_ik I_i - Y_ik V_k)
        let ds_dva = |i: usize, k: usize| {
            let mut inner = -y[(i, k)] * v[k];
            if i == k {
                inner += current[i];
            }
            j * v[i] * inner.conj()
        };
        // dS_i/dVm_k = V_i conj(Y_ik u_k) + delta_ik conj(I_i) u_i
        let ds_dvm = |i: usize, k: usize| {
            let mut d = v[i] * (y[(i, k)] * unit[k]).conj();
            if i == k {
                d += current[i].conj() * unit[i];
            }
            d
        };

        for (r, &i) in pvpq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(r, c)] = ds_dva(i, k).re;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(r, npvpq + c)] = ds_dvm(i, k).re;
            }
            rhs[r] = problem.p_spec[i] - p[i];
        }
        for (r, &i) in pq.iter().enumerate() {
            for (c, &k) in pvpq.iter().enumerate() {
                jac[(npvpq + r, c)] = ds_dva(i, k).im;
            }
            for (c, &k) in pq.iter().enumerate() {
                jac[(npvpq + r, npvpq + c)] = ds_dvm(i, k).im;
            }
            rhs[npvpq + r] = q_spec[i] - q[i];
        }

        let dx = match jac.clone().lu().solve(&rhs) {
            Some(dx) if dx.iter().all(|x| x.is_finite()) => dx,
            _ => {
                return Inner {
                    converged: false,
                    iterations,
                    voltages: Voltages { vm, va },
                    mismatch: history,
                }
            }
        };
        for (r, &i) in pvpq.iter().enumerate() {
            va[i] += multiplier * dx[r];
        }
        for (r, &i) in pq.iter().enumerate() {
            vm[i] += multiplier * dx[npvpq + r];
        }
        iterations += 1;
    }
}
