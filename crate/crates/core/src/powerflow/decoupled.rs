use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{injections, mismatch_norm, Inner, PowerFlowProblem, Voltages};
use crate::network::BusKind;

/// Fast-decoupled load flow with constant B′ (series susceptances only)
/// and B″ (full susceptance of PQ buses). Convergence is judged on the
/// full AC mismatch, so the fixed point is the Newton–Raphson solution.
pub(crate) fn run(
    problem: &PowerFlowProblem,
    kinds: &[BusKind],
    q_spec: &[f64],
    start: &Voltages,
    tolerance: f64,
    max_iterations: usize,
) -> Inner {
    let n = problem.len();
    let y = problem.ybus.matrix();
    let pvpq: Vec<usize> = (0..n).filter(|&i| kinds[i] != BusKind::Slack).collect();
    let pq: Vec<usize> = (0..n).filter(|&i| kinds[i] == BusKind::Pq).collect();

    let mut b1 = DMatrix::<f64>::zeros(pvpq.len(), pvpq.len());
    for (r, &i) in pvpq.iter().enumerate() {
        let mut diag = 0.0;
        for k in 0..n {
            if k != i {
                diag += y[(i, k)].im;
            }
        }
        for (c, &k) in pvpq.iter().enumerate() {
            b1[(r, c)] = if k == i { diag } else { -y[(i, k)].im };
        }
    }
    let mut b2 = DMatrix::<f64>::zeros(pq.len(), pq.len());
    for (r, &i) in pq.iter().enumerate() {
        for (c, &k) in pq.iter().enumerate() {
            b2[(r, c)] = -y[(i, k)].im;
        }
    }
    let lu1 = b1.lu();
    let lu2 = b2.lu();

    let mut vm = start.vm.clone();
    let mut va = start.va.clone();
    let mut history = Vec::new();
    let mut iterations = 0;

    let eval = |vm: &[f64], va: &[f64]| {
        let v: Vec<Complex64> = vm.iter().zip(va).map(|(&m, &a)| Complex64::from_polar(m, a)).collect();
        injections(&problem.ybus, &v)
    };
    let fail = |vm, va, history, iterations| Inner {
        converged: false,
        iterations,
        voltages: Voltages { vm, va },
        mismatch: history,
    };

    loop {
        let (p, q) = eval(&vm, &va);
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
            return fail(vm, va, history, iterations);
        }

        let dp = DVector::from_iterator(pvpq.len(), pvpq.iter().map(|&i| (problem.p_spec[i] - p[i]) / vm[i]));
        let dth = match lu1.solve(&dp) {
            Some(x) => x,
            None => return fail(vm, va, history, iterations),
        };
        for (r, &i) in pvpq.iter().enumerate() {
            va[i] += dth[r];
        }

        if !pq.is_empty() {
            let (_, q) = eval(&vm, &va);
            let dq = DVector::from_iterator(pq.len(), pq.iter().map(|&i| (q_spec[i] - q[i]) / vm[i]));
            let dv = match lu2.solve(&dq) {
                Some(x) => x,
                None => return fail(vm, va, history, iterations),
            };
            for (r, &i) in pq.iter().enumerate() {
                vm[i] += dv[r];
            }
        }
        iterations += 1;
    }
}
