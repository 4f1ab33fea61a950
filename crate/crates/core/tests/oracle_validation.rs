//! Brute-force checks of the oracles on tiny instances.
//!
//! Grids run over the perturbation itself (`X` rows, `Y`) at step 1e-3 on
//! `[-3, 3]`, with the remaining variable solved from the equality
//! constraint, so they do not rely on the rank-one formula.

use invopt::case_c::eval_case_c;
use invopt::instances::{LcpInstance, NormChoice, QpInstance};
use invopt::ipm::SolverSettings;
use invopt::oracles::{closed_form_ilcp, nnls_oracle_iqp};
use invopt::reductions::{reduce_ilcp_a, reduce_iqp, solve_reduction};
use nalgebra::{dmatrix, dvector, DVector};

const STEP: f64 = 1e-3;
const HALF_WIDTH: f64 = 3.0;

fn axis() -> impl Iterator<Item = f64> + Clone {
    let k = (2.0 * HALF_WIDTH / STEP).round() as i64;
    (0..=k).map(|i| -HALF_WIDTH + i as f64 * STEP)
}

/// `min ‖X_i‖² + z_i²` over a grid on `X_i`, with `z_i` (and `s_i` when
/// free) chosen exactly.
fn grid_row_l2(x0: &DVector<f64>, c_i: f64, s_free: bool) -> f64 {
    let row_cost = |xr: &[f64]| {
        let dot: f64 = xr.iter().zip(x0.iter()).map(|(a, b)| a * b).sum();
        let mut z = c_i - dot;
        if s_free {
            // s_i = max(0, z) leaves min(z, 0)
            z = z.min(0.0);
        }
        xr.iter().map(|v| v * v).sum::<f64>() + z * z
    };
    match x0.len() {
        1 => axis().map(|a| row_cost(&[a])).fold(f64::INFINITY, f64::min),
        2 => axis()
            .flat_map(|a| axis().map(move |b| [a, b]))
            .map(|xr| row_cost(&xr))
            .fold(f64::INFINITY, f64::min),
        _ => unreachable!("grid only for n <= 2"),
    }
}

fn grid_lcp(inst: &LcpInstance, x0: &DVector<f64>, s0: Option<&DVector<f64>>) -> f64 {
    let c = inst.slack(x0);
    (0..inst.n())
        .map(|i| match s0 {
            Some(s0) => grid_row_l2(x0, c[i] - s0[i], false),
            None => grid_row_l2(x0, c[i], x0[i] == 0.0),
        })
        .sum()
}

fn lcp_cases() -> Vec<(LcpInstance, DVector<f64>, Option<DVector<f64>>)> {
    vec![
        (LcpInstance::new(dmatrix![2.0], dvector![-1.0]).unwrap(), dvector![1.0], None),
        (LcpInstance::new(dmatrix![-0.5], dvector![0.3]).unwrap(), dvector![0.0], None),
        (LcpInstance::new(dmatrix![0.4], dvector![-0.9]).unwrap(), dvector![0.0], None),
        (
            LcpInstance::new(dmatrix![0.3, -0.8; 0.5, 0.2], dvector![-0.4, 0.6]).unwrap(),
            dvector![0.7, 0.0],
            None,
        ),
        (
            LcpInstance::new(dmatrix![0.0, 1.0; 1.0, 0.0], dvector![0.0, 0.0]).unwrap(),
            dvector![1.0, 0.0],
            Some(dvector![0.0, 2.0]),
        ),
        (
            LcpInstance::new(dmatrix![-0.6, 0.1; 0.9, -0.3], dvector![0.2, -0.5]).unwrap(),
            dvector![0.0, 1.3],
            Some(dvector![0.8, 0.0]),
        ),
    ]
}

#[test]
fn closed_form_matches_grid() {
    for (inst, x0, s0) in lcp_cases() {
        let oracle = closed_form_ilcp(&inst, &x0, s0.as_ref()).unwrap().objective;
        let grid = grid_lcp(&inst, &x0, s0.as_ref());
        assert!(grid >= oracle - 1e-12, "grid {grid} beat the oracle {oracle}");
        assert!(grid - oracle <= 1e-5, "grid {grid} vs oracle {oracle}");
    }
}

#[test]
fn worked_example_values() {
    let (inst, x0, _) = &lcp_cases()[0];
    let p = closed_form_ilcp(inst, x0, None).unwrap();
    assert_eq!(p.objective, 0.5);
    let (inst, x0, s0) = &lcp_cases()[4];
    let p = closed_form_ilcp(inst, x0, s0.as_ref()).unwrap();
    assert_eq!(p.objective, 0.5);
}

/// Grid over `y` with the best `s` per point; objective after eliminating `(X, z)`
/// row by row, which `closed_form_matches_grid` checks separately.
fn grid_qp_single_row(inst: &QpInstance, x0: &DVector<f64>) -> f64 {
    assert_eq!(inst.m(), 1);
    let rhs = inst.shifted_cost(x0);
    let denom = x0.norm_squared() + 1.0;
    axis()
        .map(|y| {
            (0..inst.n())
                .map(|i| {
                    let r = rhs[i] - inst.a()[(0, i)] * y;
                    let r = if x0[i] == 0.0 { r.min(0.0) } else { r };
                    r * r
                })
                .sum::<f64>()
                / denom
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn nnls_matches_grid_and_ipm() {
    let cases = [
        (dmatrix![0.0, 0.0; 0.0, 0.0], dvector![1.0, -1.0], dmatrix![1.0, 1.0], dvector![1.0, 0.0]),
        (dmatrix![0.5, -0.2; 0.1, 0.3], dvector![-0.4, 0.9], dmatrix![0.6, -1.0], dvector![0.0, 1.5]),
        (
            dmatrix![0.2, 0.0, -0.7; 0.4, 0.1, 0.0; -0.3, 0.8, 0.5],
            dvector![0.3, -0.6, 0.2],
            dmatrix![1.0, 0.5, -0.4],
            dvector![0.9, 0.0, 0.0],
        ),
    ];
    for (q, c, a, x0) in cases {
        let b = &a * &x0;
        let inst = QpInstance::new(q, c, a, b).unwrap();
        let oracle = nnls_oracle_iqp(&inst, &x0).unwrap();
        let grid = grid_qp_single_row(&inst, &x0);
        assert!(grid >= oracle.objective - 1e-12 && grid - oracle.objective <= 1e-5, "grid {grid} vs {}", oracle.objective);

        let problem = reduce_iqp(&inst, &x0, NormChoice::L2).unwrap();
        let (ipm, _, _) = solve_reduction(&problem, &SolverSettings::default()).unwrap();
        assert!((ipm.objective - oracle.objective).abs() <= 1e-7 * oracle.objective.max(1.0));
    }
}

#[test]
fn l1_row_cost_matches_grid() {
    // one row: min |Y| + |z| subject to Y x + z = r
    for (x, r) in [(0.0, 0.7), (0.4, -1.1), (1.0, 0.9), (2.5, 1.3), (2.5, -2.0)] {
        let inst = LcpInstance::new(dmatrix![0.0], dvector![r]).unwrap();
        let formula = eval_case_c(&inst, &dvector![0.0], &dvector![x]).unwrap().objective;
        let grid = axis().map(|y: f64| y.abs() + (r - y * x).abs()).fold(f64::INFINITY, f64::min);
        assert!((grid - formula).abs() <= 3.0 * STEP, "x={x} r={r}: grid {grid} formula {formula}");
        assert!(grid >= formula - 1e-12);
    }
}

#[test]
fn l1_lcp_route_matches_grid() {
    // n = 1: min |X| + |z| s.t. s + X x0 + z = c, s >= 0 only when x0 = 0
    for (m, q, x0) in [(2.0, -1.0, 1.0), (0.3, -0.2, 2.0), (-0.5, -0.4, 0.0), (1.0, 0.5, 0.6)] {
        let inst = LcpInstance::new(dmatrix![m], dvector![q]).unwrap();
        let problem = reduce_ilcp_a(&inst, &dvector![x0], NormChoice::L1).unwrap();
        let (p, _, _) = solve_reduction(&problem, &SolverSettings::default()).unwrap();
        let c = m * x0 + q;
        let grid = axis()
            .map(|xv: f64| {
                let z = c - xv * x0;
                let z = if x0 == 0.0 { z.min(0.0) } else { z };
                xv.abs() + z.abs()
            })
            .fold(f64::INFINITY, f64::min);
        assert!(p.objective <= grid + 1e-8, "m={m} q={q}: lp {} grid {grid}", p.objective);
        assert!(grid - p.objective <= 3.0 * STEP);
    }
}
