//! Scaling suite: seeded random inverse QPs at growing `n`.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::instances::{random_qp, NormChoice};
use crate::ipm::{SolverSettings, Status};
use crate::oracles::nnls_oracle_iqp;
use crate::reductions::{reduce_iqp, solve_reduction};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub seeds: Vec<u64>,
    pub settings: SolverSettings,
    /// Compare against the enumeration oracle when it is within its cap.
    pub with_oracle: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![5, 10, 20, 30],
            seeds: vec![1, 2, 3],
            settings: SolverSettings::default(),
            with_oracle: true,
        }
    }
}

/// Number of equality constraints used at size `n`.
pub fn rows_for(n: usize) -> usize {
    (n / 5).max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// `n² + n + m`
    pub lifted_dim: usize,
    pub variables: usize,
    pub constraints: usize,
    pub iterations: usize,
    pub wall_ms: f64,
    pub status: String,
    pub objective: f64,
    pub oracle_objective: Option<f64>,
    /// `|objective - oracle| / max(1, oracle)`
    pub rel_delta: Option<f64>,
}

fn run_one(n: usize, seed: u64, cfg: &BenchConfig) -> crate::Result<BenchRow> {
    let m = rows_for(n);
    let (inst, pt) = random_qp(n, m, seed)?;
    let x0 = pt.x0.expect("generated QP points carry x0");
    let problem = reduce_iqp(&inst, &x0, NormChoice::L2)?;
    let start = Instant::now();
    let (pert, sol, report) = solve_reduction(&problem, &cfg.settings)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let oracle_objective = if cfg.with_oracle {
        nnls_oracle_iqp(&inst, &x0).ok().map(|p| p.objective)
    } else {
        None
    };
    Ok(BenchRow {
        n,
        m,
        seed,
        lifted_dim: n * n + n + m,
        variables: problem.qp.num_vars(),
        constraints: problem.qp.num_constraints(),
        iterations: report.iterations,
        wall_ms,
        status: status_name(sol.status).into(),
        objective: pert.objective,
        oracle_objective,
        rel_delta: oracle_objective.map(|o| (pert.objective - o).abs() / o.max(1.0)),
    })
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Optimal => "optimal",
        Status::IterationLimit => "iteration_limit",
        Status::NumericalFailure => "numerical_failure",
    }
}

/// Runs every `(n, seed)` pair. A pair that errors still gets a row, with
/// status `error` and NaN numbers.
pub fn run_scaling_suite(cfg: &BenchConfig) -> Vec<BenchRow> {
    let mut rows = Vec::with_capacity(cfg.sizes.len() * cfg.seeds.len());
    for &n in &cfg.sizes {
        for &seed in &cfg.seeds {
            let row = run_one(n, seed, cfg).unwrap_or_else(|e| {
                log::warn!("n={n} seed={seed}: {e}");
                let m = rows_for(n);
                BenchRow {
                    n,
                    m,
                    seed,
                    lifted_dim: n * n + n + m,
                    variables: 0,
                    constraints: 0,
                    iterations: 0,
                    wall_ms: f64::NAN,
                    status: "error".into(),
                    objective: f64::NAN,
                    oracle_objective: None,
                    rel_delta: None,
                }
            });
            log::info!("n={n} seed={seed}: {} iterations, {:.1} ms", row.iterations, row.wall_ms);
            rows.push(row);
        }
    }
    rows
}

/// Median iteration count per size, in the order sizes first appear.
pub fn median_iterations(rows: &[BenchRow]) -> Vec<(usize, f64)> {
    let mut sizes: Vec<usize> = Vec::new();
    for r in rows {
        if !sizes.contains(&r.n) {
            sizes.push(r.n);
        }
    }
    sizes
        .into_iter()
        .map(|n| {
            let mut its: Vec<usize> = rows.iter().filter(|r| r.n == n).map(|r| r.iterations).collect();
            its.sort_unstable();
            let k = its.len();
            let med = if k % 2 == 1 {
                its[k / 2] as f64
            } else {
                (its[k / 2 - 1] + its[k / 2]) as f64 / 2.0
            };
            (n, med)
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from(
        "n,m,seed,lifted_dim,variables,constraints,iterations,wall_ms,status,objective,oracle_objective,rel_delta\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{:.3},{},{:e},{},{}",
            r.n,
            r.m,
            r.seed,
            r.lifted_dim,
            r.variables,
            r.constraints,
            r.iterations,
            r.wall_ms,
            r.status,
            r.objective,
            opt(r.oracle_objective),
            opt(r.rel_delta)
        );
    }
    out
}

pub fn render_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:>4} {:>3} {:>5} {:>7} {:>6} {:>10} {:>18} {:>12} {:>10}\n",
        "n", "m", "seed", "vars", "iters", "ms", "status", "objective", "Δoracle"
    );
    for r in rows {
        let delta = r.rel_delta.map(|d| format!("{d:.1e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:>4} {:>3} {:>5} {:>7} {:>6} {:>10.1} {:>18} {:>12.5e} {:>10}",
            r.n, r.m, r.seed, r.variables, r.iterations, r.wall_ms, r.status, r.objective, delta
        );
    }
    for (n, med) in median_iterations(rows) {
        let _ = writeln!(out, "median iterations at n={n}: {med}");
    }
    out
}
