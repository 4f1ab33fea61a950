use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use invopt::bench::{render_table, run_scaling_suite, status_name, to_csv, BenchConfig};
use invopt::case_c::solve_case_c_local;
use invopt::instances::{
    random_lcp, random_qp, CandidatePoint, InstanceData, InstanceFile, LcpCase, LcpInstance, NormChoice, QpInstance,
};
use invopt::ipm::{kkt_residuals, Solution, SolveReport, SolverSettings, Status};
use invopt::oracles::{verify_kkt_point, verify_lcp_solution};
use invopt::reductions::{reduce_ilcp_a, reduce_ilcp_b, reduce_iqp, solve_reduction, Perturbation, StandardFormProblem};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use crate::args::{BenchArgs, GenerateArgs, KindArg, SolveArgs, SolverArgs, VerifyArgs};

/// Tolerance of the verification block written by `solve`.
pub const VERIFY_TOL: f64 = 1e-6;
/// Objectives at or below this count as "already optimal".
const ZERO_OBJECTIVE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Input = 1,
    NonOptimal = 2,
    Verification = 3,
}

fn read_instance(path: &Path) -> Result<(InstanceFile, InstanceData)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let file = InstanceFile::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    let data = file.to_data().with_context(|| format!("validating {}", path.display()))?;
    Ok((file, data))
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn settings(args: &SolverArgs) -> Result<SolverSettings> {
    let mut s = SolverSettings::default();
    if let Some(tol) = args.tol {
        s.tol_gap = tol;
        s.tol_res = tol;
    }
    if let Some(k) = args.max_iter {
        s.max_iter = k;
    }
    s.validate()?;
    Ok(s)
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn entries(v: &DVector<f64>) -> Vec<f64> {
    v.iter().copied().collect()
}

/// What a solve produced, before it is written out.
struct Outcome {
    result: Value,
    summary: String,
    optimal: bool,
    verified: bool,
}

fn solver_block(problem: &StandardFormProblem, sol: &Solution, report: &SolveReport) -> Value {
    let res = kkt_residuals(&problem.qp, sol);
    json!({
        "status": status_name(sol.status),
        "iterations": report.iterations,
        "variables": problem.qp.num_vars(),
        "constraints": problem.qp.num_constraints(),
        "removed_rows": report.removed_rows,
        "factorization_retries": report.factorization_retries,
        "final_residuals": { "primal": res.primal, "dual": res.dual, "gap": res.gap },
    })
}

fn base_result(name: &str, pert: &Perturbation, matrix_key: &str, vector_key: &str) -> Value {
    let mut certificate = json!({ "s": entries(&pert.certificate.s) });
    if let Some(y) = &pert.certificate.y {
        certificate["y"] = json!(entries(y));
    }
    json!({
        "problem": name,
        "norm": pert.norm,
        "objective": pert.objective,
        "X": rows(&pert.x),
        "z": entries(&pert.z),
        "perturbed": { matrix_key: rows(&pert.perturbed_matrix), vector_key: entries(&pert.perturbed_vector) },
        "certificate": certificate,
    })
}

fn summary_line(name: &str, norm: NormChoice, objective: f64, status: &str, verified: bool) -> String {
    let mut s = format!(
        "{name} ({norm}): objective {objective:.6e}, solver {status}, verification {}",
        if verified { "passed" } else { "FAILED" }
    );
    if objective <= ZERO_OBJECTIVE {
        s.push_str("\nx0 is already optimal for the given data; no perturbation needed");
    }
    s
}

fn mark_already_optimal(result: &mut Value, objective: f64) {
    if objective <= ZERO_OBJECTIVE {
        result["note"] = json!("already optimal: objective is at most 1e-8");
    }
}

fn solve_qp(inst: &QpInstance, point: &CandidatePoint, norm: NormChoice, settings: &SolverSettings) -> Result<Outcome> {
    let x0 = point.x0.as_ref().context("qp instance is missing `x0`")?;
    let problem = reduce_iqp(inst, x0, norm)?;
    let (pert, sol, report) = solve_reduction(&problem, settings)?;
    let perturbed = inst.with_objective(pert.perturbed_matrix.clone(), pert.perturbed_vector.clone())?;
    let cert = verify_kkt_point(&perturbed, x0, VERIFY_TOL)?;

    let mut result = base_result("iqp", &pert, "Q", "c");
    result["status"] = json!(status_name(sol.status));
    result["solver"] = solver_block(&problem, &sol, &report);
    result["verification"] = json!({
        "check": "kkt_point",
        "tol": VERIFY_TOL,
        "passed": cert.is_kkt,
        "residual": cert.residual,
        "complementarity": cert.comp,
        "primal_residual": cert.primal_residual,
    });
    mark_already_optimal(&mut result, pert.objective);
    Ok(Outcome {
        summary: summary_line("inverse QP", norm, pert.objective, status_name(sol.status), cert.is_kkt),
        result,
        optimal: sol.status == Status::Optimal,
        verified: cert.is_kkt,
    })
}

fn infer_case(point: &CandidatePoint) -> Result<LcpCase> {
    match (&point.x0, &point.s0) {
        (Some(_), Some(_)) => Ok(LcpCase::B),
        (Some(_), None) => Ok(LcpCase::A),
        (None, Some(_)) => Ok(LcpCase::C),
        (None, None) => bail!("lcp instance needs `x0`, `s0` or both"),
    }
}

fn solve_lcp(
    inst: &LcpInstance,
    point: &CandidatePoint,
    case: LcpCase,
    norm: NormChoice,
    settings: &SolverSettings,
    args: &SolveArgs,
) -> Result<Outcome> {
    if case == LcpCase::C {
        return solve_lcp_c(inst, point, norm, args);
    }
    let x0 = point.x0.as_ref().context("cases (a) and (b) need `x0`")?;
    let (problem, name) = match case {
        LcpCase::A => (reduce_ilcp_a(inst, x0, norm)?, "ilcp_a"),
        _ => {
            let s0 = point.s0.as_ref().context("case (b) needs `s0`")?;
            (reduce_ilcp_b(inst, x0, s0, norm)?, "ilcp_b")
        }
    };
    let (pert, sol, report) = solve_reduction(&problem, settings)?;
    let perturbed = LcpInstance::new(pert.perturbed_matrix.clone(), pert.perturbed_vector.clone())?;
    let check = verify_lcp_solution(&perturbed, x0, &pert.certificate.s, VERIFY_TOL)?;

    let mut result = base_result(name, &pert, "M", "q");
    result["status"] = json!(status_name(sol.status));
    result["solver"] = solver_block(&problem, &sol, &report);
    result["verification"] = json!({
        "check": "lcp_solution",
        "tol": VERIFY_TOL,
        "passed": check.ok,
        "residual": check.residual,
        "min_entry": check.min_entry,
        "complementarity": check.comp,
    });
    mark_already_optimal(&mut result, pert.objective);
    Ok(Outcome {
        summary: summary_line(&format!("inverse LCP ({case})"), norm, pert.objective, status_name(sol.status), check.ok),
        result,
        optimal: sol.status == Status::Optimal,
        verified: check.ok,
    })
}

fn solve_lcp_c(inst: &LcpInstance, point: &CandidatePoint, norm: NormChoice, args: &SolveArgs) -> Result<Outcome> {
    ensure!(norm == NormChoice::L1, "case (c) is defined for the l1 norm only");
    let s0 = point.s0.as_ref().context("case (c) needs `s0`")?;
    let res = solve_case_c_local(inst, s0, args.box_r, args.restarts, args.seed)?;
    let (mp, qp) = res.perturbed(inst);
    let perturbed = LcpInstance::new(mp.clone(), qp.clone())?;
    let check = verify_lcp_solution(&perturbed, &res.x, s0, VERIFY_TOL)?;

    let mut result = json!({
        "problem": "ilcp_c",
        "norm": NormChoice::L1,
        "status": "local_search",
        "objective": res.objective,
        "X": rows(&res.y),
        "z": entries(&res.z),
        "perturbed": { "M": rows(&mp), "q": entries(&qp) },
        "certificate": { "x": entries(&res.x) },
        "solver": {
            "method": res.method,
            "attained": res.attained,
            "box": args.box_r,
            "restarts": args.restarts,
            "seed": args.seed,
        },
        "verification": {
            "check": "lcp_solution",
            "tol": VERIFY_TOL,
            "passed": check.ok,
            "residual": check.residual,
            "min_entry": check.min_entry,
            "complementarity": check.comp,
        },
    });
    mark_already_optimal(&mut result, res.objective);
    let mut summary = summary_line("inverse LCP (c)", NormChoice::L1, res.objective, "local_search", check.ok);
    if !res.attained {
        summary.push_str(&format!("\nbest point lies on the box face x_i = {}; the infimum may not be attained", args.box_r));
    }
    Ok(Outcome {
        result,
        summary,
        optimal: true,
        verified: check.ok,
    })
}

pub fn solve(args: &SolveArgs) -> Result<Exit> {
    let (mut file, data) = read_instance(&args.input)?;
    let settings = settings(&args.solver)?;
    let outcome = match &data {
        InstanceData::Qp { inst, point, norm } => {
            ensure!(args.case.is_none(), "--case applies to lcp instances only");
            let norm = args.norm.map(Into::into).or(*norm).unwrap_or_default();
            solve_qp(inst, point, norm, &settings)?
        }
        InstanceData::Lcp { inst, point, norm } => {
            let case = match args.case {
                Some(c) => c.into(),
                None => infer_case(point)?,
            };
            let default = if case == LcpCase::C { NormChoice::L1 } else { NormChoice::L2 };
            let norm = args.norm.map(Into::into).or(*norm).unwrap_or(default);
            solve_lcp(inst, point, case, norm, &settings, args)?
        }
    };
    file.result = Some(outcome.result);
    write_output(args.output.as_deref(), &file.to_json_pretty())?;
    eprintln!("{}", outcome.summary);
    Ok(if !outcome.optimal {
        Exit::NonOptimal
    } else if !outcome.verified {
        Exit::Verification
    } else {
        Exit::Success
    })
}

fn result_matrix(perturbed: &Value, key: &str, n: usize) -> Result<DMatrix<f64>> {
    let r: Vec<Vec<f64>> = serde_json::from_value(perturbed.get(key).cloned().unwrap_or(Value::Null))
        .with_context(|| format!("result.perturbed.{key} must be an array of numeric rows"))?;
    ensure!(r.len() == n && r.iter().all(|row| row.len() == n), "result.perturbed.{key} must be {n}x{n}");
    Ok(DMatrix::from_row_iterator(n, n, r.into_iter().flatten()))
}

fn result_vector(value: Option<&Value>, what: &str, n: usize) -> Result<DVector<f64>> {
    let v: Vec<f64> = serde_json::from_value(value.cloned().unwrap_or(Value::Null))
        .with_context(|| format!("{what} must be an array of numbers"))?;
    ensure!(v.len() == n, "{what} must have length {n}");
    Ok(DVector::from_vec(v))
}

pub fn verify(args: &VerifyArgs) -> Result<Exit> {
    let (file, data) = read_instance(&args.input)?;
    ensure!(args.tol.is_finite() && args.tol > 0.0, "--tol must be positive");
    let result = file.result.as_ref();
    let perturbed = result.and_then(|r| r.get("perturbed"));
    let n = file.n;
    let (report, ok, what) = match &data {
        InstanceData::Qp { inst, point, .. } => {
            ensure!(args.case.is_none(), "--case applies to lcp instances only");
            let inst = match perturbed {
                Some(p) => inst.with_objective(result_matrix(p, "Q", n)?, result_vector(p.get("c"), "result.perturbed.c", n)?)?,
                None => inst.clone(),
            };
            let x0 = point.x0.as_ref().context("qp instance is missing `x0`")?;
            let cert = verify_kkt_point(&inst, x0, args.tol)?;
            (serde_json::to_value(&cert)?, cert.is_kkt, "a KKT point")
        }
        InstanceData::Lcp { inst, point, .. } => {
            let inst = match perturbed {
                Some(p) => LcpInstance::new(result_matrix(p, "M", n)?, result_vector(p.get("q"), "result.perturbed.q", n)?)?,
                None => inst.clone(),
            };
            let from_result = result.and_then(|r| r.pointer("/certificate/x"));
            let case = args.case.map(Into::into);
            let x = match (case, from_result) {
                (Some(LcpCase::C), None) => bail!("case (c) verification needs result.certificate.x"),
                (Some(LcpCase::C), Some(v)) | (None, Some(v)) => result_vector(Some(v), "result.certificate.x", n)?,
                _ => point.x0.clone().context("lcp verification needs `x0` or result.certificate.x")?,
            };
            let s = match (&point.s0, case) {
                (None, Some(LcpCase::B | LcpCase::C)) => bail!("this case needs `s0`"),
                (Some(s0), Some(LcpCase::B | LcpCase::C) | None) => s0.clone(),
                _ => inst.slack(&x),
            };
            let check = verify_lcp_solution(&inst, &x, &s, args.tol)?;
            (serde_json::to_value(check)?, check.ok, "an LCP solution")
        }
    };
    let mut out = json!({ "verified": ok, "tol": args.tol, "used_perturbed_data": perturbed.is_some() });
    out["details"] = report;
    println!("{}", serde_json::to_string_pretty(&out)?);
    if ok {
        eprintln!("verified: the point is {what}");
        Ok(Exit::Success)
    } else {
        eprintln!("not {what}");
        Ok(Exit::Verification)
    }
}

pub fn generate(args: &GenerateArgs) -> Result<Exit> {
    let norm = args.norm.map(Into::into);
    let file = match args.kind {
        KindArg::Qp => {
            let (inst, pt) = random_qp(args.n, args.m, args.seed)?;
            InstanceFile::from_qp(&inst, &pt, norm)
        }
        KindArg::Lcp => {
            let (inst, pt) = random_lcp(args.n, args.seed, args.case.into())?;
            InstanceFile::from_lcp(&inst, &pt, norm)
        }
    };
    write_output(args.output.as_deref(), &file.to_json_pretty())?;
    Ok(Exit::Success)
}

pub fn bench(args: &BenchArgs) -> Result<Exit> {
    let mut cfg = BenchConfig {
        settings: settings(&args.solver)?,
        seeds: (0..3).map(|k| args.seed.wrapping_add(k)).collect(),
        ..BenchConfig::default()
    };
    if let Some(n) = args.n {
        ensure!(n > 0, "--n must be positive");
        cfg.sizes = vec![n];
    }
    let rows = run_scaling_suite(&cfg);
    print!("{}", render_table(&rows));
    if let Some(path) = &args.output {
        fs::write(path, to_csv(&rows)).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(if rows.iter().all(|r| r.status == "optimal") {
        Exit::Success
    } else {
        Exit::NonOptimal
    })
}
