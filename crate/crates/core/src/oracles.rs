//! Independent ground truth for the interior-point pipeline.
//!
//! The lifted constraints decouple by rows: row `i` reads
//! `X_{i,·} x0 + z_i = r_i` for a residual `r_i` that does not involve `X`
//! or `z`. The smallest `(X_{i,·}, z_i)` in the Euclidean sense meeting it is
//! `α_i (x0ᵀ, 1)` with `α_i = r_i / (‖x0‖² + 1)`, costing
//! `r_i² / (‖x0‖² + 1)`. For the LCP cases the best `s` is then explicit;
//! for the QP case what is left is a nonnegative least-squares problem in
//! `(y, s)`, solved here by enumerating active sets.
//!
//! The forward checks ([`verify_kkt_point`], [`verify_lcp_solution`]) test a
//! point against data directly and never look at how the data was produced.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{dim_err, Error, Result};
use crate::instances::{validate_qp_with_tol, LcpInstance, NormChoice, QpInstance, TOL_FEAS};
use crate::ipm::{self, ConvexQp, SolverSettings, Status};
use crate::linalg::{inf_norm, lstsq};
use crate::reductions::{Certificate, Perturbation, ProblemKind};

/// Largest number of zero coordinates of `x0` the enumeration accepts.
pub const MAX_ENUMERATED_ZEROS: usize = 20;

/// Cost on `s` in the feasibility LP; keeps its optimal set bounded.
const PHASE_ONE_SLACK_COST: f64 = 1e-9;

/// Outcome of checking whether `x0` is a KKT point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    pub y: Vec<f64>,
    pub s: Vec<f64>,
    /// `‖Aᵀy + s - Qx0 - c‖∞`
    pub residual: f64,
    /// `x0ᵀs`
    pub comp: f64,
    /// `‖Ax0 - b‖∞`
    pub primal_residual: f64,
    pub is_kkt: bool,
}

/// Rank-one rows `α_i (x0ᵀ, 1)` solving `X x0 + z = r` with least norm.
fn min_norm_rows(x0: &DVector<f64>, r: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let alpha = r / (x0.norm_squared() + 1.0);
    (&alpha * x0.transpose(), alpha)
}

/// Exact L2 optimum of the inverse LCP, case (a) (`s0 = None`) or case (b).
pub fn closed_form_ilcp(inst: &LcpInstance, x0: &DVector<f64>, s0: Option<&DVector<f64>>) -> Result<Perturbation> {
    let n = inst.n();
    if x0.len() != n || s0.is_some_and(|s| s.len() != n) {
        return dim_err(format!("candidate vectors must have length {n}"));
    }
    if x0.iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidInput("x0 must be nonnegative".into()));
    }
    let c = inst.slack(x0);
    let (kind, r, s) = match s0 {
        Some(s0) => (ProblemKind::IlcpB, &c - s0, s0.clone()),
        None => {
            // s_i is free (≥ 0) only off the support of x0; it soaks up what it can.
            let s = DVector::from_fn(n, |i, _| if x0[i] > 0.0 { 0.0 } else { c[i].max(0.0) });
            (ProblemKind::IlcpA, &c - &s, s)
        }
    };
    let (x, z) = min_norm_rows(x0, &r);
    Ok(Perturbation::from_parts(
        kind,
        NormChoice::L2,
        inst.m(),
        inst.q(),
        x,
        z,
        Certificate { y: None, s },
    ))
}

/// Exact L2 optimum of the inverse QP by active-set enumeration.
///
/// Minimizes `‖Qx0 + c - Aᵀy - s‖²` over free `y` and `s ≥ 0` supported on
/// the zeros of `x0`, trying every support of `s` (2^k subsets for `k`
/// zeros). A minimal-support optimum has independent columns, so its
/// unconstrained least-squares solve is unique and shows up as a feasible
/// candidate.
pub fn nnls_oracle_iqp(inst: &QpInstance, x0: &DVector<f64>) -> Result<Perturbation> {
    let report = validate_qp_with_tol(inst, x0, TOL_FEAS)?;
    if !report.feasible_primal {
        return Err(Error::InvalidInput("x0 is not feasible for the QP".into()));
    }
    let zeros: Vec<usize> = (0..inst.n()).filter(|&i| x0[i] <= 0.0).collect();
    if zeros.len() > MAX_ENUMERATED_ZEROS {
        return Err(Error::Scale(format!(
            "{} zero coordinates in x0; enumeration is capped at {MAX_ENUMERATED_ZEROS}",
            zeros.len()
        )));
    }
    let n = inst.n();
    let m = inst.m();
    let rhs = inst.shifted_cost(x0);
    let at = inst.a().transpose();

    let mut best: Option<(f64, DVector<f64>, DVector<f64>)> = None;
    for mask in 0u32..(1u32 << zeros.len()) {
        let active: Vec<usize> = zeros.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i).collect();
        let mut cols = DMatrix::zeros(n, m + active.len());
        cols.columns_mut(0, m).copy_from(&at);
        for (k, &i) in active.iter().enumerate() {
            cols[(i, m + k)] = 1.0;
        }
        let sol = lstsq(&cols, &rhs);
        if active.iter().enumerate().any(|(k, _)| sol[m + k] < -1e-12) {
            continue;
        }
        let y = sol.rows(0, m).into_owned();
        let mut s = DVector::zeros(n);
        for (k, &i) in active.iter().enumerate() {
            s[i] = sol[m + k].max(0.0);
        }
        let value = (&rhs - &at * &y - &s).norm_squared();
        if best.as_ref().is_none_or(|(v, _, _)| value < *v) {
            best = Some((value, y, s));
        }
    }
    let (_, y, s) = best.expect("the empty support is always feasible");
    let r = &rhs - &at * &y - &s;
    let (x, z) = min_norm_rows(x0, &r);
    Ok(Perturbation::from_parts(
        ProblemKind::Iqp,
        NormChoice::L2,
        inst.q(),
        inst.c(),
        x,
        z,
        Certificate { y: Some(y), s },
    ))
}

/// Orthonormal basis of the null space of `a` (as columns).
fn null_space(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.ncols();
    // pad Aᵀ to square so the SVD returns a full left basis
    let mut padded = DMatrix::zeros(n, n.max(a.nrows()));
    padded.columns_mut(0, a.nrows()).copy_from(&a.transpose());
    let svd = padded.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let tol = 1e-10 * smax.max(1.0) * n as f64;
    let cols: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] <= tol).collect();
    DMatrix::from_fn(n, cols.len(), |i, k| u[(i, cols[k])])
}

/// Decides whether `x0` is a KKT point of the QP.
///
/// Looks for `s ≥ 0` with `s_i = 0` on the support of `x0` such that
/// `Qx0 + c - s` lies in the range of `Aᵀ`. With `Z` an orthonormal basis of
/// `null(A)` that is the LP
///
/// ```text
///     min ε·Σs + Σp + Σq   s.t.  Zᵀs + p - q = Zᵀ(Qx0 + c),  (s, p, q) ≥ 0,
/// ```
///
/// solved with the interior-point method; every variable carries cost, so
/// the optimal set is bounded. `y` is then recovered by least squares and
/// the KKT residuals are evaluated directly.
pub fn verify_kkt_point(inst: &QpInstance, x0: &DVector<f64>, tol: f64) -> Result<KktCertificate> {
    if x0.len() != inst.n() {
        return dim_err(format!("x0 has length {}, expected {}", x0.len(), inst.n()));
    }
    let n = inst.n();
    let rhs = inst.shifted_cost(x0);
    let free: Vec<usize> = (0..n).filter(|&i| x0[i] <= 0.0).collect();
    let z = null_space(inst.a());
    let r = z.ncols();

    let mut s = DVector::zeros(n);
    if r > 0 {
        let k = free.len();
        let nvars = k + 2 * r;
        let mut e = DMatrix::zeros(r, nvars);
        for (col, &i) in free.iter().enumerate() {
            e.column_mut(col).copy_from(&z.row(i).transpose());
        }
        e.view_mut((0, k), (r, r)).fill_with_identity();
        e.view_mut((0, k + r), (r, r)).copy_from(&(-DMatrix::<f64>::identity(r, r)));
        let d = z.tr_mul(&rhs);
        let mut g = DVector::from_element(nvars, 1.0);
        g.rows_mut(0, k).fill(PHASE_ONE_SLACK_COST);
        let lp = ConvexQp::linear(g, e, d)?;
        let (sol, report) = ipm::solve(&lp, &SolverSettings::default())?;
        if sol.status != Status::Optimal {
            // the certificate below is checked directly, so a rough s can
            // only make the answer more conservative
            log::warn!(
                "feasibility LP stopped with {:?} after {} iterations",
                sol.status,
                report.iterations
            );
        }
        for (col, &i) in free.iter().enumerate() {
            s[i] = sol.u[col];
        }
    }

    let at = inst.a().transpose();
    let y = lstsq(&at, &(&rhs - &s));
    let residual = inf_norm(&(&at * &y + &s - &rhs));
    let comp = x0.dot(&s);
    let primal_residual = inf_norm(&(inst.a() * x0 - inst.b()));
    let is_kkt = residual <= tol
        && s.min() >= -tol
        && comp.abs() <= tol
        && primal_residual <= tol
        && x0.min() >= -tol;
    Ok(KktCertificate {
        y: y.iter().copied().collect(),
        s: s.iter().copied().collect(),
        residual,
        comp,
        primal_residual,
        is_kkt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LcpCheck {
    pub ok: bool,
    /// `‖s - Mx - q‖∞`
    pub residual: f64,
    /// `min(x, s)`
    pub min_entry: f64,
    /// `xᵀs`
    pub comp: f64,
}

/// Whether `(x, s)` solves the LCP `(M, q)` to within `tol`.
pub fn verify_lcp_solution(inst: &LcpInstance, x: &DVector<f64>, s: &DVector<f64>, tol: f64) -> Result<LcpCheck> {
    let n = inst.n();
    if x.len() != n || s.len() != n {
        return dim_err(format!("x and s must have length {n}"));
    }
    let residual = inf_norm(&(s - inst.slack(x)));
    let min_entry = x.min().min(s.min());
    let comp = x.dot(s);
    Ok(LcpCheck {
        ok: residual <= tol && min_entry >= -tol && comp.abs() <= tol,
        residual,
        min_entry,
        comp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn case_a_single_coordinate() {
        let inst = LcpInstance::new(dmatrix![2.0], dvector![-1.0]).unwrap();
        let p = closed_form_ilcp(&inst, &dvector![1.0], None).unwrap();
        assert!((p.objective - 0.5).abs() < 1e-15);
        assert_eq!(p.perturbed_matrix, dmatrix![1.5]);
        assert_eq!(p.perturbed_vector, dvector![-1.5]);
        let check = verify_lcp_solution(
            &LcpInstance::new(p.perturbed_matrix.clone(), p.perturbed_vector.clone()).unwrap(),
            &dvector![1.0],
            &dvector![0.0],
            1e-12,
        )
        .unwrap();
        assert!(check.ok);
    }

    #[test]
    fn case_a_zero_point_with_nonnegative_q() {
        let inst = LcpInstance::new(dmatrix![1.0, -3.0; 2.0, 0.5], dvector![0.5, 2.0]).unwrap();
        let p = closed_form_ilcp(&inst, &dvector![0.0, 0.0], None).unwrap();
        assert_eq!(p.objective, 0.0);
        assert_eq!(p.certificate.s, dvector![0.5, 2.0]);
    }

    #[test]
    fn case_b_swap_matrix() {
        let inst = LcpInstance::new(dmatrix![0.0, 1.0; 1.0, 0.0], dvector![0.0, 0.0]).unwrap();
        let p = closed_form_ilcp(&inst, &dvector![1.0, 0.0], Some(&dvector![0.0, 2.0])).unwrap();
        assert!((p.objective - 0.5).abs() < 1e-15);
        assert_eq!(p.x, dmatrix![0.0, 0.0; -0.5, 0.0]);
        assert_eq!(p.z, dvector![0.0, -0.5]);
        assert_eq!(p.perturbed_matrix, dmatrix![0.0, 1.0; 1.5, 0.0]);
        assert_eq!(p.perturbed_vector, dvector![0.0, 0.5]);
    }

    fn nnls_example() -> QpInstance {
        QpInstance::new(DMatrix::zeros(2, 2), dvector![1.0, -1.0], dmatrix![1.0, 1.0], dvector![1.0]).unwrap()
    }

    #[test]
    fn nnls_worked_example() {
        let inst = nnls_example();
        let p = nnls_oracle_iqp(&inst, &dvector![1.0, 0.0]).unwrap();
        assert!((p.objective - 1.0).abs() < 1e-12);
        assert!((&p.x - dmatrix![0.5, 0.0; -0.5, 0.0]).amax() < 1e-12);
        assert!((&p.z - dvector![0.5, -0.5]).amax() < 1e-12);
        assert!((&p.perturbed_matrix - dmatrix![-0.5, 0.0; 0.5, 0.0]).amax() < 1e-12);
        assert!((&p.perturbed_vector - dvector![0.5, -0.5]).amax() < 1e-12);
        let y = p.certificate.y.as_ref().unwrap();
        assert!(y[0].abs() < 1e-12 && p.certificate.s.amax() < 1e-12);

        let perturbed = inst.with_objective(p.perturbed_matrix, p.perturbed_vector).unwrap();
        assert!(verify_kkt_point(&perturbed, &dvector![1.0, 0.0], 1e-8).unwrap().is_kkt);
        assert!(!verify_kkt_point(&inst, &dvector![1.0, 0.0], 1e-6).unwrap().is_kkt);
    }

    #[test]
    fn nnls_zero_at_kkt_point_and_square_a() {
        // convex sanity case: Q = I, c = 0, x0 = (0.5, 0.5), y = 0.5, s = 0
        let inst = QpInstance::new(DMatrix::identity(2, 2), dvector![0.0, 0.0], dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        let x0 = dvector![0.5, 0.5];
        let cert = verify_kkt_point(&inst, &x0, 1e-9).unwrap();
        assert!(cert.is_kkt);
        assert!((cert.y[0] - 0.5).abs() < 1e-9);
        let p = nnls_oracle_iqp(&inst, &x0).unwrap();
        assert!(p.objective < 1e-24);

        // A invertible: any cost is matched by some y, so nothing needs to change
        let x0 = dvector![1.0, 0.0];
        let a = dmatrix![1.0, 2.0; -1.0, 1.0];
        let b = &a * &x0;
        let square = QpInstance::new(dmatrix![1.0, -2.0; 0.0, 3.0], dvector![4.0, -1.0], a, b).unwrap();
        assert!(nnls_oracle_iqp(&square, &x0).unwrap().objective < 1e-20);
        assert!(verify_kkt_point(&square, &x0, 1e-9).unwrap().is_kkt);
    }

    #[test]
    fn enumeration_cap() {
        let n = MAX_ENUMERATED_ZEROS + 2;
        let mut a = DMatrix::zeros(1, n);
        a[(0, 0)] = 1.0;
        let inst = QpInstance::new(DMatrix::zeros(n, n), DVector::zeros(n), a, dvector![1.0]).unwrap();
        let mut x0 = DVector::zeros(n);
        x0[0] = 1.0;
        assert!(matches!(nnls_oracle_iqp(&inst, &x0), Err(Error::Scale(_))));
    }

    #[test]
    fn lcp_check_rejects_negative_slack() {
        let inst = LcpInstance::new(dmatrix![1.0, 0.0; 0.0, 1.0], dvector![1.0, -1.0]).unwrap();
        let x = DVector::zeros(2);
        let check = verify_lcp_solution(&inst, &x, &inst.q().clone(), 1e-9).unwrap();
        assert!(!check.ok);
        assert_eq!(check.min_entry, -1.0);
    }
}
