//! Lifting of the inverse problems into standard-form convex programs.
//!
//! All three convex inverse problems share one shape. With `X` the change to
//! the matrix data and `z` the change to the vector data, the target point
//! `x0` must satisfy
//!
//! ```text
//!     s + X x0 + z (+ Aᵀy) = rhs,   x0ᵀs = 0,   s ≥ 0
//! ```
//!
//! where `rhs` is `Qx0 + c` (QP), `Mx0 + q` (LCP, `x0` given) or
//! `Mx0 + q - s0` (LCP, pair given, `s` fixed to zero). `X x0` is linear in
//! the rows of `X`: it equals the block-diagonal operator with `x0ᵀ` in each
//! block applied to `vec(Xᵀ)`. The free vector `w = (vec(Xᵀ), z, y)` is split
//! into nonnegative parts, and every `s_i` with `x0_i > 0` is fixed to zero
//! and dropped, which leaves
//!
//! ```text
//!     min ½uᵀHu + gᵀu   s.t.  Eu = d,  u = (s_free, w⁺, w⁻) ≥ 0.
//! ```

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::error::{dim_err, Error, Result};
use crate::instances::{
    validate_qp_with_tol, LcpInstance, NormChoice, QpInstance, TOL_COMP, TOL_FEAS,
};
use crate::ipm::{self, ConvexQp, Solution, SolveReport, SolverSettings};

/// Stacks the rows of `x`: entry `n*i + j` is `x[(i, j)]`.
pub fn vec_transpose(x: &DMatrix<f64>) -> DVector<f64> {
    assert!(x.is_square(), "vec_transpose needs a square matrix");
    DVector::from_row_slice(x.transpose().as_slice())
}

/// Inverse of [`vec_transpose`].
pub fn unvec_transpose(v: &[f64], n: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), n * n);
    DMatrix::from_row_slice(n, n, v)
}

/// Applies the `n × n²` block-diagonal matrix whose `i`-th row holds `x0ᵀ`
/// in columns `n*i .. n*i + n`, without forming it.
pub fn apply_block_diag(x0: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
    let n = x0.len();
    assert_eq!(v.len(), n * n, "block operator needs a vector of length n²");
    DVector::from_iterator(
        n,
        (0..n).map(|i| v.rows(n * i, n).dot(x0)),
    )
}

/// Canonical split `w = w⁺ - w⁻` with disjoint supports.
pub fn split_signed(w: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    (w.map(|v| v.max(0.0)), w.map(|v| (-v).max(0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProblemKind {
    /// KKT point of a general QP; `(Q, c)` perturbed.
    Iqp,
    /// LCP with `x0` given.
    IlcpA,
    /// LCP with the complementary pair `(x0, s0)` given.
    IlcpB,
}

/// Where each piece of the inverse problem lives inside the lifted vector,
/// plus the original data needed to rebuild the perturbed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryMap {
    pub kind: ProblemKind,
    pub norm: NormChoice,
    n: usize,
    /// Multipliers for `Ax = b` (0 for the LCP cases).
    m: usize,
    /// Original coordinate of every `s` variable kept in `u`.
    s_vars: Vec<usize>,
    base_matrix: DMatrix<f64>,
    base_vector: DVector<f64>,
    x0: DVector<f64>,
    s0: Option<DVector<f64>>,
    rhs: DVector<f64>,
    constraint_t: Option<DMatrix<f64>>,
}

impl RecoveryMap {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Length of `w = (vec(Xᵀ), z, y)`.
    pub fn lifted_len(&self) -> usize {
        self.n * self.n + self.n + self.m
    }

    pub fn s_vars(&self) -> &[usize] {
        &self.s_vars
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    /// Right-hand side of the lifted equality system.
    pub fn rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn plus_offset(&self) -> usize {
        self.s_vars.len()
    }

    pub fn minus_offset(&self) -> usize {
        self.s_vars.len() + self.lifted_len()
    }

    pub fn num_vars(&self) -> usize {
        self.s_vars.len() + 2 * self.lifted_len()
    }

    /// `w⁺ - w⁻` read out of `u`.
    pub fn signed_lifted(&self, u: &DVector<f64>) -> DVector<f64> {
        let len = self.lifted_len();
        u.rows(self.plus_offset(), len) - u.rows(self.minus_offset(), len)
    }

    /// Full-length `s` with the eliminated coordinates at zero.
    pub fn slack(&self, u: &DVector<f64>) -> DVector<f64> {
        let mut s = DVector::zeros(self.n);
        for (k, &i) in self.s_vars.iter().enumerate() {
            s[i] = u[k];
        }
        s
    }

    /// Lifted vector for the given pieces, with a canonical split.
    ///
    /// Only the entries of `s` that are variables are read.
    pub fn encode(
        &self,
        x: &DMatrix<f64>,
        z: &DVector<f64>,
        y: Option<&DVector<f64>>,
        s: &DVector<f64>,
    ) -> DVector<f64> {
        self.encode_shifted(x, z, y, s, 0.0)
    }

    fn encode_shifted(
        &self,
        x: &DMatrix<f64>,
        z: &DVector<f64>,
        y: Option<&DVector<f64>>,
        s: &DVector<f64>,
        shift: f64,
    ) -> DVector<f64> {
        let n = self.n;
        let mut w = DVector::zeros(self.lifted_len());
        w.rows_mut(0, n * n).copy_from(&vec_transpose(x));
        w.rows_mut(n * n, n).copy_from(z);
        if let Some(y) = y {
            w.rows_mut(n * n + n, self.m).copy_from(y);
        }
        let (plus, minus) = split_signed(&w);
        let mut u = DVector::zeros(self.num_vars());
        for (k, &i) in self.s_vars.iter().enumerate() {
            u[k] = s[i];
        }
        let len = self.lifted_len();
        u.rows_mut(self.plus_offset(), len).copy_from(&plus.add_scalar(shift));
        u.rows_mut(self.minus_offset(), len).copy_from(&minus.add_scalar(shift));
        u
    }
}

/// Standard-form convex program plus the map back to a perturbation.
#[derive(Debug, Clone)]
pub struct StandardFormProblem {
    pub qp: ConvexQp,
    pub recovery: RecoveryMap,
}

impl StandardFormProblem {
    /// Dense dump of `H, g, E, d` for fixtures and debugging.
    pub fn to_debug_json(&self) -> serde_json::Value {
        let rows = |a: &DMatrix<f64>| -> Vec<Vec<f64>> {
            a.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        json!({
            "kind": self.recovery.kind,
            "norm": self.recovery.norm,
            "n": self.recovery.n,
            "m": self.recovery.m,
            "s_vars": self.recovery.s_vars,
            "H": rows(&self.qp.h),
            "g": self.qp.g.as_slice(),
            "E": rows(&self.qp.e),
            "d": self.qp.d.as_slice(),
        })
    }

    /// A point with `u > 0` and `Eu = d`.
    ///
    /// Kept `s` entries are set to one, `X` and `y` to zero, `z` absorbs
    /// what is left of the right-hand side, and both sign blocks are lifted
    /// by one.
    pub fn strictly_feasible_point(&self) -> DVector<f64> {
        let map = &self.recovery;
        let mut s = DVector::zeros(map.n);
        for &i in &map.s_vars {
            s[i] = 1.0;
        }
        let z = &map.rhs - &s;
        let y = (map.m > 0).then(|| DVector::zeros(map.m));
        map.encode_shifted(&DMatrix::zeros(map.n, map.n), &z, y.as_ref(), &s, 1.0)
    }
}

/// Inverse KKT problem for a QP at `x0` (which must lie in `{Ax = b, x ≥ 0}`).
pub fn reduce_iqp(inst: &QpInstance, x0: &DVector<f64>, norm: NormChoice) -> Result<StandardFormProblem> {
    let report = validate_qp_with_tol(inst, x0, TOL_FEAS)?;
    if !report.feasible_primal {
        return Err(Error::InvalidInput(format!(
            "x0 is not feasible for the QP: {}",
            report.messages.join("; ")
        )));
    }
    let map = RecoveryMap {
        kind: ProblemKind::Iqp,
        norm,
        n: inst.n(),
        m: inst.m(),
        s_vars: support_complement(x0),
        base_matrix: inst.q().clone(),
        base_vector: inst.c().clone(),
        x0: x0.clone(),
        s0: None,
        rhs: inst.shifted_cost(x0),
        constraint_t: Some(inst.a().transpose()),
    };
    Ok(assemble(map))
}

/// Inverse LCP, case (a): `x0 ≥ 0` given, `s ≥ 0` chosen freely.
pub fn reduce_ilcp_a(inst: &LcpInstance, x0: &DVector<f64>, norm: NormChoice) -> Result<StandardFormProblem> {
    check_nonneg(inst.n(), x0, "x0")?;
    let map = RecoveryMap {
        kind: ProblemKind::IlcpA,
        norm,
        n: inst.n(),
        m: 0,
        s_vars: support_complement(x0),
        base_matrix: inst.m().clone(),
        base_vector: inst.q().clone(),
        x0: x0.clone(),
        s0: None,
        rhs: inst.slack(x0),
        constraint_t: None,
    };
    Ok(assemble(map))
}

/// Inverse LCP, case (b): complementary pair `(x0, s0)` given.
pub fn reduce_ilcp_b(
    inst: &LcpInstance,
    x0: &DVector<f64>,
    s0: &DVector<f64>,
    norm: NormChoice,
) -> Result<StandardFormProblem> {
    check_nonneg(inst.n(), x0, "x0")?;
    check_nonneg(inst.n(), s0, "s0")?;
    let comp = x0.dot(s0);
    if comp.abs() > TOL_COMP {
        return Err(Error::InvalidInput(format!("(x0, s0) is not complementary: x0ᵀs0 = {comp:e}")));
    }
    let map = RecoveryMap {
        kind: ProblemKind::IlcpB,
        norm,
        n: inst.n(),
        m: 0,
        s_vars: Vec::new(),
        base_matrix: inst.m().clone(),
        base_vector: inst.q().clone(),
        x0: x0.clone(),
        s0: Some(s0.clone()),
        rhs: inst.slack(x0) - s0,
        constraint_t: None,
    };
    Ok(assemble(map))
}

fn check_nonneg(n: usize, v: &DVector<f64>, name: &str) -> Result<()> {
    if v.len() != n {
        return dim_err(format!("{name} has length {}, expected {n}", v.len()));
    }
    if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidInput(format!("{name} must be finite and nonnegative")));
    }
    Ok(())
}

/// Coordinates where `x0` is exactly zero; only these keep an `s` variable.
fn support_complement(x0: &DVector<f64>) -> Vec<usize> {
    (0..x0.len()).filter(|&i| x0[i] <= 0.0).collect()
}

fn assemble(map: RecoveryMap) -> StandardFormProblem {
    let n = map.n;
    let len = map.lifted_len();
    let nvars = map.num_vars();
    let (po, mo) = (map.plus_offset(), map.minus_offset());
    // vec(Xᵀ) and z are charged; y never is
    let charged = n * n + n;

    let mut e = DMatrix::zeros(n, nvars);
    for (k, &i) in map.s_vars.iter().enumerate() {
        e[(i, k)] = 1.0;
    }
    for i in 0..n {
        let mut put = |col: usize, v: f64| {
            e[(i, po + col)] = v;
            e[(i, mo + col)] = -v;
        };
        for j in 0..n {
            put(n * i + j, map.x0[j]);
        }
        put(n * n + i, 1.0);
        if let Some(at) = &map.constraint_t {
            for k in 0..map.m {
                put(n * n + n + k, at[(i, k)]);
            }
        }
    }

    let mut h = DMatrix::zeros(nvars, nvars);
    let mut g = DVector::zeros(nvars);
    match (map.norm, map.kind) {
        (NormChoice::L2, ProblemKind::Iqp) => {
            // ½ w̄ᵀ [2P -2P; -2P 2P] w̄ = ‖w_charged‖²
            for l in 0..charged {
                h[(po + l, po + l)] = 2.0;
                h[(mo + l, mo + l)] = 2.0;
                h[(po + l, mo + l)] = -2.0;
                h[(mo + l, po + l)] = -2.0;
            }
        }
        (NormChoice::L2, _) => {
            // ½ w̄ᵀ(2I)w̄ = w̄ᵀw̄
            for l in 0..len {
                h[(po + l, po + l)] = 2.0;
                h[(mo + l, mo + l)] = 2.0;
            }
        }
        (NormChoice::L1, _) => {
            for l in 0..charged {
                g[po + l] = 1.0;
                g[mo + l] = 1.0;
            }
        }
    }

    let qp = ConvexQp::new(h, g, e, map.rhs.clone()).expect("lifted dimensions are consistent by construction");
    StandardFormProblem { qp, recovery: map }
}

/// Which multipliers certify the perturbed problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Equality multipliers (QP only).
    pub y: Option<DVector<f64>>,
    pub s: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub kind: ProblemKind,
    pub norm: NormChoice,
    /// Change to the matrix data (`Q - Q̄` or `M - M'`).
    pub x: DMatrix<f64>,
    /// Change to the vector data (`c - c̄` or `q - q'`).
    pub z: DVector<f64>,
    pub perturbed_matrix: DMatrix<f64>,
    pub perturbed_vector: DVector<f64>,
    pub objective: f64,
    pub certificate: Certificate,
}

impl Perturbation {
    /// Builds the perturbed data and objective from `(X, z)`.
    pub fn from_parts(
        kind: ProblemKind,
        norm: NormChoice,
        base_matrix: &DMatrix<f64>,
        base_vector: &DVector<f64>,
        x: DMatrix<f64>,
        z: DVector<f64>,
        certificate: Certificate,
    ) -> Self {
        Self {
            kind,
            norm,
            perturbed_matrix: base_matrix - &x,
            perturbed_vector: base_vector - &z,
            objective: norm.measure(&x, &z),
            x,
            z,
            certificate,
        }
    }

    /// Objective under the other norm, for cross-route comparisons.
    pub fn measure(&self, norm: NormChoice) -> f64 {
        norm.measure(&self.x, &self.z)
    }
}

/// Reads `(X, z, y, s)` out of a lifted vector and rebuilds the perturbed data.
///
/// The objective is recomputed from `(X, z)`; the solver's own objective
/// value plays no part.
pub fn recover_perturbation(u: &DVector<f64>, map: &RecoveryMap) -> Perturbation {
    assert_eq!(u.len(), map.num_vars(), "lifted vector has the wrong length");
    let n = map.n;
    let w = map.signed_lifted(u);
    let x = unvec_transpose(&w.as_slice()[..n * n], n);
    let z = w.rows(n * n, n).into_owned();
    let certificate = match map.kind {
        ProblemKind::Iqp => Certificate {
            y: Some(w.rows(n * n + n, map.m).into_owned()),
            s: map.slack(u),
        },
        ProblemKind::IlcpA => Certificate { y: None, s: map.slack(u) },
        ProblemKind::IlcpB => Certificate {
            y: None,
            s: map.s0.clone().expect("case (b) map carries s0"),
        },
    };
    Perturbation::from_parts(map.kind, map.norm, &map.base_matrix, &map.base_vector, x, z, certificate)
}

/// Solves a lifted problem and reads the perturbation back out.
pub fn solve_reduction(
    problem: &StandardFormProblem,
    settings: &SolverSettings,
) -> Result<(Perturbation, Solution, SolveReport)> {
    let (sol, report) = ipm::solve(&problem.qp, settings)?;
    Ok((recover_perturbation(&sol.u, &problem.recovery), sol, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{random_lcp, random_qp, LcpCase};
    use crate::linalg::is_psd;
    use nalgebra::{dmatrix, dvector};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn vec_transpose_stacks_rows() {
        assert_eq!(vec_transpose(&dmatrix![1.0, 2.0; 3.0, 4.0]), dvector![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(vec_transpose(&DMatrix::identity(2, 2)), dvector![1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn block_operator_examples() {
        let v = dvector![1.0, 2.0, 3.0, 4.0];
        assert_eq!(apply_block_diag(&dvector![1.0, 0.0], &v), dvector![1.0, 3.0]);
        assert_eq!(apply_block_diag(&dvector![0.0, 0.0], &v), dvector![0.0, 0.0]);
    }

    /// The n × n² operator, written out.
    fn materialize_block_diag(x0: &DVector<f64>) -> DMatrix<f64> {
        let n = x0.len();
        let mut op = DMatrix::zeros(n, n * n);
        for i in 0..n {
            for j in 0..n {
                op[(i, n * i + j)] = x0[j];
            }
        }
        op
    }

    #[test]
    fn block_operator_shape_and_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x0 = DVector::from_fn(3, |_, _| rng.random_range(0.0..2.0));
        assert_eq!(materialize_block_diag(&x0).shape(), (3, 9));
        for _ in 0..50 {
            let x = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let direct = &x * &x0;
            // brute force: each row of X dotted with x0
            let brute = DVector::from_fn(3, |i, _| (0..3).map(|j| x[(i, j)] * x0[j]).sum());
            let via_op = apply_block_diag(&x0, &vec_transpose(&x));
            let via_dense = materialize_block_diag(&x0) * vec_transpose(&x);
            assert!((&via_op - &brute).amax() < 1e-14);
            assert!((&via_dense - &direct).amax() < 1e-14);
        }
    }

    #[test]
    fn split_examples() {
        let (p, m) = split_signed(&dvector![3.0, -2.0]);
        assert_eq!((p, m), (dvector![3.0, 0.0], dvector![0.0, 2.0]));
        let (p, m) = split_signed(&dvector![0.0, 0.0]);
        assert_eq!((p, m), (dvector![0.0, 0.0], dvector![0.0, 0.0]));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn split_recombines(w in proptest::collection::vec(-1e6f64..1e6, 0..12)) {
            let w = DVector::from_vec(w);
            let (p, m) = split_signed(&w);
            prop_assert_eq!(&p - &m, w);
            prop_assert!(p.iter().zip(m.iter()).all(|(a, b)| a * b == 0.0 && *a >= 0.0 && *b >= 0.0));
        }
    }

    fn nnls_example() -> (QpInstance, DVector<f64>) {
        let inst = QpInstance::new(DMatrix::zeros(2, 2), dvector![1.0, -1.0], dmatrix![1.0, 1.0], dvector![1.0]).unwrap();
        (inst, dvector![1.0, 0.0])
    }

    #[test]
    fn iqp_dimensions() {
        let (inst, x0) = nnls_example();
        let p = reduce_iqp(&inst, &x0, NormChoice::L2).unwrap();
        // 2(n² + n + m) lifted coordinates plus one s variable for the zero of x0
        assert_eq!(p.recovery.lifted_len(), 7);
        assert_eq!(2 * p.recovery.lifted_len() + inst.n(), 16);
        assert_eq!(p.qp.num_vars(), 15);
        assert_eq!(p.recovery.s_vars(), &[1]);

        let positive = reduce_iqp(&inst, &dvector![0.5, 0.5], NormChoice::L2).unwrap();
        assert!(positive.recovery.s_vars().is_empty());
        assert_eq!(positive.qp.num_constraints(), 2);
        assert_eq!(positive.qp.num_vars(), 14);
    }

    #[test]
    fn iqp_rejects_infeasible_point() {
        let (inst, _) = nnls_example();
        assert!(matches!(reduce_iqp(&inst, &dvector![1.0, 1.0], NormChoice::L2), Err(Error::InvalidInput(_))));
        assert!(matches!(reduce_iqp(&inst, &dvector![2.0, -1.0], NormChoice::L2), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn elimination_follows_support() {
        let (inst, _) = random_lcp(4, 3, LcpCase::A).unwrap();
        let p = reduce_ilcp_a(&inst, &DVector::zeros(4), NormChoice::L2).unwrap();
        assert_eq!(p.recovery.s_vars().len(), 4);
        let p = reduce_ilcp_a(&inst, &DVector::from_element(4, 0.3), NormChoice::L2).unwrap();
        assert!(p.recovery.s_vars().is_empty());
        let p = reduce_ilcp_b(&inst, &dvector![1.0, 0.0, 0.0, 0.0], &dvector![0.0, 1.0, 0.0, 2.0], NormChoice::L2).unwrap();
        assert!(p.recovery.s_vars().is_empty());
        assert_eq!(p.qp.num_vars(), 2 * (16 + 4));
    }

    #[test]
    fn ilcp_b_rejects_non_complementary() {
        let inst = LcpInstance::new(dmatrix![0.0, 1.0; 1.0, 0.0], dvector![0.0, 0.0]).unwrap();
        let r = reduce_ilcp_b(&inst, &dvector![1.0, 0.0], &dvector![1.0, 0.0], NormChoice::L2);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    fn all_reductions(seed: u64, n: usize) -> Vec<StandardFormProblem> {
        let m = 1 + (seed as usize % n);
        let (qp, qpt) = random_qp(n, m, seed).unwrap();
        let (la, pa) = random_lcp(n, seed, LcpCase::A).unwrap();
        let (lb, pb) = random_lcp(n, seed, LcpCase::B).unwrap();
        let mut out = Vec::new();
        for norm in [NormChoice::L2, NormChoice::L1] {
            out.push(reduce_iqp(&qp, qpt.x0.as_ref().unwrap(), norm).unwrap());
            out.push(reduce_ilcp_a(&la, pa.x0.as_ref().unwrap(), norm).unwrap());
            out.push(reduce_ilcp_b(&lb, pb.x0.as_ref().unwrap(), pb.s0.as_ref().unwrap(), norm).unwrap());
        }
        out
    }

    #[test]
    fn lifted_hessian_is_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for seed in 0..4 {
            for p in all_reductions(seed, 3) {
                assert!(is_psd(&p.qp.h, 1e-12));
                for _ in 0..2500 {
                    let u = DVector::from_fn(p.qp.num_vars(), |_, _| rng.random_range(-1.0..1.0));
                    assert!(u.dot(&(&p.qp.h * &u)) >= -1e-12);
                }
            }
        }
    }

    #[test]
    fn slater_point_is_strictly_feasible() {
        for seed in 0..10 {
            for p in all_reductions(seed, 4) {
                let u = p.strictly_feasible_point();
                assert!(u.min() > 0.0);
                let r = &p.qp.e * &u - &p.qp.d;
                assert!(r.amax() < 1e-12 * (1.0 + p.qp.d.amax()), "residual {}", r.amax());
            }
        }
    }

    #[test]
    fn objective_matches_recovered_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for seed in 0..6 {
            for p in all_reductions(seed, 3) {
                let map = &p.recovery;
                for _ in 0..20 {
                    let x = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
                    let z = DVector::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
                    let y = DVector::from_fn(map.m, |_, _| rng.random_range(-1.0..1.0));
                    let s = DVector::from_fn(3, |_, _| rng.random_range(0.0..1.0));
                    let u = map.encode(&x, &z, Some(&y), &s);
                    let pert = recover_perturbation(&u, map);
                    assert!((&pert.x - &x).amax() < 1e-15);
                    assert!((&pert.z - &z).amax() < 1e-15);
                    let expected = map.norm.measure(&x, &z);
                    assert!((p.qp.objective(&u) - expected).abs() < 1e-12);

                    // a non-canonical split changes nothing once recanonicalized
                    let shifted = u.add_scalar(0.25);
                    let canon = map.encode(&recover_perturbation(&shifted, map).x, &pert.z, Some(&y), &s);
                    assert!((p.qp.objective(&canon) - expected).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn zero_encoding_recovers_original_data() {
        let (inst, x0) = nnls_example();
        let p = reduce_iqp(&inst, &x0, NormChoice::L2).unwrap();
        let pert = recover_perturbation(&DVector::zeros(p.qp.num_vars()), &p.recovery);
        assert_eq!(pert.objective, 0.0);
        assert_eq!(&pert.perturbed_matrix, inst.q());
        assert_eq!(&pert.perturbed_vector, inst.c());
    }

    #[test]
    fn debug_dump_has_dense_blocks() {
        let (inst, x0) = nnls_example();
        let p = reduce_iqp(&inst, &x0, NormChoice::L1).unwrap();
        let v = p.to_debug_json();
        assert_eq!(v["H"].as_array().unwrap().len(), 15);
        assert_eq!(v["E"].as_array().unwrap().len(), 2);
        assert_eq!(v["d"].as_array().unwrap().len(), 2);
        assert_eq!(v["norm"], "l1");
    }
}
