//! Problem instances, candidate points and their validation.

mod format;
mod generate;

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::linalg::inf_norm;

pub use format::{InstanceData, InstanceFile, ProblemType};
pub use generate::{random_lcp, random_qp};

/// Absolute ∞-norm tolerance for primal feasibility of a candidate point.
pub const TOL_FEAS: f64 = 1e-8;
/// Tolerance on `x0ᵀs0` for a complementary pair.
pub const TOL_COMP: f64 = 1e-10;

/// Data `(Q, c, A, b)` of `min ½xᵀQx + cᵀx  s.t. Ax = b, x ≥ 0`.
///
/// `Q` is a general square matrix; neither symmetry nor definiteness is
/// assumed.
#[derive(Debug, Clone, PartialEq)]
pub struct QpInstance {
    q: DMatrix<f64>,
    c: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
}

impl QpInstance {
    pub fn new(
        q: DMatrix<f64>,
        c: DVector<f64>,
        a: DMatrix<f64>,
        b: DVector<f64>,
    ) -> Result<Self> {
        let n = q.nrows();
        if n == 0 || q.ncols() != n {
            return dim_err(format!("Q must be a non-empty square matrix, got {}x{}", q.nrows(), q.ncols()));
        }
        if c.len() != n {
            return dim_err(format!("c has length {}, expected {n}", c.len()));
        }
        let m = a.nrows();
        if m == 0 {
            return dim_err("A must have at least one row");
        }
        if a.ncols() != n {
            return dim_err(format!("A has {} columns, expected {n}", a.ncols()));
        }
        if b.len() != m {
            return dim_err(format!("b has length {}, expected {m}", b.len()));
        }
        ensure_finite("Q", q.iter())?;
        ensure_finite("c", c.iter())?;
        ensure_finite("A", a.iter())?;
        ensure_finite("b", b.iter())?;
        Ok(Self { q, c, a, b })
    }

    pub fn n(&self) -> usize {
        self.q.nrows()
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn c(&self) -> &DVector<f64> {
        &self.c
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// `Qx0 + c`, the right-hand side the inverse problem has to match.
    pub fn shifted_cost(&self, x0: &DVector<f64>) -> DVector<f64> {
        &self.q * x0 + &self.c
    }

    /// Same constraints, different objective data.
    pub fn with_objective(&self, q: DMatrix<f64>, c: DVector<f64>) -> Result<Self> {
        Self::new(q, c, self.a.clone(), self.b.clone())
    }
}

/// Data `(M, q)` of the LCP `s = Mx + q, (x, s) ≥ 0, xᵀs = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LcpInstance {
    m: DMatrix<f64>,
    q: DVector<f64>,
}

impl LcpInstance {
    pub fn new(m: DMatrix<f64>, q: DVector<f64>) -> Result<Self> {
        let n = m.nrows();
        if n == 0 || m.ncols() != n {
            return dim_err(format!("M must be a non-empty square matrix, got {}x{}", m.nrows(), m.ncols()));
        }
        if q.len() != n {
            return dim_err(format!("q has length {}, expected {n}", q.len()));
        }
        ensure_finite("M", m.iter())?;
        ensure_finite("q", q.iter())?;
        Ok(Self { m, q })
    }

    pub fn n(&self) -> usize {
        self.m.nrows()
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    /// `Mx + q`.
    pub fn slack(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.m * x + &self.q
    }
}

/// Candidate primal point and, for the LCP cases that need it, a target slack.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidatePoint {
    pub x0: Option<DVector<f64>>,
    pub s0: Option<DVector<f64>>,
}

impl CandidatePoint {
    pub fn primal(x0: DVector<f64>) -> Self {
        Self { x0: Some(x0), s0: None }
    }

    pub fn pair(x0: DVector<f64>, s0: DVector<f64>) -> Self {
        Self { x0: Some(x0), s0: Some(s0) }
    }

    pub fn slack(s0: DVector<f64>) -> Self {
        Self { x0: None, s0: Some(s0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormChoice {
    /// Squared Frobenius norm on the matrix part plus squared Euclidean norm
    /// on the vector part.
    #[default]
    L2,
    /// Entrywise absolute sums.
    L1,
}

impl NormChoice {
    /// Size of a perturbation `(X, z)` under this norm.
    pub fn measure(self, x: &DMatrix<f64>, z: &DVector<f64>) -> f64 {
        match self {
            NormChoice::L2 => x.norm_squared() + z.norm_squared(),
            NormChoice::L1 => x.iter().chain(z.iter()).map(|v| v.abs()).sum(),
        }
    }
}

impl fmt::Display for NormChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormChoice::L2 => "l2",
            NormChoice::L1 => "l1",
        })
    }
}

/// Which inverse LCP is being posed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LcpCase {
    /// `x0` given; find `s ≥ 0` and the closest `(M', q')`.
    A,
    /// Complementary pair `(x0, s0)` given.
    B,
    /// Only `s0` given; `x` is free subject to `xᵀs0 = 0`.
    C,
}

impl fmt::Display for LcpCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LcpCase::A => "a",
            LcpCase::B => "b",
            LcpCase::C => "c",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    /// For QP: `x0 ∈ {Ax = b, x ≥ 0}`. For LCP: every check of the case passed.
    pub feasible_primal: bool,
    pub residual_norms: BTreeMap<String, f64>,
    pub messages: Vec<String>,
}

pub fn validate_qp(inst: &QpInstance, pt: &CandidatePoint) -> Result<ValidationReport> {
    let x0 = pt
        .x0
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("QP validation needs x0".into()))?;
    validate_qp_with_tol(inst, x0, TOL_FEAS)
}

/// Feasibility of `x0` for `Ax = b, x ≥ 0` at an explicit tolerance.
pub fn validate_qp_with_tol(inst: &QpInstance, x0: &DVector<f64>, tol: f64) -> Result<ValidationReport> {
    if x0.len() != inst.n() {
        return dim_err(format!("x0 has length {}, expected {}", x0.len(), inst.n()));
    }
    ensure_finite("x0", x0.iter())?;
    let eq = inf_norm(&(inst.a() * x0 - inst.b()));
    let neg = (-x0.min()).max(0.0);

    let mut report = ValidationReport::default();
    report.residual_norms.insert("equality".into(), eq);
    report.residual_norms.insert("negativity".into(), neg);
    if eq > tol {
        report.messages.push(format!("‖Ax0 - b‖∞ = {eq:e} exceeds {tol:e}"));
    }
    if neg > tol {
        report.messages.push(format!("min(x0) = {:e} is negative", -neg));
    }
    report.feasible_primal = eq <= tol && neg <= tol;
    Ok(report)
}

pub fn validate_lcp(inst: &LcpInstance, pt: &CandidatePoint, case: LcpCase) -> Result<ValidationReport> {
    let n = inst.n();
    let need = |v: &Option<DVector<f64>>, name: &str| -> Result<()> {
        match v {
            None => Err(Error::InvalidInput(format!("case ({case}) requires {name}"))),
            Some(v) if v.len() != n => dim_err(format!("{name} has length {}, expected {n}", v.len())),
            Some(v) => ensure_finite(name, v.iter()),
        }
    };
    match case {
        LcpCase::A => need(&pt.x0, "x0")?,
        LcpCase::B => {
            need(&pt.x0, "x0")?;
            need(&pt.s0, "s0")?;
        }
        LcpCase::C => need(&pt.s0, "s0")?,
    }

    let mut report = ValidationReport::default();
    let mut ok = true;
    for (name, v) in [("x0", &pt.x0), ("s0", &pt.s0)] {
        if let Some(v) = v {
            if v.len() != n {
                return dim_err(format!("{name} has length {}, expected {n}", v.len()));
            }
            let neg = (-v.min()).max(0.0);
            report.residual_norms.insert(format!("{name}_negativity"), neg);
            if neg > 0.0 {
                ok = false;
                report.messages.push(format!("{name} has a negative entry ({:e})", -neg));
            }
        }
    }
    if case == LcpCase::B {
        let (x0, s0) = (pt.x0.as_ref().unwrap(), pt.s0.as_ref().unwrap());
        let comp = x0.dot(s0);
        report.residual_norms.insert("complementarity".into(), comp.abs());
        if comp.abs() > TOL_COMP {
            ok = false;
            report.messages.push(format!("x0ᵀs0 = {comp:e} is not zero"));
        }
    }
    report.feasible_primal = ok;
    Ok(report)
}

fn ensure_finite<'a>(name: &str, mut values: impl Iterator<Item = &'a f64>) -> Result<()> {
    if values.all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} has a non-finite entry")))
    }
}
