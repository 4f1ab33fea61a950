//! Dense primal-dual interior-point method for
//!
//! ```text
//!     min ½uᵀHu + gᵀu   s.t.  Eu = d,  u ≥ 0
//! ```
//!
//! with `H` symmetric positive semidefinite. Mehrotra predictor-corrector
//! steps on the perturbed KKT system
//!
//! ```text
//!     Eu = d,   Hu + g - Eᵀλ - σ = 0,   u∘σ = μe,   (u, σ) > 0.
//! ```
//!
//! Each Newton system is reduced to normal equations `E W Eᵀ Δλ = r` with
//! `W = (H + U⁻¹Σ)⁻¹`. `H` is factored per connected component of its
//! sparsity pattern, which for the lifted inverse problems means 1×1 or 2×2
//! blocks, so a solve costs `O(K²N)` rather than `O(N³)`.

use log::{debug, trace};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::Serialize;

use crate::error::{dim_err, Error, Result};
use crate::linalg::{independent_rows, inf_norm};

/// Pivot threshold for dropping dependent equality rows.
const PRESOLVE_THRESHOLD: f64 = 1e-10;
/// Regularization above this is treated as a failed factorization.
const MAX_REGULARIZATION: f64 = 1e-4;
/// Iterations without a new best merit before the solve is abandoned.
const STALL_WINDOW: usize = 15;
/// Cap on iterative-refinement passes per Newton solve.
const REFINEMENT_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexQp {
    pub h: DMatrix<f64>,
    pub g: DVector<f64>,
    pub e: DMatrix<f64>,
    pub d: DVector<f64>,
}

impl ConvexQp {
    pub fn new(h: DMatrix<f64>, g: DVector<f64>, e: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let n = g.len();
        if h.shape() != (n, n) {
            return dim_err(format!("H is {:?}, expected {n}x{n}", h.shape()));
        }
        if e.ncols() != n {
            return dim_err(format!("E has {} columns, expected {n}", e.ncols()));
        }
        if d.len() != e.nrows() {
            return dim_err(format!("d has length {}, expected {}", d.len(), e.nrows()));
        }
        Ok(Self { h, g, e, d })
    }

    /// A linear program (`H = 0`).
    pub fn linear(g: DVector<f64>, e: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let n = g.len();
        Self::new(DMatrix::zeros(n, n), g, e, d)
    }

    pub fn num_vars(&self) -> usize {
        self.g.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.d.len()
    }

    pub fn objective(&self, u: &DVector<f64>) -> f64 {
        0.5 * u.dot(&(&self.h * u)) + self.g.dot(u)
    }

    fn is_linear(&self) -> bool {
        self.h.iter().all(|&v| v == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Relative tolerance on the total complementarity `uᵀσ`.
    pub tol_gap: f64,
    /// Relative tolerance on the primal and dual residuals.
    pub tol_res: f64,
    pub max_iter: usize,
    /// Fraction of the distance to the boundary taken per step.
    pub step_fraction: f64,
    /// Initial diagonal shift for the factorizations.
    pub regularization: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_gap: 1e-9,
            tol_res: 1e-9,
            max_iter: 200,
            step_fraction: 0.995,
            regularization: 1e-12,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.tol_gap, self.tol_res, self.regularization]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.max_iter == 0 {
            return Err(Error::InvalidInput("solver tolerances, regularization and max_iter must be positive".into()));
        }
        if !(self.step_fraction > 0.0 && self.step_fraction < 1.0) {
            return Err(Error::InvalidInput("step_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    Optimal,
    IterationLimit,
    NumericalFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub u: DVector<f64>,
    /// Multipliers of `Eu = d` (zero for rows dropped by presolve).
    pub lambda: DVector<f64>,
    /// Multipliers of `u ≥ 0`.
    pub sigma: DVector<f64>,
    pub objective: f64,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KktResiduals {
    /// `‖Eu - d‖∞`
    pub primal: f64,
    /// `‖Hu + g - Eᵀλ - σ‖∞`
    pub dual: f64,
    /// `uᵀσ / N`
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub objective: f64,
    /// Step length that produced this iterate (0 for the starting point).
    pub step: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SolveReport {
    /// Newton steps taken.
    pub iterations: usize,
    /// One record per iterate visited; the last one describes the returned point.
    pub history: Vec<IterationRecord>,
    pub factorization_retries: usize,
    pub removed_rows: usize,
}

impl SolveReport {
    pub fn last(&self) -> Option<&IterationRecord> {
        self.history.last()
    }
}

/// Residuals of the standard-form KKT conditions, recomputed from scratch.
pub fn kkt_residuals(qp: &ConvexQp, sol: &Solution) -> KktResiduals {
    residuals(qp, &sol.u, &sol.lambda, &sol.sigma)
}

fn residuals(qp: &ConvexQp, u: &DVector<f64>, lambda: &DVector<f64>, sigma: &DVector<f64>) -> KktResiduals {
    let primal = inf_norm(&(&qp.e * u - &qp.d));
    let dual = inf_norm(&(&qp.h * u + &qp.g - qp.e.tr_mul(lambda) - sigma));
    let n = u.len();
    let gap = if n == 0 { 0.0 } else { u.dot(sigma) / n as f64 };
    KktResiduals { primal, dual, gap }
}

/// Per-component factorization of `H + diag(D) + δI`.
struct BlockSolver {
    singles: Vec<(usize, f64)>,
    blocks: Vec<(Vec<usize>, Cholesky<f64, Dyn>)>,
}

impl BlockSolver {
    fn factor(h: &DMatrix<f64>, comps: &[Vec<usize>], diag: &DVector<f64>, reg: f64) -> Option<Self> {
        let mut singles = Vec::new();
        let mut blocks = Vec::new();
        for comp in comps {
            if let [i] = comp[..] {
                let p = h[(i, i)] + diag[i] + reg;
                if !(p > 0.0) || !p.is_finite() {
                    return None;
                }
                singles.push((i, 1.0 / p));
            } else {
                let b = DMatrix::from_fn(comp.len(), comp.len(), |r, c| {
                    h[(comp[r], comp[c])] + if r == c { diag[comp[r]] + reg } else { 0.0 }
                });
                blocks.push((comp.clone(), Cholesky::new(b)?));
            }
        }
        Some(Self { singles, blocks })
    }

    fn solve(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(v.len());
        for &(i, inv) in &self.singles {
            out[i] = v[i] * inv;
        }
        for (idx, chol) in &self.blocks {
            let rhs = DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]));
            let x = chol.solve(&rhs);
            for (k, &i) in idx.iter().enumerate() {
                out[i] = x[k];
            }
        }
        out
    }
}

/// Connected components of the off-diagonal sparsity pattern of `h`.
fn components(h: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for j in 0..n {
        for i in 0..n {
            if i != j && (h[(i, j)] != 0.0 || h[(j, i)] != 0.0) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        let r = find(&mut parent, i);
        groups[r].push(i);
    }
    groups.into_iter().filter(|g| !g.is_empty()).collect()
}

/// Factored Newton system for one iterate.
struct NewtonSystem<'a> {
    h: &'a DMatrix<f64>,
    e: &'a DMatrix<f64>,
    diag: DVector<f64>,
    blocks: BlockSolver,
    /// `W Eᵀ`, N × K.
    we_t: DMatrix<f64>,
    normal: Option<Cholesky<f64, Dyn>>,
}

impl<'a> NewtonSystem<'a> {
    fn build(
        h: &'a DMatrix<f64>,
        e: &'a DMatrix<f64>,
        comps: &[Vec<usize>],
        diag: DVector<f64>,
        reg: f64,
    ) -> Option<Self> {
        let blocks = BlockSolver::factor(h, comps, &diag, reg)?;
        let k = e.nrows();
        let mut we_t = DMatrix::zeros(e.ncols(), k);
        for r in 0..k {
            let col = blocks.solve(&e.row(r).transpose());
            we_t.set_column(r, &col);
        }
        let normal = if k == 0 {
            None
        } else {
            let s = e * &we_t;
            // symmetrize against rounding in the product
            let s = (&s + s.transpose()) * 0.5;
            // A shift scaled to the largest diagonal entry swamps the weak
            // directions late in a degenerate solve, so it is only used as
            // a fallback.
            match Cholesky::new(s.clone()) {
                Some(chol) => Some(chol),
                None => {
                    let mut s = s;
                    let scale = s.diagonal().amax().max(1.0);
                    for i in 0..k {
                        s[(i, i)] += reg * scale;
                    }
                    Some(Cholesky::new(s)?)
                }
            }
        };
        Some(Self { h, e, diag, blocks, we_t, normal })
    }

    /// Solves `(H + D)Δu - EᵀΔλ = f`, `EΔu = r_p`.
    fn solve_reduced(&self, f: &DVector<f64>, r_p: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let wf = self.blocks.solve(f);
        let dl = match &self.normal {
            Some(chol) => chol.solve(&(r_p - self.e * &wf)),
            None => DVector::zeros(0),
        };
        let du = &self.we_t * &dl + wf;
        (du, dl)
    }

    fn defect(&self, f: &DVector<f64>, r_p: &DVector<f64>, du: &DVector<f64>, dl: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let res_f = f - (self.h * du + self.diag.component_mul(du) - self.e.tr_mul(dl));
        let res_p = r_p - self.e * du;
        (res_f, res_p)
    }

    /// Reduced solve plus iterative refinement while the defect shrinks.
    fn solve(&self, f: &DVector<f64>, r_p: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
        let (mut du, mut dl) = self.solve_reduced(f, r_p);
        let (mut res_f, mut res_p) = self.defect(f, r_p, &du, &dl);
        let size = |a: &DVector<f64>, b: &DVector<f64>| inf_norm(a).max(inf_norm(b));
        let mut err = size(&res_f, &res_p);
        for _ in 0..REFINEMENT_STEPS {
            let (cu, cl) = self.solve_reduced(&res_f, &res_p);
            let (nu, nl) = (&du + cu, &dl + cl);
            let (nf, np) = self.defect(f, r_p, &nu, &nl);
            let next = size(&nf, &np);
            if !(next < err) {
                break;
            }
            (du, dl, res_f, res_p, err) = (nu, nl, nf, np, next);
        }
        (du, dl)
    }
}

fn max_step(v: &DVector<f64>, dv: &DVector<f64>) -> f64 {
    v.iter()
        .zip(dv.iter())
        .filter(|(_, d)| **d < 0.0)
        .map(|(x, d)| -x / d)
        .fold(f64::INFINITY, f64::min)
}

struct Iterate {
    u: DVector<f64>,
    lambda: DVector<f64>,
    sigma: DVector<f64>,
}

/// Solves a convex QP in standard form.
///
/// Returns `Err` only for malformed input (dimension mismatch, bad
/// settings, or equality rows that contradict each other). Non-convergence
/// is reported through [`Solution::status`], with the best iterate found.
pub fn solve(qp: &ConvexQp, settings: &SolverSettings) -> Result<(Solution, SolveReport)> {
    settings.validate()?;
    ConvexQp::new(qp.h.clone(), qp.g.clone(), qp.e.clone(), qp.d.clone())?;
    let nvars = qp.num_vars();
    let k_full = qp.num_constraints();

    // Presolve: keep an independent subset of the equality rows.
    let kept = independent_rows(&qp.e, PRESOLVE_THRESHOLD);
    let e = qp.e.select_rows(&kept);
    let d = DVector::from_iterator(kept.len(), kept.iter().map(|&i| qp.d[i]));
    if kept.len() < k_full {
        check_consistent(&qp.e, &qp.d, &e, &d)?;
    }
    let mut report = SolveReport {
        removed_rows: k_full - kept.len(),
        ..SolveReport::default()
    };
    let expand = |lambda: &DVector<f64>| {
        let mut full = DVector::zeros(k_full);
        for (r, &i) in kept.iter().enumerate() {
            full[i] = lambda[r];
        }
        full
    };

    let comps = components(&qp.h);
    let linear = qp.is_linear();
    let tol_p = settings.tol_res * (1.0 + inf_norm(&qp.d));
    let tol_d = settings.tol_res * (1.0 + inf_norm(&qp.g));

    let mut it = starting_point(&e, &d, nvars, settings.regularization);
    let mut reg = settings.regularization;
    let mut step = 0.0;
    let mut best: Option<(f64, usize, Iterate)> = None;
    let mut status = Status::IterationLimit;

    for iter in 0..=settings.max_iter {
        let lambda_full = expand(&it.lambda);
        let res = residuals(qp, &it.u, &lambda_full, &it.sigma);
        let objective = qp.objective(&it.u);
        report.history.push(IterationRecord {
            iteration: iter,
            primal: res.primal,
            dual: res.dual,
            gap: res.gap,
            objective,
            step,
        });
        trace!("ipm iter {iter}: primal {:.3e} dual {:.3e} gap {:.3e} obj {objective:.12e}", res.primal, res.dual, res.gap);

        // Total complementarity uᵀσ bounds the objective error, so it is held
        // to the gap tolerance; the average uᵀσ/N then satisfies it too.
        let tol_g = settings.tol_gap * (1.0 + objective.abs());
        let comp = res.gap * nvars as f64;
        if res.primal <= tol_p && res.dual <= tol_d && comp <= tol_g {
            status = Status::Optimal;
            break;
        }
        let merit = (res.primal / tol_p).max(res.dual / tol_d).max(comp / tol_g);
        if best.as_ref().is_none_or(|(m, _, _)| merit < *m) {
            best = Some((merit, iter, Iterate { u: it.u.clone(), lambda: it.lambda.clone(), sigma: it.sigma.clone() }));
        }
        if iter == settings.max_iter {
            break;
        }
        if let Some((_, at, _)) = &best {
            if iter >= at + STALL_WINDOW {
                debug!("ipm iter {iter}: no progress since iteration {at}");
                status = Status::NumericalFailure;
                break;
            }
        }

        // Newton system at the current iterate, escalating regularization on failure.
        let diag = it.sigma.component_div(&it.u);
        let system = loop {
            match NewtonSystem::build(&qp.h, &e, &comps, diag.clone(), reg) {
                Some(sys) => break Some(sys),
                None if reg * 100.0 <= MAX_REGULARIZATION => {
                    reg *= 100.0;
                    report.factorization_retries += 1;
                    debug!("ipm iter {iter}: factorization failed, regularization -> {reg:e}");
                }
                None => break None,
            }
        };
        let Some(system) = system else {
            status = Status::NumericalFailure;
            break;
        };

        let r_p = &d - &e * &it.u;
        let r_d = &qp.h * &it.u + &qp.g - e.tr_mul(&it.lambda) - &it.sigma;
        let mu = res.gap;
        let direction = |r_c: &DVector<f64>| {
            let f = r_c.component_div(&it.u) - &r_d;
            let (du, dl) = system.solve(&f, &r_p);
            let ds = (r_c - it.sigma.component_mul(&du)).component_div(&it.u);
            (du, dl, ds)
        };

        // predictor
        let r_aff = -it.u.component_mul(&it.sigma);
        let (du_a, _, ds_a) = direction(&r_aff);
        let (ap, ad) = (max_step(&it.u, &du_a).min(1.0), max_step(&it.sigma, &ds_a).min(1.0));
        let (ap, ad) = if linear { (ap, ad) } else { (ap.min(ad), ap.min(ad)) };
        let mu_aff = (&it.u + &du_a * ap).dot(&(&it.sigma + &ds_a * ad)) / nvars as f64;
        let centering = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // corrector
        let r_c = r_aff - du_a.component_mul(&ds_a) + DVector::from_element(nvars, centering * mu);
        let (du, dl, ds) = direction(&r_c);
        let frac = settings.step_fraction;
        let (ap, ad) = (
            (frac * max_step(&it.u, &du)).min(1.0),
            (frac * max_step(&it.sigma, &ds)).min(1.0),
        );
        let (ap, ad) = if linear { (ap, ad) } else { (ap.min(ad), ap.min(ad)) };

        it.u += &du * ap;
        it.lambda += &dl * ad;
        it.sigma += &ds * ad;
        step = ap.min(ad);
        report.iterations = iter + 1;

        let finite = it.u.iter().chain(it.sigma.iter()).chain(it.lambda.iter()).all(|v| v.is_finite());
        if !finite || it.u.min() <= 0.0 || it.sigma.min() <= 0.0 {
            status = Status::NumericalFailure;
            break;
        }
    }

    if status != Status::Optimal {
        if let Some((_, iter, b)) = best {
            it = b;
            let lambda_full = expand(&it.lambda);
            let res = residuals(qp, &it.u, &lambda_full, &it.sigma);
            report.history.push(IterationRecord {
                iteration: iter,
                primal: res.primal,
                dual: res.dual,
                gap: res.gap,
                objective: qp.objective(&it.u),
                step: 0.0,
            });
        }
        debug!("ipm stopped with {status:?} after {} iterations", report.iterations);
    }

    let lambda = expand(&it.lambda);
    let objective = qp.objective(&it.u);
    Ok((
        Solution {
            u: it.u,
            lambda,
            sigma: it.sigma,
            objective,
            status,
        },
        report,
    ))
}

/// Dropped rows must be combinations of kept rows with matching right-hand sides.
fn check_consistent(e_full: &DMatrix<f64>, d_full: &DVector<f64>, e: &DMatrix<f64>, d: &DVector<f64>) -> Result<()> {
    let tol = 1e-8 * (1.0 + inf_norm(d_full));
    for r in 0..e_full.nrows() {
        let coef = crate::linalg::lstsq(&e.transpose(), &e_full.row(r).transpose());
        if (coef.dot(d) - d_full[r]).abs() > tol {
            return Err(Error::Solver(format!("equality row {r} contradicts the others")));
        }
    }
    Ok(())
}

/// `u = e` corrected by the least-norm step towards `Eu = d`, then lifted
/// back into the positive orthant; `σ = e`, `λ = 0`.
fn starting_point(e: &DMatrix<f64>, d: &DVector<f64>, nvars: usize, reg: f64) -> Iterate {
    let k = e.nrows();
    let mut u = DVector::from_element(nvars, 1.0);
    if k > 0 {
        let mut eet = e * e.transpose();
        let scale = eet.diagonal().amax().max(1.0);
        for i in 0..k {
            eet[(i, i)] += reg * scale;
        }
        if let Some(chol) = Cholesky::new(eet) {
            let r = d - e * &u;
            u += e.tr_mul(&chol.solve(&r));
        }
    }
    let floor = 0.1;
    let lo = if nvars == 0 { floor } else { u.min() };
    if lo < floor {
        u.add_scalar_mut(floor - lo);
    }
    Iterate {
        u,
        lambda: DVector::zeros(k),
        sigma: DVector::from_element(nvars, 1.0),
    }
}
