//! Inverse LCP with the slack `s0` given and `x` free (case (c)), l1 norm.
//!
//! For a fixed `x`, row `i` must satisfy `Y_{i,·} x + z_i = r_i` with
//! `r = Mx + q - s0`. The cheapest `(Y_{i,·}, z_i)` in l1 puts all weight on
//! the largest of `(x_1, …, x_n, 1)`, so the reduced objective is
//!
//! ```text
//!     f(x) = ‖Mx + q - s0‖₁ / max(‖x‖∞, 1),   x ≥ 0,  x_i = 0 where s0_i > 0.
//! ```
//!
//! `f` is a ratio of piecewise-linear functions and is not convex; its
//! infimum may only be approached as `‖x‖ → ∞`. Both solvers restrict `x` to
//! the box `[0, R]` and report `attained = false` when the best point sits
//! on the far face.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{dim_err, Error, Result};
use crate::instances::LcpInstance;

pub const DEFAULT_BOX: f64 = 1e3;
pub const DEFAULT_RESTARTS: usize = 16;

/// Upper bound on grid points the exact solver will visit.
pub const MAX_GRID_POINTS: u64 = 50_000_000;
/// Most free coordinates the exact grid accepts.
pub const MAX_GRID_DIM: usize = 3;

const MAX_SWEEPS: usize = 10_000;
/// Pair directions `e_j ± e_l` are only tried up to this many free coordinates.
const PAIR_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    ExactGrid,
    LocalSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseCResult {
    pub x: DVector<f64>,
    pub y: DMatrix<f64>,
    pub z: DVector<f64>,
    pub objective: f64,
    pub attained: bool,
    pub method: SearchMethod,
}

impl CaseCResult {
    /// `(M - Y, q - z)`; `x` solves this LCP with slack `s0`.
    pub fn perturbed(&self, inst: &LcpInstance) -> (DMatrix<f64>, DVector<f64>) {
        (inst.m() - &self.y, inst.q() - &self.z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseCEval {
    pub objective: f64,
    pub y: DMatrix<f64>,
    pub z: DVector<f64>,
}

/// Evaluates `f(x)` and builds the minimizing `(Y, z)` for this `x`.
pub fn eval_case_c(inst: &LcpInstance, s0: &DVector<f64>, x: &DVector<f64>) -> Result<CaseCEval> {
    let n = inst.n();
    check_slack(inst, s0)?;
    if x.len() != n {
        return dim_err(format!("x has length {}, expected {n}", x.len()));
    }
    if let Some(i) = (0..n).find(|&i| !(x[i] >= 0.0) || (s0[i] > 0.0 && x[i] != 0.0)) {
        return Err(Error::InvalidInput(format!(
            "x[{i}] = {} violates x >= 0 or x[i] = 0 where s0[i] > 0",
            x[i]
        )));
    }
    let r = inst.m() * x + inst.q() - s0;
    let scale = x.max().max(1.0);
    let mut y = DMatrix::zeros(n, n);
    let mut z = DVector::zeros(n);
    // the constant wins only when strictly larger; ties go to the lowest x index
    match (0..n).find(|&j| x[j] >= 1.0 && x[j] == scale) {
        Some(j) => y.column_mut(j).copy_from(&(&r / x[j])),
        None => z.copy_from(&r),
    }
    Ok(CaseCEval {
        objective: r.lp_norm(1) / scale,
        y,
        z,
    })
}

fn check_slack(inst: &LcpInstance, s0: &DVector<f64>) -> Result<()> {
    if s0.len() != inst.n() {
        return dim_err(format!("s0 has length {}, expected {}", s0.len(), inst.n()));
    }
    if s0.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidInput("s0 must be finite and nonnegative".into()));
    }
    Ok(())
}

fn check_box(box_r: f64) -> Result<()> {
    if !(box_r.is_finite() && box_r > 0.0) {
        return Err(Error::InvalidInput(format!("box radius must be positive, got {box_r}")));
    }
    Ok(())
}

/// Reduced objective over the free coordinates only.
struct Reduced {
    /// Columns of `M` for the free coordinates.
    cols: DMatrix<f64>,
    /// `q - s0`
    offset: DVector<f64>,
    free: Vec<usize>,
    n: usize,
    box_r: f64,
}

impl Reduced {
    fn new(inst: &LcpInstance, s0: &DVector<f64>, box_r: f64) -> Result<Self> {
        check_slack(inst, s0)?;
        check_box(box_r)?;
        let free: Vec<usize> = (0..inst.n()).filter(|&i| s0[i] == 0.0).collect();
        Ok(Self {
            cols: inst.m().select_columns(&free),
            offset: inst.q() - s0,
            free,
            n: inst.n(),
            box_r,
        })
    }

    fn residual(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.cols * v + &self.offset
    }

    fn value(&self, v: &DVector<f64>) -> f64 {
        self.residual(v).lp_norm(1) / v.max().max(1.0)
    }

    fn full(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        for (k, &i) in self.free.iter().enumerate() {
            x[i] = v[k];
        }
        x
    }

    /// Exact minimum of `f(v + t d)` over the box.
    ///
    /// Along a line the numerator is piecewise linear with kinks at the
    /// zeros of each residual row, and the denominator is a max of linear
    /// pieces with kinks where two of `{1, v_l + t d_l}` cross. Between
    /// consecutive kinks `f` is linear-fractional, hence monotone, so the
    /// minimum sits at a kink or at a box limit.
    fn line_min(&self, v: &DVector<f64>, d: &DVector<f64>, r: &DVector<f64>) -> (f64, f64) {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        let mut first = true;
        for l in 0..v.len() {
            if d[l] == 0.0 {
                continue;
            }
            let (a, b) = ((0.0 - v[l]) / d[l], (self.box_r - v[l]) / d[l]);
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            if first {
                (lo, hi) = (a, b);
                first = false;
            } else {
                lo = lo.max(a);
                hi = hi.min(b);
            }
        }
        let md = &self.cols * d;
        let mut cand = vec![lo, hi];
        for i in 0..r.len() {
            if md[i] != 0.0 {
                cand.push(-r[i] / md[i]);
            }
        }
        let moving: Vec<usize> = (0..v.len()).filter(|&l| d[l] != 0.0).collect();
        for &l in &moving {
            cand.push((1.0 - v[l]) / d[l]);
            for k in 0..v.len() {
                if d[k] != d[l] {
                    cand.push((v[k] - v[l]) / (d[l] - d[k]));
                }
            }
        }
        let eval = |t: f64| -> f64 {
            let num: f64 = r.iter().zip(md.iter()).map(|(ri, mi)| (ri + t * mi).abs()).sum();
            let den = v
                .iter()
                .zip(d.iter())
                .map(|(vi, di)| (vi + t * di).clamp(0.0, self.box_r))
                .fold(1.0, f64::max);
            num / den
        };
        let mut best = (0.0, eval(0.0));
        for t in cand {
            if t.is_finite() && t > lo - 1e-15 && t < hi + 1e-15 {
                let t = t.clamp(lo, hi);
                let f = eval(t);
                if f < best.1 {
                    best = (t, f);
                }
            }
        }
        best
    }

    fn directions(&self) -> Vec<DVector<f64>> {
        let k = self.free.len();
        let mut dirs: Vec<DVector<f64>> = (0..k).map(|j| unit(k, j, 1.0)).collect();
        if k <= PAIR_LIMIT {
            for j in 0..k {
                for l in j + 1..k {
                    for sign in [1.0, -1.0] {
                        let mut d = unit(k, j, 1.0);
                        d[l] = sign;
                        dirs.push(d);
                    }
                }
            }
        }
        dirs
    }

    /// Descends from `v` with exact line searches until no direction helps.
    fn descend(&self, mut v: DVector<f64>, dirs: &[DVector<f64>]) -> (DVector<f64>, f64) {
        let mut f = self.value(&v);
        for _ in 0..MAX_SWEEPS {
            let mut improved = false;
            for d in dirs {
                let r = self.residual(&v);
                let (t, ft) = self.line_min(&v, d, &r);
                if ft < f - 1e-14 * (1.0 + f.abs()) {
                    v = (&v + d * t).map(|e| e.clamp(0.0, self.box_r));
                    f = self.value(&v);
                    improved = true;
                }
            }
            if !improved {
                break;
            }
        }
        (v, f)
    }

    fn finish(&self, inst: &LcpInstance, s0: &DVector<f64>, v: &DVector<f64>, attained: bool, method: SearchMethod) -> Result<CaseCResult> {
        let x = self.full(v);
        let ev = eval_case_c(inst, s0, &x)?;
        Ok(CaseCResult {
            x,
            y: ev.y,
            z: ev.z,
            objective: ev.objective,
            attained,
            method,
        })
    }
}

fn unit(k: usize, j: usize, v: f64) -> DVector<f64> {
    let mut d = DVector::zeros(k);
    d[j] = v;
    d
}

/// Minimizes over the grid `{0, h, 2h, …} ∩ [0, R]` in every free coordinate.
///
/// Free coordinates are those with `s0_i = 0`; at most [`MAX_GRID_DIM`] of
/// them. Ties keep the first point in lexicographic order.
pub fn solve_case_c_exact(inst: &LcpInstance, s0: &DVector<f64>, box_r: f64, step: f64) -> Result<CaseCResult> {
    let red = Reduced::new(inst, s0, box_r)?;
    if !(step.is_finite() && step > 0.0 && step <= box_r) {
        return Err(Error::InvalidInput(format!("grid step must lie in (0, R], got {step}")));
    }
    let k = red.free.len();
    if k > MAX_GRID_DIM {
        return Err(Error::Scale(format!("{k} free coordinates; the grid handles at most {MAX_GRID_DIM}")));
    }
    let per_axis = (box_r / step + 1e-9).floor() as u64 + 1;
    let total = per_axis.checked_pow(k as u32).unwrap_or(u64::MAX);
    if total > MAX_GRID_POINTS {
        return Err(Error::Scale(format!("{total} grid points exceed the cap of {MAX_GRID_POINTS}")));
    }

    let mut idx = vec![0u64; k];
    let mut v = DVector::zeros(k);
    let mut best_idx = idx.clone();
    let mut best = f64::INFINITY;
    for _ in 0..total {
        for j in 0..k {
            v[j] = idx[j] as f64 * step;
        }
        let f = red.value(&v);
        if f < best {
            best = f;
            best_idx.copy_from_slice(&idx);
        }
        // odometer, last coordinate fastest
        for j in (0..k).rev() {
            idx[j] += 1;
            if idx[j] < per_axis {
                break;
            }
            idx[j] = 0;
        }
    }
    let v = DVector::from_iterator(k, best_idx.iter().map(|&i| i as f64 * step));
    let attained = best_idx.iter().all(|&i| i + 1 < per_axis);
    red.finish(inst, s0, &v, attained, SearchMethod::ExactGrid)
}

/// Multi-start descent with exact line searches along coordinate and
/// pairwise directions.
///
/// Restart 0 starts at `x = 0`, so the result is never worse than that
/// point. Restart `i` draws its start from its own ChaCha8 stream, so the
/// best value found is non-increasing in `restarts` for a fixed seed.
pub fn solve_case_c_local(inst: &LcpInstance, s0: &DVector<f64>, box_r: f64, restarts: usize, seed: u64) -> Result<CaseCResult> {
    let red = Reduced::new(inst, s0, box_r)?;
    let k = red.free.len();
    let dirs = red.directions();
    let mut best: Option<(DVector<f64>, f64)> = None;
    for restart in 0..restarts.max(1) {
        let start = if restart == 0 {
            DVector::zeros(k)
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            random_start(&mut rng, k, box_r)
        };
        let (v, f) = red.descend(start, &dirs);
        log::trace!("restart {restart}: f = {f:e}");
        if best.as_ref().is_none_or(|(_, bf)| f < *bf) {
            best = Some((v, f));
        }
    }
    let (v, _) = best.expect("at least one restart runs");
    let attained = v.iter().all(|&e| e < box_r);
    red.finish(inst, s0, &v, attained, SearchMethod::LocalSearch)
}

/// Half the coordinates near the unit box, half log-uniform up to `R`.
fn random_start(rng: &mut ChaCha8Rng, k: usize, box_r: f64) -> DVector<f64> {
    let lo = 1e-2f64.min(box_r);
    DVector::from_iterator(
        k,
        (0..k).map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(0.0..=box_r.min(2.0))
            } else {
                (rng.random_range(lo.ln()..=box_r.ln())).exp().min(box_r)
            }
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn scalar(m: f64, q: f64) -> LcpInstance {
        LcpInstance::new(dmatrix![m], dvector![q]).unwrap()
    }

    #[test]
    fn unbounded_infimum_hits_the_box() {
        let inst = scalar(1.0, 2.0);
        let s0 = dvector![0.0];
        let grid = solve_case_c_exact(&inst, &s0, 10.0, 0.01).unwrap();
        assert!((grid.objective - 1.2).abs() < 1e-12);
        assert!(!grid.attained);
        assert_eq!(grid.x, dvector![10.0]);
        let local = solve_case_c_local(&inst, &s0, 10.0, 4, 0).unwrap();
        assert!((local.objective - 1.2).abs() < 1e-12);
        assert!(!local.attained);
    }

    #[test]
    fn attained_zero() {
        let inst = scalar(-1.0, 2.0);
        let s0 = dvector![0.0];
        let grid = solve_case_c_exact(&inst, &s0, 10.0, 0.01).unwrap();
        assert!(grid.objective < 1e-12);
        assert!(grid.attained);
        assert!((grid.x[0] - 2.0).abs() < 1e-12);
        let local = solve_case_c_local(&inst, &s0, 10.0, 1, 0).unwrap();
        assert!(local.objective < 1e-15 && local.attained);
    }

    #[test]
    fn eval_weights_the_largest_coordinate() {
        let inst = LcpInstance::new(dmatrix![1.0, 0.0; 0.0, 1.0], dvector![1.0, 1.0]).unwrap();
        let s0 = DVector::zeros(2);
        let ev = eval_case_c(&inst, &s0, &dvector![2.0, 2.0]).unwrap();
        // r = (3, 3), weight on x_1 (lowest index among ties)
        assert_eq!(ev.objective, 3.0);
        assert_eq!(ev.y, dmatrix![1.5, 0.0; 1.5, 0.0]);
        assert_eq!(ev.z, DVector::zeros(2));

        let ev = eval_case_c(&inst, &s0, &dvector![0.5, 1.0]).unwrap();
        assert_eq!(ev.objective, 3.5);
        assert_eq!(ev.y.column(1).iter().copied().collect::<Vec<_>>(), vec![1.5, 2.0]);

        let ev = eval_case_c(&inst, &s0, &dvector![0.5, 0.25]).unwrap();
        assert_eq!(ev.y, DMatrix::zeros(2, 2));
        assert_eq!(ev.z, dvector![1.5, 1.25]);
    }

    #[test]
    fn perturbed_lcp_is_solved() {
        let inst = LcpInstance::new(dmatrix![0.3, -1.0; 2.0, 0.5], dvector![0.2, -0.7]).unwrap();
        let s0 = dvector![0.0, 0.4];
        let res = solve_case_c_local(&inst, &s0, 50.0, 8, 3).unwrap();
        let (mp, qp) = res.perturbed(&inst);
        let slack = &mp * &res.x + &qp;
        assert!((&slack - &s0).amax() < 1e-12);
        assert_eq!(res.x[1], 0.0);
        let l1 = res.y.iter().chain(res.z.iter()).map(|v| v.abs()).sum::<f64>();
        assert!((l1 - res.objective).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let inst = scalar(1.0, 1.0);
        assert!(matches!(eval_case_c(&inst, &dvector![1.0], &dvector![1.0]), Err(Error::InvalidInput(_))));
        assert!(matches!(eval_case_c(&inst, &dvector![-1.0], &dvector![0.0]), Err(Error::InvalidInput(_))));
        assert!(solve_case_c_exact(&inst, &dvector![0.0], 0.0, 0.1).is_err());
        assert!(solve_case_c_exact(&inst, &dvector![0.0], 1.0, 0.0).is_err());
        let big = LcpInstance::new(DMatrix::identity(4, 4), DVector::zeros(4)).unwrap();
        assert!(matches!(
            solve_case_c_exact(&big, &DVector::zeros(4), 1.0, 0.1),
            Err(Error::Scale(_))
        ));
    }

    #[test]
    fn restarts_never_hurt() {
        let inst = LcpInstance::new(dmatrix![0.5, -1.0, 0.2; -0.3, 0.8, -1.0; 1.0, 0.1, -0.4], dvector![0.9, -0.2, 0.5]).unwrap();
        let s0 = DVector::zeros(3);
        let mut prev = f64::INFINITY;
        for restarts in [1, 2, 4, 8, 16] {
            let res = solve_case_c_local(&inst, &s0, 100.0, restarts, 11).unwrap();
            assert!(res.objective <= prev);
            prev = res.objective;
        }
        let zero = eval_case_c(&inst, &s0, &DVector::zeros(3)).unwrap().objective;
        assert!(prev <= zero);
        assert_eq!(
            solve_case_c_local(&inst, &s0, 100.0, 5, 2).unwrap(),
            solve_case_c_local(&inst, &s0, 100.0, 5, 2).unwrap()
        );
    }
}
