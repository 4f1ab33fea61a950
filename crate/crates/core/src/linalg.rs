//! Small dense helpers shared by the reductions, the solver and the oracles.

use nalgebra::{DMatrix, DVector};

pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn l1_norm(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().map(f64::abs).sum()
}

/// Checks positive semidefiniteness with a symmetric LDLᵀ sweep.
///
/// Pivots below `-tol` reject. A pivot within `tol` of zero is accepted only
/// when the rest of its column is zero as well, which is what a semidefinite
/// matrix produces; anything else hides a negative direction.
pub fn is_psd(h: &DMatrix<f64>, tol: f64) -> bool {
    let n = h.nrows();
    if h.ncols() != n {
        return false;
    }
    let scale = h.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let tol = tol * scale;
    let mut a = h.clone();
    for i in 0..n {
        for j in 0..i {
            if (a[(i, j)] - a[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    for k in 0..n {
        let pivot = a[(k, k)];
        if pivot < -tol {
            return false;
        }
        if pivot <= tol {
            if (k + 1..n).any(|i| a[(i, k)].abs() > tol) {
                return false;
            }
            continue;
        }
        for i in k + 1..n {
            let lik = a[(i, k)] / pivot;
            if lik == 0.0 {
                continue;
            }
            for j in k + 1..=i {
                let v = a[(i, j)] - lik * a[(j, k)];
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
    }
    true
}

/// Indices of a maximal set of linearly independent rows, in input order.
///
/// Modified Gram-Schmidt on the rows; a row whose remainder falls below
/// `threshold` times its own norm (or below `threshold` outright for tiny
/// rows) is considered dependent.
pub fn independent_rows(e: &DMatrix<f64>, threshold: f64) -> Vec<usize> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for r in 0..e.nrows() {
        let row: DVector<f64> = e.row(r).transpose();
        let norm = row.norm();
        let mut rem = row;
        // two passes keep the basis orthogonal to working precision
        for _ in 0..2 {
            for q in &basis {
                let p = q.dot(&rem);
                rem.axpy(-p, q, 1.0);
            }
        }
        let rn = rem.norm();
        if rn > threshold * norm.max(1.0) {
            basis.push(rem / rn);
            keep.push(r);
        }
    }
    keep
}

pub fn is_full_row_rank(a: &DMatrix<f64>) -> bool {
    independent_rows(a, 1e-10).len() == a.nrows()
}

/// Minimum-norm least-squares solution of `a x ≈ b`, via SVD.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let eps = smax * 1e-12 * (a.nrows().max(a.ncols()) as f64);
    svd.solve(b, eps)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn psd_accepts_semidefinite_and_rejects_indefinite() {
        let p = dmatrix![2.0, -2.0; -2.0, 2.0];
        assert!(is_psd(&p, 1e-12));
        let z = DMatrix::<f64>::zeros(3, 3);
        assert!(is_psd(&z, 1e-12));
        let ind = dmatrix![1.0, 2.0; 2.0, 1.0];
        assert!(!is_psd(&ind, 1e-12));
        // zero pivot with a live off-diagonal entry is indefinite
        let hidden = dmatrix![0.0, 1.0; 1.0, 5.0];
        assert!(!is_psd(&hidden, 1e-12));
        let asym = dmatrix![1.0, 1.0; 0.0, 1.0];
        assert!(!is_psd(&asym, 1e-12));
    }

    #[test]
    fn dependent_rows_are_dropped() {
        let e = dmatrix![1.0, 1.0, 0.0; 2.0, 2.0, 0.0; 0.0, 1.0, 1.0; 1.0, 2.0, 1.0];
        assert_eq!(independent_rows(&e, 1e-10), vec![0, 2]);
        assert!(!is_full_row_rank(&e));
        assert!(is_full_row_rank(&dmatrix![1.0, 0.0; 0.0, 1.0]));
    }

    #[test]
    fn lstsq_min_norm() {
        let a = dmatrix![1.0, 1.0];
        let x = lstsq(&a, &DVector::from_vec(vec![2.0]));
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }
}
