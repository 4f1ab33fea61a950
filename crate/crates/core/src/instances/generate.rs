//! Seeded random instances.
//!
//! Distribution (fixed; changing it changes every seeded fixture):
//!
//! * matrix and vector data (`Q`, `c`, `A`, `M`, `q`): i.i.d. uniform on `[-1, 1]`;
//! * nonnegative points: each coordinate is `0` with probability 0.3,
//!   otherwise uniform on `[0.1, 2]`;
//! * case (b) pairs: each coordinate lands in the support of `x0` (p = 0.4),
//!   of `s0` (p = 0.4), or of neither, so the supports are disjoint.
//!
//! The stream is ChaCha8 seeded with the caller's seed, so output is a pure
//! function of `(dims, seed)`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CandidatePoint, LcpCase, LcpInstance, QpInstance};
use crate::error::{Error, Result};
use crate::linalg::is_full_row_rank;

const RANK_RETRIES: usize = 100;
const ZERO_PROB: f64 = 0.3;

fn uniform_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    // row-major draw order so a matrix reads the same as it was generated
    DMatrix::from_row_iterator(rows, cols, (0..rows * cols).map(|_| rng.random_range(-1.0..=1.0)))
}

fn uniform_vector(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(n, (0..n).map(|_| rng.random_range(-1.0..=1.0)))
}

fn sparse_nonneg(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_iterator(
        n,
        (0..n).map(|_| {
            if rng.random_bool(ZERO_PROB) {
                0.0
            } else {
                rng.random_range(0.1..=2.0)
            }
        }),
    )
}

/// Random QP with a full-row-rank `A` and a feasible `x0` (`b = A x0`).
pub fn random_qp(n: usize, m: usize, seed: u64) -> Result<(QpInstance, CandidatePoint)> {
    if m == 0 || m > n {
        return Err(Error::InvalidInput(format!("need 1 <= m <= n, got n={n}, m={m}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = uniform_matrix(&mut rng, n, n);
    let c = uniform_vector(&mut rng, n);
    let a = (0..RANK_RETRIES)
        .map(|_| uniform_matrix(&mut rng, m, n))
        .find(is_full_row_rank)
        .ok_or_else(|| Error::Generation(format!("no full-rank A after {RANK_RETRIES} draws")))?;
    let x0 = sparse_nonneg(&mut rng, n);
    let b = &a * &x0;
    Ok((QpInstance::new(q, c, a, b)?, CandidatePoint::primal(x0)))
}

/// Random LCP data with the candidate data each case needs.
pub fn random_lcp(n: usize, seed: u64, case: LcpCase) -> Result<(LcpInstance, CandidatePoint)> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = uniform_matrix(&mut rng, n, n);
    let q = uniform_vector(&mut rng, n);
    let point = match case {
        LcpCase::A => CandidatePoint::primal(sparse_nonneg(&mut rng, n)),
        LcpCase::B => {
            let mut x0 = DVector::zeros(n);
            let mut s0 = DVector::zeros(n);
            for i in 0..n {
                let r: f64 = rng.random();
                let v = rng.random_range(0.1..=2.0);
                if r < 0.4 {
                    x0[i] = v;
                } else if r < 0.8 {
                    s0[i] = v;
                }
            }
            CandidatePoint::pair(x0, s0)
        }
        LcpCase::C => CandidatePoint::slack(sparse_nonneg(&mut rng, n)),
    };
    Ok((LcpInstance::new(m, q)?, point))
}
