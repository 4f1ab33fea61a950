//! Inverse problems for KKT points of non-convex quadratic programs and for
//! non-monotone linear complementarity problems.
//!
//! Given a candidate point, the library finds the smallest change to the
//! problem data that makes the point a KKT point (QP) or a solution (LCP).
//! The convex cases are lifted into standard-form convex QPs/LPs
//! ([`reductions`]) and solved by a dense primal-dual interior-point method
//! ([`ipm`]). Every answer can be re-checked by an independent route in
//! [`oracles`]. The NP-hard LCP case, where only the slack is known, is
//! handled at desk scale by [`case_c`].
//!
//! ```
//! use invopt::instances::{LcpInstance, NormChoice};
//! use invopt::reductions::{reduce_ilcp_a, recover_perturbation};
//! use invopt::ipm::{solve, SolverSettings};
//! use nalgebra::{dmatrix, dvector};
//!
//! let inst = LcpInstance::new(dmatrix![2.0], dvector![-1.0]).unwrap();
//! let x0 = dvector![1.0];
//! let problem = reduce_ilcp_a(&inst, &x0, NormChoice::L2).unwrap();
//! let (sol, _report) = solve(&problem.qp, &SolverSettings::default()).unwrap();
//! let pert = recover_perturbation(&sol.u, &problem.recovery);
//! assert!((pert.objective - 0.5).abs() < 1e-7);
//! ```

pub mod bench;
pub mod case_c;
mod error;
pub mod instances;
pub mod ipm;
pub mod linalg;
pub mod oracles;
pub mod reductions;

pub use error::{Error, Result};
