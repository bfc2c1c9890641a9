//! Dense interior-point solver for
//!
//! ```text
//! minimize cᵀx  s.t.  lower ≤ x ≤ upper,  B_j + Σ_i x_i A_{j,i} ⪰ 0,  Ax = b
//! ```
//!
//! The method is a primal-dual path-following algorithm on the homogeneous
//! self-dual embedding with Nesterov–Todd scaling and Mehrotra
//! predictor-corrector steps. Infeasible programs terminate with a
//! certificate instead of running to the iteration cap.
//!
//! ```
//! use conesolver::{solve, ConeProgram, PsdBlock, Settings, Status, SymMatrix};
//!
//! // min x  s.t.  x·[1] − [2] ⪰ 0,  0 ≤ x ≤ 10
//! let mut p = ConeProgram::new(1);
//! p.objective = vec![1.0];
//! p.lower = vec![0.0];
//! p.upper = vec![10.0];
//! p.psd_blocks.push(
//!     PsdBlock::new(SymMatrix::scaled_identity(1, -2.0)).with_term(0, SymMatrix::identity(1)),
//! );
//! let out = solve(&p, &Settings::default()).unwrap();
//! assert_eq!(out.status, Status::Optimal);
//! assert!((out.x[0] - 2.0).abs() < 1e-7);
//! ```

// `!(a > b)` deliberately treats NaN as failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod check;
mod cone;
mod dump;
mod kkt;
mod linalg;
mod program;
mod solver;
mod standard;

pub use check::{check_solution, BoundKind, BoundViolation, SolutionCheck};
pub use dump::to_sdpa;
pub use linalg::{sym2_eigenvalues, sym_eigenvalues};
pub use program::{ConeProgram, LinearEquality, ProgramError, PsdBlock, SymMatrix};
pub use solver::{solve, Certificate, Settings, SolveOutcome, Status};
