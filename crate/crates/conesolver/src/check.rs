//! Independent verification of a candidate point. Recomputes every constraint
//! from the original program data; shares nothing with the solver state.

use faer::{Mat, Side};

use crate::program::ConeProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundViolation {
    pub index: usize,
    pub kind: BoundKind,
    /// Positive distance outside the bound.
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionCheck {
    /// Smallest eigenvalue of every PSD block at `x`.
    pub block_min_eigenvalues: Vec<f64>,
    /// Frobenius norm of every block at `x`.
    pub block_norms: Vec<f64>,
    pub bound_violations: Vec<BoundViolation>,
    /// `aₖᵀx − bₖ` for each equality.
    pub equality_residuals: Vec<f64>,
    pub objective: f64,
    pub feasible: bool,
}

impl SolutionCheck {
    /// Worst PSD violation relative to block size, `min_j λ_min / (1 + ‖block_j‖)`.
    pub fn worst_relative_block_margin(&self) -> f64 {
        self.block_min_eigenvalues
            .iter()
            .zip(&self.block_norms)
            .map(|(e, n)| e / (1.0 + n))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Checks `x` against every constraint of `program`.
///
/// A block passes when `λ_min ≥ −tol·(1 + ‖block‖_F)`; bounds and equalities
/// pass within `tol` absolute.
pub fn check_solution(program: &ConeProgram, x: &[f64], tol: f64) -> SolutionCheck {
    assert_eq!(x.len(), program.num_vars(), "dimension mismatch");
    let mut bound_violations = Vec::new();
    for (i, &xi) in x.iter().enumerate() {
        if xi < program.lower[i] {
            bound_violations.push(BoundViolation {
                index: i,
                kind: BoundKind::Lower,
                magnitude: program.lower[i] - xi,
            });
        }
        if xi > program.upper[i] {
            bound_violations.push(BoundViolation {
                index: i,
                kind: BoundKind::Upper,
                magnitude: xi - program.upper[i],
            });
        }
    }

    let mut block_min_eigenvalues = Vec::with_capacity(program.psd_blocks.len());
    let mut block_norms = Vec::with_capacity(program.psd_blocks.len());
    for block in &program.psd_blocks {
        let k = block.dim;
        let dense = block.evaluate(x);
        let m = Mat::from_fn(k, k, |i, j| 0.5 * (dense[i * k + j] + dense[j * k + i]));
        let eig = m
            .self_adjoint_eigenvalues(Side::Lower)
            .map(|v| v[0])
            .unwrap_or(f64::NAN);
        block_min_eigenvalues.push(eig);
        block_norms.push(dense.iter().map(|v| v * v).sum::<f64>().sqrt());
    }

    let equality_residuals: Vec<f64> = program
        .linear_eq
        .iter()
        .map(|eq| eq.coeffs.iter().map(|(i, v)| v * x[*i]).sum::<f64>() - eq.rhs)
        .collect();

    let feasible = bound_violations.iter().all(|v| v.magnitude <= tol)
        && block_min_eigenvalues
            .iter()
            .zip(&block_norms)
            .all(|(e, n)| *e >= -tol * (1.0 + n))
        && equality_residuals.iter().all(|r| r.abs() <= tol);

    SolutionCheck {
        block_min_eigenvalues,
        block_norms,
        bound_violations,
        equality_residuals,
        objective: program.objective_value(x),
        feasible,
    }
}
