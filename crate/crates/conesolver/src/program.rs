//! Problem description: a linear objective, box bounds, affine PSD blocks and
//! optional linear equalities.
//!
//! ```text
//! minimize    cᵀx
//! subject to  lower ≤ x ≤ upper
//!             B_j + Σ_i x_i A_{j,i} ⪰ 0      for every block j
//!             aₖᵀx = bₖ                       for every equality k
//! ```

use thiserror::Error;

/// Sparse symmetric matrix stored as lower-triangular triplets `(row, col, value)`
/// with `row >= col`. The upper triangle is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scaled_identity(dim, 1.0)
    }

    pub fn scaled_identity(dim: usize, value: f64) -> Self {
        Self {
            dim,
            entries: (0..dim).map(|i| (i, i, value)).collect(),
        }
    }

    /// Builds from a dense row-major square matrix, reading the lower triangle.
    pub fn from_dense(dim: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), dim * dim, "dense data must be dim*dim");
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = data[i * dim + j];
                if v != 0.0 {
                    m.entries.push((i, j, v));
                }
            }
        }
        m
    }

    /// Adds `value` at `(row, col)` and its mirror. Order of the indices does not matter.
    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        let (r, c) = if row >= col { (row, col) } else { (col, row) };
        self.entries.push((r, c, value));
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Lower-triangular triplets. Duplicates are summed by every consumer.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    /// Entries of the full symmetric matrix, each off-diagonal listed twice.
    pub fn full_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.entries.iter().flat_map(|&(r, c, v)| {
            let mirror = if r != c { Some((c, r, v)) } else { None };
            std::iter::once((r, c, v)).chain(mirror)
        })
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            e.2 *= factor;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.to_dense().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Dense column-major (equivalently row-major, it is symmetric) copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; n * n];
        for (r, c, v) in self.full_entries() {
            out[r * n + c] += v;
        }
        out
    }
}

/// One affine PSD constraint `constant + Σ x_i terms_i ⪰ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PsdBlock {
    pub dim: usize,
    pub constant: SymMatrix,
    /// `(variable index, coefficient matrix)`; variables absent from the list
    /// have a zero coefficient in this block.
    pub terms: Vec<(usize, SymMatrix)>,
}

impl PsdBlock {
    pub fn new(constant: SymMatrix) -> Self {
        Self {
            dim: constant.dim(),
            constant,
            terms: Vec::new(),
        }
    }

    pub fn with_term(mut self, var: usize, coeff: SymMatrix) -> Self {
        self.terms.push((var, coeff));
        self
    }

    /// Dense row-major evaluation of the block at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim;
        let mut out = self.constant.to_dense();
        for (var, coeff) in &self.terms {
            let xi = x[*var];
            if xi == 0.0 {
                continue;
            }
            for (r, c, v) in coeff.full_entries() {
                out[r * n + c] += xi * v;
            }
        }
        out
    }
}

/// Sparse linear equality `Σ coeffs · x = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeProgram {
    pub objective: Vec<f64>,
    /// Entries may be `-inf`.
    pub lower: Vec<f64>,
    /// Entries may be `+inf`.
    pub upper: Vec<f64>,
    pub psd_blocks: Vec<PsdBlock>,
    pub linear_eq: Vec<LinearEquality>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("objective has {objective} entries but bounds have {lower} / {upper}")]
    DimensionMismatch {
        objective: usize,
        lower: usize,
        upper: usize,
    },
    #[error("bound {index}: lower {lower} exceeds upper {upper}")]
    InvertedBounds { index: usize, lower: f64, upper: f64 },
    #[error("block {block}: {reason}")]
    BadBlock { block: usize, reason: String },
    #[error("equality {row}: {reason}")]
    BadEquality { row: usize, reason: String },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

impl ConeProgram {
    /// Program with `n` free variables, zero objective and no constraints.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            psd_blocks: Vec::new(),
            linear_eq: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    pub fn validate(&self) -> Result<(), ProgramError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(ProgramError::DimensionMismatch {
                objective: n,
                lower: self.lower.len(),
                upper: self.upper.len(),
            });
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(ProgramError::NonFinite("objective"));
        }
        for (i, (&l, &u)) in self.lower.iter().zip(&self.upper).enumerate() {
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(ProgramError::NonFinite("bounds"));
            }
            if l > u {
                return Err(ProgramError::InvertedBounds {
                    index: i,
                    lower: l,
                    upper: u,
                });
            }
        }
        for (j, block) in self.psd_blocks.iter().enumerate() {
            let bad = |reason: String| ProgramError::BadBlock { block: j, reason };
            if block.dim == 0 {
                return Err(bad("block size must be at least 1".into()));
            }
            let mats = std::iter::once(&block.constant).chain(block.terms.iter().map(|t| &t.1));
            for m in mats {
                if m.dim() != block.dim {
                    return Err(bad(format!(
                        "coefficient of size {} in a block of size {}",
                        m.dim(),
                        block.dim
                    )));
                }
                for &(r, c, v) in m.entries() {
                    if r >= block.dim || c > r {
                        return Err(bad(format!("entry ({r},{c}) outside lower triangle")));
                    }
                    if !v.is_finite() {
                        return Err(ProgramError::NonFinite("block coefficient"));
                    }
                }
            }
            for (var, _) in &block.terms {
                if *var >= n {
                    return Err(bad(format!("variable index {var} out of range")));
                }
            }
        }
        for (k, eq) in self.linear_eq.iter().enumerate() {
            if !eq.rhs.is_finite() || eq.coeffs.iter().any(|(_, v)| !v.is_finite()) {
                return Err(ProgramError::NonFinite("equality"));
            }
            if let Some((var, _)) = eq.coeffs.iter().find(|(v, _)| *v >= n) {
                return Err(ProgramError::BadEquality {
                    row: k,
                    reason: format!("variable index {var} out of range"),
                });
            }
        }
        Ok(())
    }
}
