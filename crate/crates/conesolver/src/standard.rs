//! Internal conic standard form
//!
//! ```text
//! minimize cᵀx  s.t.  Gx + s = h,  Ax = b,  s ∈ K
//! ```
//!
//! Box bounds become orthant rows, PSD blocks become `s_j = B_j + Σ x_i A_{j,i}`
//! (so `G_j x = −Σ x_i A_{j,i}`, `h_j = B_j`). Each PSD block is rescaled by a
//! positive factor so its data has unit magnitude; feasibility is unchanged.
//! The objective is likewise scaled to unit max-norm.

use faer::Mat;

use crate::cone::ConeVec;
use crate::program::ConeProgram;

#[derive(Debug, Clone, Copy)]
pub(crate) struct LpRow {
    pub var: usize,
    /// Coefficient of `x_var` in `G`: −1 for a lower bound, +1 for an upper bound.
    pub g: f64,
    pub h: f64,
}

/// `(variable, full symmetric entries of A_{j,i})`.
pub(crate) type BlockTerm = (usize, Vec<(u32, u32, f64)>);

#[derive(Debug, Clone)]
pub(crate) struct StdBlock {
    pub dim: usize,
    pub h: Mat<f64>,
    /// `(variable, full symmetric entries of A_{j,i})`, already scaled.
    pub terms: Vec<BlockTerm>,
}

#[derive(Debug, Clone)]
pub(crate) struct Standard {
    pub n: usize,
    /// Objective multiplied by `c_scale`.
    pub c: Vec<f64>,
    /// `1/‖c‖∞`, so the internal objective has unit magnitude.
    pub c_scale: f64,
    pub lp: Vec<LpRow>,
    pub blocks: Vec<StdBlock>,
    /// Dense equality rows.
    pub a: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
}

impl Standard {
    pub fn from_program(p: &ConeProgram) -> Self {
        let n = p.num_vars();
        let mut lp = Vec::new();
        for i in 0..n {
            if p.lower[i].is_finite() {
                lp.push(LpRow {
                    var: i,
                    g: -1.0,
                    h: -p.lower[i],
                });
            }
            if p.upper[i].is_finite() {
                lp.push(LpRow {
                    var: i,
                    g: 1.0,
                    h: p.upper[i],
                });
            }
        }
        let blocks = p
            .psd_blocks
            .iter()
            .map(|blk| {
                let mut magnitude = blk.constant.frobenius_norm();
                for (_, m) in &blk.terms {
                    magnitude = magnitude.max(m.frobenius_norm());
                }
                let scale = if magnitude > 0.0 { 1.0 / magnitude } else { 1.0 };
                let k = blk.dim;
                let dense = blk.constant.to_dense();
                let h = Mat::from_fn(k, k, |i, j| scale * dense[i * k + j]);
                let terms = blk
                    .terms
                    .iter()
                    .map(|(var, m)| {
                        let entries = m
                            .full_entries()
                            .filter(|e| e.2 != 0.0)
                            .map(|(r, c, v)| (r as u32, c as u32, scale * v))
                            .collect();
                        (*var, entries)
                    })
                    .collect();
                StdBlock { dim: k, h, terms }
            })
            .collect();
        let c_max = p.objective.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let c_scale = if c_max > 0.0 { 1.0 / c_max } else { 1.0 };
        Self {
            n,
            c: p.objective.iter().map(|v| v * c_scale).collect(),
            c_scale,
            lp,
            blocks,
            a: p.linear_eq.iter().map(|e| e.coeffs.clone()).collect(),
            b: p.linear_eq.iter().map(|e| e.rhs).collect(),
        }
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.dim).collect()
    }

    /// Degree of the cone, `l + Σ k_j`.
    pub fn degree(&self) -> usize {
        self.lp.len() + self.blocks.iter().map(|b| b.dim).sum::<usize>()
    }

    pub fn h_vec(&self) -> ConeVec {
        ConeVec {
            lp: self.lp.iter().map(|r| r.h).collect(),
            blocks: self.blocks.iter().map(|b| b.h.clone()).collect(),
        }
    }

    pub fn g_mul(&self, x: &[f64]) -> ConeVec {
        let lp = self.lp.iter().map(|r| r.g * x[r.var]).collect();
        let blocks = self
            .blocks
            .iter()
            .map(|blk| {
                let mut m = Mat::zeros(blk.dim, blk.dim);
                for (var, entries) in &blk.terms {
                    let xi = x[*var];
                    if xi == 0.0 {
                        continue;
                    }
                    for &(r, c, v) in entries {
                        m[(r as usize, c as usize)] -= xi * v;
                    }
                }
                m
            })
            .collect();
        ConeVec { lp, blocks }
    }

    pub fn gt_mul(&self, z: &ConeVec) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, zi) in self.lp.iter().zip(&z.lp) {
            out[row.var] += row.g * zi;
        }
        for (blk, zb) in self.blocks.iter().zip(&z.blocks) {
            for (var, entries) in &blk.terms {
                let mut acc = 0.0;
                for &(r, c, v) in entries {
                    acc += v * zb[(r as usize, c as usize)];
                }
                out[*var] -= acc;
            }
        }
        out
    }

    pub fn a_mul(&self, x: &[f64]) -> Vec<f64> {
        self.a
            .iter()
            .map(|row| row.iter().map(|(i, v)| v * x[*i]).sum())
            .collect()
    }

    pub fn at_mul(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, yk) in self.a.iter().zip(y) {
            for (i, v) in row {
                out[*i] += v * yk;
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
