//! Vectors in the product cone (nonnegative orthant × PSD blocks) and the
//! Nesterov–Todd scaling that maps a primal/dual pair onto a common point λ.

use faer::{Mat, Side};

use crate::linalg::{min_sym_eigenvalue, symmetrize};

/// An element of `ℝ^l × S^{k_1} × … × S^{k_q}`. Blocks are stored as full
/// symmetric matrices; the inner product is the trace inner product.
#[derive(Debug, Clone)]
pub(crate) struct ConeVec {
    pub lp: Vec<f64>,
    pub blocks: Vec<Mat<f64>>,
}

impl ConeVec {
    #[cfg(test)]
    pub fn zeros(lp: usize, dims: &[usize]) -> Self {
        Self {
            lp: vec![0.0; lp],
            blocks: dims.iter().map(|&k| Mat::zeros(k, k)).collect(),
        }
    }

    /// The identity element `e`.
    pub fn identity(lp: usize, dims: &[usize]) -> Self {
        Self {
            lp: vec![1.0; lp],
            blocks: dims.iter().map(|&k| Mat::identity(k, k)).collect(),
        }
    }

    pub fn dot(&self, other: &Self) -> f64 {
        let lp: f64 = self.lp.iter().zip(&other.lp).map(|(a, b)| a * b).sum();
        let sdp: f64 = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| {
                let mut acc = 0.0;
                for j in 0..a.ncols() {
                    for i in 0..a.nrows() {
                        acc += a[(i, j)] * b[(i, j)];
                    }
                }
                acc
            })
            .sum();
        lp + sdp
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.lp.iter_mut().zip(&other.lp) {
            *a += alpha * b;
        }
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            for j in 0..a.ncols() {
                for i in 0..a.nrows() {
                    a[(i, j)] += alpha * b[(i, j)];
                }
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        self.lp.iter_mut().for_each(|v| *v *= alpha);
        for b in &mut self.blocks {
            for j in 0..b.ncols() {
                for i in 0..b.nrows() {
                    b[(i, j)] *= alpha;
                }
            }
        }
    }

    #[cfg(test)]
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }
}

/// Scaling of one PSD block: `R` with `Rᵀ Z R = R⁻¹ S R⁻ᵀ = diag(λ)`.
#[derive(Debug, Clone)]
pub(crate) struct BlockScaling {
    pub r: Mat<f64>,
    pub rinv: Mat<f64>,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Scaling {
    /// `W = diag(d)` on the orthant, `d = √(s/z)`.
    pub lp_d: Vec<f64>,
    pub lp_lambda: Vec<f64>,
    pub blocks: Vec<BlockScaling>,
}

#[derive(Debug)]
pub(crate) struct ScalingError;

impl Scaling {
    /// Scaling at `s = z = e`.
    pub fn identity(lp: usize, dims: &[usize]) -> Self {
        Self {
            lp_d: vec![1.0; lp],
            lp_lambda: vec![1.0; lp],
            blocks: dims
                .iter()
                .map(|&k| BlockScaling {
                    r: Mat::identity(k, k),
                    rinv: Mat::identity(k, k),
                    lambda: vec![1.0; k],
                })
                .collect(),
        }
    }

    /// Scaling computed directly from a strictly interior pair.
    pub fn from_pair(s: &ConeVec, z: &ConeVec) -> Result<Self, ScalingError> {
        let mut lp_d = Vec::with_capacity(s.lp.len());
        let mut lp_lambda = Vec::with_capacity(s.lp.len());
        for (&a, &b) in s.lp.iter().zip(&z.lp) {
            if !(a > 0.0 && b > 0.0) {
                return Err(ScalingError);
            }
            lp_d.push((a / b).sqrt());
            lp_lambda.push((a * b).sqrt());
        }
        let blocks = s
            .blocks
            .iter()
            .zip(&z.blocks)
            .map(|(sb, zb)| {
                let (r, rinv, lambda) = nt_scaling(&symmetrize(sb), &symmetrize(zb))?;
                Ok(BlockScaling { r, rinv, lambda })
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            lp_d,
            lp_lambda,
            blocks,
        })
    }

    /// `W z`
    pub fn apply(&self, z: &ConeVec) -> ConeVec {
        ConeVec {
            lp: z.lp.iter().zip(&self.lp_d).map(|(v, d)| v * d).collect(),
            blocks: z
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(zb, sc)| symmetrize(&(sc.r.transpose() * zb * &sc.r)))
                .collect(),
        }
    }

    /// `Wᵀ u`
    pub fn apply_transpose(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.iter().zip(&self.lp_d).map(|(v, d)| v * d).collect(),
            blocks: u
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(ub, sc)| symmetrize(&(&sc.r * ub * sc.r.transpose())))
                .collect(),
        }
    }

    /// `W⁻ᵀ u`
    pub fn apply_inverse_transpose(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.iter().zip(&self.lp_d).map(|(v, d)| v / d).collect(),
            blocks: u
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(ub, sc)| symmetrize(&(&sc.rinv * ub * sc.rinv.transpose())))
                .collect(),
        }
    }

    /// `W⁻¹ u`
    pub fn apply_inverse(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.iter().zip(&self.lp_d).map(|(v, d)| v / d).collect(),
            blocks: u
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(ub, sc)| symmetrize(&(sc.rinv.transpose() * ub * &sc.rinv)))
                .collect(),
        }
    }

    /// `(WᵀW)⁻¹ u`
    pub fn apply_inverse_hessian(&self, u: &ConeVec, t: &[Mat<f64>]) -> ConeVec {
        ConeVec {
            lp: u.lp.iter().zip(&self.lp_d).map(|(v, d)| v / (d * d)).collect(),
            blocks: u
                .blocks
                .iter()
                .zip(t)
                .map(|(ub, t)| symmetrize(&(t * ub * t)))
                .collect(),
        }
    }

    /// `T_j = R⁻ᵀ R⁻¹` for every block; `(WᵀW)⁻¹ U = T U T`.
    pub fn inverse_hessian_factors(&self) -> Vec<Mat<f64>> {
        self.blocks
            .iter()
            .map(|sc| symmetrize(&(sc.rinv.transpose() * &sc.rinv)))
            .collect()
    }

    /// λ as a cone vector.
    pub fn lambda_vec(&self) -> ConeVec {
        ConeVec {
            lp: self.lp_lambda.clone(),
            blocks: self
                .blocks
                .iter()
                .map(|sc| {
                    Mat::from_fn(sc.lambda.len(), sc.lambda.len(), |i, j| {
                        if i == j {
                            sc.lambda[i]
                        } else {
                            0.0
                        }
                    })
                })
                .collect(),
        }
    }

    /// `λ ∘ u` in the scaled space.
    pub fn lambda_product(&self, u: &ConeVec) -> ConeVec {
        ConeVec {
            lp: u.lp.iter().zip(&self.lp_lambda).map(|(v, l)| v * l).collect(),
            blocks: u
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(ub, sc)| {
                    Mat::from_fn(ub.nrows(), ub.ncols(), |i, j| {
                        0.5 * (sc.lambda[i] + sc.lambda[j]) * ub[(i, j)]
                    })
                })
                .collect(),
        }
    }

    /// Solves `λ ∘ v = r` for `v`.
    pub fn lambda_divide(&self, r: &ConeVec) -> ConeVec {
        ConeVec {
            lp: r.lp.iter().zip(&self.lp_lambda).map(|(v, l)| v / l).collect(),
            blocks: r
                .blocks
                .iter()
                .zip(&self.blocks)
                .map(|(rb, sc)| {
                    Mat::from_fn(rb.nrows(), rb.ncols(), |i, j| {
                        2.0 * rb[(i, j)] / (sc.lambda[i] + sc.lambda[j])
                    })
                })
                .collect(),
        }
    }

    /// Largest `α ≤ cap` keeping `λ + α·ds` and `λ + α·dz` in the cone.
    pub fn max_step(&self, ds: &ConeVec, dz: &ConeVec, cap: f64) -> f64 {
        let mut alpha = cap;
        for dir in [ds, dz] {
            for (v, l) in dir.lp.iter().zip(&self.lp_lambda) {
                if *v < 0.0 {
                    alpha = alpha.min(-l / v);
                }
            }
            for (db, sc) in dir.blocks.iter().zip(&self.blocks) {
                // λ + αΔ ⪰ 0  ⇔  I + α Λ^{-1/2} Δ Λ^{-1/2} ⪰ 0
                let k = sc.lambda.len();
                let inv_sqrt: Vec<f64> = sc.lambda.iter().map(|l| 1.0 / l.sqrt()).collect();
                let m = Mat::from_fn(k, k, |i, j| inv_sqrt[i] * db[(i, j)] * inv_sqrt[j]);
                let min_eig = min_sym_eigenvalue(&m);
                if min_eig < 0.0 {
                    alpha = alpha.min(-1.0 / min_eig);
                }
            }
        }
        alpha
    }

    /// Moves to `λ + α ds`, `λ + α dz` (scaled coordinates) and recomputes the
    /// scaling there, composing with the current one.
    pub fn update(&mut self, ds_scaled: &ConeVec, dz_scaled: &ConeVec, alpha: f64) -> Result<(), ScalingError> {
        for i in 0..self.lp_lambda.len() {
            let l = self.lp_lambda[i];
            let d = self.lp_d[i];
            let s = l + alpha * ds_scaled.lp[i];
            let z = l + alpha * dz_scaled.lp[i];
            if !(s > 0.0 && z > 0.0) {
                return Err(ScalingError);
            }
            // new s_orig = d·s, z_orig = z/d
            self.lp_d[i] = d * (s / z).sqrt();
            self.lp_lambda[i] = (s * z).sqrt();
        }
        for (j, sc) in self.blocks.iter_mut().enumerate() {
            let k = sc.lambda.len();
            let st = Mat::from_fn(k, k, |a, b| {
                let diag = if a == b { sc.lambda[a] } else { 0.0 };
                diag + alpha * ds_scaled.blocks[j][(a, b)]
            });
            let zt = Mat::from_fn(k, k, |a, b| {
                let diag = if a == b { sc.lambda[a] } else { 0.0 };
                diag + alpha * dz_scaled.blocks[j][(a, b)]
            });
            let (rt, rt_inv, lambda) = nt_scaling(&symmetrize(&st), &symmetrize(&zt))?;
            sc.r = &sc.r * &rt;
            sc.rinv = &rt_inv * &sc.rinv;
            sc.lambda = lambda;
        }
        Ok(())
    }
}

type NtFactors = (Mat<f64>, Mat<f64>, Vec<f64>);

/// NT scaling of a PD pair: returns `(R, R⁻¹, λ)` with `R⁻¹ S R⁻ᵀ = Rᵀ Z R = diag(λ)`.
pub(crate) fn nt_scaling(s: &Mat<f64>, z: &Mat<f64>) -> Result<NtFactors, ScalingError> {
    let k = s.nrows();
    let ls = s.llt(Side::Lower).map_err(|_| ScalingError)?;
    let lz = z.llt(Side::Lower).map_err(|_| ScalingError)?;
    let ls = ls.L().to_owned();
    let lz = lz.L().to_owned();
    let prod = lz.transpose() * &ls;
    let svd = prod.svd().map_err(|_| ScalingError)?;
    let sigma: Vec<f64> = (0..k).map(|i| svd.S().column_vector()[i]).collect();
    if sigma.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(ScalingError);
    }
    let inv_sqrt: Vec<f64> = sigma.iter().map(|v| 1.0 / v.sqrt()).collect();
    let v = svd.V();
    let u = svd.U();
    // R = L_s V Σ^{-1/2};  R⁻¹ = Σ^{-1/2} Uᵀ L_zᵀ
    let lv = &ls * v;
    let r = Mat::from_fn(k, k, |a, b| lv[(a, b)] * inv_sqrt[b]);
    let ul = u.transpose() * lz.transpose();
    let rinv = Mat::from_fn(k, k, |a, b| inv_sqrt[a] * ul[(a, b)]);
    Ok((r, rinv, sigma))
}

/// General Jordan product `u ∘ w` (orthant: elementwise, PSD: `(UW + WU)/2`).
pub(crate) fn jordan_product(u: &ConeVec, w: &ConeVec) -> ConeVec {
    ConeVec {
        lp: u.lp.iter().zip(&w.lp).map(|(a, b)| a * b).collect(),
        blocks: u
            .blocks
            .iter()
            .zip(&w.blocks)
            .map(|(a, b)| {
                let ab = a * b;
                Mat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (ab[(i, j)] + ab[(j, i)]))
            })
            .collect(),
    }
}
