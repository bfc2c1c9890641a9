//! Reduced KKT system
//!
//! ```text
//! [ 0  Aᵀ  Gᵀ   ] [dx]   [bx]
//! [ A  0   0    ] [dy] = [by]
//! [ G  0  −WᵀW  ] [dz]   [bz]
//! ```
//!
//! `dz` is eliminated, leaving the symmetric quasi-definite system
//! `[H Aᵀ; A 0]` with `H = Gᵀ(WᵀW)⁻¹G`. It is factored as `LDLᵀ` after a small
//! small diagonal regularization and solved with iterative refinement.

use faer::linalg::solvers::{Ldlt, Solve};
use faer::{Mat, Side};

use crate::cone::{ConeVec, Scaling};
use crate::standard::{norm, BlockTerm, Standard};

const REFINE_STEPS: usize = 4;
const REG_RELATIVE: f64 = 1e-13;
const REG_ABSOLUTE: f64 = 1e-14;

pub(crate) struct KktSystem {
    n: usize,
    p: usize,
    /// Unregularized `H`, full symmetric.
    hess: Mat<f64>,
    factor: Ldlt<f64>,
    t: Vec<Mat<f64>>,
}

#[derive(Debug)]
pub(crate) struct FactorError;

impl KktSystem {
    pub fn new(data: &Standard, scaling: &Scaling) -> Result<Self, FactorError> {
        let n = data.n;
        let p = data.a.len();
        let t = scaling.inverse_hessian_factors();
        let mut hess = Mat::<f64>::zeros(n, n);

        for (row, d) in data.lp.iter().zip(&scaling.lp_d) {
            hess[(row.var, row.var)] += row.g * row.g / (d * d);
        }
        for (blk, tm) in data.blocks.iter().zip(&t) {
            add_block_hessian(&mut hess, blk.terms.as_slice(), tm);
        }

        let reg_dual = 1e-11;
        let mut kkt = Mat::<f64>::zeros(n + p, n + p);
        for j in 0..n {
            for i in j..n {
                kkt[(i, j)] = hess[(i, j)];
            }
            kkt[(j, j)] += REG_RELATIVE * hess[(j, j)] + REG_ABSOLUTE;
        }
        for (k, row) in data.a.iter().enumerate() {
            for (i, v) in row {
                kkt[(n + k, *i)] += v;
            }
            kkt[(n + k, n + k)] = -reg_dual;
        }
        let factor = Ldlt::new(kkt.as_ref(), Side::Lower).map_err(|_| FactorError)?;
        Ok(Self { n, p, hess, factor, t })
    }

    /// Solves the full system, refining against the unreduced equations
    /// while the residual keeps shrinking.
    pub fn solve(
        &self,
        data: &Standard,
        scaling: &Scaling,
        bx: &[f64],
        by: &[f64],
        bz: &ConeVec,
    ) -> Result<(Vec<f64>, Vec<f64>, ConeVec), FactorError> {
        let (mut dx, mut dy, mut dz) = self.solve_reduced(data, scaling, bx, by, bz);
        let (mut r1, mut r2, mut r3) = self.full_residual(data, scaling, bx, by, bz, &dx, &dy, &dz);
        let mut err = norm(&r1).max(norm(&r2)).max(r3.norm());
        for _ in 0..REFINE_STEPS {
            if err == 0.0 {
                break;
            }
            let (cx, cy, cz) = self.solve_reduced(data, scaling, &r1, &r2, &r3);
            let tx: Vec<f64> = dx.iter().zip(&cx).map(|(a, b)| a + b).collect();
            let ty: Vec<f64> = dy.iter().zip(&cy).map(|(a, b)| a + b).collect();
            let mut tz = dz.clone();
            tz.axpy(1.0, &cz);
            let (q1, q2, q3) = self.full_residual(data, scaling, bx, by, bz, &tx, &ty, &tz);
            let next = norm(&q1).max(norm(&q2)).max(q3.norm());
            if !(next < err) {
                break;
            }
            (dx, dy, dz, r1, r2, r3, err) = (tx, ty, tz, q1, q2, q3, next);
        }
        if dx.iter().chain(&dy).any(|v| !v.is_finite()) || !dz.norm().is_finite() {
            return Err(FactorError);
        }
        Ok((dx, dy, dz))
    }

    #[allow(clippy::too_many_arguments)]
    fn full_residual(
        &self,
        data: &Standard,
        scaling: &Scaling,
        bx: &[f64],
        by: &[f64],
        bz: &ConeVec,
        dx: &[f64],
        dy: &[f64],
        dz: &ConeVec,
    ) -> (Vec<f64>, Vec<f64>, ConeVec) {
        let gtdz = data.gt_mul(dz);
        let atdy = data.at_mul(dy);
        let r1 = (0..self.n).map(|i| bx[i] - atdy[i] - gtdz[i]).collect();
        let adx = data.a_mul(dx);
        let r2 = (0..self.p).map(|k| by[k] - adx[k]).collect();
        let mut r3 = bz.clone();
        r3.axpy(-1.0, &data.g_mul(dx));
        r3.axpy(1.0, &scaling.apply_transpose(&scaling.apply(dz)));
        (r1, r2, r3)
    }

    /// `dz = (WᵀW)⁻¹(G dx − bz)`
    fn recover_dz(&self, data: &Standard, scaling: &Scaling, dx: &[f64], bz: &ConeVec) -> ConeVec {
        let mut gdx = data.g_mul(dx);
        gdx.axpy(-1.0, bz);
        scaling.apply_inverse_hessian(&gdx, &self.t)
    }

    fn solve_reduced(
        &self,
        data: &Standard,
        scaling: &Scaling,
        bx: &[f64],
        by: &[f64],
        bz: &ConeVec,
    ) -> (Vec<f64>, Vec<f64>, ConeVec) {
        let n = self.n;
        let qbz = scaling.apply_inverse_hessian(bz, &self.t);
        let gq = data.gt_mul(&qbz);
        let mut rhs = Vec::with_capacity(n + self.p);
        rhs.extend(bx.iter().zip(&gq).map(|(a, b)| a + b));
        rhs.extend_from_slice(by);

        let mut sol = self.factor_solve(&rhs);
        let resid = self.residual(data, &rhs, &sol);
        let corr = self.factor_solve(&resid);
        sol.iter_mut().zip(&corr).for_each(|(s, c)| *s += c);

        let dx = sol[..n].to_vec();
        let dy = sol[n..].to_vec();
        let dz = self.recover_dz(data, scaling, &dx, bz);
        (dx, dy, dz)
    }

    fn factor_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut m = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.factor.solve_in_place(m.as_mut());
        (0..rhs.len()).map(|i| m[(i, 0)]).collect()
    }

    /// `rhs − [H Aᵀ; A 0]·sol`
    fn residual(&self, data: &Standard, rhs: &[f64], sol: &[f64]) -> Vec<f64> {
        let n = self.n;
        let x = &sol[..n];
        let y = &sol[n..];
        let xm = Mat::from_fn(n, 1, |i, _| x[i]);
        let hx = &self.hess * &xm;
        let aty = data.at_mul(y);
        let ax = data.a_mul(x);
        let mut out = Vec::with_capacity(rhs.len());
        for i in 0..n {
            out.push(rhs[i] - hx[(i, 0)] - aty[i]);
        }
        for k in 0..self.p {
            out.push(rhs[n + k] - ax[k]);
        }
        out
    }
}

/// `H[u,v] += tr(A_u T A_v T)` for every pair of terms in one block.
fn add_block_hessian(hess: &mut Mat<f64>, terms: &[BlockTerm], t: &Mat<f64>) {
    let k = t.nrows();
    let tv: Vec<f64> = (0..k * k).map(|idx| t[(idx / k, idx % k)]).collect();
    for (a, (va, ea)) in terms.iter().enumerate() {
        for (vb, eb) in terms[..=a].iter() {
            let mut acc = 0.0;
            for &(r1, c1, v1) in ea {
                for &(r2, c2, v2) in eb {
                    // A_a[r1,c1] A_b[r2,c2] T[c1,r2] T[c2,r1]
                    acc += v1 * v2 * tv[c1 as usize * k + r2 as usize] * tv[c2 as usize * k + r1 as usize];
                }
            }
            hess[(*va, *vb)] += acc;
            if !std::ptr::eq(ea, eb) {
                hess[(*vb, *va)] += acc;
            }
        }
    }
}
