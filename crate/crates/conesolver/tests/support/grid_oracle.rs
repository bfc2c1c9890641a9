//! Random small programs and a brute-force grid oracle that shares no code
//! with the solver: feasibility of a grid point is decided by a closed-form
//! eigenvalue of each (at most 3×3) block.

#![allow(dead_code)]

use conesolver::{ConeProgram, PsdBlock, SymMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense blocks kept alongside the program for the oracle.
pub struct Instance {
    pub program: ConeProgram,
    constant: Vec<Vec<f64>>,
    terms: Vec<Vec<Vec<f64>>>,
    dims: Vec<usize>,
}

fn random_symmetric(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let mut a = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let v: f64 = rng.random_range(-1.0..1.0);
            a[i * k + j] = v;
            a[j * k + i] = v;
        }
    }
    a
}

/// `n` variables in `[0, 1]`, up to three blocks of size ≤ 3, strictly
/// feasible at a random interior point.
pub fn instance(seed: u64, n: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..0.8)).collect();
    let mut p = ConeProgram::new(n);
    p.objective = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    p.lower = vec![0.0; n];
    p.upper = vec![1.0; n];
    let blocks = rng.random_range(1..=3);
    let mut constant = Vec::new();
    let mut terms = Vec::new();
    let mut dims = Vec::new();
    for _ in 0..blocks {
        let k = rng.random_range(1..=3);
        let a: Vec<Vec<f64>> = (0..n).map(|_| random_symmetric(&mut rng, k)).collect();
        let mu: f64 = rng.random_range(0.05..0.3);
        let mut b = vec![0.0; k * k];
        for i in 0..k {
            b[i * k + i] = mu;
        }
        for (ai, xi) in a.iter().zip(&x0) {
            for (bv, av) in b.iter_mut().zip(ai) {
                *bv -= xi * av;
            }
        }
        let mut blk = PsdBlock::new(SymMatrix::from_dense(k, &b));
        for (i, ai) in a.iter().enumerate() {
            blk = blk.with_term(i, SymMatrix::from_dense(k, ai));
        }
        p.psd_blocks.push(blk);
        constant.push(b);
        terms.push(a);
        dims.push(k);
    }
    Instance {
        program: p,
        constant,
        terms,
        dims,
    }
}

fn min_eig(k: usize, m: &[f64]) -> f64 {
    match k {
        1 => m[0],
        2 => {
            let (a, b, d) = (m[0], m[1], m[3]);
            0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt()
        }
        3 => {
            let (a, b, c, d, e, f) = (m[0], m[1], m[2], m[4], m[5], m[8]);
            let p1 = b * b + c * c + e * e;
            let q = (a + d + f) / 3.0;
            let p2 = (a - q).powi(2) + (d - q).powi(2) + (f - q).powi(2) + 2.0 * p1;
            if p2 == 0.0 {
                return q;
            }
            let p = (p2 / 6.0).sqrt();
            let (ba, bd, bf) = ((a - q) / p, (d - q) / p, (f - q) / p);
            let (bb, bc, be) = (b / p, c / p, e / p);
            let det = ba * (bd * bf - be * be) - bb * (bb * bf - be * bc) + bc * (bb * be - bd * bc);
            let phi = (det / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
            q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos()
        }
        _ => unreachable!(),
    }
}

impl Instance {
    fn feasible(&self, x: &[f64]) -> bool {
        let mut m = [0.0; 9];
        self.dims.iter().enumerate().all(|(j, &k)| {
            let m = &mut m[..k * k];
            m.copy_from_slice(&self.constant[j]);
            for (ai, xi) in self.terms[j].iter().zip(x) {
                for (mv, av) in m.iter_mut().zip(ai) {
                    *mv += xi * av;
                }
            }
            min_eig(k, m) >= 0.0
        })
    }

    fn cost(&self, x: &[f64]) -> f64 {
        self.program.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Best feasible point on a grid of `g` points per axis over `window`.
    fn scan(&self, window: &[(f64, f64)], g: usize, best: &mut Option<(f64, Vec<f64>)>) {
        let n = window.len();
        let mut idx = vec![0usize; n];
        let mut x = vec![0.0; n];
        loop {
            for d in 0..n {
                let (lo, hi) = window[d];
                x[d] = lo + (hi - lo) * idx[d] as f64 / (g - 1) as f64;
            }
            if self.feasible(&x) {
                let c = self.cost(&x);
                if best.as_ref().is_none_or(|(b, _)| c < *b) {
                    *best = Some((c, x.clone()));
                }
            }
            let mut d = 0;
            loop {
                if d == n {
                    return;
                }
                idx[d] += 1;
                if idx[d] < g {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    /// Exhaustive 1e-3 grid for n ≤ 2; for larger n, an 11-point grid whose
    /// window shrinks around the incumbent until the spacing is below 1e-6.
    pub fn grid_minimum(&self) -> f64 {
        let n = self.program.objective.len();
        let mut best = None;
        if n <= 2 {
            self.scan(&vec![(0.0, 1.0); n], 1001, &mut best);
        } else {
            let g = 11;
            let mut window = vec![(0.0, 1.0); n];
            loop {
                self.scan(&window, g, &mut best);
                let step = (window[0].1 - window[0].0) / (g - 1) as f64;
                if step < 1e-6 {
                    break;
                }
                let (_, x) = best.as_ref().expect("the grid contains a feasible point");
                window = x
                    .iter()
                    .map(|&v| {
                        let lo = (v - 3.0 * step).clamp(0.0, 1.0 - 6.0 * step);
                        (lo, lo + 6.0 * step)
                    })
                    .collect();
            }
        }
        best.expect("strictly feasible instance").0
    }
}

/// `min 1ᵀx  s.t.  Σ x_i a_i a_iᵀ − λI ⪰ 0,  0 ≤ x ≤ 10`, three directions.
pub fn ladder_program(lambda: f64) -> ConeProgram {
    let dirs = [[1.0, 0.0], [0.6, 0.8], [-0.28, 0.96]];
    let mut p = ConeProgram::new(3);
    p.objective = vec![1.0, 2.0, 1.5];
    p.lower = vec![0.0; 3];
    p.upper = vec![10.0; 3];
    let mut blk = PsdBlock::new(SymMatrix::scaled_identity(2, -lambda));
    for (i, d) in dirs.iter().enumerate() {
        blk = blk.with_term(
            i,
            SymMatrix::from_dense(2, &[d[0] * d[0], d[0] * d[1], d[0] * d[1], d[1] * d[1]]),
        );
    }
    p.psd_blocks.push(blk);
    p
}
