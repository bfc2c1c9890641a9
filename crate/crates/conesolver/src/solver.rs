//! Primal-dual path-following on the homogeneous self-dual embedding
//!
//! ```text
//! [0]   [  0   Aᵀ   Gᵀ  c ] [x]
//! [0] = [ −A   0    0   b ] [y]      s, z ∈ K,  τ, κ ≥ 0
//! [s]   [ −G   0    0   h ] [z]
//! [κ]   [ −cᵀ −bᵀ  −hᵀ  0 ] [τ]
//! ```
//!
//! Directions use Nesterov–Todd scaling and a Mehrotra predictor-corrector.
//! `τ → 0` with a certificate identifies primal or dual infeasibility.

use std::fmt;

use crate::cone::{jordan_product, ConeVec, Scaling};
use crate::kkt::KktSystem;
use crate::program::{ConeProgram, ProgramError};
use crate::standard::{dot, norm, Standard};

/// Once every measure is below `STALL_ZONE`, a solve that has not cut its
/// worst one by a tenth in `STALL_WINDOW` iterations has stalled at the
/// limit of its arithmetic.
const STALL_ZONE: f64 = 1e-4;
const STALL_WINDOW: usize = 10;
const STALL_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    /// Relative duality gap tolerance.
    pub gap_tol: f64,
    /// Relative primal/dual residual tolerance.
    pub feas_tol: f64,
    pub max_iterations: usize,
    /// Fraction of the distance to the cone boundary taken per step.
    pub step_fraction: f64,
    /// A solve that breaks down is still reported as `Inaccurate` when its
    /// best iterate met both tolerances scaled by this factor.
    pub inaccurate_factor: f64,
    /// Print one progress line per iteration to stderr.
    pub verbose: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            gap_tol: 1e-8,
            feas_tol: 1e-8,
            max_iterations: 100,
            step_fraction: 0.99,
            inaccurate_factor: 100.0,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Optimal,
    /// Optimal to the relaxed tolerances only.
    Inaccurate,
    Infeasible,
    MaxIterations,
    NumericalFailure,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Status::Optimal => "optimal",
            Status::Inaccurate => "inaccurate",
            Status::Infeasible => "infeasible",
            Status::MaxIterations => "max-iterations",
            Status::NumericalFailure => "numerical-failure",
        };
        f.write_str(s)
    }
}

/// Farkas-type certificate attached to an `Infeasible` outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// The constraints admit no point: a dual ray `(y, z)` with `hᵀz + bᵀy < 0`
    /// and `Aᵀy + Gᵀz ≈ 0`.
    PrimalInfeasible { ray_residual: f64 },
    /// The objective is unbounded below along a primal ray `x` with `cᵀx < 0`.
    DualInfeasible { ray_residual: f64 },
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::PrimalInfeasible { ray_residual } => write!(
                f,
                "primal infeasible: separating dual ray found (relative residual {ray_residual:.2e})"
            ),
            Certificate::DualInfeasible { ray_residual } => write!(
                f,
                "dual infeasible: objective unbounded along a primal ray (relative residual {ray_residual:.2e})"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub x: Vec<f64>,
    pub status: Status,
    pub objective: f64,
    /// `sᵀz / max(1, |cᵀx|)` at the returned point.
    pub duality_gap: f64,
    /// `‖Gx + s − h‖` relative to the largest of `max(1, ‖h‖)`, `‖Gx‖`,
    /// `‖s‖`; likewise for the equality rows.
    pub primal_residual: f64,
    /// `‖c + Aᵀy + Gᵀz‖` relative to the largest of `max(1, ‖c‖)`, `‖Aᵀy‖`, `‖Gᵀz‖`.
    pub dual_residual: f64,
    pub iterations: usize,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, Copy)]
struct Metrics {
    pcost: f64,
    rel_gap: f64,
    pres: f64,
    dres: f64,
    pinf: Option<f64>,
    dinf: Option<f64>,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<f64>,
    y: Vec<f64>,
    s: ConeVec,
    z: ConeVec,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<f64>,
    dy: Vec<f64>,
    ds: ConeVec,
    dz: ConeVec,
    ds_scaled: ConeVec,
    dz_scaled: ConeVec,
    dtau: f64,
    dkappa: f64,
}

pub fn solve(program: &ConeProgram, settings: &Settings) -> Result<SolveOutcome, ProgramError> {
    program.validate()?;
    let data = Standard::from_program(program);
    Ok(Engine::new(&data, settings).run(program))
}

struct Engine<'a> {
    data: &'a Standard,
    settings: &'a Settings,
    h: ConeVec,
    dims: Vec<usize>,
    degree: f64,
    c_norm: f64,
    b_norm: f64,
    h_norm: f64,
}

impl<'a> Engine<'a> {
    fn new(data: &'a Standard, settings: &'a Settings) -> Self {
        let h = data.h_vec();
        Self {
            data,
            settings,
            dims: data.block_dims(),
            degree: data.degree() as f64,
            c_norm: (norm(&data.c) / data.c_scale).max(1.0),
            b_norm: norm(&data.b).max(1.0),
            h_norm: h.norm().max(1.0),
            h,
        }
    }

    fn initial_point(&self, program: &ConeProgram) -> Iterate {
        let x = program
            .lower
            .iter()
            .zip(&program.upper)
            .map(|(&l, &u)| match (l.is_finite(), u.is_finite()) {
                (true, true) => 0.5 * (l + u),
                (true, false) => l + 1.0,
                (false, true) => u - 1.0,
                (false, false) => 1.0,
            })
            .collect();
        let nl = self.data.lp.len();
        Iterate {
            x,
            y: vec![0.0; self.data.a.len()],
            s: ConeVec::identity(nl, &self.dims),
            z: ConeVec::identity(nl, &self.dims),
            tau: 1.0,
            kappa: 1.0,
        }
    }

    /// `(r_x, r_y, r_z, r_τ)` of the embedding at `it`.
    fn residuals(&self, it: &Iterate) -> (Vec<f64>, Vec<f64>, ConeVec, f64) {
        let d = self.data;
        let mut rx = d.at_mul(&it.y);
        let gtz = d.gt_mul(&it.z);
        for i in 0..d.n {
            rx[i] += gtz[i] + d.c[i] * it.tau;
        }
        let ax = d.a_mul(&it.x);
        let ry: Vec<f64> = ax.iter().zip(&d.b).map(|(a, b)| a - b * it.tau).collect();
        let mut rz = d.g_mul(&it.x);
        rz.axpy(1.0, &it.s);
        rz.axpy(-it.tau, &self.h);
        let rt = it.kappa + dot(&d.c, &it.x) + dot(&d.b, &it.y) + self.h.dot(&it.z);
        (rx, ry, rz, rt)
    }

    fn metrics(&self, it: &Iterate, rx: &[f64], ry: &[f64], rz: &ConeVec) -> Metrics {
        let d = self.data;
        let cx = dot(&d.c, &it.x);
        let by_hz = dot(&d.b, &it.y) + self.h.dot(&it.z);
        let cs = d.c_scale;
        let pcost = cx / it.tau / cs;
        let gap = it.s.dot(&it.z) / (it.tau * it.tau) / cs;
        let rel_gap = gap / pcost.abs().max(1.0);
        // Each residual is measured against the largest term it sums, so
        // the test is invariant to the size of the optimal multipliers.
        let ax = norm(&d.a_mul(&it.x));
        let gx = d.g_mul(&it.x).norm();
        let aty = norm(&d.at_mul(&it.y));
        let gtz = norm(&d.gt_mul(&it.z));
        let pres_eq = norm(ry) / (self.b_norm * it.tau).max(ax);
        let pres_cone = rz.norm() / (self.h_norm * it.tau).max(gx).max(it.s.norm());
        let pres = pres_eq.max(pres_cone);
        let dres = norm(rx) / (self.c_norm * cs * it.tau).max(aty).max(gtz);

        let pinf = (by_hz < 0.0).then(|| {
            let mut r = d.at_mul(&it.y);
            for (a, b) in r.iter_mut().zip(d.gt_mul(&it.z)) {
                *a += b;
            }
            norm(&r) / norm(&d.c).max(1.0) / (-by_hz)
        });
        let dinf = (cx < 0.0).then(|| {
            let ax = norm(&d.a_mul(&it.x)) / self.b_norm;
            let mut gxs = d.g_mul(&it.x);
            gxs.axpy(1.0, &it.s);
            ax.max(gxs.norm() / self.h_norm) / (-cx / cs)
        });
        Metrics {
            pcost,
            rel_gap,
            pres,
            dres,
            pinf,
            dinf,
        }
    }

    fn run(&self, program: &ConeProgram) -> SolveOutcome {
        let d = self.data;
        let st = self.settings;
        let mut it = self.initial_point(program);
        let nl = d.lp.len();
        let mut scaling = Scaling::identity(nl, &self.dims);
        let h = &self.h;
        let neg_c: Vec<f64> = d.c.iter().map(|v| -v).collect();

        let mut iterations = 0;
        let mut best = f64::INFINITY;
        let mut best_at = 0;
        let mut fallback: Option<(Iterate, Metrics)> = None;
        loop {
            let (rx, ry, rz, rt) = self.residuals(&it);
            let m = self.metrics(&it, &rx, &ry, &rz);
            let merit = m.pres.max(m.dres).max(m.rel_gap);
            if merit > STALL_ZONE || merit < STALL_FACTOR * best {
                best = best.min(merit);
                best_at = iterations;
            }
            if fallback
                .as_ref()
                .is_none_or(|(_, f)| merit < f.pres.max(f.dres).max(f.rel_gap))
            {
                fallback = Some((it.clone(), m));
            }
            let fail = |status: Status, it: &Iterate| {
                let (b, bm) = fallback.as_ref().expect("set above");
                let loose = st.inaccurate_factor;
                if bm.pres <= loose * st.feas_tol && bm.dres <= loose * st.feas_tol && bm.rel_gap <= loose * st.gap_tol
                {
                    self.finish(b, Status::Inaccurate, *bm, iterations, None)
                } else {
                    self.finish(it, status, m, iterations, None)
                }
            };
            if st.verbose {
                eprintln!(
                    "{iterations:3} pcost {:+.8e} gap {:.2e} pres {:.2e} dres {:.2e} tau {:.2e} kappa {:.2e}",
                    m.pcost, m.rel_gap, m.pres, m.dres, it.tau, it.kappa
                );
            }

            if m.pres <= st.feas_tol && m.dres <= st.feas_tol && m.rel_gap <= st.gap_tol {
                return self.finish(&it, Status::Optimal, m, iterations, None);
            }
            if let Some(r) = m.pinf.filter(|r| *r <= st.feas_tol) {
                let cert = Certificate::PrimalInfeasible { ray_residual: r };
                return self.finish(&it, Status::Infeasible, m, iterations, Some(cert));
            }
            if let Some(r) = m.dinf.filter(|r| *r <= st.feas_tol) {
                let cert = Certificate::DualInfeasible { ray_residual: r };
                return self.finish(&it, Status::Infeasible, m, iterations, Some(cert));
            }
            if iterations >= best_at + STALL_WINDOW {
                return fail(Status::NumericalFailure, &it);
            }
            if iterations >= st.max_iterations {
                return fail(Status::MaxIterations, &it);
            }

            let kkt = match KktSystem::new(d, &scaling) {
                Ok(k) => k,
                Err(_) => return fail(Status::NumericalFailure, &it),
            };
            let Ok((x1, y1, z1)) = kkt.solve(d, &scaling, &neg_c, &d.b, h) else {
                return fail(Status::NumericalFailure, &it);
            };
            // cᵀx₁ + bᵀy₁ + hᵀz₁ = −‖W z₁‖² in exact arithmetic; the closed
            // form stands in when cancellation flips the sign of the sum.
            let wz1 = scaling.apply(&z1);
            let direct = dot(&d.c, &x1) + dot(&d.b, &y1) + h.dot(&z1) - it.kappa / it.tau;
            let closed = -wz1.dot(&wz1) - it.kappa / it.tau;
            let tau_denom = if direct < 0.0 { direct } else { closed };

            let lambda = scaling.lambda_vec();
            let lambda_sq = scaling.lambda_product(&lambda);
            let mu = (it.s.dot(&it.z) + it.tau * it.kappa) / (self.degree + 1.0);

            let sys = NewtonSystem {
                engine: self,
                kkt: &kkt,
                scaling: &scaling,
                rx: &rx,
                ry: &ry,
                rz: &rz,
                rt,
                it: &it,
                x1: &x1,
                y1: &y1,
                z1: &z1,
                tau_denom,
            };

            // predictor
            let mut rs = lambda_sq.clone();
            rs.scale(-1.0);
            let rk = -it.tau * it.kappa;
            let Some(aff) = sys.direction(1.0, &rs, rk) else {
                return fail(Status::NumericalFailure, &it);
            };
            let alpha_aff = self.step_length(&scaling, &it, &aff, 1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            // corrector
            let mut rs = lambda_sq;
            rs.scale(-1.0);
            rs.axpy(-1.0, &jordan_product(&aff.ds_scaled, &aff.dz_scaled));
            let e = ConeVec::identity(nl, &self.dims);
            rs.axpy(sigma * mu, &e);
            let rk = -it.tau * it.kappa - aff.dtau * aff.dkappa + sigma * mu;
            let Some(dir) = sys.direction(1.0 - sigma, &rs, rk) else {
                return fail(Status::NumericalFailure, &it);
            };
            let alpha_max = self.step_length(&scaling, &it, &dir, f64::INFINITY);
            let alpha = (st.step_fraction * alpha_max).min(1.0);
            if !(alpha > 1e-14) {
                return fail(Status::NumericalFailure, &it);
            }

            // take the step
            for (a, b) in it.x.iter_mut().zip(&dir.dx) {
                *a += alpha * b;
            }
            for (a, b) in it.y.iter_mut().zip(&dir.dy) {
                *a += alpha * b;
            }
            it.tau += alpha * dir.dtau;
            it.kappa += alpha * dir.dkappa;
            it.s.axpy(alpha, &dir.ds);
            it.z.axpy(alpha, &dir.dz);
            if !(it.tau > 0.0) || !(it.kappa > 0.0) {
                return fail(Status::NumericalFailure, &it);
            }
            // The scaling is rebuilt from s and z each step; composing the
            // previous one drifts once W becomes ill-conditioned.
            match Scaling::from_pair(&it.s, &it.z) {
                Ok(sc) => scaling = sc,
                Err(_) => {
                    if scaling.update(&dir.ds_scaled, &dir.dz_scaled, alpha).is_err() {
                        return fail(Status::NumericalFailure, &it);
                    }
                    let lambda = scaling.lambda_vec();
                    it.s = scaling.apply_transpose(&lambda);
                    it.z = scaling.apply_inverse(&lambda);
                }
            }
            iterations += 1;
        }
    }

    fn step_length(&self, scaling: &Scaling, it: &Iterate, dir: &Direction, cap: f64) -> f64 {
        let mut alpha = scaling.max_step(&dir.ds_scaled, &dir.dz_scaled, cap);
        if dir.dtau < 0.0 {
            alpha = alpha.min(-it.tau / dir.dtau);
        }
        if dir.dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / dir.dkappa);
        }
        alpha
    }

    fn finish(
        &self,
        it: &Iterate,
        status: Status,
        m: Metrics,
        iterations: usize,
        certificate: Option<Certificate>,
    ) -> SolveOutcome {
        let x: Vec<f64> = if status == Status::Infeasible {
            it.x.clone()
        } else {
            it.x.iter().map(|v| v / it.tau).collect()
        };
        SolveOutcome {
            objective: if status == Status::Infeasible {
                f64::NAN
            } else {
                m.pcost
            },
            x,
            status,
            duality_gap: m.rel_gap,
            primal_residual: m.pres,
            dual_residual: m.dres,
            iterations,
            certificate,
        }
    }
}

struct NewtonSystem<'a> {
    engine: &'a Engine<'a>,
    kkt: &'a KktSystem,
    scaling: &'a Scaling,
    rx: &'a [f64],
    ry: &'a [f64],
    rz: &'a ConeVec,
    rt: f64,
    it: &'a Iterate,
    x1: &'a [f64],
    y1: &'a [f64],
    z1: &'a ConeVec,
    tau_denom: f64,
}

impl NewtonSystem<'_> {
    /// Direction with linear residuals reduced by `eta` and complementarity
    /// targets `λ∘(ds̃ + dz̃) = rs`, `κ dτ + τ dκ = rk`.
    fn direction(&self, eta: f64, rs: &ConeVec, rk: f64) -> Option<Direction> {
        let d = self.engine.data;
        let h = &self.engine.h;
        let it = self.it;
        let v = self.scaling.lambda_divide(rs);
        let bx: Vec<f64> = self.rx.iter().map(|r| -eta * r).collect();
        let by: Vec<f64> = self.ry.iter().map(|r| -eta * r).collect();
        let mut bz = self.rz.clone();
        bz.scale(-eta);
        bz.axpy(-1.0, &self.scaling.apply_transpose(&v));
        let (x2, y2, z2) = self.kkt.solve(d, self.scaling, &bx, &by, &bz).ok()?;

        let num = -eta * self.rt - rk / it.tau - (dot(&d.c, &x2) + dot(&d.b, &y2) + h.dot(&z2));
        let dtau = num / self.tau_denom;
        if !dtau.is_finite() {
            return None;
        }
        let dx: Vec<f64> = x2.iter().zip(self.x1).map(|(a, b)| a + dtau * b).collect();
        let dy: Vec<f64> = y2.iter().zip(self.y1).map(|(a, b)| a + dtau * b).collect();
        let mut dz = z2;
        dz.axpy(dtau, self.z1);
        let dz_scaled = self.scaling.apply(&dz);
        // ds from the linearized primal equation G dx + ds − h dτ = −η r_z.
        let mut ds = self.rz.clone();
        ds.scale(-eta);
        ds.axpy(-1.0, &d.g_mul(&dx));
        ds.axpy(dtau, h);
        let ds_scaled = self.scaling.apply_inverse_transpose(&ds);
        let dkappa = (rk - it.kappa * dtau) / it.tau;
        Some(Direction {
            dx,
            dy,
            ds,
            dz,
            ds_scaled,
            dz_scaled,
            dtau,
            dkappa,
        })
    }
}
