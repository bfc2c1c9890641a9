//! Range-estimate variances, per-anchor Fisher information, CRBs and the
//! eigenvalue accuracy test.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{AccuracyTarget, Distribution, Mode, Point, Scenario};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RangingError {
    #[error("anchor {anchor} coincides with the sensor position (zero distance)")]
    ZeroDistance { anchor: usize },
    #[error("ranging energy must be positive, got {0}")]
    NonPositiveEnergy(f64),
    #[error("Fisher information is singular (min eigenvalue {min_eig:e}, trace {trace:e})")]
    Singular { min_eig: f64, trace: f64 },
    #[error("weight vector has length {got}, expected {expected}")]
    WeightLength { got: usize, expected: usize },
}

/// Symmetric 2×2 matrix `[[xx, xy], [xy, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 {
        xx: 0.0,
        xy: 0.0,
        yy: 0.0,
    };

    pub fn identity() -> Self {
        Sym2 {
            xx: 1.0,
            xy: 0.0,
            yy: 1.0,
        }
    }

    pub fn outer(v: [f64; 2]) -> Self {
        Sym2 {
            xx: v[0] * v[0],
            xy: v[0] * v[1],
            yy: v[1] * v[1],
        }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    /// Ascending eigenvalues, `mean ∓ radius`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = half_diff.hypot(self.xy);
        (mean - radius, mean + radius)
    }

    /// Smallest eigenvalue. For a PSD matrix the small root is recovered
    /// from the determinant to avoid cancellation.
    pub fn min_eigenvalue(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        if lo > 0.0 && hi > 0.0 {
            self.det().max(0.0) / hi
        } else {
            lo
        }
    }

    pub fn scaled(&self, t: f64) -> Self {
        Sym2 {
            xx: t * self.xx,
            xy: t * self.xy,
            yy: t * self.yy,
        }
    }

    pub fn add_scaled(&mut self, t: f64, other: &Sym2) {
        self.xx += t * other.xx;
        self.xy += t * other.xy;
        self.yy += t * other.yy;
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Sym2 {
            xx: self.yy / det,
            xy: -self.xy / det,
            yy: self.xx / det,
        })
    }
}

impl std::ops::Add for Sym2 {
    type Output = Sym2;
    fn add(self, rhs: Sym2) -> Sym2 {
        Sym2 {
            xx: self.xx + rhs.xx,
            xy: self.xy + rhs.xy,
            yy: self.yy + rhs.yy,
        }
    }
}

/// Rank-one information contribution of one anchor at one sensor point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FimTerm {
    pub matrix: Sym2,
    pub anchor_index: usize,
    pub sensor_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub min_eig_by_sensor: Vec<f64>,
    pub worst_sensor_index: usize,
    /// `min_s λ_min(s) − λ`
    pub margin: f64,
    pub lambda: f64,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.margin >= 0.0
    }

    /// Margin as a fraction of the threshold.
    pub fn relative_margin(&self) -> f64 {
        self.margin / self.lambda
    }
}

fn distance(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `σ² = ρ d^β / (α e)`.
pub fn range_variance(
    scenario: &Scenario,
    anchor_index: usize,
    sensor: Point,
    energy: f64,
) -> Result<f64, RangingError> {
    if !(energy > 0.0) {
        return Err(RangingError::NonPositiveEnergy(energy));
    }
    let d = distance(scenario.anchor_points[anchor_index], sensor);
    if d == 0.0 {
        return Err(RangingError::ZeroDistance { anchor: anchor_index });
    }
    let p = &scenario.physics;
    Ok(p.rho() * d.powf(p.beta) / (p.alpha * energy))
}

/// Energy multiplying the weight of anchor `m` in the range model: the
/// weight itself in OW-A, `e_s · w_m` in OW-S.
pub fn weight_energy(scenario: &Scenario, weight: f64) -> f64 {
    match scenario.mode {
        Mode::OwA => weight,
        Mode::OwS => scenario.sensor_energy() * weight,
    }
}

fn term_at(scenario: &Scenario, anchor_index: usize, sensor: Point) -> Result<Sym2, RangingError> {
    let a = scenario.anchor_points[anchor_index];
    let diff = [sensor[0] - a[0], sensor[1] - a[1]];
    let d = diff[0].hypot(diff[1]);
    if d == 0.0 {
        return Err(RangingError::ZeroDistance { anchor: anchor_index });
    }
    let p = &scenario.physics;
    let mut coef = p.alpha / p.rho() * d.powf(-p.beta - 2.0);
    if scenario.mode == Mode::OwS {
        coef *= scenario.sensor_energy();
    }
    Ok(Sym2::outer(diff).scaled(coef))
}

/// `α ρ⁻¹ d^{−β−2} (s − a)(s − a)ᵀ`, times `e_s` in OW-S mode.
pub fn fim_term(scenario: &Scenario, anchor_index: usize, sensor_index: usize) -> Result<FimTerm, RangingError> {
    Ok(FimTerm {
        matrix: term_at(scenario, anchor_index, scenario.sensor_points[sensor_index])?,
        anchor_index,
        sensor_index,
    })
}

/// Precomputed FIM terms for every (sensor, anchor) pair of a scenario.
#[derive(Debug, Clone)]
pub struct FimTable {
    num_anchors: usize,
    /// Row-major by sensor.
    terms: Vec<Sym2>,
    lambda: f64,
}

impl FimTable {
    pub fn new(scenario: &Scenario) -> Result<Self, RangingError> {
        let mut terms = Vec::with_capacity(scenario.num_anchors() * scenario.num_sensors());
        for &s in &scenario.sensor_points {
            for m in 0..scenario.num_anchors() {
                terms.push(term_at(scenario, m, s)?);
            }
        }
        Ok(Self {
            num_anchors: scenario.num_anchors(),
            terms,
            lambda: accuracy_threshold(&scenario.accuracy),
        })
    }

    pub fn num_anchors(&self) -> usize {
        self.num_anchors
    }

    pub fn num_sensors(&self) -> usize {
        self.terms.len() / self.num_anchors
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn term(&self, sensor_index: usize, anchor_index: usize) -> &Sym2 {
        &self.terms[sensor_index * self.num_anchors + anchor_index]
    }

    pub fn sensor_terms(&self, sensor_index: usize) -> &[Sym2] {
        &self.terms[sensor_index * self.num_anchors..(sensor_index + 1) * self.num_anchors]
    }

    pub fn assemble(&self, weights: &[f64], sensor_index: usize) -> Sym2 {
        let mut f = Sym2::ZERO;
        for (w, t) in weights.iter().zip(self.sensor_terms(sensor_index)) {
            if *w != 0.0 {
                f.add_scaled(*w, t);
            }
        }
        f
    }

    pub fn report(&self, weights: &[f64]) -> Result<FeasibilityReport, RangingError> {
        if weights.len() != self.num_anchors {
            return Err(RangingError::WeightLength {
                got: weights.len(),
                expected: self.num_anchors,
            });
        }
        let min_eig_by_sensor: Vec<f64> = (0..self.num_sensors())
            .map(|k| self.assemble(weights, k).min_eigenvalue())
            .collect();
        let (worst_sensor_index, worst) = min_eig_by_sensor
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        Ok(FeasibilityReport {
            min_eig_by_sensor,
            worst_sensor_index,
            margin: worst - self.lambda,
            lambda: self.lambda,
        })
    }

    /// Whether `min_s λ_min ≥ λ` for a 0/1 selection scaled by `scale`;
    /// exits at the first failing sensor point.
    pub fn subset_feasible(&self, selected: &[bool], scale: f64) -> bool {
        (0..self.num_sensors()).all(|k| {
            let mut f = Sym2::ZERO;
            for (on, t) in selected.iter().zip(self.sensor_terms(k)) {
                if *on {
                    f.add_scaled(scale, t);
                }
            }
            f.min_eigenvalue() >= self.lambda
        })
    }
}

/// `Σ_m w_m F_m(s)` at one sensor point.
pub fn assemble_fim(scenario: &Scenario, weights: &[f64], sensor_index: usize) -> Result<Sym2, RangingError> {
    if weights.len() != scenario.num_anchors() {
        return Err(RangingError::WeightLength {
            got: weights.len(),
            expected: scenario.num_anchors(),
        });
    }
    let s = scenario.sensor_points[sensor_index];
    let mut f = Sym2::ZERO;
    for (m, w) in weights.iter().enumerate() {
        if *w != 0.0 {
            f.add_scaled(*w, &term_at(scenario, m, s)?);
        }
    }
    Ok(f)
}

/// λ such that `λ_min(F) ≥ λ` guarantees `Pr(‖ξ‖ ≤ Rₑ) ≥ Pₑ`.
pub fn accuracy_threshold(target: &AccuracyTarget) -> f64 {
    let scale = 2.0 / (target.radius * target.radius);
    match target.distribution {
        Distribution::Gaussian => scale * (1.0 / (1.0 - target.probability)).ln(),
        Distribution::Unknown => scale / (1.0 - target.probability),
    }
}

pub fn feasibility_report(scenario: &Scenario, weights: &[f64]) -> Result<FeasibilityReport, RangingError> {
    FimTable::new(scenario)?.report(weights)
}

/// Inverse FIM; rejects `λ_min ≤ 1e-12·tr(F)`.
pub fn crb_matrix(scenario: &Scenario, weights: &[f64], sensor_index: usize) -> Result<Sym2, RangingError> {
    crb_from_fim(&assemble_fim(scenario, weights, sensor_index)?)
}

pub(crate) fn crb_from_fim(f: &Sym2) -> Result<Sym2, RangingError> {
    let min_eig = f.min_eigenvalue();
    let trace = f.trace();
    if !(min_eig > 1e-12 * trace) {
        return Err(RangingError::Singular { min_eig, trace });
    }
    f.inverse().ok_or(RangingError::Singular { min_eig, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::unit_physics;
    use crate::scenario::{AccuracyTarget, PhysicsParams};

    fn unit_scenario(anchors: Vec<Point>, sensors: Vec<Point>) -> Scenario {
        Scenario {
            name: "t".into(),
            anchor_points: anchors,
            sensor_points: sensors,
            physics: unit_physics(),
            accuracy: AccuracyTarget {
                radius: 2f64.sqrt(),
                probability: 1.0 - (-1.0f64).exp(),
                distribution: Distribution::Gaussian,
            },
            mode: Mode::OwA,
            energy_bound: Some(1.0),
            sensor_energy: None,
        }
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn variance_unit_and_distance_scaling() {
        let s = unit_scenario(vec![[1.0, 0.0], [2.0, 0.0]], vec![[0.0, 0.0]]);
        assert_eq!(range_variance(&s, 0, [0.0, 0.0], 1.0).unwrap(), 1.0);
        assert!(close(range_variance(&s, 1, [0.0, 0.0], 1.0).unwrap(), 4.0, 1e-15));
        assert!(matches!(
            range_variance(&s, 0, [1.0, 0.0], 1.0),
            Err(RangingError::ZeroDistance { .. })
        ));
        assert!(matches!(
            range_variance(&s, 0, [0.0, 0.0], 0.0),
            Err(RangingError::NonPositiveEnergy(_))
        ));
    }

    #[test]
    fn shipped_physics_rho() {
        let mut s = unit_scenario(vec![[1.0, 0.0]], vec![[0.0, 0.0]]);
        s.physics = PhysicsParams {
            alpha: 1.0,
            beta: 2.0,
            propagation_speed: 3.0e8,
            mean_square_bandwidth: (std::f64::consts::TAU * 8.0e9).powi(2),
            noise_psd: 1.0,
        };
        // 9e16 / (2π·8e9)²
        let expected = 3.562_072_862_425_937e-5;
        assert!(close(range_variance(&s, 0, [0.0, 0.0], 1.0).unwrap(), expected, 1e-12));
    }

    #[test]
    fn fim_term_examples() {
        let s = unit_scenario(vec![[1.0, 0.0], [0.0, 2.0]], vec![[0.0, 0.0]]);
        let t0 = fim_term(&s, 0, 0).unwrap().matrix;
        assert_eq!(
            t0,
            Sym2 {
                xx: 1.0,
                xy: 0.0,
                yy: 0.0
            }
        );
        let t1 = fim_term(&s, 1, 0).unwrap().matrix;
        assert!(close(t1.yy, 0.25, 1e-15) && t1.xx == 0.0 && t1.xy == 0.0);
    }

    #[test]
    fn orthogonal_pair_gives_identity() {
        let s = unit_scenario(vec![[1.0, 0.0], [0.0, 1.0]], vec![[0.0, 0.0]]);
        let f = assemble_fim(&s, &[1.0, 1.0], 0).unwrap();
        assert_eq!(f, Sym2::identity());
        assert_eq!(f.min_eigenvalue(), 1.0);
        assert_eq!(assemble_fim(&s, &[0.0, 0.0], 0).unwrap(), Sym2::ZERO);
    }

    #[test]
    fn collinear_anchors_with_sensor_are_singular() {
        let s = unit_scenario(vec![[1.0, 0.0], [2.0, 0.0], [-1.0, 0.0]], vec![[0.0, 0.0]]);
        let f = assemble_fim(&s, &[1.0, 0.3, 2.0], 0).unwrap();
        assert_eq!(f.min_eigenvalue(), 0.0);
        assert!(matches!(
            crb_matrix(&s, &[1.0, 0.3, 2.0], 0),
            Err(RangingError::Singular { .. })
        ));
    }

    #[test]
    fn thresholds() {
        let g = AccuracyTarget {
            radius: 0.04,
            probability: 0.95,
            distribution: Distribution::Gaussian,
        };
        assert!(close(accuracy_threshold(&g), 1250.0 * 20f64.ln(), 1e-14));
        let unit = unit_scenario(vec![[1.0, 0.0]], vec![[0.0, 0.0]]).accuracy;
        assert!(close(accuracy_threshold(&unit), 1.0, 1e-15));
        let u = AccuracyTarget {
            distribution: Distribution::Unknown,
            ..unit
        };
        assert!(close(accuracy_threshold(&u), std::f64::consts::E, 1e-14));
    }

    #[test]
    fn report_margins() {
        let s = unit_scenario(vec![[1.0, 0.0], [0.0, 1.0]], vec![[0.0, 0.0], [0.5, 0.5]]);
        let r = feasibility_report(&s, &[0.0, 0.0]).unwrap();
        assert!(close(r.margin, -1.0, 1e-15));
        assert!(!r.is_feasible());
        let one = unit_scenario(vec![[1.0, 0.0]], vec![[0.0, 0.0], [3.0, 4.0]]);
        let r = feasibility_report(&one, &[7.0]).unwrap();
        assert!(r.min_eig_by_sensor.iter().all(|v| v.abs() < 1e-12));
        assert!(feasibility_report(&s, &[1.0]).is_err());
    }

    #[test]
    fn crb_inverts() {
        let s = unit_scenario(vec![[1.0, 0.0], [0.0, 1.0]], vec![[0.0, 0.0]]);
        assert_eq!(crb_matrix(&s, &[1.0, 1.0], 0).unwrap(), Sym2::identity());
        let d = crb_from_fim(&Sym2 {
            xx: 4.0,
            xy: 0.0,
            yy: 1.0,
        })
        .unwrap();
        assert_eq!(
            d,
            Sym2 {
                xx: 0.25,
                xy: 0.0,
                yy: 1.0
            }
        );
    }

    #[test]
    fn ows_folds_sensor_energy() {
        let mut s = unit_scenario(vec![[1.0, 0.0]], vec![[0.0, 0.0]]);
        s.mode = Mode::OwS;
        s.energy_bound = None;
        s.sensor_energy = Some(3.0);
        assert_eq!(fim_term(&s, 0, 0).unwrap().matrix.xx, 3.0);
    }
}
