//! Monte-Carlo check that a placement delivers `Pr(‖ŝ − s‖ ≤ Rₑ) ≥ Pₑ`.
//!
//! Each range estimate is drawn as `N(d(a_m, s), σ²_m)` with the variance of
//! the range model. Negative draws are kept: the Gaussian model allows them
//! and truncating would bias the comparison against the bound.
//!
//! The position estimate is the variance-weighted nonlinear least-squares
//! fit, found by a coarse grid search over a dilated sensor area followed by
//! damped Gauss-Newton refinement.
//!
//! Trial `t` at sensor point `k` draws from ChaCha8 seeded with `seed` on
//! stream `(k << 32) | t`, so every trial is reproducible on its own.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ranging::{range_variance, weight_energy, FimTable, RangingError};
use crate::scenario::{Point, Scenario};

pub const DEFAULT_TRIALS: usize = 2000;
/// Placements whose margin is below `−REFUSE_RTOL · λ` are not simulated.
pub const REFUSE_RTOL: f64 = 1e-6;
const MAX_ITERATIONS: usize = 50;
const STEP_TOL: f64 = 1e-10;
const GRID_STEPS: usize = 21;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("placement misses the threshold (margin {margin:.3e} against λ = {lambda:.3e}); coverage is undefined")]
    Infeasible { margin: f64, lambda: f64 },
    #[error("no anchor has positive weight")]
    EmptySupport,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("sensor point index {index} out of range ({count} points)")]
    BadPoint { index: usize, count: usize },
    #[error(transparent)]
    Ranging(#[from] RangingError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Localization {
    pub estimate: Point,
    pub iterations: usize,
    /// Refinement left the search area or hit the iteration cap.
    pub diverged: bool,
    /// The weighted normal matrix was singular at the estimate, as for
    /// anchors collinear with the sensor.
    pub ambiguous: bool,
}

impl Localization {
    pub fn failed(&self) -> bool {
        self.diverged || self.ambiguous
    }
}

/// Which sensor points `coverage` simulates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestPoints {
    All,
    WorstMargin,
    Indices(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Sensor point indices, aligned with `per_sensor_coverage`.
    pub points: Vec<usize>,
    pub per_sensor_coverage: Vec<f64>,
    pub worst_coverage: f64,
    pub worst_point: usize,
    pub trials: usize,
    pub estimator_divergences: usize,
    pub seed: u64,
    pub radius: f64,
    pub probability: f64,
}

struct Link {
    anchor: Point,
    energy: f64,
    index: usize,
}

fn links(scenario: &Scenario, weights: &[f64]) -> Result<Vec<Link>, VerifyError> {
    if weights.len() != scenario.num_anchors() {
        return Err(RangingError::WeightLength {
            got: weights.len(),
            expected: scenario.num_anchors(),
        }
        .into());
    }
    let out: Vec<Link> = weights
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(m, w)| Link {
            anchor: scenario.anchor_points[m],
            energy: weight_energy(scenario, *w),
            index: m,
        })
        .collect();
    if out.is_empty() {
        return Err(VerifyError::EmptySupport);
    }
    Ok(out)
}

fn draw(scenario: &Scenario, links: &[Link], sensor: Point, rng: &mut ChaCha8Rng) -> Result<Vec<f64>, VerifyError> {
    links
        .iter()
        .map(|l| {
            let sigma = range_variance(scenario, l.index, sensor, l.energy)?.sqrt();
            let d = (sensor[0] - l.anchor[0]).hypot(sensor[1] - l.anchor[1]);
            let g: f64 = rng.sample(StandardNormal);
            Ok(d + sigma * g)
        })
        .collect()
}

/// One range estimate per anchor with positive weight, in anchor order.
pub fn simulate_ranges(
    scenario: &Scenario,
    weights: &[f64],
    true_sensor: Point,
    seed: u64,
) -> Result<Vec<f64>, VerifyError> {
    let links = links(scenario, weights)?;
    draw(scenario, &links, true_sensor, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Axis-aligned search box: the sensor points' bounding box padded by a
/// quarter of its larger side, or of the distance to the nearest anchor
/// when the box is degenerate.
fn search_area(scenario: &Scenario) -> [[f64; 2]; 2] {
    let pts = &scenario.sensor_points;
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in pts {
        for a in 0..2 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let side = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let centre = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let nearest = scenario
        .anchor_points
        .iter()
        .map(|a| (a[0] - centre[0]).hypot(a[1] - centre[1]))
        .fold(f64::INFINITY, f64::min);
    let pad = 0.25 * side.max(nearest);
    [[lo[0] - pad, hi[0] + pad], [lo[1] - pad, hi[1] + pad]]
}

struct Problem<'a> {
    scenario: &'a Scenario,
    links: &'a [Link],
    ranges: &'a [f64],
}

impl Problem<'_> {
    fn inv_variance(&self, l: &Link, d: f64) -> f64 {
        let p = &self.scenario.physics;
        p.alpha * l.energy / (p.rho() * d.max(f64::MIN_POSITIVE).powf(p.beta))
    }

    fn cost(&self, x: Point) -> f64 {
        self.links
            .iter()
            .zip(self.ranges)
            .map(|(l, r)| {
                let d = (x[0] - l.anchor[0]).hypot(x[1] - l.anchor[1]);
                let e = r - d;
                self.inv_variance(l, d) * e * e
            })
            .sum()
    }

    /// Gauss-Newton step at `x`, or `None` when the normal matrix is singular.
    fn step(&self, x: Point) -> Option<Point> {
        let (mut a, mut b, mut c, mut g0, mut g1) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (l, r) in self.links.iter().zip(self.ranges) {
            let dx = x[0] - l.anchor[0];
            let dy = x[1] - l.anchor[1];
            let d = dx.hypot(dy);
            if d == 0.0 {
                return None;
            }
            let (ux, uy) = (dx / d, dy / d);
            let w = self.inv_variance(l, d);
            let e = r - d;
            a += w * ux * ux;
            b += w * ux * uy;
            c += w * uy * uy;
            g0 += w * ux * e;
            g1 += w * uy * e;
        }
        let det = a * c - b * b;
        if !(det > 1e-12 * (a + c) * (a + c)) {
            return None;
        }
        Some([(c * g0 - b * g1) / det, (a * g1 - b * g0) / det])
    }
}

fn inside(area: &[[f64; 2]; 2], x: Point) -> bool {
    x[0] >= area[0][0] && x[0] <= area[0][1] && x[1] >= area[1][0] && x[1] <= area[1][1]
}

fn localize_in(problem: &Problem<'_>, area: &[[f64; 2]; 2]) -> Localization {
    let mut x = area[0];
    let mut best = f64::INFINITY;
    for i in 0..GRID_STEPS {
        for j in 0..GRID_STEPS {
            let t = |k: usize, axis: usize| {
                area[axis][0] + (area[axis][1] - area[axis][0]) * k as f64 / (GRID_STEPS - 1) as f64
            };
            let p = [t(i, 0), t(j, 1)];
            let c = problem.cost(p);
            if c < best {
                best = c;
                x = p;
            }
        }
    }

    let mut cost = best;
    for iteration in 1..=MAX_ITERATIONS {
        let Some(step) = problem.step(x) else {
            return Localization {
                estimate: x,
                iterations: iteration,
                diverged: false,
                ambiguous: true,
            };
        };
        let mut t = 1.0;
        let mut next = [x[0] + step[0], x[1] + step[1]];
        let mut next_cost = problem.cost(next);
        while next_cost > cost && t > 1e-6 {
            t *= 0.5;
            next = [x[0] + t * step[0], x[1] + t * step[1]];
            next_cost = problem.cost(next);
        }
        let moved = (next[0] - x[0]).hypot(next[1] - x[1]);
        if next_cost <= cost {
            x = next;
            cost = next_cost;
        }
        if !inside(area, x) {
            return Localization {
                estimate: x,
                iterations: iteration,
                diverged: true,
                ambiguous: false,
            };
        }
        if moved <= STEP_TOL || t <= 1e-6 {
            return Localization {
                estimate: x,
                iterations: iteration,
                diverged: false,
                ambiguous: false,
            };
        }
    }
    Localization {
        estimate: x,
        iterations: MAX_ITERATIONS,
        diverged: true,
        ambiguous: false,
    }
}

/// Weighted least-squares position fit to `ranges`, one per anchor with
/// positive weight, in anchor order.
pub fn localize(scenario: &Scenario, weights: &[f64], ranges: &[f64]) -> Result<Localization, VerifyError> {
    let links = links(scenario, weights)?;
    assert_eq!(ranges.len(), links.len(), "one range per selected anchor");
    let problem = Problem {
        scenario,
        links: &links,
        ranges,
    };
    Ok(localize_in(&problem, &search_area(scenario)))
}

/// Empirical `Pr(‖ŝ − s‖ ≤ Rₑ)` at the requested sensor points. Failed
/// localizations count as misses.
pub fn coverage(
    scenario: &Scenario,
    weights: &[f64],
    trials: usize,
    seed: u64,
    points: &TestPoints,
) -> Result<CoverageReport, VerifyError> {
    if trials == 0 {
        return Err(VerifyError::NoTrials);
    }
    let report = FimTable::new(scenario)?.report(weights)?;
    if report.margin < -REFUSE_RTOL * report.lambda {
        return Err(VerifyError::Infeasible {
            margin: report.margin,
            lambda: report.lambda,
        });
    }
    let links = links(scenario, weights)?;
    let indices = match points {
        TestPoints::All => (0..scenario.num_sensors()).collect(),
        TestPoints::WorstMargin => vec![report.worst_sensor_index],
        TestPoints::Indices(v) => v.clone(),
    };
    if let Some(&index) = indices.iter().find(|&&i| i >= scenario.num_sensors()) {
        return Err(VerifyError::BadPoint {
            index,
            count: scenario.num_sensors(),
        });
    }

    let area = search_area(scenario);
    let radius = scenario.accuracy.radius;
    let mut per_sensor_coverage = Vec::with_capacity(indices.len());
    let mut divergences = 0;
    for &k in &indices {
        let s = scenario.sensor_points[k];
        let mut hits = 0usize;
        for t in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(((k as u64) << 32) | t as u64);
            let ranges = draw(scenario, &links, s, &mut rng)?;
            let fit = localize_in(
                &Problem {
                    scenario,
                    links: &links,
                    ranges: &ranges,
                },
                &area,
            );
            if fit.failed() {
                divergences += 1;
            } else if (fit.estimate[0] - s[0]).hypot(fit.estimate[1] - s[1]) <= radius {
                hits += 1;
            }
        }
        per_sensor_coverage.push(hits as f64 / trials as f64);
    }
    let (worst_at, worst_coverage) = per_sensor_coverage
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, c)| if c < acc.1 { (i, c) } else { acc });
    Ok(CoverageReport {
        worst_point: indices[worst_at],
        points: indices,
        per_sensor_coverage,
        worst_coverage,
        trials,
        estimator_divergences: divergences,
        seed,
        radius,
        probability: scenario.accuracy.probability,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ranging::{accuracy_threshold, crb_matrix};
    use crate::scenario::tests::unit_physics;
    use crate::scenario::{AccuracyTarget, Distribution, Mode};

    fn scenario(anchors: Vec<Point>, sensors: Vec<Point>) -> Scenario {
        Scenario {
            name: "t".into(),
            anchor_points: anchors,
            sensor_points: sensors,
            physics: unit_physics(),
            accuracy: AccuracyTarget {
                radius: 0.1,
                probability: 0.9,
                distribution: Distribution::Gaussian,
            },
            mode: Mode::OwA,
            energy_bound: Some(1e6),
            sensor_energy: None,
        }
    }

    fn square() -> Vec<Point> {
        vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]
    }

    #[test]
    fn draws_are_reproducible_and_tight_at_high_energy() {
        let sc = scenario(square(), vec![[3.0, 4.0]]);
        let w = vec![1e12; 4];
        let a = simulate_ranges(&sc, &w, [3.0, 4.0], 5).unwrap();
        assert_eq!(a, simulate_ranges(&sc, &w, [3.0, 4.0], 5).unwrap());
        assert_ne!(a, simulate_ranges(&sc, &w, [3.0, 4.0], 6).unwrap());
        assert!((a[0] - 5.0).abs() < 1e-3);
    }

    #[test]
    fn sample_variance_matches_the_model() {
        let sc = scenario(square(), vec![[3.0, 4.0]]);
        let w = vec![1.0, 0.0, 0.0, 0.0];
        let links = links(&sc, &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| draw(&sc, &links, [3.0, 4.0], &mut rng).unwrap()[0])
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let model = range_variance(&sc, 0, [3.0, 4.0], 1.0).unwrap();
        assert!((var / model - 1.0).abs() < 0.03, "{var} vs {model}");
    }

    #[test]
    fn noiseless_ranges_recover_the_sensor() {
        let sc = scenario(square(), vec![[3.0, 4.0], [6.0, 7.0]]);
        let s = [3.3, 4.7];
        let ranges: Vec<f64> = square().iter().map(|a| (s[0] - a[0]).hypot(s[1] - a[1])).collect();
        let fit = localize(&sc, &[1.0; 4], &ranges).unwrap();
        assert!(!fit.failed());
        assert!((fit.estimate[0] - s[0]).hypot(fit.estimate[1] - s[1]) < 1e-9);
    }

    #[test]
    fn two_anchors_in_line_with_the_sensor_are_flagged() {
        let sc = scenario(vec![[0.0, 0.0], [10.0, 0.0]], vec![[4.0, 0.0]]);
        let fit = localize(&sc, &[1.0, 1.0], &[4.0, 6.0]).unwrap();
        assert!(fit.failed(), "{fit:?}");
    }

    #[test]
    fn estimator_is_efficient_at_high_energy() {
        let sc = scenario(square(), vec![[3.0, 4.0]]);
        let w = vec![1e9; 4];
        let links = links(&sc, &w).unwrap();
        let s = [3.0, 4.0];
        let n = 10_000;
        let mut errs = Vec::with_capacity(n);
        for t in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            rng.set_stream(t as u64);
            let r = draw(&sc, &links, s, &mut rng).unwrap();
            let fit = localize(&sc, &w, &r).unwrap();
            assert!(!fit.failed());
            errs.push([fit.estimate[0] - s[0], fit.estimate[1] - s[1]]);
        }
        let mse: f64 = errs.iter().map(|e| e[0] * e[0] + e[1] * e[1]).sum::<f64>() / n as f64;
        let crb = crb_matrix(&sc, &w, 0).unwrap().trace();
        assert!((mse / crb - 1.0).abs() < 0.15, "{mse} vs {crb}");
        let bias = [
            errs.iter().map(|e| e[0]).sum::<f64>() / n as f64,
            errs.iter().map(|e| e[1]).sum::<f64>() / n as f64,
        ];
        assert!(bias[0].abs() <= 0.05 * sc.accuracy.radius && bias[1].abs() <= 0.05 * sc.accuracy.radius);
    }

    /// Uniform energies that put the worst sensor point exactly on λ.
    fn on_threshold(sc: &Scenario, factor: f64) -> Vec<f64> {
        let r = FimTable::new(sc).unwrap().report(&vec![1.0; sc.num_anchors()]).unwrap();
        let e = factor * accuracy_threshold(&sc.accuracy) / r.min_eig_by_sensor[r.worst_sensor_index];
        vec![e; sc.num_anchors()]
    }

    #[test]
    fn feasible_placement_meets_the_target() {
        let sc = scenario(square(), vec![[3.0, 4.0], [5.0, 5.0]]);
        let w = on_threshold(&sc, 1.0);
        let rep = coverage(&sc, &w, 2000, 9, &TestPoints::All).unwrap();
        assert_eq!(rep.points, vec![0, 1]);
        assert!(rep.worst_coverage >= sc.accuracy.probability - 0.03, "{rep:?}");
        assert!(rep.per_sensor_coverage.iter().all(|c| (0.0..=1.0).contains(c)));
    }

    #[test]
    fn infeasible_placement_is_refused() {
        let sc = scenario(square(), vec![[3.0, 4.0]]);
        assert!(matches!(
            coverage(&sc, &[0.0; 4], 10, 1, &TestPoints::All),
            Err(VerifyError::Infeasible { .. })
        ));
        let w = on_threshold(&sc, 0.5);
        assert!(matches!(
            coverage(&sc, &w, 10, 1, &TestPoints::All),
            Err(VerifyError::Infeasible { .. })
        ));
        assert!(matches!(
            coverage(&sc, &w, 0, 1, &TestPoints::All),
            Err(VerifyError::NoTrials)
        ));
    }

    #[test]
    fn coverage_grows_with_energy() {
        let sc = scenario(square(), vec![[3.0, 4.0]]);
        let w = on_threshold(&sc, 1.0);
        let mut last = 0.0;
        for f in [1.0, 2.0, 4.0] {
            let scaled: Vec<f64> = w.iter().map(|e| e * f).collect();
            let c = coverage(&sc, &scaled, 1000, 4, &TestPoints::WorstMargin)
                .unwrap()
                .worst_coverage;
            assert!(c >= last, "{c} < {last} at scale {f}");
            last = c;
        }
    }

    #[test]
    fn distribution_free_threshold_covers_at_least_as_well() {
        let sc = scenario(square(), vec![[3.0, 4.0]]);
        let gauss = on_threshold(&sc, 1.0);
        let mut free = sc.clone();
        free.accuracy.distribution = Distribution::Unknown;
        let wide = on_threshold(&free, 1.0);
        let cg = coverage(&sc, &gauss, 2000, 8, &TestPoints::All).unwrap().worst_coverage;
        let cf = coverage(&free, &wide, 2000, 8, &TestPoints::All)
            .unwrap()
            .worst_coverage;
        assert!(cf >= cg, "{cf} < {cg}");
    }
}
