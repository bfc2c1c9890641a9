//! End-to-end solve of a scenario into a self-contained placement record.

use serde::{Deserialize, Serialize};

use crate::error::PlacementError;
use crate::placement_owa::{self, IterationRecord, DEFAULT_EPSILON, DEFAULT_K_MAX, SUPPORT_TOL};
use crate::placement_ows::{self, LiftedSolution, RoundedSelection};
use crate::ranging::{FeasibilityReport, FimTable, RangingError};
use crate::scenario::{Mode, Scenario};

pub const DEFAULT_DRAWS: usize = 500;
pub const DEFAULT_SEED: u64 = 1;
/// Relative margin below which a solver allocation is not certified.
pub const CERTIFY_RTOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    L1,
    Reweighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: Method,
    pub epsilon: f64,
    pub k_max: usize,
    /// Rounding draws, OW-S only.
    pub draws: usize,
    pub seed: u64,
    /// Shrink e_s to the smallest value the rounded selection needs.
    pub optimize_sensor_energy: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::Reweighted,
            epsilon: DEFAULT_EPSILON,
            k_max: DEFAULT_K_MAX,
            draws: DEFAULT_DRAWS,
            seed: DEFAULT_SEED,
            optimize_sensor_energy: false,
        }
    }
}

/// Relaxed OW-S solution before rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relaxation {
    pub w: Vec<f64>,
    pub objective: f64,
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rounding {
    pub draws: usize,
    pub draws_used: usize,
    pub seed: u64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementResult {
    pub mode: Mode,
    pub options: SolveOptions,
    /// OW-A: energy per anchor (J). OW-S: 0/1 selection.
    pub weights: Vec<f64>,
    pub selected: Vec<usize>,
    pub support_size: usize,
    /// `Σ weights`: total energy (J) in OW-A, cardinality in OW-S.
    pub objective: f64,
    /// Sensor energy the margins were evaluated with, OW-S only.
    pub sensor_energy: Option<f64>,
    pub feasibility: FeasibilityReport,
    /// `margin ≥ −CERTIFY_RTOL · λ` on an independent recomputation.
    pub certified: bool,
    /// Selected anchors all lie on one line.
    pub collinear: bool,
    pub relaxation: Option<Relaxation>,
    pub rounding: Option<Rounding>,
    pub trace: Vec<IterationRecord>,
}

impl PlacementResult {
    /// The scenario the result was evaluated against: `scenario` with the
    /// recorded sensor energy.
    pub fn effective_scenario(&self, scenario: &Scenario) -> Scenario {
        let mut out = scenario.clone();
        if self.sensor_energy.is_some() {
            out.sensor_energy = self.sensor_energy;
        }
        out
    }

    /// Per-sensor `λ_min − λ`.
    pub fn margins(&self) -> Vec<f64> {
        self.feasibility
            .min_eig_by_sensor
            .iter()
            .map(|e| e - self.feasibility.lambda)
            .collect()
    }
}

/// Independent recomputation of the certificate for `weights`.
pub fn certify(scenario: &Scenario, weights: &[f64]) -> Result<(FeasibilityReport, bool), RangingError> {
    let report = FimTable::new(scenario)?.report(weights)?;
    let ok = report.margin >= -CERTIFY_RTOL * report.lambda;
    Ok((report, ok))
}

pub fn solve_scenario(scenario: &Scenario, options: &SolveOptions) -> Result<PlacementResult, PlacementError> {
    let k_max = match options.method {
        Method::L1 => 1,
        Method::Reweighted => options.k_max,
    };
    match scenario.mode {
        Mode::OwA => {
            let p = placement_owa::solve_reweighted(scenario, options.epsilon, k_max)?;
            let (feasibility, certified) = certify(scenario, &p.energies)?;
            let selected = p.support.clone();
            let collinear = placement_ows::selection_collinear(scenario, &mask(scenario.num_anchors(), &selected));
            Ok(PlacementResult {
                mode: Mode::OwA,
                options: *options,
                support_size: selected.len(),
                objective: p.total_energy,
                weights: p.energies,
                selected,
                sensor_energy: None,
                feasibility,
                certified,
                collinear,
                relaxation: None,
                rounding: None,
                trace: p.trace,
            })
        }
        Mode::OwS => {
            let lifted = placement_ows::solve_reweighted_sdp(scenario, options.epsilon, k_max)?;
            let rounded = placement_ows::randomize_round(scenario, &lifted, options.draws.max(1), options.seed)?;
            from_rounding(scenario, options, lifted, rounded)
        }
    }
}

fn mask(m: usize, indices: &[usize]) -> Vec<bool> {
    let mut sel = vec![false; m];
    for &i in indices {
        sel[i] = true;
    }
    sel
}

fn from_rounding(
    scenario: &Scenario,
    options: &SolveOptions,
    lifted: LiftedSolution,
    rounded: RoundedSelection,
) -> Result<PlacementResult, PlacementError> {
    let mut sensor_energy = scenario.sensor_energy();
    if options.optimize_sensor_energy && rounded.feasible {
        if let Some(e) = placement_ows::minimum_sensor_energy(scenario, &rounded.selected)? {
            sensor_energy = e;
        }
    }
    let mut effective = scenario.clone();
    effective.sensor_energy = Some(sensor_energy);
    let weights: Vec<f64> = rounded.selected.iter().map(|&on| if on { 1.0 } else { 0.0 }).collect();
    let (feasibility, certified) = certify(&effective, &weights)?;
    Ok(PlacementResult {
        mode: Mode::OwS,
        options: *options,
        selected: rounded.indices(),
        support_size: rounded.cardinality,
        objective: rounded.cardinality as f64,
        weights,
        sensor_energy: Some(sensor_energy),
        feasibility,
        certified: certified && rounded.feasible,
        collinear: rounded.collinear,
        relaxation: Some(Relaxation {
            objective: lifted.objective(),
            support: lifted.support(),
            w: lifted.w,
        }),
        rounding: Some(Rounding {
            draws: options.draws.max(1),
            draws_used: rounded.draws_used,
            seed: rounded.seed,
            feasible: rounded.feasible,
        }),
        trace: lifted.trace,
    })
}

/// Anchors whose weight exceeds the mode's support threshold.
pub fn selection_of(scenario: &Scenario, weights: &[f64]) -> Vec<usize> {
    let threshold = match scenario.mode {
        Mode::OwA => SUPPORT_TOL * scenario.energy_bound(),
        Mode::OwS => SUPPORT_TOL,
    };
    placement_owa::support_of(weights, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::tests::unit_physics;
    use crate::scenario::{AccuracyTarget, Distribution, Point};

    fn square() -> Vec<Point> {
        vec![[0.0, 0.0], [10.0, 0.0], [10.0, 10.0], [0.0, 10.0]]
    }

    fn scenario(mode: Mode) -> Scenario {
        let mut sc = Scenario {
            name: "t".into(),
            anchor_points: square(),
            sensor_points: vec![[4.0, 5.0], [6.0, 5.0]],
            physics: unit_physics(),
            accuracy: AccuracyTarget {
                radius: 1.0,
                probability: 0.9,
                distribution: Distribution::Gaussian,
            },
            mode,
            energy_bound: None,
            sensor_energy: None,
        };
        let lambda = crate::ranging::accuracy_threshold(&sc.accuracy);
        let probe = FimTable::new(&Scenario {
            mode: Mode::OwA,
            energy_bound: Some(1.0),
            ..sc.clone()
        })
        .unwrap()
        .report(&[1.0; 4])
        .unwrap();
        let level = 2.0 * lambda / probe.min_eig_by_sensor[probe.worst_sensor_index];
        match mode {
            Mode::OwA => sc.energy_bound = Some(level),
            Mode::OwS => sc.sensor_energy = Some(level),
        }
        sc
    }

    #[test]
    fn anchor_transmit_result_is_certified() {
        let sc = scenario(Mode::OwA);
        let r = solve_scenario(&sc, &SolveOptions::default()).unwrap();
        assert!(r.certified);
        assert_eq!(r.weights.len(), 4);
        assert!((r.objective - r.weights.iter().sum::<f64>()).abs() < 1e-12);
        assert_eq!(r.selected, selection_of(&sc, &r.weights));
        assert!(r.rounding.is_none());
    }

    #[test]
    fn sensor_energy_shrinks_when_asked() {
        let sc = scenario(Mode::OwS);
        let plain = solve_scenario(&sc, &SolveOptions::default()).unwrap();
        let tight = solve_scenario(
            &sc,
            &SolveOptions {
                optimize_sensor_energy: true,
                ..SolveOptions::default()
            },
        )
        .unwrap();
        assert!(plain.certified && tight.certified);
        assert_eq!(plain.selected, tight.selected);
        assert!(tight.sensor_energy.unwrap() < plain.sensor_energy.unwrap());
        assert!(tight.feasibility.relative_margin() < 1e-9);
        let (_, ok) = certify(&tight.effective_scenario(&sc), &tight.weights).unwrap();
        assert!(ok);
    }
}
