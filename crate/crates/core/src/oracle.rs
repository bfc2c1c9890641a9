//! Ground truth by enumeration for small instances.
//!
//! Subsets are visited by increasing cardinality and, within one
//! cardinality, in lexicographic order of their index lists. Adding an
//! anchor adds a PSD term to every FIM, so any superset of a feasible subset
//! is feasible and the first cardinality with a feasible subset is the
//! minimum. The full set is checked first, which settles infeasible
//! instances without enumeration.
//!
//! The default cap of 16 anchors bounds the work at 2¹⁶ subset checks. The
//! 80-anchor shipped scenarios would need on the order of 10¹⁷.

use conesolver::Settings;
use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::PlacementError;
use crate::placement_owa::{energy_program, require_mode, run_solver};
use crate::ranging::FimTable;
use crate::scenario::{Mode, Scenario};

pub const DEFAULT_MAX_ANCHORS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CardinalityOracle {
    /// Every minimum-cardinality feasible subset, lexicographically ordered.
    Feasible {
        cardinality: usize,
        witnesses: Vec<Vec<bool>>,
    },
    /// Even the full anchor set misses the threshold.
    Infeasible,
}

impl CardinalityOracle {
    pub fn cardinality(&self) -> Option<usize> {
        match self {
            Self::Feasible { cardinality, .. } => Some(*cardinality),
            Self::Infeasible => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EnergyOracle {
    /// The cheapest allocation among supports of minimum cardinality.
    Feasible {
        support: Vec<usize>,
        energies: Vec<f64>,
        total_energy: f64,
    },
    Infeasible,
}

/// Scale of one selected anchor: full energy in OW-A, the sensor energy
/// already folded into the FIM terms in OW-S.
fn selection_scale(scenario: &Scenario) -> f64 {
    match scenario.mode {
        Mode::OwA => scenario.energy_bound(),
        Mode::OwS => 1.0,
    }
}

fn check_size(scenario: &Scenario, max_anchors: usize) -> Result<(), PlacementError> {
    if scenario.num_anchors() > max_anchors {
        return Err(PlacementError::TooLarge {
            anchors: scenario.num_anchors(),
            max_anchors,
        });
    }
    Ok(())
}

fn mask(m: usize, subset: &[usize]) -> Vec<bool> {
    let mut sel = vec![false; m];
    for &i in subset {
        sel[i] = true;
    }
    sel
}

/// Smallest number of anchors (each at full level) meeting the threshold,
/// with every subset of that size that does.
pub fn exhaustive_min_cardinality(
    scenario: &Scenario,
    max_anchors: usize,
) -> Result<CardinalityOracle, PlacementError> {
    check_size(scenario, max_anchors)?;
    let table = FimTable::new(scenario)?;
    let m = table.num_anchors();
    let scale = selection_scale(scenario);
    if !table.subset_feasible(&vec![true; m], scale) {
        return Ok(CardinalityOracle::Infeasible);
    }
    for k in 1..=m {
        let witnesses: Vec<Vec<bool>> = (0..m)
            .combinations(k)
            .map(|c| mask(m, &c))
            .filter(|sel| table.subset_feasible(sel, scale))
            .collect();
        if !witnesses.is_empty() {
            return Ok(CardinalityOracle::Feasible {
                cardinality: k,
                witnesses,
            });
        }
    }
    unreachable!("the full set was feasible")
}

/// Minimum-cardinality support for the anchor-transmit problem, and the
/// least total energy achievable on any support of that size.
pub fn exhaustive_min_energy_owa(scenario: &Scenario, max_anchors: usize) -> Result<EnergyOracle, PlacementError> {
    require_mode(scenario, Mode::OwA)?;
    let CardinalityOracle::Feasible { witnesses, .. } = exhaustive_min_cardinality(scenario, max_anchors)? else {
        return Ok(EnergyOracle::Infeasible);
    };
    let table = FimTable::new(scenario)?;
    let e_b = scenario.energy_bound();
    let settings = Settings::default();
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    for sel in witnesses {
        let active: Vec<usize> = sel.iter().enumerate().filter(|(_, on)| **on).map(|(i, _)| i).collect();
        let program = energy_program(&table, &active, &vec![1.0; active.len()], e_b);
        let sol = run_solver(&program, &settings)?;
        let mut energies = vec![0.0; table.num_anchors()];
        for (&i, v) in active.iter().zip(&sol.x) {
            energies[i] = v.clamp(0.0, e_b);
        }
        let total: f64 = energies.iter().sum();
        if best.as_ref().is_none_or(|(t, _, _)| total < *t) {
            best = Some((total, active, energies));
        }
    }
    let (total_energy, support, energies) = best.expect("at least one witness");
    Ok(EnergyOracle::Feasible {
        support,
        energies,
        total_energy,
    })
}
