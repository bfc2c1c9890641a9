//! Anchor-transmit placement: minimum total energy subject to the
//! eigenvalue accuracy constraint at every sensor point, and its
//! sparsity-enhancing reweighted iteration.

use conesolver::{ConeProgram, PsdBlock, Settings, Status, SymMatrix};
use serde::{Deserialize, Serialize};

use crate::error::PlacementError;
use crate::ranging::FimTable;
use crate::scenario::{Mode, Scenario};

pub const DEFAULT_EPSILON: f64 = 1e-8;
pub const DEFAULT_K_MAX: usize = 15;
/// Energies above `SUPPORT_TOL · e_b` count as nonzero.
pub const SUPPORT_TOL: f64 = 1e-6;
const OBJECTIVE_RTOL: f64 = 1e-8;

/// One solve of the reweighting loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `uᵀx` at the solution.
    pub weighted_objective: f64,
    /// `1ᵀx` at the solution.
    pub total: f64,
    pub support_size: usize,
    pub weights: Vec<f64>,
    pub solver_iterations: usize,
    pub duality_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyPlacement {
    pub energies: Vec<f64>,
    pub support: Vec<usize>,
    pub total_energy: f64,
    pub trace: Vec<IterationRecord>,
}

pub(crate) fn support_of(x: &[f64], threshold: f64) -> Vec<usize> {
    x.iter()
        .enumerate()
        .filter(|(_, v)| **v > threshold)
        .map(|(i, _)| i)
        .collect()
}

/// `min uᵀe  s.t.  Σ_m e_m F_m(s) − λI ⪰ 0 ∀s,  0 ≤ e ≤ e_b`, over the
/// anchors in `active` only.
pub(crate) fn energy_program(table: &FimTable, active: &[usize], cost: &[f64], e_b: f64) -> ConeProgram {
    let n = active.len();
    let mut p = ConeProgram::new(n);
    p.objective = cost.to_vec();
    p.lower = vec![0.0; n];
    p.upper = vec![e_b; n];
    for k in 0..table.num_sensors() {
        let mut blk = PsdBlock::new(SymMatrix::scaled_identity(2, -table.lambda()));
        for (i, &m) in active.iter().enumerate() {
            let t = table.term(k, m);
            blk = blk.with_term(i, SymMatrix::from_dense(2, &[t.xx, t.xy, t.xy, t.yy]));
        }
        p.psd_blocks.push(blk);
    }
    p
}

/// Relative duality gap reachable in double precision shrinks with the
/// spread of the objective; reweighted costs can span nine decades.
const GAP_PER_COST_RANGE: f64 = 1e-15;

pub(crate) fn settings_for_costs(base: &Settings, costs: &[f64]) -> Settings {
    let (lo, hi) = costs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
        (lo.min(c.abs()), hi.max(c.abs()))
    });
    let range = if lo > 0.0 { hi / lo } else { 1.0 };
    Settings {
        gap_tol: base.gap_tol.max(GAP_PER_COST_RANGE * range),
        ..*base
    }
}

pub(crate) struct EnergySolve {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub duality_gap: f64,
}

pub(crate) fn run_solver(program: &ConeProgram, settings: &Settings) -> Result<EnergySolve, PlacementError> {
    let out = conesolver::solve(program, settings)?;
    match out.status {
        Status::Optimal | Status::Inaccurate => Ok(EnergySolve {
            x: out.x,
            iterations: out.iterations,
            duality_gap: out.duality_gap,
        }),
        Status::Infeasible => Err(PlacementError::SolverInfeasible(
            out.certificate.map(|c| c.to_string()).unwrap_or_default(),
        )),
        status => Err(PlacementError::Solver {
            status,
            iterations: out.iterations,
        }),
    }
}

pub(crate) fn require_mode(scenario: &Scenario, mode: Mode) -> Result<(), PlacementError> {
    if scenario.mode != mode {
        return Err(PlacementError::WrongMode {
            expected: mode,
            found: scenario.mode,
        });
    }
    Ok(())
}

/// Fails with the worst sensor point when the all-on allocation already
/// misses the threshold.
pub(crate) fn check_saturated(scenario: &Scenario, table: &FimTable, level: f64) -> Result<(), PlacementError> {
    let report = table.report(&vec![level; table.num_anchors()])?;
    if !report.is_feasible() {
        return Err(PlacementError::InfeasibleScenario {
            worst_sensor_index: report.worst_sensor_index,
            worst_sensor: scenario.sensor_points[report.worst_sensor_index],
            margin: report.margin,
            lambda: report.lambda,
        });
    }
    Ok(())
}

/// Plain ℓ1 allocation.
pub fn solve_l1(scenario: &Scenario) -> Result<EnergyPlacement, PlacementError> {
    solve_reweighted_with(scenario, DEFAULT_EPSILON, 1, &Settings::default())
}

pub fn solve_reweighted(scenario: &Scenario, epsilon: f64, k_max: usize) -> Result<EnergyPlacement, PlacementError> {
    solve_reweighted_with(scenario, epsilon, k_max, &Settings::default())
}

pub fn solve_reweighted_with(
    scenario: &Scenario,
    epsilon: f64,
    k_max: usize,
    settings: &Settings,
) -> Result<EnergyPlacement, PlacementError> {
    require_mode(scenario, Mode::OwA)?;
    let e_b = scenario.energy_bound();
    let table = FimTable::new(scenario)?;
    check_saturated(scenario, &table, e_b)?;

    let all: Vec<usize> = (0..scenario.num_anchors()).collect();
    let threshold = SUPPORT_TOL * e_b;
    let (energies, trace) = reweight(all.len(), epsilon, k_max, threshold, |u| {
        let sol = run_solver(&energy_program(&table, &all, u, e_b), &settings_for_costs(settings, u))?;
        let x = sol.x.iter().map(|v| v.clamp(0.0, e_b)).collect();
        Ok((x, sol))
    })?;
    Ok(EnergyPlacement {
        support: support_of(&energies, threshold),
        total_energy: energies.iter().sum(),
        energies,
        trace,
    })
}

/// Runs `min u⁽ᵏ⁾ᵀx` with `u⁽⁰⁾ = 1`, `u⁽ᵏ⁺¹⁾ = 1/(ε + |x⁽ᵏ⁾|)` until the
/// support and `1ᵀx` stop changing or `k_max` solves are spent.
pub(crate) fn reweight<F>(
    n: usize,
    epsilon: f64,
    k_max: usize,
    threshold: f64,
    mut solve: F,
) -> Result<(Vec<f64>, Vec<IterationRecord>), PlacementError>
where
    F: FnMut(&[f64]) -> Result<(Vec<f64>, EnergySolve), PlacementError>,
{
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert!(k_max >= 1, "k_max must be at least 1");
    let mut u = vec![1.0; n];
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut prev_support: Option<Vec<usize>> = None;
    let mut x = Vec::new();
    for k in 0..k_max {
        let (next, sol) = solve(&u)?;
        x = next;
        let support = support_of(&x, threshold);
        let total: f64 = x.iter().sum();
        let converged = match (&prev_support, trace.last()) {
            (Some(ps), Some(prev)) => {
                *ps == support && (prev.total - total).abs() <= OBJECTIVE_RTOL * total.abs().max(f64::MIN_POSITIVE)
            }
            _ => false,
        };
        trace.push(IterationRecord {
            iteration: k,
            weighted_objective: u.iter().zip(&x).map(|(a, b)| a * b).sum(),
            total,
            support_size: support.len(),
            weights: u.clone(),
            solver_iterations: sol.iterations,
            duality_gap: sol.duality_gap,
        });
        if converged {
            break;
        }
        prev_support = Some(support);
        u = x.iter().map(|v| 1.0 / (epsilon + v.abs())).collect();
    }
    Ok((x, trace))
}
