//! Sensor-transmit anchor selection.
//!
//! The Boolean problem `min 1ᵀw` over `w ∈ {0,1}ᴹ` is lifted with a matrix
//! variable `W ≈ wwᵀ`: `diag(W) = w` and `[W w; wᵀ 1] ⪰ 0`, the rank-one
//! requirement dropped. The relaxed weights are then rounded back to a
//! selection by a threshold sweep, Bernoulli draws and Gaussian draws
//! around `(w, W − wwᵀ)`.

use conesolver::{ConeProgram, LinearEquality, PsdBlock, Settings, SymMatrix};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::PlacementError;
use crate::placement_owa::{
    check_saturated, require_mode, reweight, run_solver, settings_for_costs, support_of, IterationRecord,
    DEFAULT_EPSILON, SUPPORT_TOL,
};
use crate::ranging::FimTable;
use crate::scenario::{Mode, Scenario};

/// Relaxed selection weights and their lifted second-moment matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedSolution {
    pub w: Vec<f64>,
    /// `M × M`, row-major.
    pub w_matrix: Vec<f64>,
    pub trace: Vec<IterationRecord>,
}

impl LiftedSolution {
    pub fn num_anchors(&self) -> usize {
        self.w.len()
    }

    pub fn w_entry(&self, i: usize, j: usize) -> f64 {
        self.w_matrix[i * self.w.len() + j]
    }

    pub fn objective(&self) -> f64 {
        self.w.iter().sum()
    }

    /// Anchors with `w_m > SUPPORT_TOL`.
    pub fn support(&self) -> Vec<usize> {
        support_of(&self.w, SUPPORT_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundedSelection {
    pub selected: Vec<bool>,
    pub cardinality: usize,
    pub feasible: bool,
    /// `min_s λ_min − λ` of the selection.
    pub margin: f64,
    pub draws_used: usize,
    pub seed: u64,
    /// All selected anchors lie on one line, so position estimates suffer
    /// a mirror ambiguity the Fisher information cannot see.
    pub collinear: bool,
}

impl RoundedSelection {
    pub fn indices(&self) -> Vec<usize> {
        indices_of(&self.selected)
    }
}

fn indices_of(selected: &[bool]) -> Vec<usize> {
    selected
        .iter()
        .enumerate()
        .filter(|(_, on)| **on)
        .map(|(i, _)| i)
        .collect()
}

/// Index of `W_ij` (`i ≥ j`) in the decision vector `(w, lower(W))`.
fn lifted_index(m: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i >= j { (i, j) } else { (j, i) };
    m + i * (i + 1) / 2 + j
}

/// `min uᵀw  s.t.  Σ_m w_m F_m(s) − λI ⪰ 0 ∀s,  diag(W) = w,  [W w; wᵀ 1] ⪰ 0`.
pub(crate) fn lifted_program(table: &FimTable, cost: &[f64]) -> ConeProgram {
    let m = table.num_anchors();
    let n = m + m * (m + 1) / 2;
    let mut p = ConeProgram::new(n);
    p.objective[..m].copy_from_slice(cost);

    for k in 0..table.num_sensors() {
        let mut blk = PsdBlock::new(SymMatrix::scaled_identity(2, -table.lambda()));
        for i in 0..m {
            let t = table.term(k, i);
            blk = blk.with_term(i, SymMatrix::from_dense(2, &[t.xx, t.xy, t.xy, t.yy]));
        }
        p.psd_blocks.push(blk);
    }

    for i in 0..m {
        p.linear_eq.push(LinearEquality {
            coeffs: vec![(lifted_index(m, i, i), 1.0), (i, -1.0)],
            rhs: 0.0,
        });
    }

    let mut corner = SymMatrix::zeros(m + 1);
    corner.push(m, m, 1.0);
    let mut bordered = PsdBlock::new(corner);
    for i in 0..m {
        let mut a = SymMatrix::zeros(m + 1);
        a.push(m, i, 1.0);
        bordered = bordered.with_term(i, a);
    }
    for i in 0..m {
        for j in 0..=i {
            let mut a = SymMatrix::zeros(m + 1);
            a.push(i, j, 1.0);
            bordered = bordered.with_term(lifted_index(m, i, j), a);
        }
    }
    p.psd_blocks.push(bordered);
    p
}

/// The free off-diagonal entries of `W` force the optimal dual of the
/// bordered block to be diagonal there; that degeneracy floors the dual
/// residual just above the default tolerance.
const LIFTED_FEAS_TOL: f64 = 1e-7;

fn lifted_settings(base: &Settings, cost: &[f64]) -> Settings {
    let s = settings_for_costs(base, cost);
    Settings {
        feas_tol: s.feas_tol.max(LIFTED_FEAS_TOL),
        ..s
    }
}

fn unpack(m: usize, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let w = x[..m].iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let mut big = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            big[i * m + j] = x[lifted_index(m, i, j)];
        }
    }
    (w, big)
}

/// Plain lifted relaxation, `u = 1`.
pub fn solve_sdp_relaxation(scenario: &Scenario) -> Result<LiftedSolution, PlacementError> {
    solve_reweighted_sdp_with(scenario, DEFAULT_EPSILON, 1, &Settings::default())
}

pub fn solve_reweighted_sdp(scenario: &Scenario, epsilon: f64, k_max: usize) -> Result<LiftedSolution, PlacementError> {
    solve_reweighted_sdp_with(scenario, epsilon, k_max, &Settings::default())
}

pub fn solve_reweighted_sdp_with(
    scenario: &Scenario,
    epsilon: f64,
    k_max: usize,
    settings: &Settings,
) -> Result<LiftedSolution, PlacementError> {
    require_mode(scenario, Mode::OwS)?;
    let table = FimTable::new(scenario)?;
    check_saturated(scenario, &table, 1.0)?;
    let m = table.num_anchors();

    let mut last_matrix = Vec::new();
    let (w, trace) = reweight(m, epsilon, k_max, SUPPORT_TOL, |u| {
        let sol = run_solver(&lifted_program(&table, u), &lifted_settings(settings, u))?;
        let (w, big) = unpack(m, &sol.x);
        last_matrix = big;
        Ok((w, sol))
    })?;
    Ok(LiftedSolution {
        w,
        w_matrix: last_matrix,
        trace,
    })
}

#[derive(Clone)]
struct Candidate {
    selected: Vec<bool>,
    cardinality: usize,
    margin: f64,
}

impl Candidate {
    fn evaluate(table: &FimTable, selected: Vec<bool>) -> Self {
        let weights: Vec<f64> = selected.iter().map(|&on| if on { 1.0 } else { 0.0 }).collect();
        let margin = table.report(&weights).map(|r| r.margin).unwrap_or(f64::NEG_INFINITY);
        Self {
            cardinality: indices_of(&selected).len(),
            selected,
            margin,
        }
    }

    fn feasible(&self) -> bool {
        self.margin >= 0.0
    }

    /// Feasible first, then fewer anchors, then larger margin, then the
    /// lexicographically smaller index list.
    fn better_than(&self, other: &Self) -> bool {
        use std::cmp::Ordering;
        if self.feasible() != other.feasible() {
            return self.feasible();
        }
        if !self.feasible() {
            return self.margin > other.margin;
        }
        match self.cardinality.cmp(&other.cardinality) {
            Ordering::Less => return true,
            Ordering::Greater => return false,
            Ordering::Equal => {}
        }
        if self.margin != other.margin {
            return self.margin > other.margin;
        }
        indices_of(&self.selected) < indices_of(&other.selected)
    }
}

/// Tolerance for treating relaxed weights as already Boolean.
const BOOLEAN_TOL: f64 = 1e-6;

/// Rounds a relaxed solution to the best Boolean selection found among a
/// prefix sweep over descending `w`, and `draws` random candidates
/// alternating between Bernoulli(`w`) and thresholded Gaussian draws.
pub fn randomize_round(
    scenario: &Scenario,
    lifted: &LiftedSolution,
    draws: usize,
    seed: u64,
) -> Result<RoundedSelection, PlacementError> {
    assert!(draws >= 1, "draws must be at least 1");
    require_mode(scenario, Mode::OwS)?;
    let table = FimTable::new(scenario)?;
    let m = table.num_anchors();
    let w = &lifted.w;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let mut prefix = vec![false; m];
    let mut best: Option<Candidate> = None;
    for &i in &order {
        prefix[i] = true;
        if table.subset_feasible(&prefix, 1.0) {
            best = Some(Candidate::evaluate(&table, prefix.clone()));
            break;
        }
    }
    let consider = |best: &mut Option<Candidate>, c: Candidate| {
        if best.as_ref().is_none_or(|b| c.better_than(b)) {
            *best = Some(c);
        }
    };

    let rounded: Vec<bool> = w.iter().map(|&v| v > 0.5).collect();
    let boolean = w.iter().all(|v| !(BOOLEAN_TOL..=1.0 - BOOLEAN_TOL).contains(v));
    let rounded = Candidate::evaluate(&table, rounded);
    let done = boolean && rounded.feasible();
    consider(&mut best, rounded);

    let mut draws_used = 0;
    if !done {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let factor = covariance_factor(lifted);
        for d in 0..draws {
            let selected: Vec<bool> = if d % 2 == 0 {
                w.iter().map(|&p| rng.random::<f64>() < p).collect()
            } else {
                let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                (0..m)
                    .map(|i| {
                        let dev: f64 = (0..m).map(|j| factor[(i, j)] * g[j]).sum();
                        w[i] + dev > 0.5
                    })
                    .collect()
            };
            consider(&mut best, Candidate::evaluate(&table, selected));
            draws_used += 1;
        }
    }

    let best = best.expect("at least the rounded candidate is considered");
    Ok(RoundedSelection {
        collinear: selection_collinear(scenario, &best.selected),
        cardinality: best.cardinality,
        feasible: best.feasible(),
        margin: best.margin,
        selected: best.selected,
        draws_used,
        seed,
    })
}

/// `V √D` for the PSD part of `W − wwᵀ`.
fn covariance_factor(lifted: &LiftedSolution) -> Mat<f64> {
    let m = lifted.num_anchors();
    let w = &lifted.w;
    let cov = Mat::from_fn(m, m, |i, j| {
        0.5 * (lifted.w_entry(i, j) + lifted.w_entry(j, i)) - w[i] * w[j]
    });
    match cov.self_adjoint_eigen(Side::Lower) {
        Ok(evd) => {
            let u = evd.U();
            let s = evd.S().column_vector();
            Mat::from_fn(m, m, |i, j| u[(i, j)] * s[j].max(0.0).sqrt())
        }
        Err(_) => Mat::zeros(m, m),
    }
}

/// Whether every selected anchor lies on a single line (fewer than two
/// anchors count as collinear).
pub fn selection_collinear(scenario: &Scenario, selected: &[bool]) -> bool {
    let pts: Vec<[f64; 2]> = indices_of(selected)
        .into_iter()
        .map(|i| scenario.anchor_points[i])
        .collect();
    if pts.len() < 3 {
        return true;
    }
    let scale = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| (p[0] - q[0]).hypot(p[1] - q[1])))
        .fold(0.0f64, f64::max);
    let (a, b) = pts
        .iter()
        .flat_map(|p| pts.iter().map(move |q| (*p, *q)))
        .max_by(|x, y| {
            let dx = (x.0[0] - x.1[0]).hypot(x.0[1] - x.1[1]);
            let dy = (y.0[0] - y.1[0]).hypot(y.0[1] - y.1[1]);
            dx.total_cmp(&dy)
        })
        .expect("nonempty");
    let dir = [b[0] - a[0], b[1] - a[1]];
    pts.iter().all(|p| {
        let cross = dir[0] * (p[1] - a[1]) - dir[1] * (p[0] - a[0]);
        cross.abs() <= 1e-9 * scale * scale
    })
}

/// Smallest sensor energy for which `selected` still meets the threshold,
/// or `None` when no energy suffices. The constraint is linear in `e_s`,
/// so the bound is exact up to rounding.
pub fn minimum_sensor_energy(scenario: &Scenario, selected: &[bool]) -> Result<Option<f64>, PlacementError> {
    require_mode(scenario, Mode::OwS)?;
    let table = FimTable::new(scenario)?;
    let weights: Vec<f64> = selected.iter().map(|&on| if on { 1.0 } else { 0.0 }).collect();
    let report = table.report(&weights)?;
    let worst = report.min_eig_by_sensor[report.worst_sensor_index];
    let scale = table.assemble(&weights, report.worst_sensor_index).trace();
    if !(worst > 1e-12 * scale) {
        return Ok(None);
    }
    let e_s = scenario.sensor_energy();
    let mut energy = e_s * report.lambda / worst;
    let mut trial = scenario.clone();
    for _ in 0..64 {
        trial.sensor_energy = Some(energy);
        if FimTable::new(&trial)?.subset_feasible(selected, 1.0) {
            return Ok(Some(energy));
        }
        energy *= 1.0 + 4.0 * f64::EPSILON;
    }
    Ok(None)
}
