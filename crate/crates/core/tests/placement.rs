mod common;

use anchorplace::oracle::{exhaustive_min_cardinality, CardinalityOracle, DEFAULT_MAX_ANCHORS};
use anchorplace::placement_owa::{solve_l1, solve_reweighted, DEFAULT_EPSILON, DEFAULT_K_MAX, SUPPORT_TOL};
use anchorplace::placement_ows::{randomize_round, solve_reweighted_sdp, solve_sdp_relaxation, LiftedSolution};
use anchorplace::{feasibility_report, FimTable, Mode, PlacementError, Point, Scenario};
use conesolver::{solve, ConeProgram, PsdBlock, Settings, Status, SymMatrix};

fn relative_margin(sc: &Scenario, weights: &[f64]) -> f64 {
    feasibility_report(sc, weights).unwrap().relative_margin()
}

fn ring(count: usize, radius: f64, start: f64) -> Vec<Point> {
    (0..count)
        .map(|k| {
            let t = start + std::f64::consts::TAU * k as f64 / count as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect()
}

#[test]
fn mirror_pair_gets_symmetric_energies() {
    let anchors = vec![[-1.0, 0.0], [1.0, 0.0]];
    let sensors = vec![[0.0, 1.0]];
    let level = common::level_for(&anchors, &sensors, 10.0);
    let sc = common::scenario(Mode::OwA, anchors, sensors, level);
    let p = solve_l1(&sc).unwrap();
    assert!(p.energies.iter().all(|&e| e > 0.0));
    assert!((p.energies[0] - p.energies[1]).abs() <= 1e-8 * p.total_energy);
}

#[test]
fn single_anchor_is_infeasible() {
    let sc = common::scenario(Mode::OwA, vec![[0.0, 0.0]], vec![[1.0, 1.0]], 1e12);
    assert!(matches!(solve_l1(&sc), Err(PlacementError::InfeasibleScenario { .. })));
    let sc = common::scenario(Mode::OwS, vec![[0.0, 0.0]], vec![[1.0, 1.0]], 1e12);
    assert!(matches!(
        solve_sdp_relaxation(&sc),
        Err(PlacementError::InfeasibleScenario { .. })
    ));
}

#[test]
fn one_reweighting_pass_is_plain_l1() {
    let sc = common::random_instance(Mode::OwA, 3, 8, 3);
    assert_eq!(
        solve_reweighted(&sc, DEFAULT_EPSILON, 1).unwrap(),
        solve_l1(&sc).unwrap()
    );
    let sc = common::random_instance(Mode::OwS, 3, 6, 2);
    assert_eq!(
        solve_reweighted_sdp(&sc, DEFAULT_EPSILON, 1).unwrap(),
        solve_sdp_relaxation(&sc).unwrap()
    );
}

#[test]
fn anchor_transmit_placements_hold_their_invariants() {
    let trials = 50;
    let mut matches = 0;
    let mut non_monotone = 0;
    for seed in 0..trials {
        let sc = common::random_instance(Mode::OwA, 1000 + seed, 8, 3);
        let e_b = sc.energy_bound();
        let plain = solve_l1(&sc).unwrap();
        let rw = solve_reweighted(&sc, DEFAULT_EPSILON, DEFAULT_K_MAX).unwrap();
        for p in [&plain, &rw] {
            assert!(p.energies.iter().all(|&e| (0.0..=e_b).contains(&e)), "seed {seed}");
            assert!((p.total_energy - p.energies.iter().sum::<f64>()).abs() <= 1e-12 * p.total_energy);
            let support: Vec<usize> = (0..8).filter(|&m| p.energies[m] > SUPPORT_TOL * e_b).collect();
            assert_eq!(p.support, support);
            assert!(relative_margin(&sc, &p.energies) >= -1e-6, "seed {seed}");
        }
        assert!(plain.total_energy <= rw.total_energy * (1.0 + 1e-6), "seed {seed}");

        let truncated: Vec<f64> = (0..8)
            .map(|m| if rw.support.contains(&m) { rw.energies[m] } else { 0.0 })
            .collect();
        assert!(relative_margin(&sc, &truncated) >= -1e-5, "seed {seed}");

        if rw
            .trace
            .windows(2)
            .skip(1)
            .any(|w| w[1].support_size > w[0].support_size)
        {
            non_monotone += 1;
        }
        let oracle = exhaustive_min_cardinality(&sc, DEFAULT_MAX_ANCHORS).unwrap();
        if oracle.cardinality() == Some(rw.support.len()) {
            matches += 1;
        }
    }
    eprintln!("reweighted support matched the oracle in {matches}/{trials}; support grew after the first pass in {non_monotone}/{trials}");
    assert!(matches as f64 >= 0.8 * trials as f64, "{matches}/{trials}");
}

#[test]
fn minimum_energy_grows_with_the_threshold() {
    let base = common::random_instance(Mode::OwA, 77, 8, 3);
    let mut last = 0.0;
    for radius in [0.08, 0.06, 0.05, 0.045, 0.04] {
        let mut sc = base.clone();
        sc.accuracy.radius = radius;
        let e = solve_l1(&sc).unwrap().total_energy;
        assert!(e >= last * (1.0 - 1e-9), "{e} < {last}");
        last = e;
    }
}

/// Six anchors 60° apart around one sensor point; some triples meet λ,
/// no pair does.
fn hexagon() -> Scenario {
    let anchors = ring(6, 5.0, 0.0);
    let sensors = vec![[0.0, 0.0]];
    let level = common::level_for(&anchors, &sensors, 3.0 / 1.2);
    common::scenario(Mode::OwS, anchors, sensors, level)
}

#[test]
fn half_weights_round_to_a_near_minimal_selection() {
    let sc = hexagon();
    assert_eq!(
        exhaustive_min_cardinality(&sc, DEFAULT_MAX_ANCHORS)
            .unwrap()
            .cardinality(),
        Some(3)
    );
    let m = 6;
    let w_matrix: Vec<f64> = (0..m * m).map(|k| if k / m == k % m { 0.5 } else { 0.25 }).collect();
    let lifted = LiftedSolution {
        w: vec![0.5; m],
        w_matrix,
        trace: Vec::new(),
    };
    let seeds = 50;
    let good = (0..seeds)
        .filter(|&seed| {
            let r = randomize_round(&sc, &lifted, 200, seed).unwrap();
            r.feasible && (3..=4).contains(&r.cardinality)
        })
        .count();
    assert!(good as f64 >= 0.9 * seeds as f64, "{good}/{seeds}");
}

#[test]
fn relaxation_lower_bounds_a_constructed_pair_instance() {
    // Two orthogonal anchors suffice; the third adds little.
    let anchors = vec![[5.0, 0.0], [0.0, 5.0], [-4.0, -3.0]];
    let sensors = vec![[0.0, 0.0]];
    let pair = common::level_for(&anchors[..2], &sensors, 1.01);
    let sc = common::scenario(Mode::OwS, anchors, sensors, pair);
    let oracle = exhaustive_min_cardinality(&sc, DEFAULT_MAX_ANCHORS).unwrap();
    assert_eq!(oracle.cardinality(), Some(2));
    let lifted = solve_sdp_relaxation(&sc).unwrap();
    assert!(lifted.objective() <= 2.0 + 1e-6);
}

fn bordered_min_eigenvalue(l: &LiftedSolution) -> f64 {
    let m = l.num_anchors();
    let mat = faer::Mat::from_fn(m + 1, m + 1, |i, j| match (i == m, j == m) {
        (true, true) => 1.0,
        (true, false) => l.w[j],
        (false, true) => l.w[i],
        (false, false) => l.w_entry(i, j),
    });
    conesolver::sym_eigenvalues(&mat)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

/// `min 1ᵀw  s.t.  Σ w_m F_m(s) − λI ⪰ 0,  0 ≤ w ≤ 1`.
fn box_relaxation(sc: &Scenario) -> f64 {
    let table = FimTable::new(sc).unwrap();
    let m = table.num_anchors();
    let mut p = ConeProgram::new(m);
    p.objective = vec![1.0; m];
    p.lower = vec![0.0; m];
    p.upper = vec![1.0; m];
    for k in 0..table.num_sensors() {
        let mut blk = PsdBlock::new(SymMatrix::scaled_identity(2, -table.lambda()));
        for i in 0..m {
            let t = table.term(k, i);
            blk = blk.with_term(i, SymMatrix::from_dense(2, &[t.xx, t.xy, t.xy, t.yy]));
        }
        p.psd_blocks.push(blk);
    }
    let out = solve(&p, &Settings::default()).unwrap();
    assert_eq!(out.status, Status::Optimal);
    out.objective
}

#[test]
fn sensor_transmit_relaxations_hold_their_invariants() {
    let trials = 50;
    let mut contains_witness = 0;
    for seed in 0..trials {
        let sc = common::random_instance(Mode::OwS, 2000 + seed, 10, 3);
        let CardinalityOracle::Feasible { cardinality, witnesses } =
            exhaustive_min_cardinality(&sc, DEFAULT_MAX_ANCHORS).unwrap()
        else {
            panic!("full set is feasible by construction");
        };
        let plain = solve_sdp_relaxation(&sc).unwrap();
        assert!(plain.objective() <= cardinality as f64 + 1e-6, "seed {seed}");
        assert!(
            (plain.objective() - box_relaxation(&sc)).abs() <= 1e-6 * cardinality as f64,
            "seed {seed}"
        );

        let rw = solve_reweighted_sdp(&sc, DEFAULT_EPSILON, DEFAULT_K_MAX).unwrap();
        for l in [&plain, &rw] {
            for i in 0..10 {
                assert!((l.w_entry(i, i) - l.w[i]).abs() <= 1e-8, "seed {seed}");
                assert!((0.0..=1.0).contains(&l.w[i]));
            }
            assert!(bordered_min_eigenvalue(l) >= -1e-7, "seed {seed}");
        }
        let support = common::mask(10, &rw.support());
        if witnesses
            .iter()
            .any(|w| w.iter().zip(&support).all(|(need, have)| !need || *have))
        {
            contains_witness += 1;
        }

        let r = randomize_round(&sc, &rw, 100, seed).unwrap();
        let weights: Vec<f64> = r.selected.iter().map(|&on| if on { 1.0 } else { 0.0 }).collect();
        assert_eq!(r.feasible, feasibility_report(&sc, &weights).unwrap().margin >= 0.0);
        assert!(r.feasible, "seed {seed}");
        assert_eq!(r, randomize_round(&sc, &rw, 100, seed).unwrap());
    }
    assert!(
        contains_witness as f64 >= 0.8 * trials as f64,
        "{contains_witness}/{trials}"
    );
}

#[test]
fn relaxation_objective_grows_with_the_threshold() {
    let base = common::random_instance(Mode::OwS, 5, 8, 2);
    let mut last = 0.0;
    for radius in [0.08, 0.06, 0.05, 0.045, 0.04] {
        let mut sc = base.clone();
        sc.accuracy.radius = radius;
        let o = solve_sdp_relaxation(&sc).unwrap().objective();
        assert!(o >= last - 1e-7, "{o} < {last}");
        last = o;
    }
}
