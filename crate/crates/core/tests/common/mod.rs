#![allow(dead_code)]

use anchorplace::{AccuracyTarget, Distribution, FimTable, Mode, PhysicsParams, Point, Scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn physics() -> PhysicsParams {
    PhysicsParams {
        alpha: 1.0,
        beta: 2.0,
        propagation_speed: 3.0e8,
        mean_square_bandwidth: 2.5266187266788756e21,
        noise_psd: 1.0,
    }
}

pub fn scenario(mode: Mode, anchors: Vec<Point>, sensors: Vec<Point>, level: f64) -> Scenario {
    Scenario {
        name: "random".into(),
        anchor_points: anchors,
        sensor_points: sensors,
        physics: physics(),
        accuracy: AccuracyTarget {
            radius: 0.04,
            probability: 0.95,
            distribution: Distribution::Gaussian,
        },
        mode,
        energy_bound: (mode == Mode::OwA).then_some(level),
        sensor_energy: (mode == Mode::OwS).then_some(level),
    }
}

/// Energy level at which every anchor switched on meets the threshold with
/// exactly `factor` times the required minimum eigenvalue.
pub fn level_for(anchors: &[Point], sensors: &[Point], factor: f64) -> f64 {
    let probe = scenario(Mode::OwA, anchors.to_vec(), sensors.to_vec(), 1.0);
    let r = FimTable::new(&probe)
        .unwrap()
        .report(&vec![1.0; anchors.len()])
        .unwrap();
    factor * r.lambda / r.min_eig_by_sensor[r.worst_sensor_index]
}

/// `m` anchors scattered over a 10 m square, `s` sensor points in its
/// central 2 m patch, and an energy level that makes the full set feasible
/// with a margin factor drawn from `[1.5, 4]`.
pub fn random_instance(mode: Mode, seed: u64, m: usize, s: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let anchors: Vec<Point> = (0..m)
        .map(|_| [rng.random_range(0.0..10.0), rng.random_range(0.0..10.0)])
        .collect();
    let sensors: Vec<Point> = (0..s)
        .map(|_| [rng.random_range(4.0..6.0), rng.random_range(4.0..6.0)])
        .collect();
    let factor = rng.random_range(1.5..4.0);
    let level = level_for(&anchors, &sensors, factor);
    scenario(mode, anchors, sensors, level)
}

pub fn mask(m: usize, indices: &[usize]) -> Vec<bool> {
    let mut sel = vec![false; m];
    for &i in indices {
        sel[i] = true;
    }
    sel
}
