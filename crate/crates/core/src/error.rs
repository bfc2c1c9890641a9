use conesolver::{ProgramError, Status};
use thiserror::Error;

use crate::ranging::RangingError;
use crate::scenario::{Mode, Point};

#[derive(Debug, Error)]
pub enum PlacementError {
    #[error("scenario is in {found} mode, operation needs {expected}")]
    WrongMode { expected: Mode, found: Mode },
    #[error(
        "scenario is infeasible even with every anchor at full level: sensor point {worst_sensor_index} \
         at ({}, {}) falls short of λ = {lambda:.6e} by {:.6e}",
        worst_sensor[0], worst_sensor[1], -margin
    )]
    InfeasibleScenario {
        worst_sensor_index: usize,
        worst_sensor: Point,
        margin: f64,
        lambda: f64,
    },
    #[error("{anchors} anchors exceed the exhaustive-search cap of {max_anchors}")]
    TooLarge { anchors: usize, max_anchors: usize },
    #[error("solver reported infeasibility: {0}")]
    SolverInfeasible(String),
    #[error("solver stopped with status {status} after {iterations} iterations")]
    Solver { status: Status, iterations: usize },
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error(transparent)]
    Ranging(#[from] RangingError),
}
