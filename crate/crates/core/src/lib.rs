//! Sparse anchor placement for time-of-arrival localization.
//!
//! Candidate anchor positions lie on a grid. A placement is acceptable when
//! the Fisher information at every sensor grid point has minimum eigenvalue
//! at least λ, the threshold that guarantees `Pr(‖ŝ − s‖ ≤ Rₑ) ≥ Pₑ`.
//!
//! * [`placement_owa`]: anchors transmit; minimum-energy allocation and its
//!   reweighted sparsification.
//! * [`placement_ows`]: the sensor transmits; Boolean anchor selection via a
//!   lifted semidefinite relaxation and randomized rounding.
//! * [`oracle`]: exhaustive ground truth for small instances.
//! * [`verify_mc`]: Monte-Carlo coverage of a placement.
//! * [`result`]: one call from scenario to certified placement record.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod oracle;
pub mod placement_owa;
pub mod placement_ows;
pub mod ranging;
pub mod result;
pub mod scenario;
pub mod verify_mc;

pub use error::PlacementError;
pub use ranging::{
    accuracy_threshold, assemble_fim, crb_matrix, feasibility_report, fim_term, range_variance, FeasibilityReport,
    FimTable, FimTerm, RangingError, Sym2,
};
pub use scenario::{
    load_scenario, make_circle, make_grid, save_scenario, AccuracyTarget, Distribution, Mode, PhysicsParams, Point,
    Scenario, ScenarioError,
};
