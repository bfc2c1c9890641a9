//! Problem instances: anchor and sensor grids, propagation physics and the
//! accuracy requirement, with loading and saving in a TOML schema.
//!
//! # File schema
//!
//! ```toml
//! name = "example"
//! mode = "ow-a"                 # "ow-a": anchors transmit, "ow-s": sensor transmits
//! energy_bound_j = 10.0         # required for ow-a
//! sensor_energy_j = 10.0        # required for ow-s
//!
//! [physics]
//! alpha = 1.0                   # path gain at 1 m
//! beta = 2.0                    # path-loss exponent
//! propagation_speed_m_per_s = 3.0e8
//! mean_square_bandwidth_rad2_per_s2 = 2.5266187e21
//! noise_psd_w_per_hz = 1.0      # two-sided PSD N/2
//!
//! [accuracy]
//! radius_m = 0.04
//! probability = 0.95
//! distribution = "gaussian"     # or "unknown"
//!
//! [anchors]                     # exactly one of points_m / grid / circle
//! grid = { x_min_m = 0.0, x_max_m = 9.0, y_min_m = 0.0, y_max_m = 7.0, nx = 10, ny = 8 }
//!
//! [sensors]
//! points_m = [[4.5, 3.5]]
//! ```
//!
//! `circle = { center_x_m, center_y_m, radius_m, count, start_angle_deg }`
//! places `count` points evenly on a circle. Grids may list `exclude` boxes
//! (`[[x_min, x_max, y_min, y_max], ...]`) whose interior points are dropped.
//! The writer always emits explicit point lists in a fixed key order.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub type Point = [f64; 2];

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario file: {0}")]
    Parse(String),
    #[error("invalid `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicsParams {
    /// Path gain at 1 m.
    pub alpha: f64,
    /// Path-loss exponent.
    pub beta: f64,
    /// Propagation speed (m/s).
    pub propagation_speed: f64,
    /// Mean square bandwidth F̄² of the ranging signal (rad²/s²).
    pub mean_square_bandwidth: f64,
    /// Two-sided noise power spectral density N/2 (W/Hz).
    pub noise_psd: f64,
}

impl PhysicsParams {
    /// `ρ = c²·(N/2)/F̄²` (m²·J): range variance at unit energy, unit gain.
    pub fn rho(&self) -> f64 {
        self.propagation_speed * self.propagation_speed * self.noise_psd / self.mean_square_bandwidth
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        let checks = [
            ("physics.alpha", self.alpha, self.alpha > 0.0),
            ("physics.beta", self.beta, self.beta >= 0.0),
            (
                "physics.propagation_speed_m_per_s",
                self.propagation_speed,
                self.propagation_speed > 0.0,
            ),
            (
                "physics.mean_square_bandwidth_rad2_per_s2",
                self.mean_square_bandwidth,
                self.mean_square_bandwidth > 0.0,
            ),
            ("physics.noise_psd_w_per_hz", self.noise_psd, self.noise_psd > 0.0),
        ];
        for (field, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(invalid(field, format!("value {value} out of range")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Gaussian,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyTarget {
    /// Error radius Rₑ (m).
    pub radius: f64,
    /// Required probability Pₑ of landing inside the radius.
    pub probability: f64,
    pub distribution: Distribution,
}

impl AccuracyTarget {
    fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(invalid("radius", format!("{} must be positive", self.radius)));
        }
        if !(self.probability > 0.0 && self.probability < 1.0) {
            return Err(invalid(
                "probability",
                format!("{} must lie strictly between 0 and 1", self.probability),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    /// Anchors transmit; per-anchor energies are designed.
    #[serde(rename = "ow-a")]
    OwA,
    /// The sensor transmits; a Boolean anchor selection is designed.
    #[serde(rename = "ow-s")]
    OwS,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::OwA => "ow-a",
            Mode::OwS => "ow-s",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub anchor_points: Vec<Point>,
    pub sensor_points: Vec<Point>,
    pub physics: PhysicsParams,
    pub accuracy: AccuracyTarget,
    pub mode: Mode,
    /// Per-anchor energy cap e_b (J), OW-A.
    pub energy_bound: Option<f64>,
    /// Sensor transmit energy e_s (J), OW-S.
    pub sensor_energy: Option<f64>,
}

impl Scenario {
    pub fn num_anchors(&self) -> usize {
        self.anchor_points.len()
    }

    pub fn num_sensors(&self) -> usize {
        self.sensor_points.len()
    }

    /// e_b; panics if called on a scenario that failed validation.
    pub fn energy_bound(&self) -> f64 {
        self.energy_bound.expect("validated OW-A scenario has an energy bound")
    }

    pub fn sensor_energy(&self) -> f64 {
        self.sensor_energy.expect("validated OW-S scenario has a sensor energy")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        self.physics.validate()?;
        self.accuracy.validate()?;
        if self.anchor_points.is_empty() {
            return Err(invalid("anchors", "at least one anchor point is required"));
        }
        if self.sensor_points.is_empty() {
            return Err(invalid("sensors", "at least one sensor point is required"));
        }
        for (field, pts) in [("anchors", &self.anchor_points), ("sensors", &self.sensor_points)] {
            if let Some(i) = pts.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
                return Err(invalid(field, format!("point {i} has a non-finite coordinate")));
            }
        }
        for (m, a) in self.anchor_points.iter().enumerate() {
            for (k, s) in self.sensor_points.iter().enumerate() {
                if a == s {
                    return Err(invalid(
                        "anchors",
                        format!("anchor {m} coincides with sensor point {k} (zero distance)"),
                    ));
                }
            }
        }
        match self.mode {
            Mode::OwA => match self.energy_bound {
                Some(e) if e > 0.0 && e.is_finite() => {}
                other => {
                    return Err(invalid(
                        "energy_bound_j",
                        format!("ow-a needs a positive energy bound, got {other:?}"),
                    ))
                }
            },
            Mode::OwS => match self.sensor_energy {
                Some(e) if e > 0.0 && e.is_finite() => {}
                other => {
                    return Err(invalid(
                        "sensor_energy_j",
                        format!("ow-s needs a positive sensor energy, got {other:?}"),
                    ))
                }
            },
        }
        Ok(())
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        let text = self.to_toml();
        Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        let scenario = Scenario {
            name: file.name,
            anchor_points: file.anchors.expand("anchors")?,
            sensor_points: file.sensors.expand("sensors")?,
            physics: PhysicsParams {
                alpha: file.physics.alpha,
                beta: file.physics.beta,
                propagation_speed: file.physics.propagation_speed_m_per_s,
                mean_square_bandwidth: file.physics.mean_square_bandwidth_rad2_per_s2,
                noise_psd: file.physics.noise_psd_w_per_hz,
            },
            accuracy: AccuracyTarget {
                radius: file.accuracy.radius_m,
                probability: file.accuracy.probability,
                distribution: file.accuracy.distribution,
            },
            mode: file.mode,
            energy_bound: file.energy_bound_j,
            sensor_energy: file.sensor_energy_j,
        };
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_toml(&self) -> String {
        let file = ScenarioFile {
            name: self.name.clone(),
            mode: self.mode,
            energy_bound_j: self.energy_bound,
            sensor_energy_j: self.sensor_energy,
            physics: PhysicsSection {
                alpha: self.physics.alpha,
                beta: self.physics.beta,
                propagation_speed_m_per_s: self.physics.propagation_speed,
                mean_square_bandwidth_rad2_per_s2: self.physics.mean_square_bandwidth,
                noise_psd_w_per_hz: self.physics.noise_psd,
            },
            accuracy: AccuracySection {
                radius_m: self.accuracy.radius,
                probability: self.accuracy.probability,
                distribution: self.accuracy.distribution,
            },
            anchors: PointSource::explicit(&self.anchor_points),
            sensors: PointSource::explicit(&self.sensor_points),
        };
        toml::to_string(&file).expect("scenario serialization cannot fail")
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Scenario::from_toml(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    std::fs::write(path, scenario.to_toml()).map_err(|source| ScenarioError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Uniform grid over `[[x_min, x_max], [y_min, y_max]]`, row-major with x
/// varying fastest. Both endpoints are included; an axis with count 1 gets
/// its midpoint.
pub fn make_grid(bounding_box: [[f64; 2]; 2], counts: [usize; 2]) -> Vec<Point> {
    assert!(counts[0] >= 1 && counts[1] >= 1, "grid counts must be at least 1");
    for [lo, hi] in bounding_box {
        assert!(lo.is_finite() && hi.is_finite() && lo <= hi, "bad grid extent");
    }
    let axis = |[lo, hi]: [f64; 2], n: usize| -> Vec<f64> {
        if n == 1 {
            vec![0.5 * (lo + hi)]
        } else {
            (0..n)
                .map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).min(hi))
                .collect()
        }
    };
    let xs = axis(bounding_box[0], counts[0]);
    let ys = axis(bounding_box[1], counts[1]);
    ys.iter().flat_map(|&y| xs.iter().map(move |&x| [x, y])).collect()
}

/// `count` points evenly spaced on a circle, counter-clockwise from `start_angle` (rad).
pub fn make_circle(center: Point, radius: f64, count: usize, start_angle: f64) -> Vec<Point> {
    (0..count)
        .map(|k| {
            let t = start_angle + std::f64::consts::TAU * k as f64 / count as f64;
            [center[0] + radius * t.cos(), center[1] + radius * t.sin()]
        })
        .collect()
}

// ---------------------------------------------------------------------------
// file representation

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    energy_bound_j: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sensor_energy_j: Option<f64>,
    physics: PhysicsSection,
    accuracy: AccuracySection,
    anchors: PointSource,
    sensors: PointSource,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhysicsSection {
    alpha: f64,
    beta: f64,
    propagation_speed_m_per_s: f64,
    mean_square_bandwidth_rad2_per_s2: f64,
    noise_psd_w_per_hz: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AccuracySection {
    radius_m: f64,
    probability: f64,
    distribution: Distribution,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points_m: Option<Vec<Point>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    circle: Option<CircleSpec>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridSpec {
    x_min_m: f64,
    x_max_m: f64,
    y_min_m: f64,
    y_max_m: f64,
    nx: usize,
    ny: usize,
    #[serde(default)]
    exclude: Vec<[f64; 4]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircleSpec {
    center_x_m: f64,
    center_y_m: f64,
    radius_m: f64,
    count: usize,
    #[serde(default)]
    start_angle_deg: f64,
}

impl PointSource {
    fn explicit(points: &[Point]) -> Self {
        Self {
            points_m: Some(points.to_vec()),
            grid: None,
            circle: None,
        }
    }

    fn expand(&self, field: &str) -> Result<Vec<Point>, ScenarioError> {
        match (&self.points_m, &self.grid, &self.circle) {
            (Some(p), None, None) => Ok(p.clone()),
            (None, Some(g), None) => {
                let ok = g.nx >= 1
                    && g.ny >= 1
                    && [g.x_min_m, g.x_max_m, g.y_min_m, g.y_max_m]
                        .iter()
                        .all(|v| v.is_finite())
                    && g.x_min_m <= g.x_max_m
                    && g.y_min_m <= g.y_max_m;
                if !ok {
                    return Err(invalid(
                        format!("{field}.grid"),
                        "needs finite ordered extents and counts >= 1",
                    ));
                }
                let pts = make_grid([[g.x_min_m, g.x_max_m], [g.y_min_m, g.y_max_m]], [g.nx, g.ny]);
                Ok(pts
                    .into_iter()
                    .filter(|p| {
                        !g.exclude
                            .iter()
                            .any(|b| p[0] > b[0] && p[0] < b[1] && p[1] > b[2] && p[1] < b[3])
                    })
                    .collect())
            }
            (None, None, Some(c)) => {
                if c.count == 0 || !(c.radius_m > 0.0) {
                    return Err(invalid(
                        format!("{field}.circle"),
                        "needs count >= 1 and a positive radius",
                    ));
                }
                Ok(make_circle(
                    [c.center_x_m, c.center_y_m],
                    c.radius_m,
                    c.count,
                    c.start_angle_deg.to_radians(),
                ))
            }
            _ => Err(invalid(field, "give exactly one of points_m, grid or circle")),
        }
    }
}
