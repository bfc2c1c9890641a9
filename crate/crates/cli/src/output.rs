//! Output files. Every file starts with the same reproducibility header:
//! JSON files carry it as the `header` field, CSV files as `#` comment lines.

use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anchorplace::result::PlacementResult;
use anchorplace::verify_mc::CoverageReport;
use anchorplace::{FeasibilityReport, Scenario};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL: &str = "anchorplace";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub version: String,
    pub format_version: u32,
    pub kind: String,
    pub scenario_name: String,
    pub scenario_hash: String,
    pub seed: Option<u64>,
    pub parameters: serde_json::Value,
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides the clock.
    pub timestamp: u64,
}

impl Header {
    pub fn new(kind: &str, scenario: &Scenario, seed: Option<u64>, parameters: serde_json::Value) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            format_version: FORMAT_VERSION,
            kind: kind.into(),
            scenario_name: scenario.name.clone(),
            scenario_hash: scenario.content_hash(),
            seed,
            parameters,
            timestamp: now(),
        }
    }
}

fn now() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementFile {
    pub header: Header,
    /// Canonical scenario text the result was computed from.
    pub scenario: String,
    pub result: PlacementResult,
    pub coverage: Option<CoverageReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeasibilityFile {
    pub header: Header,
    pub certified: bool,
    pub report: FeasibilityReport,
    pub margins: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageFile {
    pub header: Header,
    pub meets_target: bool,
    pub report: CoverageReport,
}

pub fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_error(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_error(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: not a valid file of this kind: {e}", path.display())))
}

/// Writes `rows` under `header` and `columns` as CSV with `#` header lines.
pub fn write_csv(path: &Path, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut text = String::new();
    let json = serde_json::to_string(header).map_err(|e| io_error(path, e))?;
    text.push_str(&format!("# {json}\n"));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(columns).map_err(|e| io_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| io_error(path, e))?;
    }
    let body = w.into_inner().map_err(|e| io_error(path, e))?;
    text.push_str(&String::from_utf8_lossy(&body));
    fs::write(path, text).map_err(|e| io_error(path, e))
}
