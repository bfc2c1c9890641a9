//! `anchorplace`: solve placement scenarios, verify them by simulation, and
//! export plot-ready tables.
//!
//! Exit codes: 0 success, 2 infeasible scenario or placement, 3 solver
//! failure, 4 I/O error, 5 usage or malformed input.

mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anchorplace::placement_owa::{DEFAULT_EPSILON, DEFAULT_K_MAX};
use anchorplace::ranging::weight_energy;
use anchorplace::result::{
    certify, solve_scenario, Method, PlacementResult, SolveOptions, DEFAULT_DRAWS, DEFAULT_SEED,
};
use anchorplace::verify_mc::{coverage, CoverageReport, TestPoints, VerifyError, DEFAULT_TRIALS};
use anchorplace::{load_scenario, Mode, PlacementError, Scenario, ScenarioError};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use output::{create_dir, read_json, write_csv, write_json, CoverageFile, FeasibilityFile, Header, PlacementFile};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("I/O error: {0}")]
    Io(String),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Infeasible(_) => 2,
            Self::Solver(_) => 3,
            Self::Io(_) => 4,
            Self::Usage(_) => 5,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Self::Io(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

impl From<PlacementError> for CliError {
    fn from(e: PlacementError) -> Self {
        match e {
            PlacementError::InfeasibleScenario { .. } => Self::Infeasible(e.to_string()),
            PlacementError::WrongMode { .. } | PlacementError::TooLarge { .. } => Self::Usage(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Infeasible { .. } => Self::Infeasible(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "anchorplace",
    version,
    about = "Sparse anchor placement for TOA localization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    L1,
    Reweighted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    OwA,
    OwS,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PointsArg {
    /// The sensor point with the smallest margin.
    Worst,
    All,
}

impl From<PointsArg> for TestPoints {
    fn from(p: PointsArg) -> Self {
        match p {
            PointsArg::Worst => TestPoints::WorstMargin,
            PointsArg::All => TestPoints::All,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a scenario and write placement.json and feasibility.json.
    Solve {
        scenario: PathBuf,
        #[arg(short, long, default_value = "out")]
        output_dir: PathBuf,
        #[arg(long, value_enum, default_value = "reweighted")]
        method: MethodArg,
        /// Override the scenario's ranging mode.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Override the per-anchor energy cap e_b (J).
        #[arg(long)]
        energy_bound: Option<f64>,
        /// Override the sensor energy e_s (J).
        #[arg(long)]
        sensor_energy: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_K_MAX)]
        k_max: usize,
        /// Randomized rounding draws (sensor-transmit mode).
        #[arg(long, default_value_t = DEFAULT_DRAWS)]
        draws: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Reduce the sensor energy to the least the selection needs.
        #[arg(long)]
        optimize_sensor_energy: bool,
        /// Also run this many Monte-Carlo trials and write coverage.json.
        #[arg(long)]
        coverage_trials: Option<usize>,
        #[arg(long, value_enum, default_value = "worst")]
        coverage_points: PointsArg,
    },
    /// Re-certify a placement and measure its coverage by simulation.
    Verify {
        scenario: PathBuf,
        placement: PathBuf,
        #[arg(long, default_value_t = DEFAULT_TRIALS)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value = "worst")]
        points: PointsArg,
        /// Output file; defaults to coverage.json beside the placement.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Export anchors.csv, sensors.csv and trace.csv from a placement file.
    Plotdata {
        result: PathBuf,
        #[arg(short, long, default_value = "plot")]
        output_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(5)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Solve {
            scenario,
            output_dir,
            method,
            mode,
            energy_bound,
            sensor_energy,
            epsilon,
            k_max,
            draws,
            seed,
            optimize_sensor_energy,
            coverage_trials,
            coverage_points,
        } => {
            let options = SolveOptions {
                method: match method {
                    MethodArg::L1 => Method::L1,
                    MethodArg::Reweighted => Method::Reweighted,
                },
                epsilon,
                k_max,
                draws,
                seed,
                optimize_sensor_energy,
            };
            let overrides = Overrides {
                mode: mode.map(|m| match m {
                    ModeArg::OwA => Mode::OwA,
                    ModeArg::OwS => Mode::OwS,
                }),
                energy_bound,
                sensor_energy,
            };
            cmd_solve(
                &scenario,
                &overrides,
                &options,
                &output_dir,
                coverage_trials,
                coverage_points.into(),
            )
        }
        Command::Verify {
            scenario,
            placement,
            trials,
            seed,
            points,
            output,
        } => cmd_verify(&scenario, &placement, trials, seed, points.into(), output.as_deref()),
        Command::Plotdata { result, output_dir } => cmd_plotdata(&result, &output_dir),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anchorplace: {e}");
            ExitCode::from(e.code())
        }
    }
}

struct Overrides {
    mode: Option<Mode>,
    energy_bound: Option<f64>,
    sensor_energy: Option<f64>,
}

fn load_with(path: &Path, o: &Overrides) -> Result<Scenario, CliError> {
    let mut sc = load_scenario(path)?;
    if let Some(m) = o.mode {
        sc.mode = m;
    }
    if o.energy_bound.is_some() {
        sc.energy_bound = o.energy_bound;
    }
    if o.sensor_energy.is_some() {
        sc.sensor_energy = o.sensor_energy;
    }
    sc.validate()?;
    Ok(sc)
}

fn validate_solve_options(options: &SolveOptions) -> Result<(), CliError> {
    if options.epsilon.is_nan() || options.epsilon <= 0.0 {
        return Err(CliError::Usage("--epsilon must be positive".into()));
    }
    if options.k_max == 0 {
        return Err(CliError::Usage("--k-max must be at least 1".into()));
    }
    if options.draws == 0 {
        return Err(CliError::Usage("--draws must be at least 1".into()));
    }
    Ok(())
}

fn run_coverage(
    scenario: &Scenario,
    result: &PlacementResult,
    trials: usize,
    seed: u64,
    points: &TestPoints,
) -> Result<CoverageReport, CliError> {
    if trials == 0 {
        return Err(CliError::Usage("trials must be at least 1".into()));
    }
    Ok(coverage(
        &result.effective_scenario(scenario),
        &result.weights,
        trials,
        seed,
        points,
    )?)
}

fn cmd_solve(
    path: &Path,
    overrides: &Overrides,
    options: &SolveOptions,
    output_dir: &Path,
    coverage_trials: Option<usize>,
    points: TestPoints,
) -> Result<(), CliError> {
    validate_solve_options(options)?;
    if coverage_trials == Some(0) {
        return Err(CliError::Usage("--coverage-trials must be at least 1".into()));
    }
    let scenario = load_with(path, overrides)?;
    let result = solve_scenario(&scenario, options)?;
    if result.collinear {
        eprintln!(
            "anchorplace: warning: all selected anchors are collinear; estimates are ambiguous about their mirror image"
        );
    }
    let coverage = match coverage_trials {
        Some(t) if result.certified => Some(run_coverage(&scenario, &result, t, options.seed, &points)?),
        _ => None,
    };

    create_dir(output_dir)?;
    let parameters = json!({
        "solve": options,
        "coverage_trials": coverage_trials,
        "coverage_points": points,
    });
    let header = |kind: &str| Header::new(kind, &scenario, Some(options.seed), parameters.clone());
    write_json(
        &output_dir.join("feasibility.json"),
        &FeasibilityFile {
            header: header("feasibility"),
            certified: result.certified,
            margins: result.margins(),
            report: result.feasibility.clone(),
        },
    )?;
    if let Some(c) = &coverage {
        write_json(
            &output_dir.join("coverage.json"),
            &CoverageFile {
                header: header("coverage"),
                meets_target: c.worst_coverage >= c.probability,
                report: c.clone(),
            },
        )?;
    }
    let summary = format!(
        "{} anchors selected, objective {:.6e}, relative margin {:.3e}",
        result.support_size,
        result.objective,
        result.feasibility.relative_margin()
    );
    let certified = result.certified;
    let mode = result.mode;
    write_json(
        &output_dir.join("placement.json"),
        &PlacementFile {
            header: header("placement"),
            scenario: scenario.to_toml(),
            result,
            coverage,
        },
    )?;
    if !certified {
        return Err(match mode {
            Mode::OwA => CliError::Solver(format!("allocation fails the independent feasibility check: {summary}")),
            Mode::OwS => CliError::Infeasible(format!("no feasible rounded selection found: {summary}")),
        });
    }
    eprintln!("anchorplace: {summary}");
    Ok(())
}

fn cmd_verify(
    scenario_path: &Path,
    placement_path: &Path,
    trials: usize,
    seed: u64,
    points: TestPoints,
    output: Option<&Path>,
) -> Result<(), CliError> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let scenario = load_scenario(scenario_path)?;
    let file: PlacementFile = read_json(placement_path)?;
    let result = &file.result;
    if result.weights.len() != scenario.num_anchors() {
        return Err(CliError::Usage(format!(
            "placement has {} anchor weights but the scenario has {} anchors",
            result.weights.len(),
            scenario.num_anchors()
        )));
    }
    if result.mode != scenario.mode {
        return Err(CliError::Usage(format!(
            "placement is for {} mode but the scenario is {}",
            result.mode, scenario.mode
        )));
    }
    if file.header.scenario_hash != scenario.content_hash() {
        eprintln!("anchorplace: warning: placement was computed for a different scenario hash");
    }
    let effective = result.effective_scenario(&scenario);
    let (report, certified) = certify(&effective, &result.weights).map_err(|e| CliError::Usage(e.to_string()))?;
    if !certified {
        let k = report.worst_sensor_index;
        let s = effective.sensor_points[k];
        return Err(CliError::Infeasible(format!(
            "placement misses the threshold at sensor point {k} ({}, {}): λ_min − λ = {:.6e} (λ = {:.6e})",
            s[0], s[1], report.margin, report.lambda
        )));
    }
    let report = run_coverage(&scenario, result, trials, seed, &points)?;
    let out = output
        .map(Path::to_path_buf)
        .unwrap_or_else(|| placement_path.with_file_name("coverage.json"));
    let meets_target = report.worst_coverage >= report.probability;
    eprintln!(
        "anchorplace: worst coverage {:.4} at sensor point {} over {} trials (target {})",
        report.worst_coverage, report.worst_point, report.trials, report.probability
    );
    write_json(
        &out,
        &CoverageFile {
            header: Header::new(
                "coverage",
                &effective,
                Some(seed),
                json!({ "trials": trials, "points": points, "placement": placement_path.display().to_string() }),
            ),
            meets_target,
            report,
        },
    )
}

/// Shortest round-trip text, in exponent form.
fn num(x: f64) -> String {
    format!("{x:e}")
}

fn cmd_plotdata(path: &Path, output_dir: &Path) -> Result<(), CliError> {
    let file: PlacementFile = read_json(path)?;
    let scenario = Scenario::from_toml(&file.scenario)?;
    let result = &file.result;
    if result.weights.len() != scenario.num_anchors() {
        return Err(CliError::Usage(format!(
            "{}: {} weights for {} anchors",
            path.display(),
            result.weights.len(),
            scenario.num_anchors()
        )));
    }
    let effective = result.effective_scenario(&scenario);
    create_dir(output_dir)?;
    let header = Header {
        kind: "plotdata".into(),
        timestamp: file.header.timestamp,
        ..file.header.clone()
    };

    let relaxed = result.relaxation.as_ref().map(|r| &r.w);
    let anchors: Vec<Vec<String>> = scenario
        .anchor_points
        .iter()
        .enumerate()
        .map(|(m, a)| {
            let w = result.weights[m];
            vec![
                m.to_string(),
                a[0].to_string(),
                a[1].to_string(),
                result.selected.contains(&m).to_string(),
                num(w),
                num(weight_energy(&effective, w)),
                num(relaxed.map(|r| r[m]).unwrap_or(w)),
            ]
        })
        .collect();
    write_csv(
        &output_dir.join("anchors.csv"),
        &header,
        &["index", "x", "y", "selected", "weight", "energy_j", "relaxed"],
        &anchors,
    )?;

    let lambda = result.feasibility.lambda;
    let sensors: Vec<Vec<String>> = scenario
        .sensor_points
        .iter()
        .zip(&result.feasibility.min_eig_by_sensor)
        .enumerate()
        .map(|(k, (s, e))| {
            vec![
                k.to_string(),
                s[0].to_string(),
                s[1].to_string(),
                num(*e),
                num(e - lambda),
                (k == result.feasibility.worst_sensor_index).to_string(),
            ]
        })
        .collect();
    write_csv(
        &output_dir.join("sensors.csv"),
        &header,
        &["index", "x", "y", "min_eig", "margin", "worst"],
        &sensors,
    )?;

    let trace: Vec<Vec<String>> = result
        .trace
        .iter()
        .map(|t| {
            vec![
                t.iteration.to_string(),
                t.support_size.to_string(),
                num(t.total),
                num(t.weighted_objective),
                t.solver_iterations.to_string(),
                num(t.duality_gap),
            ]
        })
        .collect();
    write_csv(
        &output_dir.join("trace.csv"),
        &header,
        &[
            "iteration",
            "support_size",
            "total",
            "weighted_objective",
            "solver_iterations",
            "duality_gap",
        ],
        &trace,
    )
}
