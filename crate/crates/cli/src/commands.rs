//! The subcommands. Each returns its exit status or an error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use globset::Glob;
use lhdeform::ode::Trajectory;
use lhdeform::oscillator::Branch;
use lhdeform::systems::{constants_for, SystemKind};
use lhdeform::verify::conservation::{drift_along, integrate_flow};
use lhdeform::verify::limits::{check_limit, LimitFamily, LIMIT_SLACK};
use lhdeform::verify::registry::LIMIT_POINTS;
use lhdeform::verify::sampling::check_seed;
use lhdeform::verify::superposition::{reconstruct_with, BranchChoice};
use lhdeform::verify::{run_checks, select, SuiteReport, DEFAULT_SEED};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::output::{self, finite, LimitRow, ReconstructionRow};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const CONSTANTS_FILE: &str = "constants.json";
pub const SUPERPOSITION_CSV: &str = "superposition.csv";
pub const SUPERPOSITION_JSON: &str = "superposition.json";
pub const REPORT_FILE: &str = "report.json";
pub const LIMIT_CSV: &str = "limit_scan.csv";
pub const LIMIT_JSON: &str = "limit_scan.json";

/// Flags shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Globals {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub branch: BranchChoice,
    pub z: Option<f64>,
    pub suite: Option<String>,
    pub seed: Option<u64>,
}

impl Globals {
    fn load(&self) -> CliResult<ExperimentConfig> {
        let path = self
            .config
            .as_deref()
            .ok_or_else(|| CliError::usage("this command needs --config"))?;
        ExperimentConfig::load(path, self.z)
    }

    fn seed(&self, cfg: Option<&ExperimentConfig>) -> u64 {
        self.seed.or(cfg.map(|c| c.seed)).unwrap_or(DEFAULT_SEED)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrateSummary {
    pub system: SystemKind,
    pub z: f64,
    pub copies: usize,
    pub steps: usize,
    pub rejected: usize,
    pub t0: f64,
    pub t_end: f64,
    pub final_state: Vec<f64>,
    pub trajectory: PathBuf,
}

pub fn integrate(g: &Globals) -> CliResult<u8> {
    let cfg = g.load()?;
    let spec = cfg.spec();
    let flow = cfg.flow()?;
    let traj = integrate_flow(&spec, &flow)?;
    let mut csv = Vec::new();
    traj.write_csv(&mut csv)?;
    let path = output::write_atomic(&g.out, TRAJECTORY_FILE, &csv)?;
    let summary = IntegrateSummary {
        system: cfg.system,
        z: spec.effective_z(),
        copies: traj.dim() / 2,
        steps: traj.accepted(),
        rejected: traj.rejected,
        t0: traj.t0(),
        t_end: traj.t_end(),
        final_state: traj.final_state().to_vec(),
        trajectory: path,
    };
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    Ok(0)
}

/// Where `constants` takes its states from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateSource {
    Points,
    Trajectory,
    Flow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRow {
    pub t: f64,
    pub state: Vec<f64>,
    pub values: BTreeMap<String, Option<f64>>,
}

/// Same quantity as the conservation checks: `max |F(t) - F(t0)| /
/// max(|F(t0)|, 1e-8)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftEntry {
    pub name: String,
    pub initial: Option<f64>,
    pub drift: Option<f64>,
    pub worst_time: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantsDoc {
    pub system: SystemKind,
    pub z: f64,
    pub s: Option<f64>,
    pub source: StateSource,
    pub constants: Vec<String>,
    pub rows: Vec<ConstantsRow>,
    pub drift: Vec<DriftEntry>,
}

pub fn parse_point(text: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::usage(format!("bad coordinate {s:?} in {text:?}: {e}")))
        })
        .collect()
}

/// Inline points get the times `0, 1, 2, ...`.
pub fn constants(g: &Globals, points: &[String], trajectory: Option<&Path>) -> CliResult<u8> {
    let cfg = g.load()?;
    let spec = cfg.spec();
    let list = constants_for(&spec).map_err(|e| CliError::usage(e.to_string()))?;
    let (source, traj, times) = if !points.is_empty() {
        if trajectory.is_some() {
            return Err(CliError::usage("--points and --trajectory are exclusive"));
        }
        let states = points
            .iter()
            .map(|p| parse_point(p))
            .collect::<CliResult<Vec<_>>>()?;
        let times: Vec<f64> = (0..states.len()).map(|i| i as f64).collect();
        check_arity(&states)?;
        let traj = Trajectory::from_nodes(times.clone(), states)
            .map_err(|e| CliError::usage(e.to_string()))?;
        (StateSource::Points, traj, times)
    } else if let Some(path) = trajectory {
        let traj = Trajectory::read_csv_file(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        check_arity(traj.states())?;
        let times = traj.times().to_vec();
        (StateSource::Trajectory, traj, times)
    } else {
        let flow = cfg.flow()?;
        if flow.initial.len() != 6 {
            return Err(CliError::usage(
                "constants need three copies (6 coordinates)",
            ));
        }
        let traj = integrate_flow(&spec, &flow)?;
        (StateSource::Flow, traj, flow.sample_times())
    };
    let mut rows = Vec::new();
    for &t in &times {
        let state = traj.sample(t)?;
        let values = list
            .iter()
            .map(|c| (c.name.clone(), (c.eval)(&state).ok().and_then(finite)))
            .collect();
        rows.push(ConstantsRow { t, state, values });
    }
    let drift = list
        .iter()
        .map(|c| match drift_along(&traj, &times, c) {
            Ok(d) => DriftEntry {
                name: d.name,
                initial: finite(d.initial),
                drift: finite(d.drift),
                worst_time: Some(d.worst_time),
                error: None,
            },
            Err(e) => DriftEntry {
                name: c.name.clone(),
                initial: None,
                drift: None,
                worst_time: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let doc = ConstantsDoc {
        system: cfg.system,
        z: spec.effective_z(),
        s: cfg.s,
        source,
        constants: list.iter().map(|c| c.name.clone()).collect(),
        rows,
        drift,
    };
    output::write_json(&g.out, CONSTANTS_FILE, &doc)?;
    println!(
        "{}",
        serde_json::to_string(&doc).expect("document serializes")
    );
    Ok(0)
}

fn check_arity(states: &[Vec<f64>]) -> CliResult<()> {
    match states.iter().find(|s| s.len() != 6) {
        Some(s) => Err(CliError::usage(format!(
            "constants need three copies (6 coordinates), got a state with {}",
            s.len()
        ))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperposeSummary {
    pub system: SystemKind,
    pub z: f64,
    pub requested_branch: BranchChoice,
    pub branch: Branch,
    pub k1: f64,
    pub k: f64,
    pub constants_from_initial: bool,
    pub calibration_error: Option<f64>,
    pub ambiguous: bool,
    pub samples: usize,
    pub failures: usize,
    pub max_error: Option<f64>,
    pub table: PathBuf,
}

pub fn superpose(g: &Globals, constants: Option<&str>) -> CliResult<u8> {
    let cfg = g.load()?;
    let spec = cfg.spec();
    let flow = cfg.flow()?;
    if flow.initial.len() != 6 {
        return Err(CliError::usage(
            "superposition needs three copies (6 coordinates)",
        ));
    }
    let given = match constants {
        Some(text) => match parse_point(text)?.as_slice() {
            [k1, k] if k1.is_finite() && k.is_finite() => Some((*k1, *k)),
            _ => {
                return Err(CliError::usage(format!(
                    "--constants expects k1,k, got {text:?}"
                )))
            }
        },
        None => None,
    };
    let rec = reconstruct_with(&spec, &flow, g.branch, given)?;
    let rows: Vec<ReconstructionRow> = rec.samples.iter().map(ReconstructionRow::from).collect();
    let table = output::write_atomic(
        &g.out,
        SUPERPOSITION_CSV,
        &output::reconstruction_csv(&rows)?,
    )?;
    let summary = SuperposeSummary {
        system: cfg.system,
        z: spec.effective_z(),
        requested_branch: g.branch,
        branch: rec.branch,
        k1: rec.k1,
        k: rec.k,
        constants_from_initial: given.is_none(),
        calibration_error: finite(rec.calibration_error),
        ambiguous: rec.ambiguous,
        samples: rec.samples.len(),
        failures: rec.failures(),
        max_error: finite(rec.max_error()),
        table,
    };
    output::write_json(&g.out, SUPERPOSITION_JSON, &summary)?;
    println!(
        "{}",
        serde_json::to_string(&summary).expect("summary serializes")
    );
    if summary.failures > 0 {
        eprintln!(
            "{} of {} samples outside the rule domain",
            summary.failures, summary.samples
        );
        return Ok(1);
    }
    Ok(0)
}

/// Runs the selected checks and writes the suite report; exit 1 when any
/// check fails.
pub fn verify(g: &Globals, selector: Option<&str>) -> CliResult<u8> {
    let selector = match (selector, g.suite.as_deref()) {
        (Some(_), Some(_)) => {
            return Err(CliError::usage("give the selector or --suite, not both"))
        }
        (Some(s), None) | (None, Some(s)) => s,
        (None, None) => "all",
    };
    let cfg = match &g.config {
        Some(_) => Some(g.load()?),
        None => None,
    };
    let seed = g.seed(cfg.as_ref());
    let checks = select(selector).map_err(|e| CliError::usage(e.to_string()))?;
    let start = Instant::now();
    let report = run_checks(&checks, seed);
    let elapsed = start.elapsed().as_secs_f64();
    output::write_json(&g.out, REPORT_FILE, &report)?;
    print_report(&report);
    eprintln!("{} checks in {elapsed:.2} s", report.total);
    Ok(u8::from(report.failed > 0))
}

fn print_report(report: &SuiteReport) {
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} measured={:e} tolerance={:e}",
            c.check_id, c.measured, c.tolerance
        );
    }
    println!(
        "{} of {} checks failed (seed {})",
        report.failed, report.total, report.seed
    );
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyScan {
    pub family: String,
    pub check_id: String,
    pub required_order: f64,
    pub order: Option<f64>,
    pub passed: bool,
    pub distances: Vec<Option<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitScan {
    pub seed: u64,
    pub z_grid: Vec<f64>,
    pub points: usize,
    pub slack: f64,
    pub families: Vec<FamilyScan>,
}

pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let grid = parse_point(text)?;
    let ok = grid.len() >= 2
        && grid.iter().all(|z| z.is_finite() && *z > 0.0)
        && grid.windows(2).all(|w| w[1] < w[0]);
    if !ok {
        return Err(CliError::usage(format!(
            "z grid must hold at least two positive decreasing values, got {text:?}"
        )));
    }
    Ok(grid)
}

/// Distance to the undeformed limit for every family matching `family`.
/// With the default grid and points the per-family results equal the
/// `limit.*` checks of the suite.
pub fn limit_scan(g: &Globals, family: &str, z_grid: &str, points: Option<usize>) -> CliResult<u8> {
    let grid = parse_grid(z_grid)?;
    let points = points.unwrap_or(LIMIT_POINTS);
    if points == 0 {
        return Err(CliError::usage("--points must be positive"));
    }
    let matcher = Glob::new(family)
        .map_err(|e| CliError::usage(format!("bad family pattern {family:?}: {e}")))?
        .compile_matcher();
    let families: Vec<LimitFamily> = LimitFamily::ALL
        .into_iter()
        .filter(|f| matcher.is_match(f.name()))
        .collect();
    if families.is_empty() {
        let names: Vec<_> = LimitFamily::ALL.iter().map(|f| f.name()).collect();
        return Err(CliError::usage(format!(
            "family {family:?} matches none of {}",
            names.join(", ")
        )));
    }
    let cfg = match &g.config {
        Some(_) => Some(g.load()?),
        None => None,
    };
    let seed = g.seed(cfg.as_ref());
    let mut scans = Vec::new();
    let mut rows = Vec::new();
    for f in families {
        let id = format!("limit.{}", f.name());
        let r = check_limit(&id, f, &grid, points, LIMIT_SLACK, check_seed(seed, &id));
        let details = &r.metadata.details;
        let distances: Vec<Option<f64>> = details
            .get("distances")
            .and_then(|v| v.as_array())
            .map(|a| a.iter().map(|d| d.as_f64()).collect())
            .unwrap_or_default();
        for (z, d) in grid.iter().zip(&distances) {
            rows.push(LimitRow {
                family: f.name().into(),
                z: *z,
                distance: *d,
            });
        }
        scans.push(FamilyScan {
            family: f.name().into(),
            check_id: id,
            required_order: f.required_order(),
            order: details.get("order").and_then(|v| v.as_f64()),
            passed: r.passed,
            distances,
            error: details
                .get("error")
                .and_then(|v| v.as_str())
                .map(String::from),
        });
    }
    output::write_atomic(&g.out, LIMIT_CSV, &output::limit_csv(&rows)?)?;
    let doc = LimitScan {
        seed,
        z_grid: grid,
        points,
        slack: LIMIT_SLACK,
        families: scans,
    };
    output::write_json(&g.out, LIMIT_JSON, &doc)?;
    for s in &doc.families {
        let verdict = if s.passed { "PASS" } else { "FAIL" };
        let order = s.order.map_or("n/a".to_string(), |o| format!("{o:.4}"));
        println!(
            "{verdict} {} order={order} required={}",
            s.family, s.required_order
        );
    }
    Ok(u8::from(doc.families.iter().any(|s| !s.passed)))
}
