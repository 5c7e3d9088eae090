use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lhdeform::ode::Trajectory;
use lhdeform::oscillator::Branch;
use lhdeform::systems::SystemKind;
use lhdeform::verify::conservation::{check_conservation, FlowConfig};
use lhdeform::verify::{run_checks, select, SuiteReport, DEFAULT_SEED};
use lhdeform_cli::commands::{
    ConstantsDoc, IntegrateSummary, LimitScan, StateSource, SuperposeSummary, CONSTANTS_FILE,
    LIMIT_CSV, LIMIT_JSON, REPORT_FILE, SUPERPOSITION_CSV, SUPERPOSITION_JSON, TRAJECTORY_FILE,
};
use lhdeform_cli::config::ExperimentConfig;
use lhdeform_cli::output::{read_json, read_limit_csv, read_reconstruction_csv, to_json};
use serde_json::json;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lhdeform"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin()
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write_config(dir: &Path, name: &str, v: serde_json::Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

fn coefficients() -> serde_json::Value {
    json!({
        "b1": [{"constant": {"c": 1.0}}],
        "b2": [{"monomial": {"c": 1.0, "k": 1}}],
        "b3": [{"sinusoid": {"c": 1.0, "omega": 1.0}}]
    })
}

fn demo(system: &str, z: f64, t1: f64) -> serde_json::Value {
    json!({
        "version": 1,
        "system": system,
        "z": z,
        "coefficients": coefficients(),
        "initial": [-2.0, 0.5, -1.5, -0.7, -2.5, 1.2],
        "tspan": [0.0, t1]
    })
}

#[test]
fn static_constants_example() {
    let dir = TempDir::new().unwrap();
    write_config(
        dir.path(),
        "c.json",
        json!({"version": 1, "system": "h4-prolonged"}),
    );
    let o = run(
        dir.path(),
        &[
            "--config",
            "c.json",
            "--out",
            "out",
            "constants",
            "--points",
            "2,3,1,0,0,1",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: ConstantsDoc = read_json(&dir.path().join("out").join(CONSTANTS_FILE)).unwrap();
    assert_eq!(doc.source, StateSource::Points);
    let v = &doc.rows[0].values;
    assert_eq!(v["F2"], Some(3.0));
    assert_eq!(v["F13"], Some(-1.0));
    assert_eq!(v["F23"], Some(4.0));
    assert_eq!(v["F3"], Some(6.0));
    let stdout: ConstantsDoc = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(stdout, doc);
}

#[test]
fn deformed_constants_omit_f23() {
    let dir = TempDir::new().unwrap();
    write_config(
        dir.path(),
        "c.json",
        json!({"version": 1, "system": "h4-deformed-prolonged", "z": 0.5}),
    );
    let o = run(
        dir.path(),
        &[
            "--config",
            "c.json",
            "constants",
            "--points",
            "2,3,1,0,0,1",
            "--points",
            "1,1,1,2,2,1",
        ],
    );
    assert_eq!(code(&o), 0);
    let doc: ConstantsDoc = read_json(&dir.path().join(CONSTANTS_FILE)).unwrap();
    assert_eq!(doc.constants, ["Fz2", "Fz2_right", "Fz3"]);
    assert!(doc.rows.iter().all(|r| !r.values.contains_key("F23")));
    assert_eq!(doc.rows[1].t, 1.0);

    let o = run(
        dir.path(),
        &[
            "--config",
            "c.json",
            "--z",
            "0",
            "constants",
            "--points",
            "2,3,1,0,0,1",
        ],
    );
    assert_eq!(code(&o), 0);
    let doc: ConstantsDoc = read_json(&dir.path().join(CONSTANTS_FILE)).unwrap();
    assert_eq!(doc.z, 0.0);
    assert_eq!(doc.rows[0].values["Fz3"], Some(6.0));
}

#[test]
fn constants_arity_mismatch_is_usage_error() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "c.json", json!({"version": 1, "system": "h4"}));
    let o = run(
        dir.path(),
        &["--config", "c.json", "constants", "--points", "2,3,1,0"],
    );
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());
}

#[test]
fn invalid_configs_exit_two() {
    let dir = TempDir::new().unwrap();
    for (i, doc) in [
        json!({"version": 1, "system": "h5"}),
        json!({"version": 1, "system": "h4", "extra": true}),
        json!({"version": 3, "system": "h4"}),
        json!({"version": 1, "system": "bernoulli", "initial": [1.0, 0.5]}),
        json!({"version": 1, "system": "h4-prolonged", "initial": [1.0, 0.5], "tspan": [0.0, 1.0]}),
    ]
    .into_iter()
    .enumerate()
    {
        let name = format!("c{i}.json");
        write_config(dir.path(), &name, doc);
        let o = run(dir.path(), &["--config", &name, "integrate"]);
        assert_eq!(code(&o), 2, "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
    }
    let o = run(dir.path(), &["--config", "missing.json", "integrate"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), &["integrate"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), &["frobnicate"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zero_coefficients_give_constant_trajectory() {
    let dir = TempDir::new().unwrap();
    write_config(
        dir.path(),
        "c.json",
        json!({"version": 1, "system": "h4", "initial": [0.3, -1.2], "tspan": [0.0, 2.0]}),
    );
    let o = run(dir.path(), &["--config", "c.json", "integrate"]);
    assert_eq!(code(&o), 0);
    let traj = Trajectory::read_csv_file(&dir.path().join(TRAJECTORY_FILE)).unwrap();
    assert!(traj.states().iter().all(|s| s == &[0.3, -1.2]));
    assert_eq!(traj.t_end(), 2.0);
}

#[test]
fn deformed_integration_writes_six_columns() {
    let dir = TempDir::new().unwrap();
    write_config(
        dir.path(),
        "c.json",
        demo("h4-deformed-prolonged", 0.5, 2.0),
    );
    let o = run(
        dir.path(),
        &["--config", "c.json", "--out", "o", "integrate"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary: IntegrateSummary = serde_json::from_slice(&o.stdout).unwrap();
    let path = dir.path().join("o").join(TRAJECTORY_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().next().unwrap(), "t,x1,y1,x2,y2,x3,y3");
    let traj = Trajectory::read_csv_file(&path).unwrap();
    assert_eq!(traj.accepted(), summary.steps);
    assert_eq!(traj.final_state(), summary.final_state.as_slice());
    assert_eq!(summary.copies, 3);
    assert_eq!(summary.system, SystemKind::H4DeformedProlonged);
}

#[test]
fn integration_failure_exits_nonzero_with_diagnostics() {
    let dir = TempDir::new().unwrap();
    let mut cfg = demo("h4-deformed-prolonged", 0.5, 3.0);
    cfg["initial"] = json!([0.3, 0.5, -0.4, -0.7, 0.1, 1.2]);
    write_config(dir.path(), "c.json", cfg);
    let o = run(dir.path(), &["--config", "c.json", "integrate"]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("integration failed"));
    assert!(!dir.path().join(TRAJECTORY_FILE).exists());
}

#[test]
fn flow_drift_matches_conservation_check() {
    let dir = TempDir::new().unwrap();
    let path = write_config(
        dir.path(),
        "c.json",
        demo("h4-deformed-prolonged", 0.5, 5.0),
    );
    let o = run(dir.path(), &["--config", "c.json", "constants"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc: ConstantsDoc = read_json(&dir.path().join(CONSTANTS_FILE)).unwrap();
    assert_eq!(doc.source, StateSource::Flow);
    let cfg = ExperimentConfig::load(&path, None).unwrap();
    let flow: FlowConfig = cfg.flow().unwrap();
    for d in &doc.drift {
        let r = check_conservation("c", &cfg.spec(), &d.name, &flow, 1e-6, 0);
        assert!(r.passed);
        assert_eq!(d.drift, Some(r.measured), "{}", d.name);
    }

    let o = run(dir.path(), &["--config", "c.json", "integrate"]);
    assert_eq!(code(&o), 0);
    let o = run(
        dir.path(),
        &[
            "--config",
            "c.json",
            "constants",
            "--trajectory",
            TRAJECTORY_FILE,
        ],
    );
    assert_eq!(code(&o), 0);
    let doc: ConstantsDoc = read_json(&dir.path().join(CONSTANTS_FILE)).unwrap();
    assert_eq!(doc.source, StateSource::Trajectory);
    assert!(doc.drift.iter().all(|d| d.drift.unwrap() <= 1e-6));
}

#[test]
fn superposition_demos_reconstruct() {
    let dir = TempDir::new().unwrap();
    for (name, cfg) in [
        ("u.json", demo("h4-prolonged", 0.0, 3.0)),
        ("d.json", demo("h4-deformed-prolonged", 0.3, 3.0)),
    ] {
        write_config(dir.path(), name, cfg);
        let o = run(dir.path(), &["--config", name, "superpose"]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let s: SuperposeSummary = read_json(&dir.path().join(SUPERPOSITION_JSON)).unwrap();
        assert_eq!(s.samples, 50);
        assert_eq!(s.failures, 0);
        assert!(s.max_error.unwrap() <= 1e-6, "{name}: {:?}", s.max_error);
        let rows = read_reconstruction_csv(&dir.path().join(SUPERPOSITION_CSV)).unwrap();
        assert_eq!(rows.len(), 50);
        let worst = rows.iter().map(|r| r.error.unwrap()).fold(0.0, f64::max);
        assert_eq!(Some(worst), s.max_error);
    }
}

#[test]
fn supplied_constants_and_wrong_branch() {
    let dir = TempDir::new().unwrap();
    write_config(dir.path(), "u.json", demo("h4-prolonged", 0.0, 3.0));
    let o = run(dir.path(), &["--config", "u.json", "superpose"]);
    let auto: SuperposeSummary = serde_json::from_slice(&o.stdout).unwrap();
    let k = format!("{},{}", auto.k1, auto.k);
    let o = run(
        dir.path(),
        &["--config", "u.json", "superpose", "--constants", &k],
    );
    assert_eq!(code(&o), 0);
    let given: SuperposeSummary = serde_json::from_slice(&o.stdout).unwrap();
    assert!(!given.constants_from_initial);
    assert_eq!(given.max_error, auto.max_error);

    let other = if auto.branch == Branch::Plus {
        "minus"
    } else {
        "plus"
    };
    let o = run(
        dir.path(),
        &["--config", "u.json", "--branch", other, "superpose"],
    );
    let s: SuperposeSummary = serde_json::from_slice(&o.stdout).unwrap();
    assert!(s.failures > 0 || s.max_error.unwrap() > 1e-3);

    let o = run(
        dir.path(),
        &["--config", "u.json", "superpose", "--constants", "1"],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn symmetric_copies_record_singular_samples() {
    let dir = TempDir::new().unwrap();
    let mut cfg = demo("h4-deformed-prolonged", 0.3, 3.0);
    cfg["initial"] = json!([-2.0, 0.5, -1.5, 0.7, -2.5, 0.7]);
    write_config(dir.path(), "c.json", cfg);
    let o = run(dir.path(), &["--config", "c.json", "superpose"]);
    assert_eq!(code(&o), 1);
    let s: SuperposeSummary = read_json(&dir.path().join(SUPERPOSITION_JSON)).unwrap();
    assert_eq!(s.failures, s.samples);
    assert!(s.ambiguous);
    let rows = read_reconstruction_csv(&dir.path().join(SUPERPOSITION_CSV)).unwrap();
    assert!(rows.iter().all(|r| r
        .failure
        .as_deref()
        .unwrap()
        .starts_with("singular configuration")));
}

#[test]
fn verify_selects_and_rejects() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["verify", "bracket.*"]);
    assert_eq!(code(&o), 0);
    let r: SuiteReport = read_json(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(r.total, 8);
    assert!(r.checks.iter().all(|c| c.check_id.starts_with("bracket.")));
    assert_eq!(r.seed, DEFAULT_SEED);

    let o = run(
        dir.path(),
        &[
            "--suite",
            "limit.hz-*,twist.roundtrip",
            "--seed",
            "11",
            "verify",
        ],
    );
    let r: SuiteReport = read_json(&dir.path().join(REPORT_FILE)).unwrap();
    assert_eq!(code(&o), i32::from(r.failed > 0));
    assert_eq!(r.seed, 11);
    assert_eq!(
        r.checks,
        run_checks(&select("limit.hz-*,twist.roundtrip").unwrap(), 11).checks
    );

    for sel in ["unknown.*", ""] {
        let o = run(dir.path(), &["verify", sel]);
        assert_eq!(code(&o), 2, "{sel:?}");
    }
    let o = run(dir.path(), &["--suite", "all", "verify", "bracket.*"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn limit_scan_matches_suite_checks() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["limit-scan", "--family", "*-hamiltonians"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let scan: LimitScan = read_json(&dir.path().join(LIMIT_JSON)).unwrap();
    let rows = read_limit_csv(&dir.path().join(LIMIT_CSV)).unwrap();
    assert_eq!(rows.len(), 3 * scan.families.len());
    let ids: Vec<String> = scan.families.iter().map(|f| f.check_id.clone()).collect();
    let suite = run_checks(&select(&ids.join(",")).unwrap(), DEFAULT_SEED);
    for (f, c) in scan.families.iter().zip(&suite.checks) {
        assert_eq!(f.passed, c.passed);
        assert_eq!(f.order, Some(f.required_order - c.measured));
    }

    let o = run(dir.path(), &["limit-scan"]);
    let scan: LimitScan = read_json(&dir.path().join(LIMIT_JSON)).unwrap();
    assert_eq!(scan.families.len(), 15);
    assert_eq!(code(&o), i32::from(scan.families.iter().any(|f| !f.passed)));
    for f in &scan.families {
        assert_eq!(
            f.passed,
            f.order.unwrap() >= f.required_order - scan.slack,
            "{}",
            f.family
        );
    }

    for args in [
        &["limit-scan", "--z-grid", "1e-2"][..],
        &["limit-scan", "--z-grid", "1e-2,-1e-3"][..],
        &["limit-scan", "--z-grid", "a,b"][..],
        &["limit-scan", "--family", "no-such-family"][..],
        &["limit-scan", "--points", "0"][..],
    ] {
        assert_eq!(code(&run(dir.path(), args)), 2, "{args:?}");
    }
}

#[test]
fn documents_roundtrip_through_readers() {
    let dir = TempDir::new().unwrap();
    write_config(
        dir.path(),
        "d.json",
        demo("h4-deformed-prolonged", 0.3, 2.0),
    );
    for args in [
        &["--config", "d.json", "superpose"][..],
        &["--config", "d.json", "constants"][..],
        &["--config", "d.json", "integrate"][..],
        &["verify", "twist.*"][..],
        &["limit-scan", "--family", "hz-rhs"][..],
    ] {
        assert_eq!(code(&run(dir.path(), args)), 0, "{args:?}");
    }
    let p = |f: &str| dir.path().join(f);
    let bytes = |f: &str| std::fs::read(p(f)).unwrap();
    assert_eq!(
        to_json(&read_json::<SuperposeSummary>(&p(SUPERPOSITION_JSON)).unwrap()),
        bytes(SUPERPOSITION_JSON)
    );
    assert_eq!(
        to_json(&read_json::<ConstantsDoc>(&p(CONSTANTS_FILE)).unwrap()),
        bytes(CONSTANTS_FILE)
    );
    assert_eq!(
        to_json(&read_json::<SuiteReport>(&p(REPORT_FILE)).unwrap()),
        bytes(REPORT_FILE)
    );
    assert_eq!(
        to_json(&read_json::<LimitScan>(&p(LIMIT_JSON)).unwrap()),
        bytes(LIMIT_JSON)
    );

    let rows = read_reconstruction_csv(&p(SUPERPOSITION_CSV)).unwrap();
    assert_eq!(
        lhdeform_cli::output::reconstruction_csv(&rows).unwrap(),
        bytes(SUPERPOSITION_CSV)
    );
    let rows = read_limit_csv(&p(LIMIT_CSV)).unwrap();
    assert_eq!(
        lhdeform_cli::output::limit_csv(&rows).unwrap(),
        bytes(LIMIT_CSV)
    );
    let traj = Trajectory::read_csv_file(&p(TRAJECTORY_FILE)).unwrap();
    let mut again = Vec::new();
    traj.write_csv(&mut again).unwrap();
    assert_eq!(again, bytes(TRAJECTORY_FILE));
}

#[test]
fn identical_config_and_seed_give_identical_outputs() {
    let dir = TempDir::new().unwrap();
    write_config(
        dir.path(),
        "d.json",
        demo("h4-deformed-prolonged", 0.5, 3.0),
    );
    let files = [
        TRAJECTORY_FILE,
        CONSTANTS_FILE,
        SUPERPOSITION_CSV,
        SUPERPOSITION_JSON,
        REPORT_FILE,
        LIMIT_JSON,
        LIMIT_CSV,
    ];
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        for args in [
            &["--config", "d.json", "integrate"][..],
            &["--config", "d.json", "constants"][..],
            &["--config", "d.json", "superpose"][..],
            &["--config", "d.json", "verify", "selftest.*,independence.*"][..],
            &["--config", "d.json", "limit-scan", "--family", "hz-*"][..],
        ] {
            assert_eq!(code(&run(dir.path(), args)), 0, "{args:?}");
        }
        snapshots.push(files.map(|f| std::fs::read(dir.path().join(f)).unwrap()));
    }
    assert_eq!(snapshots[0], snapshots[1]);
}
