use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use almost_safe::domain::{CoveringGrid, Delta, SafeSetDump, State, StateBounds};

const BIN: &str = env!("CARGO_BIN_EXE_almost-safe");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const IDM_H: &str = r#"
seeds = [0]
output_dir = "out"
epsilon = 0.1
beta = 0.001
delta = [10.0, 6.0, 6.0]

[policy]
kind = "constant_decel"
accel = -5.0

[model]
name = "idm_h"
"#;

#[test]
fn quantify_writes_reproducible_dump_and_log() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "h.toml", IDM_H);
    let o = run(
        dir.path(),
        &["quantify", "--config", "h.toml", "--out", "a"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let a = fs::read(dir.path().join("a/idm_h_seed0.json")).unwrap();
    let o = run(
        dir.path(),
        &["quantify", "--config", "h.toml", "--out", "a"],
    );
    assert_eq!(code(&o), 0);
    let b = fs::read(dir.path().join("a/idm_h_seed0.json")).unwrap();
    assert_eq!(a, b);

    let dump = SafeSetDump::load(&dir.path().join("a/idm_h_seed0.json")).unwrap();
    assert_eq!(dump.seed, Some(0));
    assert_eq!(dump.config["model"]["name"], "idm_h");
    assert!(dump.tool_version.starts_with("almost-safe"));

    let log = fs::read_to_string(dir.path().join("a/idm_h_seed0_runs.csv")).unwrap();
    let mut lines = log.lines();
    assert!(lines.next().unwrap().starts_with("# almost-safe"));
    assert!(lines.next().unwrap().starts_with("# config: {"));
    assert!(lines.next().unwrap().starts_with("run,s0_d,s0_v0,s0_v1,"));
}

#[test]
fn several_seeds_give_several_dumps() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "h.toml", IDM_H);
    let o = run(
        dir.path(),
        &[
            "quantify", "--config", "h.toml", "--seed", "3", "--seed", "4", "--seed", "5",
        ],
    );
    assert_eq!(code(&o), 0);
    for seed in [3, 4, 5] {
        let d = SafeSetDump::load(&dir.path().join(format!("out/idm_h_seed{seed}.json"))).unwrap();
        assert_eq!(d.seed, Some(seed));
    }
}

#[test]
fn trace_flag_writes_run_traces() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "h.toml", IDM_H);
    let o = run(dir.path(), &["quantify", "--config", "h.toml", "--trace"]);
    assert_eq!(code(&o), 0);
    let traces = dir.path().join("out/idm_h_seed0_traces");
    let first = fs::read_to_string(traces.join("run00000.csv")).unwrap();
    assert!(first.starts_with("t,d,v0,v1,a_sv,a_pov\n"));
    let dump = SafeSetDump::load(&dir.path().join("out/idm_h_seed0.json")).unwrap();
    let n = fs::read_dir(&traces).unwrap().count();
    assert_eq!(n, dump.stats.unwrap().total_runs);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "eps.toml",
        &IDM_H.replace("epsilon = 0.1", "epsilon = 0.0"),
    );
    let o = run(dir.path(), &["quantify", "--config", "eps.toml"]);
    assert_eq!(code(&o), 2);
    write_config(dir.path(), "key.toml", &format!("{IDM_H}\nsurprise = 1\n"));
    assert_eq!(
        code(&run(dir.path(), &["quantify", "--config", "key.toml"])),
        2
    );
    assert_eq!(code(&run(dir.path(), &["quantify"])), 2);
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["quantify", "--config", "nope.toml"]);
    assert_eq!(code(&o), 4);
}

fn stationary_config(brake: f64, collision_headway: f64) -> String {
    format!(
        r#"
seeds = [1]
epsilon = 0.01
beta = 0.001
delta = [10.0, 6.0, 6.0]

[sim]
collision_headway = {collision_headway}

[policy]
kind = "stationary"

[model]
name = "perfect_brake"
brake = {brake}
"#
    )
}

fn save_grid(grid: &CoveringGrid, path: &Path) {
    SafeSetDump::from_grid(grid, None, serde_json::Value::Null)
        .save(path)
        .unwrap();
}

fn full_grid() -> CoveringGrid {
    CoveringGrid::new(
        StateBounds::car_following(100.0, 30.0).unwrap(),
        Delta([10.0, 6.0, 6.0]),
    )
    .unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // at ε = 0.01 every colliding lattice cell is found
    write_config(
        dir.path(),
        "h.toml",
        &IDM_H.replace("epsilon = 0.1", "epsilon = 0.01"),
    );
    assert_eq!(
        code(&run(dir.path(), &["quantify", "--config", "h.toml"])),
        0
    );
    let o = run(
        dir.path(),
        &["validate", "--config", "h.toml", "out/idm_h_seed0.json"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));

    // one cell whose centroid can never stop in time
    let mut g = full_grid();
    let keep = g.cell_of(&State::new(10.0, 30.0, 6.0)).unwrap();
    let others: Vec<_> = g
        .iter()
        .map(|(id, _)| id)
        .filter(|id| *id != keep)
        .collect();
    for id in others {
        g.remove(id);
    }
    save_grid(&g, &dir.path().join("doomed.json"));
    write_config(dir.path(), "brake3.toml", &stationary_config(3.0, 0.0));
    let o = run(
        dir.path(),
        &["validate", "--config", "brake3.toml", "doomed.json"],
    );
    assert_eq!(code(&o), 3);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["report"]["passed"], false);
    assert_eq!(report["report"]["first_violation"]["run"], 0);
    assert!(report["report"]["first_violation"]["state"].is_array());

    // lowest headway cells reach into a widened failure set
    save_grid(&full_grid(), &dir.path().join("full.json"));
    write_config(dir.path(), "wide.toml", &stationary_config(10.0, 2.0));
    let o = run(
        dir.path(),
        &["validate", "--config", "wide.toml", "full.json"],
    );
    assert_eq!(code(&o), 3);
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(
        report["report"]["first_violation"]["cause"],
        "failure_set_overlap"
    );
}

#[test]
fn validate_rejects_mismatched_dump() {
    let dir = tempfile::tempdir().unwrap();
    let fine = CoveringGrid::new(
        StateBounds::car_following(100.0, 30.0).unwrap(),
        Delta([10.0, 2.0, 2.0]),
    )
    .unwrap();
    save_grid(&fine, &dir.path().join("fine.json"));
    write_config(dir.path(), "h.toml", IDM_H);
    let o = run(dir.path(), &["validate", "--config", "h.toml", "fine.json"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn ncap_repeats_are_identical_for_deterministic_models() {
    let dir = tempfile::tempdir().unwrap();
    write_config(
        dir.path(),
        "n.toml",
        &format!("{}\n[ncap]\nrepeats = 2\n", IDM_H.replace("idm_h", "idm_n")),
    );
    let o = run(dir.path(), &["ncap", "--config", "n.toml"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("out/ncap_idm_n.csv")).unwrap();
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .collect();
    assert_eq!(rows.len(), 96);
    for pair in rows.chunks(2) {
        let strip = |r: &str| {
            let mut f: Vec<_> = r.split(',').collect();
            f.remove(6);
            f.join(",")
        };
        assert_eq!(strip(pair[0]), strip(pair[1]));
    }
}

#[test]
fn report_summarizes_globbed_dumps() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path(), "h.toml", IDM_H);
    assert_eq!(
        code(&run(dir.path(), &["quantify", "--config", "h.toml"])),
        0
    );
    let o = run(
        dir.path(),
        &["report", "out/*.json", "--out", "rep", "--slice", "90"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let mut lines = stdout.lines();
    assert_eq!(
        lines.next(),
        Some("SV,S_0,epsilon,scenario_runs,collision_runs,IoU")
    );
    let row = lines.next().unwrap();
    assert!(row.starts_with("idm_h,full,0.1,"), "{row}");
    assert!(row.contains("± 0.0"), "{row}");
    assert!(row.ends_with(",1.000"), "{row}");
    assert!(dir.path().join("rep/summary.csv").exists());
    assert!(dir.path().join("rep/idm_h_seed0_slice_d90.csv").exists());

    assert_eq!(code(&run(dir.path(), &["report", "nothing/*.json"])), 2);
}
