use std::fs;
use std::process::Command as Process;

use lvwave::envelopes::Mode;
use lvwave::SystemParams;
use lvwave_cli::*;
use serde_json::Value;

fn p(a: f64, b: f64, c: f64, d: f64) -> SystemParams {
    SystemParams::new(a, b, c, d).unwrap()
}

fn config(cmd: Command, params: SystemParams, s: f64) -> RunConfig {
    RunConfig { speed: Some(s), ..RunConfig::new(cmd, params) }
}

fn read_json(path: &std::path::Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn ripple_case(cmd: Command) -> RunConfig {
    let mut c = config(cmd, p(1.0, 25.0 / 26.0, 0.5, 1.0), 4.5);
    c.knobs.mode = Mode::NonMonotoneV;
    c.knobs.mu2 = Some(1.0 + 1.0 / 1.1);
    c.knobs.q2 = Some(2.6);
    c
}

#[test]
fn speed_verdicts() {
    let slow = run(&config(Command::Speed, p(1.0, 0.5, 0.5, 1.0), 1.9));
    assert_eq!(slow.code, EXIT_FAIL);
    assert!(slow.message.contains("complex linearization roots"));
    let ok = run(&config(Command::Speed, p(1.0, 0.5, 0.5, 1.0), 2.0));
    assert_eq!(ok.code, EXIT_PASS);
    assert!(ok.message.starts_with("s* = 2\n"));
    let fast_v = run(&config(Command::Speed, p(4.0, 0.5, 0.2, 1.0), 3.0));
    assert_eq!(fast_v.code, EXIT_FAIL);
    assert!(fast_v.message.starts_with("s* = 4\n"));
}

#[test]
fn speed_report_roots() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Command::Speed, p(1.0, 0.5, 0.5, 1.0), 2.5);
    c.out = Some(dir.path().join("speed.json"));
    assert_eq!(run(&c).code, EXIT_PASS);
    let r = read_json(&dir.path().join("speed.json"));
    assert_eq!(r["roots_u"][0][0], 0.5);
    assert_eq!(r["roots_u"][1][0], 2.0);
    assert_eq!(r["config"]["speed"], 2.5);
}

#[test]
fn missing_speed_is_a_usage_error() {
    let c = RunConfig::new(Command::Certify, p(1.0, 0.5, 0.5, 1.0));
    assert_eq!(run(&c).code, EXIT_USAGE);
    let bad = RunConfig { params: SystemParams { a: -1.0, b: 0.5, c: 0.5, d: 1.0 }, ..config(Command::Speed, p(1.0, 0.5, 0.5, 1.0), 2.0) };
    assert_eq!(run(&bad).code, EXIT_USAGE);
}

#[test]
fn certificate_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ripple_case(Command::Certify);
    c.out = Some(dir.path().join("ripple_case.json"));
    c.residual_csv = true;
    assert_eq!(run(&c).code, EXIT_PASS);
    let cert = read_json(&dir.path().join("ripple_case.json"));
    assert_eq!(cert["verdict"], "pass");
    assert_eq!(cert["config"]["knobs"]["q2"], 2.6);
    let csv = fs::read_to_string(dir.path().join("ripple_case.residuals.csv")).unwrap();
    assert!(csv.starts_with("# {\"command\":\"certify\""));
    assert_eq!(csv.lines().nth(1), Some("xi,u_upper,u_lower,v_upper,v_lower"));
}

#[test]
fn tampered_constant_writes_a_fail_file() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ripple_case(Command::Certify);
    c.knobs.q2 = Some(0.5);
    c.out = Some(dir.path().join("bad.json"));
    assert_eq!(run(&c).code, EXIT_FAIL);
    let cert = read_json(&dir.path().join("bad.json"));
    assert_eq!(cert["verdict"], "fail");
    assert!(cert["error"].as_str().unwrap().contains("no interior zero"));

    c.knobs.q2 = Some(1.05);
    assert_eq!(run(&c).code, EXIT_FAIL);
    assert_eq!(read_json(&dir.path().join("bad.json"))["verdict"], "fail");
}

#[test]
fn critical_and_subcritical_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Command::Certify, p(1.0, 0.5, 0.5, 1.0), 2.0);
    c.out = Some(dir.path().join("crit.json"));
    assert_eq!(run(&c).code, EXIT_PASS);
    c.speed = Some(1.5);
    assert_eq!(run(&c).code, EXIT_FAIL);
}

#[test]
fn partial_outputs_without_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Command::Solve, p(1.0, 0.5, 0.5, 1.0), 4.5);
    c.grid.max_iters = Some(3);
    c.out = Some(dir.path().join("prof.json"));
    let o = run(&c);
    assert_eq!(o.code, EXIT_UNCONVERGED);
    let h = read_json(&dir.path().join("prof.json"));
    assert_eq!(h["iteration"]["converged"], false);
    assert_eq!(h["iteration"]["iterations_used"], 3);
    let csv = fs::read_to_string(dir.path().join("prof.csv")).unwrap();
    assert_eq!(csv.lines().nth(1), Some("xi,u,v"));
}

#[test]
fn solve_writes_header_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Command::Solve, p(1.0, 0.5, 0.5, 1.0), 4.5);
    c.out = Some(dir.path().join("front.json"));
    let o = run(&c);
    assert_eq!(o.code, EXIT_PASS, "{}", o.message);
    let h = read_json(&dir.path().join("front.json"));
    assert_eq!(h["iteration"]["converged"], true);
    assert_eq!(h["iteration"]["clip_events"], 0);
    assert_eq!(h["tail"]["pass"], true);
    assert_eq!(h["shape"]["tag"], "MonotoneBoth");
    assert_eq!(h["profile_csv"], "front.csv");
    let n = h["solver"]["n_points"].as_u64().unwrap() as usize;
    let csv = fs::read_to_string(dir.path().join("front.csv")).unwrap();
    assert_eq!(csv.lines().count(), n + 2);
}

#[test]
fn scan_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = ripple_case(Command::Scan);
    c.scan = ScanOptions { s_range: (2.1, 6.0, 5), axis_range: (0.01, 0.2, 4), s_min: 2.1, ..ScanOptions::default() };
    c.out = Some(dir.path().join("scan.csv"));
    assert_eq!(run(&c).code, EXIT_PASS);
    let text = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("gap\\s,2.1,"));
    assert_eq!(lines[2], "0.01,1,1,1,1,1");

    c.scan.s_range = (1.0, 1.9, 4);
    assert_eq!(run(&c).code, EXIT_PASS);
    let text = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("# "));
}

#[test]
fn single_step_pulse() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Command::Pulse, p(1.0, 0.5, 0.5, 1.0), 2.5);
    c.pulse.n_steps = 1;
    c.pulse.refine_check = false;
    c.out = Some(dir.path().join("pulse"));
    let o = run(&c);
    // One step far from the limit: a front, not a pulse, so the tail verdict fails.
    assert_eq!(o.code, EXIT_FAIL, "{}", o.message);
    let s = read_json(&dir.path().join("pulse/summary.json"));
    assert_eq!(s["result"]["steps"].as_array().unwrap().len(), 1);
    assert_eq!(s["result"]["floor_ok"], true);
    assert!(dir.path().join("pulse/step_00.csv").exists());
    assert!(dir.path().join("pulse/limit.csv").exists());
}

#[test]
fn unreachable_pulse_target() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(Command::Pulse, p(1.0, 0.5, 1.0, 1.0), 2.5);
    c.out = Some(dir.path().join("pulse"));
    assert_eq!(run(&c).code, EXIT_FAIL);
    assert!(read_json(&dir.path().join("pulse/summary.json"))["error"].as_str().unwrap().contains("not reachable"));
}

#[test]
fn merge_overrides_nested_entries() {
    let base = config(Command::Certify, p(1.0, 0.5, 0.5, 1.0), 3.0);
    let over = serde_json::json!({ "speed": 4.0, "knobs": { "q2": 3.0 }, "params": { "b": 0.25 } });
    let m = base.merged(&over).unwrap();
    assert_eq!(m.speed, Some(4.0));
    assert_eq!(m.knobs.q2, Some(3.0));
    assert_eq!(m.knobs.q_safety, base.knobs.q_safety);
    assert_eq!(m.params, p(1.0, 0.25, 0.5, 1.0));
    assert!(base.merged(&serde_json::json!({ "bogus": 1 })).is_err());
}

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_lvwave"))
}

#[test]
fn binary_exit_codes() {
    let code = |args: &[&str]| bin().args(args).output().unwrap().status.code().unwrap();
    assert_eq!(code(&["speed", "--params", "1,0.5,0.5,1", "--speed", "1.9"]), 2);
    assert_eq!(code(&["speed", "--params", "1,0.5,0.5,1", "--speed", "2"]), 0);
    assert_eq!(code(&["speed", "--params", "1,0.5", "--speed", "2"]), 1);
    assert_eq!(code(&["speed", "--speed", "2"]), 1);
    assert_eq!(code(&["launch"]), 1);
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"speed": 1.9, "out": null}"#).unwrap();
    let out = bin().args(["speed", "--params", "1,0.5,0.5,1", "--speed", "3", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    fs::write(&cfg, "{ not json").unwrap();
    let out = bin().args(["speed", "--params", "1,0.5,0.5,1", "--speed", "3", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("malformed config"));
}

#[test]
fn flags_reach_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let status = bin()
        .args(["certify", "--params", "1,0.5,0.5,1", "--speed", "3", "--mode", "nonmonotone-u", "--grid", "2001", "--domain", "-60,20", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let c = read_json(&out);
    assert_eq!(c["config"]["knobs"]["mode"], "nonmonotone-u");
    assert_eq!(c["certificate"]["grid"]["n_points"], 2001);
    assert_eq!(c["certificate"]["grid"]["left"], -60.0);
}
