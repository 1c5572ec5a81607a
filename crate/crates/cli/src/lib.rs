//! Command implementations behind the `lvwave` binary. Each command is a pure
//! function of its [`RunConfig`] and returns the process exit code.

mod config;

use std::fs;
use std::path::{Path, PathBuf};

use lvwave::analyze::{axis, classify, interior_box_implies_monotone, oscillation_coupling, scan_region};
use lvwave::certify::{certifiable_envelopes, certify_envelopes, Certificate, GridSpec};
use lvwave::model::{admissibility, critical_speed, Admissibility};
use lvwave::pulse::{plan_continuation, run_continuation};
use lvwave::solve::{iterate, OperatorConfig};
use lvwave::{Error, SystemParams};
use serde_json::{json, Value};

pub use config::{merge, Command, GridOptions, PulseOptions, RunConfig, ScanOptions};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_UNCONVERGED: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    /// Human-readable summary for stdout (or stderr on usage errors).
    pub message: String,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Outcome { code, message: message.into(), files: Vec::new() }
    }

    fn usage(message: impl Into<String>) -> Self {
        Outcome::new(EXIT_USAGE, message)
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams(_) | Error::InvalidConfig(_) => EXIT_USAGE,
        Error::EscapedEnvelope { .. } | Error::Unconverged => EXIT_UNCONVERGED,
        _ => EXIT_FAIL,
    }
}

pub fn run(cfg: &RunConfig) -> Outcome {
    if let Err(e) = cfg.params.validate() {
        return Outcome::usage(e.to_string());
    }
    let out = match cfg.command {
        Command::Speed => cmd_speed(cfg),
        Command::Certify => cmd_certify(cfg),
        Command::Solve => cmd_solve(cfg),
        Command::Scan => cmd_scan(cfg),
        Command::Pulse => cmd_pulse(cfg),
    };
    out.unwrap_or_else(|e| Outcome::usage(format!("cannot write output: {e}")))
}

fn write_json(path: &Path, value: &Value) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut text = serde_json::to_string_pretty(value).expect("json value serializes");
    text.push('\n');
    fs::write(path, text)
}

fn write_csv(path: &Path, cfg: &RunConfig, body: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, format!("# {}\n{body}", cfg.to_line()))
}

fn out_path(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn required_speed(cfg: &RunConfig) -> Result<f64, Outcome> {
    match cfg.speed {
        Some(s) if s.is_finite() => Ok(s),
        Some(s) => Err(Outcome::usage(format!("speed {s} is not finite"))),
        None => Err(Outcome::usage("--speed is required for this command")),
    }
}

/// Roots of `k r^2 - s r + m` as `[re, im]` pairs, smaller real part first.
fn quadratic_roots(k: f64, s: f64, m: f64) -> [[f64; 2]; 2] {
    let disc = s * s - 4.0 * k * m;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [[(s - r) / (2.0 * k), 0.0], [(s + r) / (2.0 * k), 0.0]]
    } else {
        let (re, im) = (s / (2.0 * k), (-disc).sqrt() / (2.0 * k));
        [[re, -im], [re, im]]
    }
}

pub fn cmd_speed(cfg: &RunConfig) -> std::io::Result<Outcome> {
    let s = match required_speed(cfg) {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let p = cfg.params;
    let star = critical_speed(p);
    let adm = admissibility(p, s);
    let (verdict, reason) = match adm {
        Admissibility::Admissible => ("admissible".to_string(), None),
        Admissibility::TooSlow { reason } => ("too slow".to_string(), Some(reason.to_string())),
    };
    let report = json!({
        "config": cfg,
        "critical_speed": star,
        "speed": s,
        "verdict": verdict,
        "reason": reason,
        "roots_u": quadratic_roots(1.0, s, 1.0),
        "roots_v": quadratic_roots(p.d, s, p.a),
    });
    let mut msg = format!("s* = {star}\ns = {s}: {verdict}");
    if let Some(r) = &reason {
        msg.push_str(&format!(" ({r})"));
    }
    let mut o = Outcome::new(if reason.is_none() { EXIT_PASS } else { EXIT_FAIL }, msg);
    if let Some(path) = &cfg.out {
        write_json(path, &report)?;
        o.files.push(path.clone());
    } else {
        o.message.push('\n');
        o.message.push_str(&serde_json::to_string_pretty(&report).expect("json value serializes"));
    }
    Ok(o)
}

fn certificate_grid(cfg: &RunConfig, base: GridSpec) -> GridSpec {
    let mut g = base;
    if let Some((l, r)) = cfg.grid.domain {
        g.left = l;
        g.right = r;
    }
    if let Some(n) = cfg.grid.n_points {
        g.n_points = n;
    }
    g
}

fn build_certificate(cfg: &RunConfig, s: f64) -> lvwave::Result<(lvwave::envelopes::EnvelopeSet, Certificate)> {
    let env = certifiable_envelopes(cfg.params, s, &cfg.knobs)?;
    let grid = certificate_grid(cfg, GridSpec::default_for(&env));
    let cert = certify_envelopes(&env, cfg.params, cfg.knobs.mode, grid);
    Ok((env, cert))
}

pub fn cmd_certify(cfg: &RunConfig) -> std::io::Result<Outcome> {
    let s = match required_speed(cfg) {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let path = out_path(cfg, "certificate.json");
    let (code, report, msg, residuals) = match build_certificate(cfg, s) {
        Ok((_, cert)) => {
            let code = if cert.passed() { EXIT_PASS } else { EXIT_FAIL };
            let msg = format!("certificate {:?}: min margins {:?}", cert.verdict, cert.min_margins);
            let csv = cert.inequality_margins.as_ref().map(|r| r.to_csv());
            (code, json!({ "config": cfg, "verdict": cert.verdict, "certificate": cert }), msg, csv)
        }
        Err(e) => {
            let code = exit_code(&e);
            if code == EXIT_USAGE {
                return Ok(Outcome::usage(e.to_string()));
            }
            (code, json!({ "config": cfg, "verdict": "fail", "error": e.to_string() }), format!("certificate fail: {e}"), None)
        }
    };
    let mut o = Outcome::new(code, msg);
    write_json(&path, &report)?;
    o.files.push(path.clone());
    if let (true, Some(csv)) = (cfg.residual_csv, residuals) {
        let p = path.with_extension("residuals.csv");
        write_csv(&p, cfg, &csv)?;
        o.files.push(p);
    }
    Ok(o)
}

fn solver_config(cfg: &RunConfig, base: OperatorConfig) -> OperatorConfig {
    let mut c = base;
    if let Some(d) = cfg.grid.domain {
        c.domain = d;
    }
    if let Some(n) = cfg.grid.n_points {
        c.n_points = n;
    }
    if let Some(t) = cfg.grid.tol {
        c.tol = t;
    }
    if let Some(m) = cfg.grid.max_iters {
        c.max_iters = m;
    }
    c
}

pub fn cmd_solve(cfg: &RunConfig) -> std::io::Result<Outcome> {
    let s = match required_speed(cfg) {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let p = cfg.params;
    let path = out_path(cfg, "profile.json");
    let csv_path = path.with_extension("csv");
    let fail = |code: i32, header: Value, msg: String| -> std::io::Result<Outcome> {
        write_json(&path, &header)?;
        let mut o = Outcome::new(code, msg);
        o.files.push(path.clone());
        Ok(o)
    };
    let (env, cert) = match build_certificate(cfg, s) {
        Ok(x) => x,
        Err(e) if exit_code(&e) == EXIT_USAGE => return Ok(Outcome::usage(e.to_string())),
        Err(e) => return fail(exit_code(&e), json!({ "config": cfg, "error": e.to_string() }), format!("solve failed: {e}")),
    };
    let cert_summary = json!({ "verdict": cert.verdict, "min_margins": cert.min_margins });
    if !cert.passed() {
        let header = json!({ "config": cfg, "certificate": cert_summary, "error": "envelopes failed certification" });
        return fail(EXIT_FAIL, header, "envelopes failed certification".into());
    }
    let op = solver_config(cfg, OperatorConfig::for_envelopes(&env, p, s));
    let (prof, report) = match iterate(&env, p, s, &op) {
        Ok(x) => x,
        Err(e) if exit_code(&e) == EXIT_USAGE => return Ok(Outcome::usage(e.to_string())),
        Err(e) => {
            let header = json!({ "config": cfg, "certificate": cert_summary, "solver": op, "error": e.to_string() });
            return fail(exit_code(&e), header, format!("solve failed: {e}"));
        }
    };
    let iteration = json!({
        "converged": report.converged,
        "iterations_used": report.iterations_used,
        "clip_events": report.clip_events,
        "max_violation": report.max_violation,
        "residual": prof.residual,
        "gap": prof.gap,
    });
    write_csv(&csv_path, cfg, &prof.to_csv())?;
    let csv_name = csv_path.file_name().map(|n| n.to_string_lossy().into_owned());
    if !prof.converged {
        let header = json!({ "config": cfg, "certificate": cert_summary, "solver": op, "iteration": iteration, "profile_csv": csv_name });
        let mut o = fail(EXIT_UNCONVERGED, header, format!("no convergence after {} iterations", report.iterations_used))?;
        o.files.push(csv_path);
        return Ok(o);
    }
    let shape = classify(&prof).expect("converged profile");
    let boxed = interior_box_implies_monotone(&prof, p).expect("converged profile");
    let coupling = oscillation_coupling(&prof).expect("converged profile");
    let tail = prof.tail_report.clone();
    let tail_pass = tail.as_ref().is_some_and(|t| t.pass);
    let header = json!({
        "config": cfg,
        "certificate": cert_summary,
        "solver": op,
        "iteration": iteration,
        "ode_residual": prof.ode_residual(p),
        "tail": tail,
        "shape": shape,
        "interior_box_check": boxed,
        "oscillation_check": coupling,
        "profile_csv": csv_name,
    });
    write_json(&path, &header)?;
    let code = if tail_pass && boxed.pass && coupling.pass { EXIT_PASS } else { EXIT_FAIL };
    let msg = format!(
        "converged in {} iterations, residual {:.3e}, shape {:?}, tail {}",
        report.iterations_used,
        prof.residual,
        shape.tag,
        if tail_pass { "pass" } else { "fail" }
    );
    let mut o = Outcome::new(code, msg);
    o.files.extend([path, csv_path]);
    Ok(o)
}

pub fn cmd_scan(cfg: &RunConfig) -> std::io::Result<Outcome> {
    let sc = &cfg.scan;
    let s_values = axis(sc.s_range.0, sc.s_range.1, sc.s_range.2);
    let values = axis(sc.axis_range.0, sc.axis_range.1, sc.axis_range.2);
    let scan = scan_region(cfg.params, &s_values, sc.axis, &values, sc.s_min, &cfg.knobs);
    let path = out_path(cfg, "scan.csv");
    let empty = scan.s_values.is_empty() || scan.axis_values.is_empty();
    let body = if empty { String::new() } else { scan.to_csv() };
    write_csv(&path, cfg, &body)?;
    let mut held = 0;
    for i in 0..scan.axis_values.len() {
        for j in 0..scan.s_values.len() {
            held += scan.holds(i, j) as usize;
        }
    }
    let msg = format!("{} x {} cells, condition holds in {held}", scan.axis_values.len(), scan.s_values.len());
    let mut o = Outcome::new(EXIT_PASS, msg);
    o.files.push(path);
    Ok(o)
}

pub fn cmd_pulse(cfg: &RunConfig) -> std::io::Result<Outcome> {
    let s = match required_speed(cfg) {
        Ok(s) => s,
        Err(o) => return Ok(o),
    };
    let dir = out_path(cfg, "pulse");
    let po = &cfg.pulse;
    let mut plan = match plan_continuation(cfg.params, s, po.target, po.n_steps) {
        Ok(p) => p,
        Err(e) if exit_code(&e) == EXIT_USAGE => return Ok(Outcome::usage(e.to_string())),
        Err(e) => {
            write_json(&dir.join("summary.json"), &json!({ "config": cfg, "error": e.to_string() }))?;
            return Ok(Outcome::new(exit_code(&e), format!("pulse failed: {e}")));
        }
    };
    plan.extrapolate = po.extrapolate;
    plan.refine_check = po.refine_check;
    plan.compare_cold = po.compare_cold;
    plan.solver = solver_config(cfg, plan.solver);
    let result = match run_continuation(&plan) {
        Ok(r) => r,
        Err(e) if exit_code(&e) == EXIT_USAGE => return Ok(Outcome::usage(e.to_string())),
        Err(e) => {
            write_json(&dir.join("summary.json"), &json!({ "config": cfg, "plan": plan, "error": e.to_string() }))?;
            return Ok(Outcome::new(exit_code(&e), format!("pulse failed: {e}")));
        }
    };
    let mut o = Outcome::new(EXIT_PASS, String::new());
    fs::create_dir_all(&dir)?;
    for (k, step) in result.steps.iter().enumerate() {
        if let Some(prof) = &step.profile {
            let p = dir.join(format!("step_{k:02}.csv"));
            write_csv(&p, cfg, &prof.to_csv())?;
            o.files.push(p);
        }
    }
    if let Some(lim) = &result.limit_profile {
        let p = dir.join("limit.csv");
        write_csv(&p, cfg, &lim.to_csv())?;
        o.files.push(p);
    }
    let summary = dir.join("summary.json");
    write_json(&summary, &json!({ "config": cfg, "plan": plan, "result": result }))?;
    o.files.push(summary);
    o.code = if result.failure_index.is_some() {
        EXIT_UNCONVERGED
    } else if result.pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    };
    o.message = format!(
        "{} steps, floor {}, degenerate residual {:?}, refined {:?}, {}",
        result.steps.len(),
        if result.floor_ok { "kept" } else { "lost" },
        result.degenerate_residual,
        result.refined_residual,
        if result.pass { "pass" } else { "fail" }
    );
    Ok(o)
}

/// Parses `a,b,c,d`.
pub fn parse_params(text: &str) -> Result<SystemParams, String> {
    let xs = parse_list(text)?;
    if xs.len() != 4 {
        return Err(format!("expected four values a,b,c,d, got {}", xs.len()));
    }
    SystemParams::new(xs[0], xs[1], xs[2], xs[3]).map_err(|e| e.to_string())
}

pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect()
}
