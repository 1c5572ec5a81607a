//! Browser bindings. Each exported function takes plain numbers and returns
//! a JSON string; the `*_json` functions are the native-testable bodies.

use lvwave::analyze::{axis, classify, scan_region, ScanAxis};
use lvwave::certify::certify_with;
use lvwave::envelopes::{envelopes_for, Mode, SelectionKnobs};
use lvwave::model::{coexistence, critical_speed};
use lvwave::solve::{iterate, OperatorConfig};
use lvwave::SystemParams;
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Upper bound on the number of samples sent back to the page.
const MAX_SAMPLES: usize = 1500;

#[derive(Serialize)]
struct EnvelopeView {
    critical_speed: f64,
    coexistence: (f64, f64),
    xi: Vec<f64>,
    u_upper: Vec<f64>,
    u_lower: Vec<f64>,
    v_upper: Vec<f64>,
    v_lower: Vec<f64>,
    lower_max: (f64, f64),
    certificate: &'static str,
    min_margins: [f64; 4],
}

#[derive(Serialize)]
struct ProfileView {
    xi: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
    coexistence: (f64, f64),
    converged: bool,
    iterations: usize,
    residual: f64,
    shape: String,
    tail_pass: bool,
}

#[derive(Serialize)]
struct ScanView {
    s: Vec<f64>,
    axis: Vec<f64>,
    /// Row-major over `axis`: 1 holds, 0 fails, -1 outside the regime.
    cells: Vec<Vec<i8>>,
}

fn params(a: f64, b: f64, c: f64, d: f64) -> Result<SystemParams, String> {
    SystemParams::new(a, b, c, d).map_err(|e| e.to_string())
}

fn mode(name: &str) -> Result<Mode, String> {
    name.parse().map_err(|e: lvwave::Error| e.to_string())
}

fn to_json<T: Serialize>(x: &T) -> String {
    serde_json::to_string(x).expect("view serializes")
}

fn thin(n: usize) -> usize {
    n.div_ceil(MAX_SAMPLES).max(1)
}

pub fn envelopes_json(a: f64, b: f64, c: f64, d: f64, s: f64, mode_name: &str) -> Result<String, String> {
    let p = params(a, b, c, d)?;
    let knobs = SelectionKnobs::with_mode(mode(mode_name)?);
    let env = envelopes_for(p, s, &knobs).map_err(|e| e.to_string())?;
    let cert = certify_with(p, s, &knobs).map_err(|e| e.to_string())?;
    let xi = env.sample(600);
    let col = |k: usize| xi.iter().map(|&x| env.values(x)[k]).collect::<Vec<_>>();
    let view = EnvelopeView {
        critical_speed: critical_speed(p),
        coexistence: coexistence(p),
        u_upper: col(0),
        u_lower: col(1),
        v_upper: col(2),
        v_lower: col(3),
        xi,
        lower_max: env.lower_max,
        certificate: if cert.passed() { "pass" } else { "fail" },
        min_margins: cert.min_margins,
    };
    Ok(to_json(&view))
}

pub fn solve_json(a: f64, b: f64, c: f64, d: f64, s: f64, mode_name: &str) -> Result<String, String> {
    let p = params(a, b, c, d)?;
    let env = envelopes_for(p, s, &SelectionKnobs::with_mode(mode(mode_name)?)).map_err(|e| e.to_string())?;
    let cfg = OperatorConfig::for_envelopes(&env, p, s);
    let (prof, rep) = iterate(&env, p, s, &cfg).map_err(|e| e.to_string())?;
    let shape = if prof.converged { format!("{:?}", classify(&prof).map_err(|e| e.to_string())?.tag) } else { "unconverged".into() };
    let step = thin(prof.len());
    let pick = |w: &[f64]| w.iter().step_by(step).copied().collect::<Vec<_>>();
    let view = ProfileView {
        xi: pick(&prof.grid),
        u: pick(&prof.u),
        v: pick(&prof.v),
        coexistence: coexistence(p),
        converged: prof.converged,
        iterations: rep.iterations_used,
        residual: prof.residual,
        shape,
        tail_pass: prof.tail_report.as_ref().is_some_and(|t| t.pass),
    };
    Ok(to_json(&view))
}

#[allow(clippy::too_many_arguments)]
pub fn scan_json(a: f64, b: f64, c: f64, d: f64, on_c: bool, s_lo: f64, s_hi: f64, s_n: usize, lo: f64, hi: f64, n: usize) -> Result<String, String> {
    let base = params(a, b, c, d)?;
    let (ax, m) = if on_c { (ScanAxis::C, Mode::NonMonotoneU) } else { (ScanAxis::Gap, Mode::NonMonotoneV) };
    let scan = scan_region(base, &axis(s_lo, s_hi, s_n.min(200)), ax, &axis(lo, hi, n.min(200)), 0.0, &SelectionKnobs::with_mode(m));
    let cells = (0..scan.axis_values.len())
        .map(|i| (0..scan.s_values.len()).map(|j| if !scan.cells[i][j].valid { -1 } else { scan.holds(i, j) as i8 }).collect())
        .collect();
    Ok(to_json(&ScanView { s: scan.s_values, axis: scan.axis_values, cells }))
}

/// Envelopes and certificate verdict.
#[wasm_bindgen]
pub fn envelopes(a: f64, b: f64, c: f64, d: f64, s: f64, mode: &str) -> Result<String, JsError> {
    envelopes_json(a, b, c, d, s, mode).map_err(|e| JsError::new(&e))
}

/// Fixed-point profile between the envelopes.
#[wasm_bindgen]
pub fn solve(a: f64, b: f64, c: f64, d: f64, s: f64, mode: &str) -> Result<String, JsError> {
    solve_json(a, b, c, d, s, mode).map_err(|e| JsError::new(&e))
}

/// Region where the lower envelope rises above the coexistence state.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn scan(a: f64, b: f64, c: f64, d: f64, on_c: bool, s_lo: f64, s_hi: f64, s_n: usize, lo: f64, hi: f64, n: usize) -> Result<String, JsError> {
    scan_json(a, b, c, d, on_c, s_lo, s_hi, s_n, lo, hi, n).map_err(|e| JsError::new(&e))
}
