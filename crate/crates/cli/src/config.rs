use std::path::PathBuf;

use lvwave::analyze::ScanAxis;
use lvwave::envelopes::SelectionKnobs;
use lvwave::pulse::ContinuationTarget;
use lvwave::SystemParams;
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Speed,
    Certify,
    Solve,
    Scan,
    Pulse,
}

impl std::str::FromStr for Command {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        serde_json::from_value(Value::String(s.to_string())).map_err(|_| format!("unknown command {s:?}"))
    }
}

/// Overrides of the automatic solver and certificate grids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridOptions {
    pub n_points: Option<usize>,
    pub domain: Option<(f64, f64)>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanOptions {
    pub axis: ScanAxis,
    /// `(lo, hi, n)` for the speeds.
    pub s_range: (f64, f64, usize),
    /// `(lo, hi, n)` for `a - b` or `c`.
    pub axis_range: (f64, f64, usize),
    pub s_min: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { axis: ScanAxis::Gap, s_range: (2.1, 6.0, 40), axis_range: (0.005, 0.25, 50), s_min: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseOptions {
    pub target: ContinuationTarget,
    pub n_steps: usize,
    pub extrapolate: bool,
    pub refine_check: bool,
    pub compare_cold: bool,
}

impl Default for PulseOptions {
    fn default() -> Self {
        PulseOptions { target: ContinuationTarget::CToInverseA, n_steps: 8, extrapolate: true, refine_check: true, compare_cold: false }
    }
}

/// Everything a run depends on. Every output file embeds it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub params: SystemParams,
    #[serde(default)]
    pub speed: Option<f64>,
    #[serde(default)]
    pub knobs: SelectionKnobs,
    #[serde(default)]
    pub grid: GridOptions,
    #[serde(default)]
    pub scan: ScanOptions,
    #[serde(default)]
    pub pulse: PulseOptions,
    /// Also write the residual table next to a certificate.
    #[serde(default)]
    pub residual_csv: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, params: SystemParams) -> Self {
        RunConfig {
            command,
            params,
            speed: None,
            knobs: SelectionKnobs::default(),
            grid: GridOptions::default(),
            scan: ScanOptions::default(),
            pulse: PulseOptions::default(),
            residual_csv: false,
            out: None,
        }
    }

    /// Applies `overrides` on top of `self`: objects merge key by key, any
    /// other value replaces.
    pub fn merged(&self, overrides: &Value) -> Result<RunConfig, String> {
        let mut base = serde_json::to_value(self).map_err(|e| e.to_string())?;
        merge(&mut base, overrides);
        serde_json::from_value(base).map_err(|e| format!("malformed config: {e}"))
    }

    /// Single-line JSON used in CSV headers.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

pub fn merge(base: &mut Value, over: &Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                match b.get_mut(k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k.clone(), v.clone());
                    }
                }
            }
        }
        (slot, v) => *slot = v.clone(),
    }
}
