use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use lvwave::envelopes::Mode;
use lvwave_cli::{merge, parse_list, parse_params, run, Command, RunConfig, EXIT_USAGE};
use serde_json::{json, Map, Value};

/// Traveling waves of the weak-competition Lotka-Volterra system.
///
/// Exit codes: 0 pass, 1 usage, 2 criterion failed, 3 no convergence.
#[derive(Debug, Parser)]
#[command(name = "lvwave", version)]
struct Cli {
    /// speed, certify, solve, scan or pulse
    command: Command,
    /// Coefficients a,b,c,d
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    speed: Option<f64>,
    /// default, nonmonotone-u or nonmonotone-v
    #[arg(long)]
    mode: Option<String>,
    /// Number of grid points
    #[arg(long)]
    grid: Option<usize>,
    /// Window l,r
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Output file (directory for pulse)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file whose entries override the flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Continuation target for pulse: c_to_1_over_a or b_to_a
    #[arg(long)]
    target: Option<String>,
    /// Continuation steps for pulse
    #[arg(long)]
    steps: Option<usize>,
    /// Scan axis: gap or c
    #[arg(long)]
    axis: Option<String>,
    /// Scan speeds lo,hi,n
    #[arg(long)]
    s_range: Option<String>,
    /// Scan axis values lo,hi,n
    #[arg(long, allow_hyphen_values = true)]
    axis_range: Option<String>,
    /// Lower speed bound for scan
    #[arg(long)]
    s_min: Option<f64>,
    /// Write the residual table next to a certificate
    #[arg(long)]
    residual_csv: bool,
}

fn triple(text: &str) -> Result<Value, String> {
    let x = parse_list(text)?;
    if x.len() != 3 || x[2] < 0.0 || x[2].fract() != 0.0 {
        return Err(format!("expected lo,hi,n, got {text:?}"));
    }
    Ok(json!([x[0], x[1], x[2] as usize]))
}

fn flags_to_json(cli: &Cli) -> Result<Value, String> {
    let mut v = Map::new();
    v.insert("command".into(), serde_json::to_value(cli.command).unwrap());
    if let Some(p) = &cli.params {
        v.insert("params".into(), serde_json::to_value(parse_params(p)?).unwrap());
    }
    if let Some(s) = cli.speed {
        v.insert("speed".into(), json!(s));
    }
    if let Some(m) = &cli.mode {
        let mode: Mode = m.parse().map_err(|e: lvwave::Error| e.to_string())?;
        v.insert("knobs".into(), json!({ "mode": mode }));
    }
    let mut grid = Map::new();
    if let Some(n) = cli.grid {
        grid.insert("n_points".into(), json!(n));
    }
    if let Some(d) = &cli.domain {
        let d = parse_list(d)?;
        if d.len() != 2 {
            return Err("expected --domain l,r".into());
        }
        grid.insert("domain".into(), json!([d[0], d[1]]));
    }
    v.insert("grid".into(), Value::Object(grid));
    let mut scan = Map::new();
    if let Some(a) = &cli.axis {
        scan.insert("axis".into(), json!(a));
    }
    if let Some(r) = &cli.s_range {
        scan.insert("s_range".into(), triple(r)?);
    }
    if let Some(r) = &cli.axis_range {
        scan.insert("axis_range".into(), triple(r)?);
    }
    if let Some(s) = cli.s_min {
        scan.insert("s_min".into(), json!(s));
    }
    v.insert("scan".into(), Value::Object(scan));
    let mut pulse = Map::new();
    if let Some(t) = &cli.target {
        pulse.insert("target".into(), json!(t));
    }
    if let Some(n) = cli.steps {
        pulse.insert("n_steps".into(), json!(n));
    }
    v.insert("pulse".into(), Value::Object(pulse));
    v.insert("residual_csv".into(), json!(cli.residual_csv));
    if let Some(o) = &cli.out {
        v.insert("out".into(), json!(o));
    }
    Ok(Value::Object(v))
}

fn load(cli: &Cli) -> Result<RunConfig, String> {
    let mut v = flags_to_json(cli)?;
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let file: Value = serde_json::from_str(&text).map_err(|e| format!("malformed config: {e}"))?;
        merge(&mut v, &file);
    }
    if v.get("params").is_none() {
        return Err("--params (or a params entry in the config file) is required".into());
    }
    serde_json::from_value(v).map_err(|e| format!("malformed config: {e}"))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    let cfg = match load(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    let outcome = run(&cfg);
    if outcome.code == EXIT_USAGE {
        eprintln!("error: {}", outcome.message);
    } else {
        println!("{}", outcome.message);
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }
    ExitCode::from(outcome.code as u8)
}
