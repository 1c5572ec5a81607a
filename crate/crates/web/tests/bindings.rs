use lvwave_web::{envelopes_json, scan_json, solve_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn envelope_view() {
    let v = parse(envelopes_json(1.0, 0.5, 0.5, 1.0, 4.5, "default").unwrap());
    assert_eq!(v["certificate"], "pass");
    assert_eq!(v["critical_speed"], 2.0);
    let n = v["xi"].as_array().unwrap().len();
    for k in ["u_upper", "u_lower", "v_upper", "v_lower"] {
        assert_eq!(v[k].as_array().unwrap().len(), n);
    }
    let uu = v["u_upper"].as_array().unwrap();
    assert_eq!(uu[n - 1], 1.0);
}

#[test]
fn bad_input_is_reported() {
    assert!(envelopes_json(1.0, 0.5, 0.5, 1.0, 1.0, "default").unwrap_err().contains("subcritical"));
    assert!(envelopes_json(1.0, 0.5, 0.5, 1.0, 3.0, "sideways").unwrap_err().contains("unknown mode"));
    assert!(solve_json(-1.0, 0.5, 0.5, 1.0, 3.0, "default").is_err());
}

#[test]
fn profile_view() {
    let v = parse(solve_json(1.0, 0.5, 0.5, 1.0, 4.5, "default").unwrap());
    assert_eq!(v["converged"], true);
    assert_eq!(v["shape"], "MonotoneBoth");
    assert_eq!(v["tail_pass"], true);
    let n = v["xi"].as_array().unwrap().len();
    assert!(n <= 1500 && n == v["u"].as_array().unwrap().len());
}

#[test]
fn scan_view() {
    let v = parse(scan_json(1.0, 25.0 / 26.0, 0.5, 1.0, false, 3.0, 6.0, 5, 0.005, 0.6, 4).unwrap());
    let cells = v["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    // The smallest gap holds at every speed; at a - b = 0.6 v* is above the envelope maximum.
    assert!(cells[0].as_array().unwrap().iter().all(|c| c == 1));
    assert!(cells[3].as_array().unwrap().iter().all(|c| c == 0));
}
