use lvwave::analyze::ExtremumKind;
use lvwave::numeric::linspace;
use lvwave::pulse::*;
use lvwave::solve::Profile;
use lvwave::{Error, SystemParams};

fn p(a: f64, b: f64, c: f64, d: f64) -> SystemParams {
    SystemParams::new(a, b, c, d).unwrap()
}

fn synthetic(q: SystemParams, grid: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Profile {
    Profile {
        grid,
        u,
        v,
        speed: 2.5,
        params: q,
        beta: 1.0,
        residual: 0.0,
        gap: 0.0,
        converged: true,
        tol: 1e-9,
        left_bound: None,
        tail_report: None,
    }
}

#[test]
fn geometric_schedule() {
    let plan = plan_continuation(p(1.0, 0.5, 0.8, 1.0), 2.5, ContinuationTarget::CToInverseA, 4).unwrap();
    let want = [0.8, 0.9, 0.95, 0.975];
    assert_eq!(plan.steps.len(), 4);
    for (x, w) in plan.steps.iter().zip(want) {
        assert!((x - w).abs() < 1e-15);
    }
    assert!((plan.limit_gap() - 0.025).abs() < 1e-15);
    assert!(!plan.extrapolate && !plan.refine_check && !plan.compare_cold);
}

#[test]
fn mirrored_schedule_for_b() {
    let base = p(2.0, 1.0, 0.2, 1.0);
    let plan = plan_continuation(base, 3.0, ContinuationTarget::BToA, 3).unwrap();
    assert_eq!(plan.limit, 2.0);
    assert_eq!(plan.steps, vec![1.0, 1.5, 1.75]);
    assert_eq!(ContinuationTarget::BToA.degenerate(base).b, 2.0);
    assert_eq!(ContinuationTarget::CToInverseA.degenerate(base).c, 0.5);
}

#[test]
fn single_step_plan() {
    let plan = plan_continuation(p(1.0, 0.5, 0.5, 1.0), 2.5, ContinuationTarget::CToInverseA, 1).unwrap();
    assert_eq!(plan.steps, vec![0.5]);
    assert_eq!(plan.limit_gap(), 0.5);
}

#[test]
fn plan_errors() {
    let e = plan_continuation(p(1.0, 0.5, 1.0, 1.0), 2.5, ContinuationTarget::CToInverseA, 3).unwrap_err();
    assert!(matches!(e, Error::Unreachable(_)));
    assert!(matches!(
        plan_continuation(p(1.0, 0.5, 0.5, 1.0), 1.0, ContinuationTarget::CToInverseA, 3),
        Err(Error::SubcriticalSpeed { .. })
    ));
    assert!(matches!(
        plan_continuation(p(1.0, 0.5, 0.5, 1.0), 2.5, ContinuationTarget::BToA, 0),
        Err(Error::InvalidConfig(_))
    ));
}

#[test]
fn target_names() {
    assert_eq!("c_to_1_over_a".parse::<ContinuationTarget>().unwrap(), ContinuationTarget::CToInverseA);
    assert_eq!("b_to_a".parse::<ContinuationTarget>().unwrap(), ContinuationTarget::BToA);
    assert!("a_to_b".parse::<ContinuationTarget>().is_err());
    assert_eq!(serde_json::to_string(&ContinuationTarget::CToInverseA).unwrap(), "\"c_to_1_over_a\"");
}

#[test]
fn monotone_synthetic_pulse_passes() {
    let deg = p(1.0, 0.5, 1.0, 1.0);
    let grid = linspace(-40.0, 40.0, 4001);
    let u: Vec<f64> = grid.iter().map(|&x| 0.3 / (x / 4.0).cosh()).collect();
    let v: Vec<f64> = grid.iter().map(|&x| 1.0 / (1.0 + (-x).exp())).collect();
    let d = pulse_tail_diagnostics(&synthetic(deg, grid, u, v), deg, ContinuationTarget::CToInverseA);
    assert_eq!(d.case, TailCase::BothMonotone);
    assert!(d.tails_ok && d.pass);
    assert!((d.companion_limit - 1.0).abs() < 1e-15);
}

#[test]
fn bracket_violation_is_flagged() {
    // Companion oscillates on the right while the pulse stays far above
    // (a - v)/b at the companion maxima.
    let deg = p(1.0, 0.5, 1.0, 1.0);
    let grid = linspace(-40.0, 40.0, 8001);
    let u: Vec<f64> = grid.iter().map(|&x| 0.3 / (x / 4.0).cosh()).collect();
    let v: Vec<f64> = grid.iter().map(|&x| 1.0 / (1.0 + (-x).exp()) + 0.05 * (-0.05 * x).exp() * (2.0 * x).sin()).collect();
    let d = pulse_tail_diagnostics(&synthetic(deg, grid.clone(), u.clone(), v.clone()), deg, ContinuationTarget::CToInverseA);
    assert_eq!(d.case, TailCase::CompanionOscillates);
    assert!(!d.bracket_checks.is_empty());
    // Oracle: recompute each slack directly from the profile.
    for c in &d.bracket_checks {
        let k = grid.iter().position(|&x| x == c.location).unwrap();
        let bound = (deg.a - v[k]) / deg.b;
        let slack = if c.kind == ExtremumKind::Max { bound - u[k] } else { u[k] - bound };
        assert!((c.slack - slack).abs() < 1e-15);
    }
    assert!(d.bracket_checks.iter().any(|c| c.kind == ExtremumKind::Min && !c.holds));
    assert!(!d.inequalities_ok && !d.pass);
}

#[test]
fn short_warm_started_run() {
    let mut plan = plan_continuation(p(1.0, 0.5, 0.5, 1.0), 2.5, ContinuationTarget::CToInverseA, 2).unwrap();
    plan.compare_cold = true;
    let r = run_continuation(&plan).unwrap();
    assert_eq!(r.failure_index, None);
    assert_eq!(r.steps.len(), 2);
    assert!(r.steps.iter().all(|s| s.converged && s.certificate_pass && s.floor_ok && s.left_tail_dominated));
    let s1 = &r.steps[1];
    assert!(s1.iterations < s1.cold_iterations.unwrap());
    assert!(r.steps[0].cold_iterations.is_none());
    assert!(!r.extrapolated && r.refined_residual.is_none());
    // The pulse height stays above the first-step envelope maximum.
    assert!(r.steps.iter().all(|s| s.max_pulsed >= r.floor - 1e-8));
    let lim = r.limit_profile.as_ref().unwrap();
    assert_eq!(r.degenerate_residual, Some(degenerate_residual(lim, plan.base, plan.target)));
    let json = serde_json::to_value(&r).unwrap();
    assert!(json["steps"][0].get("profile").is_none());
}
