use lvwave::certify::*;
use lvwave::envelopes::*;
use lvwave::model::critical_speed;
use lvwave::piecewise::Side;
use lvwave::{Error, SystemParams};
use proptest::prelude::*;

fn p(a: f64, b: f64, c: f64, d: f64) -> SystemParams {
    SystemParams::new(a, b, c, d).unwrap()
}

fn ripple_case() -> (SystemParams, SelectionKnobs) {
    let knobs = SelectionKnobs { mu2: Some(1.0 + 1.0 / 1.1), q2: Some(2.6), ..SelectionKnobs::with_mode(Mode::NonMonotoneV) };
    (p(1.0, 25.0 / 26.0, 0.5, 1.0), knobs)
}

#[test]
fn ripple_case_envelopes_certify() {
    let (q, knobs) = ripple_case();
    let cert = certify_with(q, 4.5, &knobs).unwrap();
    assert!(cert.passed(), "{:?}", cert.min_margins);
    assert!(cert.min_margins.iter().all(|&m| m >= -RESIDUAL_TOL));
    assert!(cert.ordering_ok && cert.corner_checks.iter().all(|c| c.pass));
    assert_eq!(cert.verdict, Verdict::Pass);
    let json = serde_json::to_value(&cert).unwrap();
    assert_eq!(json["verdict"], "pass");
}

#[test]
fn nonmonotone_v_mode_certifies() {
    let cert = certify(p(1.0, 25.0 / 26.0, 0.5, 1.0), 4.5, Mode::NonMonotoneV).unwrap();
    assert!(cert.passed());
}

#[test]
fn q_below_its_floor_fails() {
    let (q, mut knobs) = ripple_case();
    knobs.q2 = Some(1.05);
    let cert = certify_with(q, 4.5, &knobs).unwrap();
    assert!(!cert.passed());
    assert!(cert.min_margins[3] < -RESIDUAL_TOL);
}

#[test]
fn q_below_the_coefficient_cannot_be_built() {
    let (q, mut knobs) = ripple_case();
    knobs.q2 = Some(0.5);
    assert!(matches!(certify_with(q, 4.5, &knobs), Err(Error::NoInteriorZero { .. })));
}

#[test]
fn critical_cases_certify() {
    for q in [p(1.0, 0.5, 0.5, 1.0), p(0.5, 0.25, 0.5, 1.0), p(1.5, 0.5, 0.4, 2.0)] {
        let s = critical_speed(q);
        let cert = certify(q, s, Mode::Default).unwrap();
        assert!(cert.passed(), "{q}: {:?}", cert.min_margins);
    }
}

#[test]
fn subcritical_speed_is_rejected() {
    assert!(matches!(certify(p(1.0, 0.5, 0.5, 1.0), 1.5, Mode::Default), Err(Error::SubcriticalSpeed { .. })));
    assert!(matches!(certify(p(1.0, 1.0, 0.5, 1.0), 3.0, Mode::Default), Err(Error::UnsupportedRegime(_))));
}

#[test]
fn ordering_detects_a_scaled_lower_envelope() {
    let q = p(1.0, 0.5, 0.5, 1.0);
    let mut env = envelopes_for(q, 4.5, &SelectionKnobs::default()).unwrap();
    let grid = lvwave::numeric::linspace(-80.0, 20.0, 10_001);
    assert!(check_ordering(&env, &grid).ok);
    env.u_lower = env.u_lower.scaled(20.0);
    let o = check_ordering(&env, &grid);
    assert!(!o.ok);
    assert!(o.worst_gap_u < 0.0);
    // Brute-force oracle for the worst gap.
    let worst = grid.iter().map(|&x| env.u_upper.value(x) - env.u_lower.value(x)).fold(f64::INFINITY, f64::min);
    assert_eq!(o.worst_gap_u, worst);
}

#[test]
fn corner_orientation() {
    let q = p(1.0, 0.5, 0.5, 1.0);
    let env = envelopes_for(q, 4.5, &SelectionKnobs::default()).unwrap();
    let l1 = env.params.rates.lambda1;
    let corners = check_corners(&env);
    let at_zero = corners.iter().find(|c| c.profile == "u_upper").unwrap();
    assert_eq!(at_zero.join, 0.0);
    assert!((at_zero.left_derivative - l1).abs() < 1e-15);
    assert_eq!(at_zero.right_derivative, 0.0);
    assert!(at_zero.pass);
    let lower = corners.iter().find(|c| c.profile == "u_lower").unwrap();
    assert!(lower.left_derivative < 0.0 && lower.right_derivative == 0.0 && lower.pass);

    let mut flipped = env.clone();
    flipped.u_upper = env.u_lower.clone();
    assert!(check_corners(&flipped).iter().any(|c| c.profile == "u_upper" && !c.pass));
}

#[test]
fn residual_identities_on_the_pieces() {
    let q = p(1.0, 0.5, 0.5, 1.0);
    let s = 4.5;
    let env = envelopes_for(q, s, &SelectionKnobs::default()).unwrap();
    let k = env.params.supercritical.unwrap();
    for x in [0.5, 3.0, 20.0] {
        let r = residuals_at(&env, q, s, x);
        assert!((r[0] + q.c * env.v_lower.value(x)).abs() < 1e-14);
        let vu = env.v_upper.value(x);
        assert!((r[1] - k.delta1 * (1.0 - k.delta1 - q.c * vu)).abs() < 1e-14);
        assert!(r[1] >= k.delta1 * (1.0 - k.delta1 - q.a * q.c) - 1e-15);
    }
    for x in [-0.5, -4.0, -30.0] {
        let r = residuals_at(&env, q, s, x);
        let (u, v) = (env.u_upper.value(x), env.v_lower.value(x));
        assert!((r[0] - (-u * u - q.c * u * v)).abs() < 1e-14);
    }
}

#[test]
fn exclusion_windows_are_recorded() {
    let env = envelopes_for(p(1.0, 0.5, 0.5, 1.0), 4.5, &SelectionKnobs::default()).unwrap();
    let joins = env.join_points();
    let g = GridSpec { left: -1.0, right: 1.0, n_points: 3, refine_joins: false, exclusion: 1e-6 };
    let (kept, skipped) = g.points(&joins);
    assert_eq!(skipped, vec![0.0]);
    assert_eq!(kept, vec![-1.0, 1.0]);
    let res = check_differential_inequalities(&env, p(1.0, 0.5, 0.5, 1.0), 4.5, &GridSpec::default_for(&env));
    assert!(res.xi.iter().all(|x| joins.iter().all(|j| (x - j).abs() > EXCLUSION_RADIUS)));
    assert!(res.xi.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn residual_csv_shape() {
    let env = envelopes_for(p(1.0, 0.5, 0.5, 1.0), 4.5, &SelectionKnobs::default()).unwrap();
    let g = GridSpec { n_points: 101, refine_joins: false, ..GridSpec::default_for(&env) };
    let res = check_differential_inequalities(&env, p(1.0, 0.5, 0.5, 1.0), 4.5, &g);
    let csv = res.to_csv();
    assert_eq!(csv.lines().count(), res.xi.len() + 1);
    assert!(csv.starts_with("xi,u_upper,u_lower,v_upper,v_lower\n"));
}

fn strict_weak() -> impl Strategy<Value = SystemParams> {
    (0.2f64..3.0, 0.05f64..0.95, 0.05f64..0.95, 0.3f64..3.0)
        .prop_map(|(a, fb, fc, d)| SystemParams { a, b: fb * a, c: fc / a, d })
}

fn mode() -> impl Strategy<Value = Mode> {
    prop_oneof![Just(Mode::Default), Just(Mode::NonMonotoneU), Just(Mode::NonMonotoneV)]
}

/// Residuals from central differences of the envelope values.
fn fd_residuals(env: &EnvelopeSet, q: SystemParams, s: f64, x: f64) -> [f64; 4] {
    let h = 1e-4;
    let d = |f: &lvwave::piecewise::PiecewiseProfile| {
        let (m, c, pl) = (f.value(x - h), f.value(x), f.value(x + h));
        (c, (pl - m) / (2.0 * h), (pl - 2.0 * c + m) / (h * h))
    };
    let (uu, uu1, uu2) = d(&env.u_upper);
    let (ul, ul1, ul2) = d(&env.u_lower);
    let (vu, vu1, vu2) = d(&env.v_upper);
    let (vl, vl1, vl2) = d(&env.v_lower);
    let SystemParams { a, b, c, d: dd } = q;
    [
        uu2 - s * uu1 + uu * (1.0 - uu - c * vl),
        ul2 - s * ul1 + ul * (1.0 - ul - c * vu),
        dd * vu2 - s * vu1 + vu * (a - b * ul - vu),
        dd * vl2 - s * vl1 + vl * (a - b * uu - vl),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_residuals_match_differences(q in strict_weak(), extra in 0.05f64..4.0, m in mode(), t in 0.0f64..1.0) {
        let s = critical_speed(q) + extra;
        let env = envelopes_for(q, s, &SelectionKnobs::with_mode(m)).unwrap();
        let joins = env.join_points();
        let x = joins[0] - 10.0 + t * (joins[joins.len() - 1] + 10.0 - joins[0]);
        prop_assume!(joins.iter().all(|j| (x - j).abs() > 1e-2));
        let exact = residuals_at(&env, q, s, x);
        let fd = fd_residuals(&env, q, s, x);
        for k in 0..4 {
            prop_assert!((exact[k] - fd[k]).abs() <= 1e-5, "{}: {} vs {}", k, exact[k], fd[k]);
        }
    }

    #[test]
    fn refinement_never_flips_a_pass(q in strict_weak(), extra in 0.05f64..4.0, m in mode()) {
        let s = critical_speed(q) + extra;
        let env = envelopes_for(q, s, &SelectionKnobs::with_mode(m)).unwrap();
        let g = GridSpec::default_for(&env);
        let coarse = certify_envelopes(&env, q, m, g);
        prop_assert!(coarse.passed());
        let fine = certify_envelopes(&env, q, m, g.refined(4));
        prop_assert!(fine.passed(), "{:?}", fine.min_margins);
    }

    #[test]
    fn one_sided_derivatives_are_limits(q in strict_weak(), extra in 0.05f64..4.0) {
        let s = critical_speed(q) + extra;
        let env = envelopes_for(q, s, &SelectionKnobs::default()).unwrap();
        for prof in env.profiles() {
            for j in prof.join_points() {
                let l = prof.derivative(j, Side::Left);
                let r = prof.derivative(j, Side::Right);
                prop_assert!((prof.derivative(j - 1e-9, Side::Left) - l).abs() < 1e-6);
                prop_assert!((prof.derivative(j + 1e-9, Side::Right) - r).abs() < 1e-6);
            }
        }
    }
}
