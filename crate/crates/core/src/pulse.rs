//! Continuation of non-monotone fronts toward the degenerate limits
//! `c -> 1/a` and `b -> a`, where the pulsed component vanishes at both ends.

use serde::{Deserialize, Serialize};

use crate::analyze::{prominent_extrema, Component, Extremum, ExtremumKind, PROMINENCE};
use crate::certify::{certify_envelopes, GridSpec};
use crate::envelopes::{envelopes_for, EnvelopeCase, EnvelopeSet, Mode, SelectionKnobs};
use crate::model::{classify_regime, critical_speed, Regime, SystemParams, EQ_TOL};
use crate::solve::{beta_floor, iterate_from, ode_residual_with, OperatorConfig, Profile, BETA_FACTOR};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuationTarget {
    /// `c -> 1/a`: `u` becomes a pulse, `v -> a` on the right.
    #[serde(rename = "c_to_1_over_a")]
    CToInverseA,
    /// `b -> a`: `v` becomes a pulse, `u -> 1` on the right.
    BToA,
}

impl std::str::FromStr for ContinuationTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "c_to_1_over_a" | "c" => Ok(ContinuationTarget::CToInverseA),
            "b_to_a" | "b" => Ok(ContinuationTarget::BToA),
            other => Err(Error::InvalidConfig(format!("unknown continuation target {other:?}"))),
        }
    }
}

impl ContinuationTarget {
    fn pulsed(self) -> Component {
        match self {
            ContinuationTarget::CToInverseA => Component::U,
            ContinuationTarget::BToA => Component::V,
        }
    }

    fn mode(self) -> Mode {
        match self {
            ContinuationTarget::CToInverseA => Mode::NonMonotoneU,
            ContinuationTarget::BToA => Mode::NonMonotoneV,
        }
    }

    /// Parameters with the continued coefficient set to `x`.
    pub fn at(self, base: SystemParams, x: f64) -> SystemParams {
        match self {
            ContinuationTarget::CToInverseA => SystemParams { c: x, ..base },
            ContinuationTarget::BToA => SystemParams { b: x, ..base },
        }
    }

    pub fn limit(self, base: SystemParams) -> f64 {
        match self {
            ContinuationTarget::CToInverseA => 1.0 / base.a,
            ContinuationTarget::BToA => base.a,
        }
    }

    pub fn start(self, base: SystemParams) -> f64 {
        match self {
            ContinuationTarget::CToInverseA => base.c,
            ContinuationTarget::BToA => base.b,
        }
    }

    /// Parameters of the degenerate limit system.
    pub fn degenerate(self, base: SystemParams) -> SystemParams {
        self.at(base, self.limit(base))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuationPlan {
    pub base: SystemParams,
    pub speed: f64,
    pub target: ContinuationTarget,
    /// Values of the continued coefficient, first one equal to the base value.
    pub steps: Vec<f64>,
    pub limit: f64,
    /// Envelope constants shared by every step (only `delta` is recomputed).
    pub knobs: SelectionKnobs,
    pub solver: OperatorConfig,
    pub extrapolate: bool,
    /// Re-solve the last step on a grid twice as fine.
    pub refine_check: bool,
    /// Also solve each step from the envelopes, to compare iteration counts.
    pub compare_cold: bool,
}

impl ContinuationPlan {
    pub fn limit_gap(&self) -> f64 {
        (self.limit - self.steps[self.steps.len() - 1]).abs()
    }
}

/// Default right end of the truncated domain for pulse computations.
pub const PULSE_RIGHT: f64 = 600.0;

/// Geometric schedule `x_k = L - (L - x_0)/2^k`, `k = 0..n_steps`.
pub fn plan_continuation(base: SystemParams, s: f64, target: ContinuationTarget, n_steps: usize) -> Result<ContinuationPlan> {
    base.validate()?;
    if classify_regime(base) != Regime::StrictWeak {
        return Err(Error::Unreachable(format!("base parameters ({base}) are not in the strict weak regime")));
    }
    if s < critical_speed(base) - EQ_TOL {
        return Err(Error::SubcriticalSpeed { speed: s, critical: critical_speed(base) });
    }
    if n_steps == 0 {
        return Err(Error::InvalidConfig("at least one continuation step is required".into()));
    }
    let (x0, lim) = (target.start(base), target.limit(base));
    if !(x0 < lim) {
        return Err(Error::Unreachable(format!("start value {x0} is not below the limit {lim}")));
    }
    let steps: Vec<f64> = (0..n_steps).map(|k| lim - (lim - x0) / 2f64.powi(k as i32)).collect();

    // Constants fixed at the step closest to the limit, where the lower
    // bounds on q are largest; they then hold along the whole schedule.
    let last = target.at(base, steps[n_steps - 1]);
    let env = envelopes_for(last, s, &SelectionKnobs::with_mode(target.mode()))?;
    let mut knobs = SelectionKnobs::with_mode(target.mode());
    match (env.params.supercritical, env.params.critical) {
        (Some(k), _) => {
            knobs.mu1 = Some(k.mu1);
            knobs.mu2 = Some(k.mu2);
            knobs.q1 = Some(k.q1);
            knobs.q2 = Some(k.q2);
        }
        (None, Some(k)) => {
            if env.params.swap.is_some() {
                return Err(Error::InvalidConfig("continuation at s = s* with ad > 1 is not supported".into()));
            }
            knobs.q1 = Some(k.qhat1);
            knobs.q2 = k.qhat2.or(k.big_qhat2);
            knobs.mu2 = k.muhat2;
        }
        (None, None) => unreachable!("selection always fills one constant set"),
    }
    let solver = pulse_solver_config(&env, last, PULSE_RIGHT);
    Ok(ContinuationPlan {
        base,
        speed: s,
        target,
        steps,
        limit: lim,
        knobs,
        solver,
        extrapolate: false,
        refine_check: false,
        compare_cold: false,
    })
}

fn pulse_solver_config(env: &EnvelopeSet, p: SystemParams, right: f64) -> OperatorConfig {
    let auto = OperatorConfig::for_envelopes(env, p, env.speed);
    let left = auto.domain.0;
    let h = 0.05;
    OperatorConfig {
        beta: BETA_FACTOR * beta_floor(p),
        domain: (left, right),
        n_points: ((right - left) / h).ceil() as usize + 1,
        max_iters: 200_000,
        tol: 1e-9,
        damping: 1.0,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseStep {
    pub value: f64,
    pub params: SystemParams,
    pub iterations: usize,
    pub cold_iterations: Option<usize>,
    pub converged: bool,
    pub certificate_pass: bool,
    pub max_pulsed: f64,
    pub floor_ok: bool,
    /// Largest `upper envelope - pulsed component` violation on the left half.
    pub left_tail_dominated: bool,
    #[serde(skip)]
    pub profile: Option<Profile>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailCase {
    /// Both components eventually monotone.
    BothMonotone,
    /// Companion oscillates, pulsed component monotone.
    CompanionOscillates,
    /// Pulsed component oscillates, companion monotone.
    PulsedOscillates,
    BothOscillate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityAtExtremum {
    pub location: f64,
    pub kind: ExtremumKind,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailDiagnostics {
    pub case: TailCase,
    pub pulsed_extrema: usize,
    pub companion_extrema: usize,
    /// Bracket on the pulsed component at companion extrema.
    pub bracket_checks: Vec<InequalityAtExtremum>,
    /// Sign of the pulsed reaction at pulsed maxima.
    pub maximum_checks: Vec<InequalityAtExtremum>,
    pub pulsed_left: f64,
    pub pulsed_right: f64,
    pub companion_right: f64,
    pub companion_limit: f64,
    pub tails_ok: bool,
    pub inequalities_ok: bool,
    pub pass: bool,
}

/// Tolerance on the end values of the pulsed and companion components.
pub const PULSE_TAIL_TOL: f64 = 1e-2;

/// Right-tail case analysis of a front-pulse profile against the degenerate
/// system `p_deg`.
pub fn pulse_tail_diagnostics(prof: &Profile, p_deg: SystemParams, target: ContinuationTarget) -> TailDiagnostics {
    let SystemParams { a, b, c, .. } = p_deg;
    let (pulsed, companion) = match target.pulsed() {
        Component::U => (&prof.u, &prof.v),
        Component::V => (&prof.v, &prof.u),
    };
    let n = prof.len();
    let cut = prof.grid[0] + 0.75 * (prof.grid[n - 1] - prof.grid[0]);
    let start = prof.grid.partition_point(|&x| x < cut);
    let xs = &prof.grid[start..];
    let span = |y: &[f64]| {
        let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
        hi - lo
    };
    let ext = |y: &Vec<f64>| prominent_extrema(xs, &y[start..], PROMINENCE * span(y), Component::U);
    let (pe, ce): (Vec<Extremum>, Vec<Extremum>) = (ext(pulsed), ext(companion));
    let (po, co) = (pe.len() >= 2, ce.len() >= 2);
    let case = match (po, co) {
        (false, false) => TailCase::BothMonotone,
        (false, true) => TailCase::CompanionOscillates,
        (true, false) => TailCase::PulsedOscillates,
        (true, true) => TailCase::BothOscillate,
    };
    let at = |e: &Extremum| {
        let k = start + e.index;
        match target.pulsed() {
            Component::U => (prof.u[k], prof.v[k]),
            Component::V => (prof.v[k], prof.u[k]),
        }
    };
    // Companion extremum: its reaction changes sign there, bracketing the pulsed value.
    let bracket_checks: Vec<InequalityAtExtremum> = ce
        .iter()
        .map(|e| {
            let (w, z) = at(e);
            let bound = match target {
                ContinuationTarget::CToInverseA => (a - z) / b,
                ContinuationTarget::BToA => (1.0 - z) / c,
            };
            let slack = match e.kind {
                ExtremumKind::Max => bound - w,
                ExtremumKind::Min => w - bound,
            };
            InequalityAtExtremum { location: e.location, kind: e.kind, slack, holds: slack >= -1e-6 }
        })
        .collect();
    let maximum_checks = pe
        .iter()
        .filter(|e| e.kind == ExtremumKind::Max)
        .map(|e| {
            let (w, z) = at(e);
            let slack = match target {
                ContinuationTarget::CToInverseA => w * (1.0 - w - z / a),
                ContinuationTarget::BToA => w * (a * (1.0 - z) - w),
            };
            InequalityAtExtremum { location: e.location, kind: e.kind, slack, holds: slack >= -1e-6 }
        })
        .collect::<Vec<_>>();
    let companion_limit = match target {
        ContinuationTarget::CToInverseA => a,
        ContinuationTarget::BToA => 1.0,
    };
    let (pl, pr, cr) = (pulsed[0], pulsed[n - 1], companion[n - 1]);
    let tails_ok = pl <= PULSE_TAIL_TOL && pr <= PULSE_TAIL_TOL && (cr - companion_limit).abs() <= PULSE_TAIL_TOL;
    let inequalities_ok = bracket_checks_ok(&bracket_checks) && bracket_checks_ok(&maximum_checks);
    TailDiagnostics {
        case,
        pulsed_extrema: pe.len(),
        companion_extrema: ce.len(),
        bracket_checks,
        maximum_checks,
        pulsed_left: pl,
        pulsed_right: pr,
        companion_right: cr,
        companion_limit,
        tails_ok,
        inequalities_ok,
        pass: tails_ok && inequalities_ok,
    }
}

fn bracket_checks_ok(v: &[InequalityAtExtremum]) -> bool {
    v.iter().all(|c| c.holds)
}

/// Largest central-difference residual of the degenerate system for `target`.
pub fn degenerate_residual(prof: &Profile, base: SystemParams, target: ContinuationTarget) -> f64 {
    let p = target.degenerate(base);
    let SystemParams { a, b, c, .. } = p;
    match target {
        ContinuationTarget::CToInverseA => ode_residual_with(prof, p, |u, v| (u * (1.0 - u - v / a), v * (a - b * u - v))),
        ContinuationTarget::BToA => ode_residual_with(prof, p, |u, v| (u * (1.0 - u - c * v), v * (a * (1.0 - u) - v))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseResult {
    pub target: ContinuationTarget,
    pub steps: Vec<PulseStep>,
    pub floor: f64,
    pub floor_ok: bool,
    pub failure_index: Option<usize>,
    pub limit_gap: f64,
    pub extrapolated: bool,
    pub degenerate_residual: Option<f64>,
    pub refined_residual: Option<f64>,
    pub tail: Option<TailDiagnostics>,
    pub pass: bool,
    #[serde(skip)]
    pub limit_profile: Option<Profile>,
}

impl PulseResult {
    pub fn profiles(&self) -> impl Iterator<Item = &Profile> {
        self.steps.iter().filter_map(|s| s.profile.as_ref())
    }
}

fn pulsed_of(prof: &Profile, target: ContinuationTarget) -> &[f64] {
    match target.pulsed() {
        Component::U => &prof.u,
        Component::V => &prof.v,
    }
}

/// Solves every step of the plan, warm-starting from the previous profile.
pub fn run_continuation(plan: &ContinuationPlan) -> Result<PulseResult> {
    let t = plan.target;
    let mut steps: Vec<PulseStep> = Vec::new();
    let mut floor = f64::NAN;
    let mut failure_index = None;
    let mut prev: Option<Profile> = None;
    for (k, &x) in plan.steps.iter().enumerate() {
        let p = t.at(plan.base, x);
        let env = envelopes_for(p, plan.speed, &plan.knobs)?;
        let step_floor = match t.pulsed() {
            Component::U => env.lower_max.0,
            Component::V => env.lower_max.1,
        };
        if k == 0 {
            floor = step_floor;
        }
        let cert = certify_envelopes(&env, p, plan.knobs.mode, GridSpec::default_for(&env));
        let mut cfg = plan.solver;
        cfg.beta = BETA_FACTOR * beta_floor(p);
        let (prof, rep) = iterate_from(&env, p, plan.speed, &cfg, prev.as_ref())?;
        let cold_iterations = if plan.compare_cold && k > 0 {
            Some(iterate_from(&env, p, plan.speed, &cfg, None)?.1.iterations_used)
        } else {
            None
        };
        let pulsed = pulsed_of(&prof, t);
        let max_pulsed = pulsed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let upper = match t.pulsed() {
            Component::U => &env.u_upper,
            Component::V => &env.v_upper,
        };
        let mid = prof.grid[0] + 0.5 * (prof.grid[prof.len() - 1] - prof.grid[0]);
        let left_tail_dominated = prof.grid.iter().zip(pulsed).take_while(|(&x, _)| x < mid).all(|(&x, &w)| w <= upper.value(x) + 1e-12);
        steps.push(PulseStep {
            value: x,
            params: p,
            iterations: rep.iterations_used,
            cold_iterations,
            converged: prof.converged,
            certificate_pass: cert.passed(),
            max_pulsed,
            floor_ok: max_pulsed >= floor - 1e-8,
            left_tail_dominated,
            profile: Some(prof.clone()),
        });
        if !prof.converged {
            failure_index = Some(k);
            break;
        }
        prev = Some(prof);
    }
    let floor_ok = steps.iter().all(|s| s.floor_ok);
    let mut result = PulseResult {
        target: t,
        limit_gap: plan.limit_gap(),
        steps,
        floor,
        floor_ok,
        failure_index,
        extrapolated: false,
        degenerate_residual: None,
        refined_residual: None,
        tail: None,
        pass: false,
        limit_profile: None,
    };
    if failure_index.is_some() {
        return Ok(result);
    }
    let coarse: Vec<Profile> = result.profiles().cloned().collect();
    let limit = limit_of(&coarse, plan.extrapolate);
    result.extrapolated = plan.extrapolate && coarse.len() >= 3;
    result.degenerate_residual = Some(degenerate_residual(&limit, plan.base, t));
    if plan.refine_check {
        // Re-solve the steps entering the limit on a grid twice as fine.
        let take = if result.extrapolated { 3 } else { 1 };
        let mut fine = Vec::with_capacity(take);
        for prof in &coarse[coarse.len() - take..] {
            let p = prof.params;
            let env = envelopes_for(p, plan.speed, &plan.knobs)?;
            let mut cfg = plan.solver.refined(2);
            cfg.beta = BETA_FACTOR * beta_floor(p);
            fine.push(iterate_from(&env, p, plan.speed, &cfg, Some(prof))?.0);
        }
        let fine_limit = limit_of(&fine, plan.extrapolate);
        result.refined_residual = Some(degenerate_residual(&fine_limit, plan.base, t));
    }
    let tail = pulse_tail_diagnostics(&limit, t.degenerate(plan.base), t);
    result.pass = result.floor_ok && tail.pass;
    result.tail = Some(tail);
    result.limit_profile = Some(limit);
    Ok(result)
}

/// Last profile, or the Richardson combination of the last three when
/// `extrapolate` is set and enough steps exist.
fn limit_of(profiles: &[Profile], extrapolate: bool) -> Profile {
    let n = profiles.len();
    let mut limit = profiles[n - 1].clone();
    if extrapolate && n >= 3 {
        let (p2, p1) = (&profiles[n - 3], &profiles[n - 2]);
        let a = limit.params.a;
        for k in 0..limit.len() {
            limit.u[k] = ((8.0 * limit.u[k] - 6.0 * p1.u[k] + p2.u[k]) / 3.0).clamp(0.0, 1.0);
            limit.v[k] = ((8.0 * limit.v[k] - 6.0 * p1.v[k] + p2.v[k]) / 3.0).clamp(0.0, a);
        }
    }
    limit
}

/// Whether the envelopes of a plan are the supercritical ones.
pub fn plan_case(plan: &ContinuationPlan) -> Result<EnvelopeCase> {
    Ok(envelopes_for(plan.base, plan.speed, &plan.knobs)?.case)
}
