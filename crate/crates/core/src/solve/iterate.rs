use serde::{Deserialize, Serialize};

use super::{right_state, tail_check, IntegralOperator, OperatorConfig, Profile};
use crate::envelopes::EnvelopeSet;
use crate::model::{classify_regime, Regime, SystemParams};
use crate::numeric::{interp, join};
use crate::{Error, Result};

/// A clipped correction larger than this counts as a sandwich violation.
pub const CLIP_EVENT_TOL: f64 = 1e-10;
/// A correction larger than this aborts the iteration.
pub const ESCAPE_TOL: f64 = 1e-8;

/// Pointwise bounds for the iterates.
#[derive(Debug, Clone, PartialEq)]
pub struct Sandwich {
    pub u_lo: Vec<f64>,
    pub u_hi: Vec<f64>,
    pub v_lo: Vec<f64>,
    pub v_hi: Vec<f64>,
}

impl Sandwich {
    pub fn from_envelopes(env: &EnvelopeSet, grid: &[f64]) -> Self {
        let mut s = Sandwich {
            u_lo: Vec::with_capacity(grid.len()),
            u_hi: Vec::with_capacity(grid.len()),
            v_lo: Vec::with_capacity(grid.len()),
            v_hi: Vec::with_capacity(grid.len()),
        };
        for &x in grid {
            let [uu, ul, vu, vl] = env.values(x);
            s.u_hi.push(uu);
            s.u_lo.push(ul);
            s.v_hi.push(vu);
            s.v_lo.push(vl);
        }
        s
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    /// Sup-norm of `P(w) - w` over both pairs, per step.
    pub residual_history: Vec<f64>,
    /// Gap between the upper and lower pairs, per step.
    pub gap_history: Vec<f64>,
    /// Number of samples clipped by more than [`CLIP_EVENT_TOL`], per step.
    pub sandwich_violations: Vec<usize>,
    pub clip_events: usize,
    pub max_violation: f64,
    pub converged: bool,
    pub iterations_used: usize,
    /// Step at which the relaxation weight was reduced.
    pub damping_engaged_at: Option<usize>,
}

impl IterationReport {
    /// Whether the residual history is nonincreasing from the step where
    /// damping engaged (or from the start if it never did).
    pub fn residual_nonincreasing_after_damping(&self) -> bool {
        let start = self.damping_engaged_at.unwrap_or(0);
        self.residual_history[start.min(self.residual_history.len())..]
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-9))
    }
}

struct Clipper<'a> {
    bounds: Option<&'a Sandwich>,
    a: f64,
    grid: &'a [f64],
    events: usize,
    worst: f64,
    worst_at: f64,
}

impl Clipper<'_> {
    fn clip(&mut self, w: &mut [f64], lo: Option<&[f64]>, hi: Option<&[f64]>, top: f64) {
        for k in 0..w.len() {
            let mut x = w[k].clamp(0.0, top);
            let mut viol = (w[k] - x).abs();
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if x > hi[k] {
                    viol = viol.max(x - hi[k]);
                    x = hi[k];
                } else if x < lo[k] {
                    viol = viol.max(lo[k] - x);
                    x = lo[k];
                }
            }
            if viol > CLIP_EVENT_TOL {
                self.events += 1;
            }
            if viol > self.worst {
                self.worst = viol;
                self.worst_at = self.grid[k];
            }
            w[k] = x;
        }
    }

    fn clip_pair(&mut self, u: &mut [f64], v: &mut [f64]) {
        let b = self.bounds;
        self.clip(u, b.map(|s| s.u_lo.as_slice()), b.map(|s| s.u_hi.as_slice()), 1.0);
        self.clip(v, b.map(|s| s.v_lo.as_slice()), b.map(|s| s.v_hi.as_slice()), self.a);
    }
}

fn relax(old: &mut [f64], new: &[f64], theta: f64) {
    for (o, &n) in old.iter_mut().zip(new) {
        *o += theta * (n - *o);
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Output of [`run_coupled`]: midpoint samples, pair gap and the report.
pub struct CoupledOutcome {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub gap: f64,
    pub residual: f64,
    pub report: IterationReport,
}

/// Iterates `P` on the upper pair `(u_upper, v_lower)` and the lower pair
/// `(u_lower, v_upper)`, clipping each step to `[0,1] x [0,a]` and to
/// `bounds` when given.
pub fn run_coupled(
    op: &IntegralOperator,
    upper: (Vec<f64>, Vec<f64>),
    lower: (Vec<f64>, Vec<f64>),
    bounds: Option<&Sandwich>,
    cfg: &OperatorConfig,
) -> Result<CoupledOutcome> {
    let (mut u_hi, mut v_lo) = upper;
    let (mut u_lo, mut v_hi) = lower;
    let mut report = IterationReport::default();
    let mut theta = cfg.damping;
    let mut prev_res = f64::INFINITY;
    for it in 0..cfg.max_iters {
        let (up, lo) = join(|| op.apply(&u_hi, &v_lo), || op.apply(&u_lo, &v_hi));
        let ((pu1, pv1), (pu2, pv2)) = (up?, lo?);
        let res = sup_diff(&pu1, &u_hi).max(sup_diff(&pv1, &v_lo)).max(sup_diff(&pu2, &u_lo)).max(sup_diff(&pv2, &v_hi));
        if it > 0 && res > prev_res && theta > 0.5 {
            theta = 0.5;
            report.damping_engaged_at = Some(it);
        }
        prev_res = res;
        let old = [u_hi.clone(), v_lo.clone(), u_lo.clone(), v_hi.clone()];
        relax(&mut u_hi, &pu1, theta);
        relax(&mut v_lo, &pv1, theta);
        relax(&mut u_lo, &pu2, theta);
        relax(&mut v_hi, &pv2, theta);

        let mut clipper = Clipper { bounds, a: op.params.a, grid: &op.grid, events: 0, worst: 0.0, worst_at: f64::NAN };
        clipper.clip_pair(&mut u_hi, &mut v_lo);
        clipper.clip_pair(&mut u_lo, &mut v_hi);
        report.sandwich_violations.push(clipper.events);
        report.clip_events += clipper.events;
        report.max_violation = report.max_violation.max(clipper.worst);
        if clipper.worst > ESCAPE_TOL {
            return Err(Error::EscapedEnvelope { iteration: it, xi: clipper.worst_at, amount: clipper.worst });
        }

        // Step size of the clipped map, so a fixed point held against the
        // bounds still counts as converged.
        let change = [&u_hi, &v_lo, &u_lo, &v_hi].iter().zip(&old).map(|(w, o)| sup_diff(w, o)).fold(0.0, f64::max);
        let gap = sup_diff(&u_hi, &u_lo).max(sup_diff(&v_hi, &v_lo));
        report.residual_history.push(res);
        report.gap_history.push(gap);
        report.iterations_used = it + 1;
        if change < cfg.tol && gap < cfg.tol {
            report.converged = true;
            break;
        }
    }
    let u: Vec<f64> = u_hi.iter().zip(&u_lo).map(|(a, b)| 0.5 * (a + b)).collect();
    let v: Vec<f64> = v_hi.iter().zip(&v_lo).map(|(a, b)| 0.5 * (a + b)).collect();
    let gap = sup_diff(&u_hi, &u_lo).max(sup_diff(&v_hi, &v_lo));
    let (pu, pv) = op.apply(&u, &v)?;
    let residual = sup_diff(&pu, &u).max(sup_diff(&pv, &v));
    Ok(CoupledOutcome { u, v, gap, residual, report })
}

/// Monotone iteration between the envelopes.
pub fn iterate(env: &EnvelopeSet, p: SystemParams, s: f64, cfg: &OperatorConfig) -> Result<(Profile, IterationReport)> {
    iterate_from(env, p, s, cfg, None)
}

/// As [`iterate`], optionally starting both pairs from `init` (interpolated
/// onto the grid and clipped into the sandwich).
pub fn iterate_from(
    env: &EnvelopeSet,
    p: SystemParams,
    s: f64,
    cfg: &OperatorConfig,
    init: Option<&Profile>,
) -> Result<(Profile, IterationReport)> {
    cfg.validate(p)?;
    let grid = cfg.grid();
    let op = IntegralOperator::new(grid.clone(), p, s, cfg.beta, (0.0, 0.0), right_state(p))?;
    let bounds = Sandwich::from_envelopes(env, &grid);
    let (upper, lower) = match init {
        None => ((bounds.u_hi.clone(), bounds.v_lo.clone()), (bounds.u_lo.clone(), bounds.v_hi.clone())),
        Some(w) => {
            let clamp = |x: f64, lo: f64, hi: f64| x.max(lo).min(hi);
            let u: Vec<f64> = grid.iter().enumerate().map(|(k, &x)| clamp(interp(&w.grid, &w.u, x), bounds.u_lo[k], bounds.u_hi[k])).collect();
            let v: Vec<f64> = grid.iter().enumerate().map(|(k, &x)| clamp(interp(&w.grid, &w.v, x), bounds.v_lo[k], bounds.v_hi[k])).collect();
            ((u.clone(), v.clone()), (u, v))
        }
    };
    let out = run_coupled(&op, upper, lower, Some(&bounds), cfg)?;
    let left = env.values(grid[0]);
    let mut prof = Profile {
        grid,
        u: out.u,
        v: out.v,
        speed: s,
        params: p,
        beta: cfg.beta,
        residual: out.residual,
        gap: out.gap,
        converged: out.report.converged,
        tol: cfg.tol,
        left_bound: Some((left[0], left[2])),
        tail_report: None,
    };
    if prof.converged && classify_regime(p) == Regime::StrictWeak {
        prof.tail_report = Some(tail_check(&prof, p));
    }
    Ok((prof, out.report))
}
