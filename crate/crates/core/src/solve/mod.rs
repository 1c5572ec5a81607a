//! Wave profiles as fixed points of the shifted integral operator.

mod iterate;
mod operator;
mod tail;

use serde::{Deserialize, Serialize};

pub use iterate::{iterate, iterate_from, run_coupled, IterationReport, Sandwich, CLIP_EVENT_TOL, ESCAPE_TOL};
pub use operator::{beta_floor, kernel_rates, IntegralOperator};
pub use tail::{tail_check, theta_ladder, BoxEntry, TailReport};

use crate::envelopes::EnvelopeSet;
use crate::model::{classify_regime, coexistence, Regime, SystemParams};
use crate::numeric::{bisect, linspace};
use crate::{Error, Result};

/// Multiplier applied to [`beta_floor`].
pub const BETA_FACTOR: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub beta: f64,
    pub domain: (f64, f64),
    pub n_points: usize,
    pub max_iters: usize,
    /// Bound on the sup-norm step change and on the gap between the pairs.
    pub tol: f64,
    /// Initial relaxation weight in `(0, 1]`.
    pub damping: f64,
}

impl OperatorConfig {
    /// Defaults derived from the envelopes: the left end sits where the
    /// envelopes are below about `e^{-36}`, the right end where the slowest
    /// linear mode at coexistence has decayed below `tol`, and the spacing
    /// resolves the fastest left-tail exponential.
    pub fn for_envelopes(env: &EnvelopeSet, p: SystemParams, s: f64) -> Self {
        let tol: f64 = 1e-9;
        let joins = env.join_points();
        let left = joins[0] - 36.0 / env.min_rate();
        let slow = coexistence_decay_rate(p, s).unwrap_or(0.05);
        let right = (joins[joins.len() - 1].max(0.0) + (1.0 / tol).ln() / slow).clamp(30.0, 20_000.0);
        let h = (0.01 / max_rate(env)).min(0.1);
        let n_points = (((right - left) / h).ceil() as usize + 1).min(1_000_001);
        OperatorConfig {
            beta: BETA_FACTOR * beta_floor(p),
            domain: (left, right),
            n_points,
            max_iters: 200_000,
            tol,
            damping: 1.0,
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        linspace(self.domain.0, self.domain.1, self.n_points)
    }

    pub fn spacing(&self) -> f64 {
        (self.domain.1 - self.domain.0) / (self.n_points - 1) as f64
    }

    /// Same window with the spacing divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        OperatorConfig { n_points: (self.n_points - 1) * factor + 1, ..*self }
    }

    pub fn validate(&self, p: SystemParams) -> Result<()> {
        if !(self.beta >= beta_floor(p)) {
            return Err(Error::InvalidConfig(format!("beta = {} is below the floor {}", self.beta, beta_floor(p))));
        }
        if !(self.domain.0 < self.domain.1) || self.n_points < 3 {
            return Err(Error::InvalidConfig("domain must be a nondegenerate interval with at least 3 points".into()));
        }
        if !(self.tol > 0.0) || !(self.damping > 0.0 && self.damping <= 1.0) || self.max_iters == 0 {
            return Err(Error::InvalidConfig("tol > 0, damping in (0, 1] and max_iters > 0 required".into()));
        }
        Ok(())
    }
}

fn max_rate(env: &EnvelopeSet) -> f64 {
    let r = &env.params.rates;
    let base = r.hat_lambda1.unwrap_or(r.lambda1).max(r.hat_lambda2.unwrap_or(r.lambda2));
    match env.params.swap {
        Some(sw) => base / sw.x_scale,
        None => base,
    }
}

/// Decay rate of the slowest linear mode of the wave equations at the
/// coexistence state, i.e. `-r` for the negative root `r` closest to zero of
/// `(r^2 - s r - u*)(d r^2 - s r - v*) = b c u* v*`.
pub fn coexistence_decay_rate(p: SystemParams, s: f64) -> Option<f64> {
    if classify_regime(p) != Regime::StrictWeak {
        return None;
    }
    let (us, vs) = coexistence(p);
    let SystemParams { b, c, d, .. } = p;
    let ru = (s - (s * s + 4.0 * us).sqrt()) / 2.0;
    let rv = (s - (s * s + 4.0 * d * vs).sqrt()) / (2.0 * d);
    let poly = |r: f64| (r * r - s * r - us) * (d * r * r - s * r - vs) - b * c * us * vs;
    bisect(poly, ru.max(rv), 0.0).map(|r| -r)
}

/// State the wave approaches on the right.
pub fn right_state(p: SystemParams) -> (f64, f64) {
    match classify_regime(p) {
        Regime::StrictWeak => coexistence(p),
        Regime::CriticalWeakC => (0.0, p.a),
        Regime::CriticalWeakB => (1.0, 0.0),
        Regime::OutOfScope => (0.0, 0.0),
    }
}

/// `P(w)` for samples `w = (u, v)` on `cfg.grid()`, extended by `(0, 0)` on
/// the left and by the equilibrium on the right.
pub fn apply_p(u: &[f64], v: &[f64], p: SystemParams, s: f64, cfg: &OperatorConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let op = IntegralOperator::new(cfg.grid(), p, s, cfg.beta, (0.0, 0.0), right_state(p))?;
    op.apply(u, v)
}

/// A sampled wave profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub speed: f64,
    pub params: SystemParams,
    pub beta: f64,
    /// `sup |P(u, v) - (u, v)|`.
    pub residual: f64,
    /// Sup-distance between the upper and lower iterate pairs.
    pub gap: f64,
    pub converged: bool,
    pub tol: f64,
    /// Envelope values `(u_upper, v_upper)` at the left end, when known.
    pub left_bound: Option<(f64, f64)>,
    pub tail_report: Option<TailReport>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Largest central-difference residual of the wave equations at interior
    /// points, for coefficients `p`.
    pub fn ode_residual(&self, p: SystemParams) -> f64 {
        ode_residual_with(self, p, |u, v| (u * (1.0 - u - p.c * v), v * (p.a - p.b * u - v)))
    }

    /// Second-derivative magnitude bound `max(sup|u''|, sup|v''|)` from
    /// central differences.
    pub fn max_second_derivative(&self) -> f64 {
        let mut m: f64 = 0.0;
        for k in 1..self.len() - 1 {
            let (h0, h1) = (self.grid[k] - self.grid[k - 1], self.grid[k + 1] - self.grid[k]);
            for w in [&self.u, &self.v] {
                let d2 = 2.0 * (h0 * w[k + 1] - (h0 + h1) * w[k] + h1 * w[k - 1]) / (h0 * h1 * (h0 + h1));
                m = m.max(d2.abs());
            }
        }
        m
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 60);
        out.push_str("xi,u,v\n");
        for k in 0..self.len() {
            out.push_str(&format!("{},{},{}\n", self.grid[k], self.u[k], self.v[k]));
        }
        out
    }
}

/// Central-difference residual of `u'' - s u' + f1 = 0`, `d v'' - s v' + f2 = 0`.
pub fn ode_residual_with<F: Fn(f64, f64) -> (f64, f64)>(prof: &Profile, p: SystemParams, reaction: F) -> f64 {
    let (x, u, v, s) = (&prof.grid, &prof.u, &prof.v, prof.speed);
    let mut worst: f64 = 0.0;
    for k in 1..x.len() - 1 {
        let (h0, h1) = (x[k] - x[k - 1], x[k + 1] - x[k]);
        let d1 = |w: &[f64]| (h0 * h0 * w[k + 1] + (h1 * h1 - h0 * h0) * w[k] - h1 * h1 * w[k - 1]) / (h0 * h1 * (h0 + h1));
        let d2 = |w: &[f64]| 2.0 * (h0 * w[k + 1] - (h0 + h1) * w[k] + h1 * w[k - 1]) / (h0 * h1 * (h0 + h1));
        let (f1, f2) = reaction(u[k], v[k]);
        let r1 = d2(u) - s * d1(u) + f1;
        let r2 = p.d * d2(v) - s * d1(v) + f2;
        worst = worst.max(r1.abs()).max(r2.abs());
    }
    worst
}
