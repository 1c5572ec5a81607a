use serde::{Deserialize, Serialize};

use super::Profile;
use crate::model::{coexistence, SystemParams};

/// Distance of the last rung of the ladder from 1.
pub const THETA_TOP_GAP: f64 = 1e-3;

/// `{0, 0.1, ..., 0.9, 1 - 1e-3}`.
pub fn theta_ladder() -> Vec<f64> {
    let mut t: Vec<f64> = (0..10).map(|k| k as f64 / 10.0).collect();
    t.push(1.0 - THETA_TOP_GAP);
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxEntry {
    pub theta: f64,
    /// `[m_u, M_u, m_v, M_v]`
    pub bounds: [f64; 4],
    /// Leftmost abscissa after which the profile stays in the box.
    pub entry: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub epsilon: f64,
    pub boxes: Vec<BoxEntry>,
    pub entries_ordered: bool,
    pub right_gap: f64,
    pub right_ok: bool,
    pub left_values: (f64, f64),
    pub left_bound: Option<(f64, f64)>,
    pub left_ok: bool,
    pub pass: bool,
}

/// Shrinking-box test of the right tail plus end-value checks.
pub fn tail_check(prof: &Profile, p: SystemParams) -> TailReport {
    let (us, vs) = coexistence(p);
    let SystemParams { a, b, c, .. } = p;
    let epsilon = 0.5 * f64::min((1.0 - a * c) / c, (a - b) / b);
    let n = prof.len();
    let boxes: Vec<BoxEntry> = theta_ladder()
        .into_iter()
        .map(|t| {
            let bounds = [t * us, t * us + (1.0 - t) * (1.0 + epsilon), t * vs, t * vs + (1.0 - t) * (a + epsilon)];
            let inside = |k: usize| {
                bounds[0] <= prof.u[k] && prof.u[k] <= bounds[1] && bounds[2] <= prof.v[k] && prof.v[k] <= bounds[3]
            };
            let mut k = n;
            while k > 0 && inside(k - 1) {
                k -= 1;
            }
            BoxEntry { theta: t, bounds, entry: (k < n).then(|| prof.grid[k]) }
        })
        .collect();
    let entries_ordered = boxes.iter().all(|b| b.entry.is_some())
        && boxes.windows(2).all(|w| w[0].entry.unwrap() <= w[1].entry.unwrap());
    let right_gap = (prof.u[n - 1] - us).abs().max((prof.v[n - 1] - vs).abs());
    let right_ok = right_gap <= 10.0 * prof.tol;
    let left_values = (prof.u[0], prof.v[0]);
    let left_ok = match prof.left_bound {
        Some((bu, bv)) => left_values.0 <= bu + 1e-12 && left_values.1 <= bv + 1e-12,
        None => true,
    };
    TailReport {
        epsilon,
        boxes,
        entries_ordered,
        right_gap,
        right_ok,
        left_values,
        left_bound: prof.left_bound,
        left_ok,
        pass: entries_ordered && right_ok && left_ok,
    }
}
