//! Grid verification of the super/sub-solution conditions.

use serde::{Deserialize, Serialize};

use crate::envelopes::{envelopes_for, EnvelopeCase, EnvelopeParams, EnvelopeSet, Mode, SelectionKnobs};
use crate::model::{admissibility, classify_regime, critical_speed, Admissibility, Regime, SystemParams};
use crate::numeric::{linspace, par_map};
use crate::piecewise::Side;
use crate::{Error, Result};

/// A residual within this distance of zero satisfies its inequality.
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const ORDERING_TOL: f64 = 1e-12;
pub const CORNER_TOL: f64 = 1e-10;
pub const EXCLUSION_RADIUS: f64 = 1e-6;

/// Uniform points on `[left, right]` plus geometric clusters around join points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub left: f64,
    pub right: f64,
    pub n_points: usize,
    pub refine_joins: bool,
    pub exclusion: f64,
}

impl GridSpec {
    pub fn default_for(env: &EnvelopeSet) -> Self {
        let joins = env.join_points();
        GridSpec {
            left: joins[0] - 40.0 / env.min_rate(),
            right: 30.0,
            n_points: 20_001,
            refine_joins: true,
            exclusion: EXCLUSION_RADIUS,
        }
    }

    /// Same window with `factor` times as many uniform points.
    pub fn refined(&self, factor: usize) -> Self {
        GridSpec { n_points: (self.n_points - 1) * factor + 1, ..*self }
    }

    /// Sorted sample points and the uniform points dropped for lying inside
    /// an exclusion window.
    pub fn points(&self, joins: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut pts = linspace(self.left, self.right, self.n_points);
        if self.refine_joins {
            for &j in joins {
                let mut off = 2.0 * self.exclusion;
                while off < 1.0 {
                    pts.push(j - off);
                    pts.push(j + off);
                    off *= 2.0;
                }
            }
        }
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let near = |x: f64| joins.iter().any(|&j| (x - j).abs() <= self.exclusion);
        let (skipped, kept): (Vec<f64>, Vec<f64>) = pts.into_iter().partition(|&x| near(x));
        (kept, skipped)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingCheck {
    pub ok: bool,
    /// Minimum of `u_upper - u_lower` over the grid.
    pub worst_gap_u: f64,
    /// Minimum of `v_upper - v_lower` over the grid.
    pub worst_gap_v: f64,
    pub worst_at: f64,
}

/// `u_lower <= u_upper` and `v_lower <= v_upper` on `grid`, to `-1e-12`.
pub fn check_ordering(env: &EnvelopeSet, grid: &[f64]) -> OrderingCheck {
    let gaps = par_map(grid, |&x| {
        let [uu, ul, vu, vl] = env.values(x);
        (uu - ul, vu - vl)
    });
    let mut out = OrderingCheck { ok: true, worst_gap_u: f64::INFINITY, worst_gap_v: f64::INFINITY, worst_at: f64::NAN };
    let mut worst = f64::INFINITY;
    for (&x, &(gu, gv)) in grid.iter().zip(&gaps) {
        out.worst_gap_u = out.worst_gap_u.min(gu);
        out.worst_gap_v = out.worst_gap_v.min(gv);
        if gu.min(gv) < worst {
            worst = gu.min(gv);
            out.worst_at = x;
        }
    }
    out.ok = worst >= -ORDERING_TOL;
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CornerCheck {
    pub profile: String,
    pub join: f64,
    pub left_derivative: f64,
    pub right_derivative: f64,
    pub pass: bool,
}

/// One-sided derivatives at every join point: upper envelopes need
/// `left >= right`, lower envelopes `left <= right`.
pub fn check_corners(env: &EnvelopeSet) -> Vec<CornerCheck> {
    let mut out = Vec::new();
    for (name, prof, upper) in [
        ("u_upper", &env.u_upper, true),
        ("u_lower", &env.u_lower, false),
        ("v_upper", &env.v_upper, true),
        ("v_lower", &env.v_lower, false),
    ] {
        for j in prof.join_points() {
            let l = prof.derivative(j, Side::Left);
            let r = prof.derivative(j, Side::Right);
            let pass = if upper { l >= r - CORNER_TOL } else { l <= r + CORNER_TOL };
            out.push(CornerCheck { profile: name.to_string(), join: j, left_derivative: l, right_derivative: r, pass });
        }
    }
    out
}

/// Residuals of the four differential inequalities on a grid.
///
/// Order: `u_upper` (needs `<= 0`), `u_lower` (`>= 0`), `v_upper` (`<= 0`),
/// `v_lower` (`>= 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityResiduals {
    pub xi: Vec<f64>,
    pub residuals: [Vec<f64>; 4],
    pub skipped: Vec<f64>,
}

impl InequalityResiduals {
    /// Worst residual of each inequality: the maximum for the super
    /// inequalities, the minimum for the sub inequalities.
    pub fn worst(&self) -> [f64; 4] {
        let max = |v: &Vec<f64>| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = |v: &Vec<f64>| v.iter().copied().fold(f64::INFINITY, f64::min);
        [max(&self.residuals[0]), min(&self.residuals[1]), max(&self.residuals[2]), min(&self.residuals[3])]
    }

    /// Sign-normalized worst residuals: nonnegative means satisfied.
    pub fn min_margins(&self) -> [f64; 4] {
        let w = self.worst();
        [-w[0], w[1], -w[2], w[3]]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("xi,u_upper,u_lower,v_upper,v_lower\n");
        for (k, x) in self.xi.iter().enumerate() {
            let r = &self.residuals;
            out.push_str(&format!("{x},{},{},{},{}\n", r[0][k], r[1][k], r[2][k], r[3][k]));
        }
        out
    }
}

/// The four residuals at one point, with closed-form derivatives.
pub fn residuals_at(env: &EnvelopeSet, p: SystemParams, s: f64, x: f64) -> [f64; 4] {
    let SystemParams { a, b, c, d } = p;
    let [uu, uu1, uu2] = env.u_upper.jet(x);
    let [ul, ul1, ul2] = env.u_lower.jet(x);
    let [vu, vu1, vu2] = env.v_upper.jet(x);
    let [vl, vl1, vl2] = env.v_lower.jet(x);
    [
        uu2 - s * uu1 + uu * (1.0 - uu - c * vl),
        ul2 - s * ul1 + ul * (1.0 - ul - c * vu),
        d * vu2 - s * vu1 + vu * (a - b * ul - vu),
        d * vl2 - s * vl1 + vl * (a - b * uu - vl),
    ]
}

pub fn check_differential_inequalities(env: &EnvelopeSet, p: SystemParams, s: f64, grid: &GridSpec) -> InequalityResiduals {
    let (xi, skipped) = grid.points(&env.join_points());
    let rows = par_map(&xi, |&x| residuals_at(env, p, s, x));
    let mut residuals: [Vec<f64>; 4] = Default::default();
    for r in &mut residuals {
        r.reserve(rows.len());
    }
    for row in rows {
        for k in 0..4 {
            residuals[k].push(row[k]);
        }
    }
    InequalityResiduals { xi, residuals, skipped }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub params: SystemParams,
    pub speed: f64,
    pub mode: Mode,
    pub case: EnvelopeCase,
    pub envelope_params: EnvelopeParams,
    /// Worst residual per inequality (see [`InequalityResiduals::worst`]).
    pub worst_residuals: [f64; 4],
    /// Sign-normalized worst residuals; nonnegative (up to 1e-10) passes.
    pub min_margins: [f64; 4],
    pub corner_checks: Vec<CornerCheck>,
    pub ordering: OrderingCheck,
    pub ordering_ok: bool,
    pub grid: GridSpec,
    pub points_checked: usize,
    pub skipped_points: usize,
    pub verdict: Verdict,
    #[serde(skip)]
    pub inequality_margins: Option<InequalityResiduals>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Runs the three checks on an already-built envelope set.
pub fn certify_envelopes(env: &EnvelopeSet, p: SystemParams, mode: Mode, grid: GridSpec) -> Certificate {
    let res = check_differential_inequalities(env, p, env.speed, &grid);
    let (pts, _) = grid.points(&env.join_points());
    let mut order_pts = pts.clone();
    order_pts.extend(env.join_points());
    let ordering = check_ordering(env, &order_pts);
    let corners = check_corners(env);
    let min_margins = res.min_margins();
    let ok = min_margins.iter().all(|&m| m >= -RESIDUAL_TOL) && ordering.ok && corners.iter().all(|c| c.pass);
    Certificate {
        params: p,
        speed: env.speed,
        mode,
        case: env.case,
        envelope_params: env.params.clone(),
        worst_residuals: res.worst(),
        min_margins,
        corner_checks: corners,
        ordering_ok: ordering.ok,
        ordering,
        grid,
        points_checked: res.xi.len(),
        skipped_points: res.skipped.len(),
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
        inequality_margins: Some(res),
    }
}

/// Selects constants, builds the envelopes and checks them.
pub fn certify(p: SystemParams, s: f64, mode: Mode) -> Result<Certificate> {
    certify_with(p, s, &SelectionKnobs::with_mode(mode))
}

pub fn certify_with(p: SystemParams, s: f64, knobs: &SelectionKnobs) -> Result<Certificate> {
    let env = certifiable_envelopes(p, s, knobs)?;
    let grid = GridSpec::default_for(&env);
    Ok(certify_envelopes(&env, p, knobs.mode, grid))
}

/// Preconditions of [`certify`] followed by envelope construction.
pub fn certifiable_envelopes(p: SystemParams, s: f64, knobs: &SelectionKnobs) -> Result<EnvelopeSet> {
    if let Admissibility::TooSlow { .. } = admissibility(p, s) {
        return Err(Error::SubcriticalSpeed { speed: s, critical: critical_speed(p) });
    }
    match classify_regime(p) {
        Regime::StrictWeak => {}
        r => return Err(Error::UnsupportedRegime(r)),
    }
    envelopes_for(p, s, knobs)
}
