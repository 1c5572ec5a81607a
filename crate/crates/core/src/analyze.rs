//! Shape classification, the monotonicity and non-monotonicity criteria,
//! region scans and the subcritical comparison interval.

use serde::{Deserialize, Serialize};

use crate::envelopes::{envelopes_for, EnvelopeSet, Mode, SelectionKnobs};
use crate::model::{classify_regime, coexistence, critical_speed, Regime, SystemParams, EQ_TOL};
use crate::numeric::{linspace, par_map};
use crate::solve::Profile;
use crate::{Error, Result};

/// Extrema smaller than this fraction of the component's range are ignored.
pub const PROMINENCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    U,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtremumKind {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub component: Component,
    pub index: usize,
    pub location: f64,
    pub value: f64,
    pub kind: ExtremumKind,
}

/// Interior extrema of `y` whose rise and fall on both sides exceed
/// `threshold` (zigzag filter).
pub fn prominent_extrema(xs: &[f64], y: &[f64], threshold: f64, component: Component) -> Vec<Extremum> {
    let mut out = Vec::new();
    if y.len() < 3 {
        return out;
    }
    let mut dir = 0i8;
    let mut ext = 0usize;
    for i in 1..y.len() {
        match dir {
            0 => {
                if y[i] - y[0] > threshold {
                    dir = 1;
                    ext = i;
                } else if y[0] - y[i] > threshold {
                    dir = -1;
                    ext = i;
                }
            }
            1 => {
                if y[i] > y[ext] {
                    ext = i;
                } else if y[ext] - y[i] > threshold {
                    out.push(Extremum { component, index: ext, location: xs[ext], value: y[ext], kind: ExtremumKind::Max });
                    dir = -1;
                    ext = i;
                }
            }
            _ => {
                if y[i] < y[ext] {
                    ext = i;
                } else if y[i] - y[ext] > threshold {
                    out.push(Extremum { component, index: ext, location: xs[ext], value: y[ext], kind: ExtremumKind::Min });
                    dir = 1;
                    ext = i;
                }
            }
        }
    }
    out
}

fn range(y: &[f64]) -> f64 {
    let (lo, hi) = y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &x| (l.min(x), h.max(x)));
    hi - lo
}

fn component_extrema(xs: &[f64], y: &[f64], component: Component) -> Vec<Extremum> {
    prominent_extrema(xs, y, PROMINENCE * range(y), component)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShapeTag {
    MonotoneBoth,
    NonMonotoneU,
    NonMonotoneV,
    NonMonotoneBoth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeClass {
    pub tag: ShapeTag,
    pub extrema: Vec<Extremum>,
}

fn shape_of(xs: &[f64], u: &[f64], v: &[f64]) -> ShapeClass {
    let mut extrema = component_extrema(xs, u, Component::U);
    let u_has = !extrema.is_empty();
    let ev = component_extrema(xs, v, Component::V);
    let v_has = !ev.is_empty();
    extrema.extend(ev);
    let tag = match (u_has, v_has) {
        (false, false) => ShapeTag::MonotoneBoth,
        (true, false) => ShapeTag::NonMonotoneU,
        (false, true) => ShapeTag::NonMonotoneV,
        (true, true) => ShapeTag::NonMonotoneBoth,
    };
    ShapeClass { tag, extrema }
}

pub fn classify(prof: &Profile) -> Result<ShapeClass> {
    if !prof.converged {
        return Err(Error::Unconverged);
    }
    Ok(shape_of(&prof.grid, &prof.u, &prof.v))
}

/// Result of a consistency check backed by a proven bound. `alarm` is raised when
/// the computed profile contradicts the statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub hypothesis_holds: bool,
    pub pass: bool,
    pub alarm: Option<String>,
}

/// Profiles strictly inside `(0, u*) x (0, v*)` must be monotone.
pub fn interior_box_implies_monotone(prof: &Profile, p: SystemParams) -> Result<ConsistencyCheck> {
    let class = classify(prof)?;
    let (us, vs) = coexistence(p);
    let inside = prof.u.iter().all(|&x| 0.0 < x && x < us) && prof.v.iter().all(|&x| 0.0 < x && x < vs);
    let pass = !inside || class.tag == ShapeTag::MonotoneBoth;
    Ok(ConsistencyCheck {
        hypothesis_holds: inside,
        pass,
        alarm: (!pass).then(|| format!("profile inside the coexistence box classified {:?}", class.tag)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonMonotoneCondition {
    pub holds: bool,
    /// Maximum of the relevant lower envelope.
    pub fmax: f64,
    /// The equilibrium component it is compared with.
    pub equilibrium: f64,
}

fn lower_envelope(p: SystemParams, s: f64, knobs: &SelectionKnobs, mode: Mode) -> Result<EnvelopeSet> {
    if classify_regime(p) != Regime::StrictWeak {
        return Err(Error::UnsupportedRegime(classify_regime(p)));
    }
    let mut k = knobs.clone();
    k.mode = mode;
    envelopes_for(p, s, &k)
}

/// `max u_lower > u*`, with the non-monotone choice of constants for `u`.
pub fn nonmonotone_condition_u(p: SystemParams, s: f64, knobs: &SelectionKnobs) -> Result<NonMonotoneCondition> {
    let env = lower_envelope(p, s, knobs, Mode::NonMonotoneU)?;
    let us = coexistence(p).0;
    Ok(NonMonotoneCondition { holds: env.lower_max.0 > us, fmax: env.lower_max.0, equilibrium: us })
}

/// `max v_lower > v*`, with the non-monotone choice of constants for `v`.
pub fn nonmonotone_condition_v(p: SystemParams, s: f64, knobs: &SelectionKnobs) -> Result<NonMonotoneCondition> {
    let env = lower_envelope(p, s, knobs, Mode::NonMonotoneV)?;
    let vs = coexistence(p).1;
    Ok(NonMonotoneCondition { holds: env.lower_max.1 > vs, fmax: env.lower_max.1, equilibrium: vs })
}

/// Smallest integer `n` with `2/(n+1) < fmax`.
pub fn example_threshold(fmax: f64) -> u64 {
    let mut n = (2.0 / fmax - 1.0).floor().max(0.0) as u64;
    while 2.0 / (n as f64 + 1.0) >= fmax {
        n += 1;
    }
    while n > 0 && 2.0 / (n as f64) < fmax {
        n -= 1;
    }
    n
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaCriterion {
    /// `0 <= u_lower <= u_upper <= u*` and likewise for `v`.
    pub bounds: bool,
    /// `sup_{t <= x} lower(t) <= upper(x)` for both components.
    pub running_sup: bool,
    /// No constant equilibrium in the product set built from the envelope bounds.
    pub equilibrium_free: bool,
    pub holds: bool,
}

/// Sufficient conditions for a monotone front, checked on `grid`.
pub fn ma_front_criterion(env: &EnvelopeSet, p: SystemParams, grid: &[f64]) -> MaCriterion {
    let (us, vs) = coexistence(p);
    let vals: Vec<[f64; 4]> = grid.iter().map(|&x| env.values(x)).collect();
    let bounds = vals.iter().all(|&[uu, ul, vu, vl]| 0.0 <= ul && ul <= uu && uu <= us && 0.0 <= vl && vl <= vu && vu <= vs);
    let (mut su, mut sv) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut running_sup = true;
    for &[uu, ul, vu, vl] in &vals {
        su = su.max(ul);
        sv = sv.max(vl);
        running_sup &= su <= uu && sv <= vu;
    }
    let inf_uu = vals.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
    let sup_ul = vals.iter().map(|v| v[1]).fold(f64::NEG_INFINITY, f64::max);
    let inf_vu = vals.iter().map(|v| v[2]).fold(f64::INFINITY, f64::min);
    let sup_vl = vals.iter().map(|v| v[3]).fold(f64::NEG_INFINITY, f64::max);
    let in_u = |x: f64| (0.0 < x && x <= inf_uu) || (sup_ul <= x && x < us);
    let in_v = |x: f64| (0.0 < x && x <= inf_vu) || (sup_vl <= x && x < vs);
    let equilibria = [(0.0, 0.0), (1.0, 0.0), (0.0, p.a), (us, vs)];
    let equilibrium_free = !equilibria.iter().any(|&(x, y)| in_u(x) && in_v(y));
    MaCriterion { bounds, running_sup, equilibrium_free, holds: bounds && running_sup && equilibrium_free }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationCoupling {
    pub u_extrema: usize,
    pub v_extrema: usize,
    pub u_oscillates: bool,
    pub v_oscillates: bool,
    pub pass: bool,
    pub alarm: Option<String>,
}

/// Oscillation of one component near `+inf` forces oscillation of the other.
/// Checked on the rightmost quarter of the domain.
pub fn oscillation_coupling(prof: &Profile) -> Result<OscillationCoupling> {
    if !prof.converged {
        return Err(Error::Unconverged);
    }
    Ok(oscillation_of(&prof.grid, &prof.u, &prof.v))
}

pub(crate) fn oscillation_of(xs: &[f64], u: &[f64], v: &[f64]) -> OscillationCoupling {
    let n = xs.len();
    let cut = xs[0] + 0.75 * (xs[n - 1] - xs[0]);
    let start = xs.partition_point(|&x| x < cut);
    let count = |y: &[f64]| prominent_extrema(&xs[start..], &y[start..], PROMINENCE * range(y), Component::U).len();
    let (nu, nv) = (count(u), count(v));
    let (ou, ov) = (nu >= 2, nv >= 2);
    let pass = ou == ov;
    OscillationCoupling {
        u_extrema: nu,
        v_extrema: nv,
        u_oscillates: ou,
        v_oscillates: ov,
        pass,
        alarm: (!pass).then(|| "only one component oscillates near the right end".to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanAxis {
    /// `a - b`, evaluating the `v` condition.
    Gap,
    /// `c`, evaluating the `u` condition.
    C,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanCell {
    /// `false` when the cell's parameters leave the strict weak regime.
    pub valid: bool,
    pub holds: bool,
    pub fmax: f64,
    pub equilibrium: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionScan {
    pub base: SystemParams,
    pub axis: ScanAxis,
    pub s_values: Vec<f64>,
    pub axis_values: Vec<f64>,
    /// `cells[i][j]` at `axis_values[i]`, `s_values[j]`.
    pub cells: Vec<Vec<ScanCell>>,
}

impl RegionScan {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(match self.axis {
            ScanAxis::Gap => "gap\\s",
            ScanAxis::C => "c\\s",
        });
        for s in &self.s_values {
            out.push_str(&format!(",{s}"));
        }
        out.push('\n');
        for (y, row) in self.axis_values.iter().zip(&self.cells) {
            out.push_str(&y.to_string());
            for c in row {
                out.push_str(if !c.valid { ",nan" } else if c.holds { ",1" } else { ",0" });
            }
            out.push('\n');
        }
        out
    }

    pub fn holds(&self, i: usize, j: usize) -> bool {
        self.cells[i][j].valid && self.cells[i][j].holds
    }
}

/// Evaluates the non-monotonicity condition over `s_values x axis_values`.
/// Speeds below `max(s_min, s*)` are dropped from the axis.
pub fn scan_region(
    base: SystemParams,
    s_values: &[f64],
    axis: ScanAxis,
    axis_values: &[f64],
    s_min: f64,
    knobs: &SelectionKnobs,
) -> RegionScan {
    let floor = s_min.max(critical_speed(base));
    let s_values: Vec<f64> = s_values.iter().copied().filter(|&s| s >= floor - EQ_TOL).collect();
    let jobs: Vec<(f64, f64)> = axis_values.iter().flat_map(|&y| s_values.iter().map(move |&s| (y, s))).collect();
    let flat = par_map(&jobs, |&(y, s)| {
        let p = match axis {
            ScanAxis::Gap => SystemParams { b: base.a - y, ..base },
            ScanAxis::C => SystemParams { c: y, ..base },
        };
        let res = if p.validate().is_err() || classify_regime(p) != Regime::StrictWeak {
            None
        } else {
            match axis {
                ScanAxis::Gap => nonmonotone_condition_v(p, s, knobs).ok(),
                ScanAxis::C => nonmonotone_condition_u(p, s, knobs).ok(),
            }
        };
        match res {
            Some(r) => ScanCell { valid: true, holds: r.holds, fmax: r.fmax, equilibrium: r.equilibrium },
            None => ScanCell { valid: false, holds: false, fmax: f64::NAN, equilibrium: f64::NAN },
        }
    });
    let cells = if s_values.is_empty() { vec![Vec::new(); axis_values.len()] } else { flat.chunks(s_values.len()).map(|c| c.to_vec()).collect() };
    RegionScan { base, axis, s_values, axis_values: axis_values.to_vec(), cells }
}

/// Evenly spaced values, convenient for scan axes.
pub fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo, hi, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SturmInterval {
    pub m: u64,
    pub xi1: f64,
    pub xi2: f64,
    /// Minimum of `1 - s^2/4 - u - c v` over the interval, when a profile is supplied.
    pub psi_min: Option<f64>,
    pub psi_exceeds_eps: Option<bool>,
}

/// The comparison interval `(-2M pi/sqrt(eps), -(2M-1) pi/sqrt(eps))` for the
/// smallest `M` placing it left of `-L`.
pub fn sturm_interval(p: SystemParams, s: f64, eps: f64, l: f64, prof: Option<&Profile>) -> Result<SturmInterval> {
    if !(s > 0.0 && s < 2.0) {
        return Err(Error::NotSubcritical);
    }
    let bound = 1.0 - s * s / 4.0;
    if !(eps > 0.0 && eps < bound) {
        return Err(Error::EpsOutOfRange { eps, bound });
    }
    let w = std::f64::consts::PI / eps.sqrt();
    let mut m = ((l / w + 1.0) / 2.0).ceil().max(1.0) as u64;
    while m > 1 && (2.0 * (m - 1) as f64 - 1.0) * w > l {
        m -= 1;
    }
    while (2.0 * m as f64 - 1.0) * w <= l {
        m += 1;
    }
    let (xi1, xi2) = (-2.0 * m as f64 * w, -(2.0 * m as f64 - 1.0) * w);
    let psi_min = prof.map(|pr| {
        pr.grid
            .iter()
            .zip(pr.u.iter().zip(&pr.v))
            .filter(|(&x, _)| xi1 <= x && x <= xi2)
            .map(|(_, (&u, &v))| bound - u - p.c * v)
            .fold(f64::INFINITY, f64::min)
    });
    Ok(SturmInterval { m, xi1, xi2, psi_min, psi_exceeds_eps: psi_min.map(|x| x > eps) })
}
