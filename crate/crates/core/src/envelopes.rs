//! Explicit super/sub-solution envelopes and the rules that select their constants.

use serde::{Deserialize, Serialize};

use crate::model::{
    classify_regime, critical_speed, decay_rates, is_critical_speed, DecayRates, Regime,
    SpeciesSwap, SystemParams, EQ_TOL,
};
use crate::numeric::{bisect, linspace};
use crate::piecewise::{PiecewiseProfile, Shape};
use crate::{Error, Result};

/// Zero, argmax and maximum of a bump on the negative half-line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpExtrema {
    pub xi0: f64,
    pub xi_max: f64,
    pub max: f64,
}

/// Extrema of `coef e^{lambda x} - q e^{mu lambda x}`.
pub fn bump_extrema(coef: f64, lambda: f64, mu: f64, q: f64) -> Result<BumpExtrema> {
    if !(q > coef) {
        return Err(Error::NoInteriorZero { coef, q });
    }
    let k = (mu - 1.0) * lambda;
    Ok(BumpExtrema {
        xi0: -(q / coef).ln() / k,
        xi_max: -(q * mu / coef).ln() / k,
        max: coef * (1.0 - 1.0 / mu) * (q * mu / coef).powf(-1.0 / (mu - 1.0)),
    })
}

/// Natural log of `g(x) = (-h x - q sqrt(-x)) e^{lambda x}` at `x = -y`.
fn gbump_ln(h: f64, q: f64, lambda: f64, y: f64) -> f64 {
    (h * y - q * y.sqrt()).ln() - lambda * y
}

/// Extrema of `g(x) = (-h x - q sqrt(-x)) e^{lambda x}`.
///
/// The zero is `-(q/h)^2`. The maximum is the unique root of the logarithmic
/// derivative to the left of the zero, found by bisection.
pub fn gbump_extrema(h: f64, q: f64, lambda: f64) -> BumpExtrema {
    let y0 = (q / h).powi(2);
    // d/dy ln g = (h - q/(2 sqrt y)) / (h y - q sqrt y) - lambda
    let dlog = |y: f64| {
        let sy = y.sqrt();
        (h - q / (2.0 * sy)) / (h * y - q * sy) - lambda
    };
    let mut hi = y0 + 1.0 / lambda + 1.0;
    while dlog(hi) > 0.0 {
        hi = y0 + 2.0 * (hi - y0);
    }
    let lo = y0 * (1.0 + 1e-15) + f64::MIN_POSITIVE;
    let y_max = bisect(dlog, lo, hi).unwrap_or(hi);
    BumpExtrema { xi0: -y0, xi_max: -y_max, max: gbump_ln(h, q, lambda, y_max).exp() }
}

/// Point in `bracket = (xi_max, xi0)` where the decreasing branch of `shape`
/// equals `delta`.
pub fn join_point(shape: &Shape, delta: f64, bracket: (f64, f64)) -> Result<f64> {
    let (lo, hi) = bracket;
    let top = shape.value(lo);
    if delta >= top {
        return Err(Error::DeltaAboveMax { delta, max: top });
    }
    let x = bisect(|x| shape.value(x) - delta, lo, hi)
        .ok_or(Error::NoContinuityPoint { lo, hi })?;
    let [f, df, _] = shape.jet(x);
    if (f - delta).abs() > 1e-12 || !(df < 0.0 || x == lo) {
        return Err(Error::NoContinuityPoint { lo, hi });
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Default,
    #[serde(rename = "nonmonotone-u")]
    NonMonotoneU,
    #[serde(rename = "nonmonotone-v")]
    NonMonotoneV,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Mode::Default),
            "nonmonotone-u" => Ok(Mode::NonMonotoneU),
            "nonmonotone-v" => Ok(Mode::NonMonotoneV),
            other => Err(Error::InvalidConfig(format!("unknown mode {other:?}"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Default => "default",
            Mode::NonMonotoneU => "nonmonotone-u",
            Mode::NonMonotoneV => "nonmonotone-v",
        })
    }
}

/// Lower bound used for the root-exponential constants at the critical speed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriticalFloor {
    /// The same residual estimate with the supremum taken only over the
    /// support of the bump. Gives constants whose maxima stay representable.
    #[default]
    Sharp,
    /// Suprema over the whole negative half-line.
    Literal,
}

/// Tunable choices inside the admissible constant ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionKnobs {
    pub mode: Mode,
    /// Position of `mu` inside its admissible interval, in `(0, 1)`.
    pub mu_fraction: f64,
    /// Factor applied to the lower bounds on `q`.
    pub q_safety: f64,
    /// Fraction of the upper bound on `delta`.
    pub delta_fraction: f64,
    pub mu1: Option<f64>,
    pub mu2: Option<f64>,
    pub q1: Option<f64>,
    pub q2: Option<f64>,
    pub delta1: Option<f64>,
    pub delta2: Option<f64>,
    pub critical_floor: CriticalFloor,
    /// Allow the critical construction with `ad > 1` through the species swap.
    pub species_swap: bool,
}

impl Default for SelectionKnobs {
    fn default() -> Self {
        SelectionKnobs {
            mode: Mode::Default,
            mu_fraction: 0.5,
            q_safety: 1.1,
            delta_fraction: 0.5,
            mu1: None,
            mu2: None,
            q1: None,
            q2: None,
            delta1: None,
            delta2: None,
            critical_floor: CriticalFloor::Sharp,
            species_swap: true,
        }
    }
}

impl SelectionKnobs {
    pub fn with_mode(mode: Mode) -> Self {
        SelectionKnobs { mode, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvelopeCase {
    Supercritical,
    CriticalAdEq1,
    CriticalAdLt1,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupercriticalConstants {
    pub mu1: f64,
    pub mu2: f64,
    pub q1: f64,
    pub q2: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub xi1: f64,
    pub xi2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalConstants {
    pub h1: f64,
    pub h2: Option<f64>,
    pub qhat1: f64,
    pub qhat2: Option<f64>,
    pub deltahat1: f64,
    pub deltahat2: f64,
    pub xihat1: f64,
    pub xihat2: f64,
    pub muhat2: Option<f64>,
    #[serde(rename = "Qhat2")]
    pub big_qhat2: Option<f64>,
}

/// A named strict inequality from the selection rules with its slack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleMargin {
    pub rule: String,
    pub margin: f64,
}

/// How the stored constants map to the original system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapInfo {
    /// Parameters the constants were selected for.
    pub params: SystemParams,
    pub speed: f64,
    pub x_scale: f64,
    pub value_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub case: EnvelopeCase,
    pub rates: DecayRates,
    pub supercritical: Option<SupercriticalConstants>,
    pub critical: Option<CriticalConstants>,
    /// Set when the constants belong to the species-swapped system.
    pub swap: Option<SwapInfo>,
    pub margins: Vec<RuleMargin>,
}

impl EnvelopeParams {
    pub fn min_margin(&self) -> f64 {
        self.margins.iter().map(|m| m.margin).fold(f64::INFINITY, f64::min)
    }
}

fn margin(rule: &str, value: f64) -> RuleMargin {
    RuleMargin { rule: rule.to_string(), margin: value }
}

/// One bump component: `coef e^{lx} - q e^{mu l x}` with
/// `den(mu) = -k (mu l)^2 + s mu l - coef` and `q > max(1, coef, numer/den)`.
struct BumpRule {
    coef: f64,
    lambda: f64,
    k: f64,
    s: f64,
    numer: f64,
    cap: f64,
}

impl BumpRule {
    fn den(&self, mu: f64) -> f64 {
        let x = mu * self.lambda;
        -self.k * x * x + self.s * x - self.coef
    }

    fn q_floor(&self, mu: f64) -> f64 {
        f64::max(f64::max(1.0, self.coef), self.numer / self.den(mu))
    }

    /// `q` for a given `mu`: the non-monotone choice `2 coef^2 / den` when it
    /// clears the floor, otherwise the floor times the safety factor.
    fn q_for(&self, mu: f64, nonmonotone: bool, safety: f64) -> f64 {
        let floor = self.q_floor(mu);
        let q_nm = 2.0 * self.coef * self.coef / self.den(mu);
        if nonmonotone && q_nm > floor {
            q_nm
        } else {
            safety * floor
        }
    }

    fn pick(&self, knobs: &SelectionKnobs, nonmonotone: bool, mu: Option<f64>, q: Option<f64>) -> (f64, f64) {
        let mu = mu.unwrap_or_else(|| {
            if nonmonotone && q.is_none() {
                // Largest envelope maximum over a fixed grid of placements.
                let mut best = (f64::NEG_INFINITY, 1.0 + knobs.mu_fraction * (self.cap - 1.0));
                for i in 1..50 {
                    let m = 1.0 + (i as f64 / 50.0) * (self.cap - 1.0);
                    let qq = self.q_for(m, true, knobs.q_safety);
                    if let Ok(e) = bump_extrema(self.coef, self.lambda, m, qq) {
                        if e.max > best.0 {
                            best = (e.max, m);
                        }
                    }
                }
                best.1
            } else {
                1.0 + knobs.mu_fraction * (self.cap - 1.0)
            }
        });
        let q = q.unwrap_or_else(|| self.q_for(mu, nonmonotone, knobs.q_safety));
        (mu, q)
    }
}

fn require_strict_weak(p: SystemParams) -> Result<()> {
    match classify_regime(p) {
        Regime::StrictWeak => Ok(()),
        r => Err(Error::UnsupportedRegime(r)),
    }
}

/// Constants for `s > s*`.
pub fn select_supercritical(p: SystemParams, s: f64, knobs: &SelectionKnobs) -> Result<EnvelopeParams> {
    require_strict_weak(p)?;
    let critical = critical_speed(p);
    if s <= critical + EQ_TOL {
        return Err(Error::NotSupercritical { speed: s, critical });
    }
    let r = decay_rates(p, s)?;
    let (l1, l2, l3, l4) = (r.lambda1, r.lambda2, r.lambda3, r.lambda4);
    let SystemParams { a, b, c, d } = p;

    let rule_u = BumpRule {
        coef: 1.0,
        lambda: l1,
        k: 1.0,
        s,
        numer: 1.0 + a * c,
        cap: (l3 / l1).min((l1 + l2) / l1).min(2.0),
    };
    let rule_v = BumpRule {
        coef: a,
        lambda: l2,
        k: d,
        s,
        numer: a * a + a * b,
        cap: (l4 / l2).min((l1 + l2) / l2).min(2.0),
    };
    let (mu1, q1) = rule_u.pick(knobs, knobs.mode == Mode::NonMonotoneU, knobs.mu1, knobs.q1);
    let (mu2, q2) = rule_v.pick(knobs, knobs.mode == Mode::NonMonotoneV, knobs.mu2, knobs.q2);

    let f1 = bump_extrema(1.0, l1, mu1, q1)?;
    let f2 = bump_extrema(a, l2, mu2, q2)?;
    let cap1 = (1.0 - a * c).min(f1.max);
    let cap2 = (a - b).min(f2.max);
    let delta1 = knobs.delta1.unwrap_or(knobs.delta_fraction * cap1);
    let delta2 = knobs.delta2.unwrap_or(knobs.delta_fraction * cap2);
    let xi1 = join_point(&Shape::Bump { coef: 1.0, rate: l1, mu: mu1, q: q1 }, delta1, (f1.xi_max, f1.xi0))?;
    let xi2 = join_point(&Shape::Bump { coef: a, rate: l2, mu: mu2, q: q2 }, delta2, (f2.xi_max, f2.xi0))?;

    let margins = vec![
        margin("mu1 > 1", mu1 - 1.0),
        margin("mu1 < min(l3/l1, (l1+l2)/l1, 2)", rule_u.cap - mu1),
        margin("mu2 > 1", mu2 - 1.0),
        margin("mu2 < min(l4/l2, (l1+l2)/l2, 2)", rule_v.cap - mu2),
        margin("q1 > max(1, (1+ac)/den1)", q1 - rule_u.q_floor(mu1)),
        margin("q2 > max(1, a, (a^2+ab)/den2)", q2 - rule_v.q_floor(mu2)),
        margin("delta1 > 0", delta1),
        margin("delta1 < min(1-ac, max f1)", cap1 - delta1),
        margin("delta2 > 0", delta2),
        margin("delta2 < min(a-b, max f2)", cap2 - delta2),
    ];
    Ok(EnvelopeParams {
        case: EnvelopeCase::Supercritical,
        rates: r,
        supercritical: Some(SupercriticalConstants { mu1, mu2, q1, q2, delta1, delta2, xi1, xi2 }),
        critical: None,
        swap: None,
        margins,
    })
}

/// `sup_{y >= y0} y^p e^{-lambda y}`.
fn tail_sup(p: f64, lambda: f64, y0: f64) -> f64 {
    if y0 <= p / lambda {
        (p / (std::f64::consts::E * lambda)).powf(p)
    } else {
        y0.powf(p) * (-lambda * y0).exp()
    }
}

/// Smallest `q` with `k q / 4 >= rhs((q/h)^2)`, for `rhs` nonincreasing.
fn min_q_for<F: Fn(f64) -> f64>(k: f64, h: f64, rhs: F, q_hi: f64) -> f64 {
    let ok = |q: f64| k * q / 4.0 - rhs((q / h).powi(2));
    let lo = q_hi * 1e-12;
    if ok(lo) >= 0.0 {
        return lo;
    }
    if ok(q_hi) < 0.0 {
        return q_hi;
    }
    // Return the upper end of the final bracket so the condition holds.
    let mut lo = lo;
    let mut hi = q_hi;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn representable_gbump(h: f64, q: f64, lambda: f64) -> Result<BumpExtrema> {
    let g = gbump_extrema(h, q, lambda);
    let log10 = gbump_ln(h, q, lambda, -g.xi_max) / std::f64::consts::LN_10;
    if !(g.max > 1e-290) {
        return Err(Error::EnvelopeUnderflow(log10));
    }
    Ok(g)
}

/// Constants for `s = s*` with `ad <= 1`.
///
/// With `ad > 1` the constants are selected for the species-swapped system
/// (where `ad < 1`) when `knobs.species_swap` is set; [`build_envelopes`] maps
/// them back.
pub fn select_critical(p: SystemParams, knobs: &SelectionKnobs) -> Result<EnvelopeParams> {
    require_strict_weak(p)?;
    let ad = p.a * p.d;
    if ad > 1.0 + EQ_TOL {
        if !knobs.species_swap {
            return Err(Error::NeedsSpeciesSwap(ad));
        }
        let swap = SpeciesSwap { original: p };
        let sp = swap.params();
        let s_sw = critical_speed(sp);
        let mut knobs_sw = knobs.clone();
        knobs_sw.mode = match knobs.mode {
            Mode::NonMonotoneU => Mode::NonMonotoneV,
            Mode::NonMonotoneV => Mode::NonMonotoneU,
            Mode::Default => Mode::Default,
        };
        std::mem::swap(&mut knobs_sw.mu1, &mut knobs_sw.mu2);
        std::mem::swap(&mut knobs_sw.q1, &mut knobs_sw.q2);
        std::mem::swap(&mut knobs_sw.delta1, &mut knobs_sw.delta2);
        knobs_sw.species_swap = false;
        let mut ep = select_critical(sp, &knobs_sw)?;
        ep.swap = Some(SwapInfo {
            params: sp,
            speed: s_sw,
            x_scale: swap.space_scale(),
            value_scale: swap.value_scale(),
        });
        return Ok(ep);
    }

    let s = critical_speed(p);
    let r = decay_rates(p, s)?;
    let SystemParams { a, b, c, d } = p;
    let l1h = r.hat_lambda1.expect("critical rates");
    let l2h = r.hat_lambda2.expect("critical rates");
    let e = std::f64::consts::E;
    let t_inf = |pw: f64, l: f64| (pw / (e * l)).powf(pw);
    let h1 = l1h / (l1h + 1.0) * (l1h + 1.0).exp();
    let literal_mode = knobs.critical_floor == CriticalFloor::Literal;
    let mut margins = Vec::new();

    if (ad - 1.0).abs() <= EQ_TOL {
        let h2 = a * l2h / (l2h + 1.0) * (l2h + 1.0).exp();
        let geom = (1.0 / l1h).max(1.0 / l2h) + 1.0;
        let root1 = (h1 * (1.0 / r.lambda1 + 1.0)).sqrt();
        let root2 = (h2 * (1.0 / r.lambda2 + 1.0)).sqrt();
        let literal1 = 4.0 * (c * h1 * h2 * t_inf(3.5, l2h) + h1 * h1 * t_inf(3.5, l1h));
        let literal2 = 4.0 / d * (b * h1 * h2 * t_inf(3.5, l1h) + h2 * h2 * t_inf(3.5, l2h));
        let (floor1, floor2) = if literal_mode {
            (root1.max(literal1), root2.max(literal2))
        } else {
            let s1 = min_q_for(1.0, h1, |y| h1 * h1 * tail_sup(3.5, l1h, y) + c * h1 * h2 * tail_sup(3.5, l2h, y), literal1.max(1.0));
            let s2 = min_q_for(d, h2, |y| h2 * h2 * tail_sup(3.5, l2h, y) + b * h1 * h2 * tail_sup(3.5, l1h, y), literal2.max(1.0));
            (root1.max(h1 * geom.sqrt()).max(s1), root2.max(h2 * geom.sqrt()).max(s2))
        };
        let q1 = knobs.q1.unwrap_or(knobs.q_safety * floor1);
        let q2 = knobs.q2.unwrap_or(knobs.q_safety * floor2);
        let g1 = representable_gbump(h1, q1, l1h)?;
        let g2 = representable_gbump(h2, q2, l2h)?;
        let cap1 = (1.0 - a * c).min(g1.max);
        let cap2 = (a - b).min(g2.max);
        let delta1 = knobs.delta1.unwrap_or(knobs.delta_fraction * cap1);
        let delta2 = knobs.delta2.unwrap_or(knobs.delta_fraction * cap2);
        let xi1 = join_point(&Shape::RootExp { h: h1, q: q1, rate: l1h }, delta1, (g1.xi_max, g1.xi0))?;
        let xi2 = join_point(&Shape::RootExp { h: h2, q: q2, rate: l2h }, delta2, (g2.xi_max, g2.xi0))?;
        margins.push(margin("qhat1 > floor", q1 - floor1));
        margins.push(margin("qhat2 > floor", q2 - floor2));
        margins.push(margin("deltahat1 > 0", delta1));
        margins.push(margin("deltahat1 < min(1-ac, max g1)", cap1 - delta1));
        margins.push(margin("deltahat2 > 0", delta2));
        margins.push(margin("deltahat2 < min(a-b, max g2)", cap2 - delta2));
        return Ok(EnvelopeParams {
            case: EnvelopeCase::CriticalAdEq1,
            rates: r,
            supercritical: None,
            critical: Some(CriticalConstants {
                h1,
                h2: Some(h2),
                qhat1: q1,
                qhat2: Some(q2),
                deltahat1: delta1,
                deltahat2: delta2,
                xihat1: xi1,
                xihat2: xi2,
                muhat2: None,
                big_qhat2: None,
            }),
            swap: None,
            margins,
        });
    }

    // ad < 1: the v-envelopes are exponential with the simple root l2.
    let l2 = r.lambda2;
    let root1 = (h1 * (1.0 / r.lambda1 + 1.0)).sqrt();
    let literal1 = 4.0 * (c * a * h1 * t_inf(2.5, l2) + h1 * h1 * t_inf(3.5, l1h));
    let floor1 = if literal_mode {
        root1.max(literal1)
    } else {
        let s1 = min_q_for(1.0, h1, |y| h1 * h1 * tail_sup(3.5, l1h, y) + c * a * h1 * tail_sup(2.5, l2, y), literal1.max(1.0));
        root1.max(h1 * (1.0 / l1h + 1.0).sqrt()).max(s1)
    };
    let q1 = knobs.q1.unwrap_or(knobs.q_safety * floor1);
    let g1 = representable_gbump(h1, q1, l1h)?;
    let cap1 = (1.0 - a * c).min(g1.max);
    let delta1 = knobs.delta1.unwrap_or(knobs.delta_fraction * cap1);
    let xi1 = join_point(&Shape::RootExp { h: h1, q: q1, rate: l1h }, delta1, (g1.xi_max, g1.xi0))?;

    let rule_v = BumpRule {
        coef: a,
        lambda: l2,
        k: d,
        s,
        numer: a * a + 2.0 * a * b * h1 * (-1.0f64).exp() / l1h,
        cap: (r.lambda4 / l2).min(1.0 + l1h / (2.0 * l2)).min(2.0),
    };
    let (mu2, big_q2) = rule_v.pick(knobs, knobs.mode == Mode::NonMonotoneV, knobs.mu2, knobs.q2);
    let f2 = bump_extrema(a, l2, mu2, big_q2)?;
    let cap2 = (a - b).min(f2.max);
    let delta2 = knobs.delta2.unwrap_or(knobs.delta_fraction * cap2);
    let xi2 = join_point(&Shape::Bump { coef: a, rate: l2, mu: mu2, q: big_q2 }, delta2, (f2.xi_max, f2.xi0))?;
    margins.push(margin("qhat1 > floor", q1 - floor1));
    margins.push(margin("muhat2 > 1", mu2 - 1.0));
    margins.push(margin("muhat2 < min(l4/l2, 1+l1/(2 l2), 2)", rule_v.cap - mu2));
    margins.push(margin("Qhat2 > max(1, a, numer/den)", big_q2 - rule_v.q_floor(mu2)));
    margins.push(margin("deltahat1 > 0", delta1));
    margins.push(margin("deltahat1 < min(1-ac, max g1)", cap1 - delta1));
    margins.push(margin("deltahat2 > 0", delta2));
    margins.push(margin("deltahat2 < min(a-b, max f2)", cap2 - delta2));
    Ok(EnvelopeParams {
        case: EnvelopeCase::CriticalAdLt1,
        rates: r,
        supercritical: None,
        critical: Some(CriticalConstants {
            h1,
            h2: None,
            qhat1: q1,
            qhat2: None,
            deltahat1: delta1,
            deltahat2: delta2,
            xihat1: xi1,
            xihat2: xi2,
            muhat2: Some(mu2),
            big_qhat2: Some(big_q2),
        }),
        swap: None,
        margins,
    })
}

/// Selects constants for whichever case `s` falls in.
pub fn select(p: SystemParams, s: f64, knobs: &SelectionKnobs) -> Result<EnvelopeParams> {
    let critical = critical_speed(p);
    if s < critical - EQ_TOL {
        return Err(Error::SubcriticalSpeed { speed: s, critical });
    }
    if is_critical_speed(p, s) {
        select_critical(p, knobs)
    } else {
        select_supercritical(p, s, knobs)
    }
}

/// The four envelopes `u_upper >= u_lower`, `v_upper >= v_lower`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSet {
    pub u_upper: PiecewiseProfile,
    pub u_lower: PiecewiseProfile,
    pub v_upper: PiecewiseProfile,
    pub v_lower: PiecewiseProfile,
    pub params: EnvelopeParams,
    pub speed: f64,
    pub case: EnvelopeCase,
    /// Maxima of `u_lower` and `v_lower`.
    pub lower_max: (f64, f64),
}

impl EnvelopeSet {
    pub fn profiles(&self) -> [&PiecewiseProfile; 4] {
        [&self.u_upper, &self.u_lower, &self.v_upper, &self.v_lower]
    }

    /// All join points of the four envelopes, sorted and deduplicated.
    pub fn join_points(&self) -> Vec<f64> {
        let mut j: Vec<f64> = self.profiles().iter().flat_map(|p| p.join_points()).collect();
        j.sort_by(f64::total_cmp);
        j.dedup();
        j
    }

    /// Smallest exponential rate among the left tails, in outer coordinates.
    pub fn min_rate(&self) -> f64 {
        let r = &self.params.rates;
        let base = match self.case {
            EnvelopeCase::Supercritical => r.lambda1.min(r.lambda2),
            _ => r.hat_lambda1.unwrap_or(r.lambda1).min(r.hat_lambda2.unwrap_or(r.lambda2)),
        };
        match self.params.swap {
            Some(sw) => base / sw.x_scale,
            None => base,
        }
    }

    /// `[u_upper, u_lower, v_upper, v_lower]` at `x`.
    pub fn values(&self, x: f64) -> [f64; 4] {
        [self.u_upper.value(x), self.u_lower.value(x), self.v_upper.value(x), self.v_lower.value(x)]
    }

    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.u_upper = self.u_upper.shifted(delta);
        out.u_lower = self.u_lower.shifted(delta);
        out.v_upper = self.v_upper.shifted(delta);
        out.v_lower = self.v_lower.shifted(delta);
        out
    }

    /// CSV with columns `xi,u_upper,u_lower,v_upper,v_lower`.
    pub fn dump_csv(&self, grid: &[f64]) -> String {
        let mut out = String::from("xi,u_upper,u_lower,v_upper,v_lower\n");
        for &x in grid {
            let [a, b, c, d] = self.values(x);
            out.push_str(&format!("{x},{a},{b},{c},{d}\n"));
        }
        out
    }

    /// Default sampling window for dumps and plots.
    pub fn default_window(&self) -> (f64, f64) {
        let j = self.join_points();
        (j[0] - 20.0 / self.min_rate(), 20.0)
    }

    pub fn sample(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.default_window();
        linspace(lo, hi, n)
    }
}

fn upper_pieces(rate: f64, top: f64) -> PiecewiseProfile {
    PiecewiseProfile::new(vec![0.0], vec![Shape::Exponential { amp: top, rate }, Shape::Constant { value: top }])
}

fn critical_upper(h: f64, rate: f64, top: f64) -> PiecewiseProfile {
    PiecewiseProfile::new(
        vec![-1.0 / rate - 1.0],
        vec![Shape::LinearExp { h, rate }, Shape::Constant { value: top }],
    )
}

fn lower_pieces(shape: Shape, join: f64, delta: f64) -> PiecewiseProfile {
    PiecewiseProfile::new(vec![join], vec![shape, Shape::Constant { value: delta }])
}

/// Assembles the piecewise envelopes for selected constants.
pub fn build_envelopes(p: SystemParams, s: f64, ep: &EnvelopeParams) -> Result<EnvelopeSet> {
    let pp = ep.swap.map_or(p, |sw| sw.params);
    let a = pp.a;
    let r = &ep.rates;
    let (mut uu, mut ul, mut vu, mut vl, mut maxes) = match ep.case {
        EnvelopeCase::Supercritical => {
            let k = ep.supercritical.ok_or_else(|| Error::InvalidConfig("missing constants".into()))?;
            let f1 = bump_extrema(1.0, r.lambda1, k.mu1, k.q1)?;
            let f2 = bump_extrema(a, r.lambda2, k.mu2, k.q2)?;
            (
                upper_pieces(r.lambda1, 1.0),
                lower_pieces(Shape::Bump { coef: 1.0, rate: r.lambda1, mu: k.mu1, q: k.q1 }, k.xi1, k.delta1),
                upper_pieces(r.lambda2, a),
                lower_pieces(Shape::Bump { coef: a, rate: r.lambda2, mu: k.mu2, q: k.q2 }, k.xi2, k.delta2),
                (f1.max, f2.max),
            )
        }
        EnvelopeCase::CriticalAdEq1 | EnvelopeCase::CriticalAdLt1 => {
            let k = ep.critical.ok_or_else(|| Error::InvalidConfig("missing constants".into()))?;
            let l1h = r.hat_lambda1.unwrap_or(r.lambda1);
            let g1 = gbump_extrema(k.h1, k.qhat1, l1h);
            let uu = critical_upper(k.h1, l1h, 1.0);
            let ul = lower_pieces(Shape::RootExp { h: k.h1, q: k.qhat1, rate: l1h }, k.xihat1, k.deltahat1);
            if ep.case == EnvelopeCase::CriticalAdEq1 {
                let l2h = r.hat_lambda2.unwrap_or(r.lambda2);
                let h2 = k.h2.ok_or_else(|| Error::InvalidConfig("missing h2".into()))?;
                let q2 = k.qhat2.ok_or_else(|| Error::InvalidConfig("missing qhat2".into()))?;
                let g2 = gbump_extrema(h2, q2, l2h);
                (
                    uu,
                    ul,
                    critical_upper(h2, l2h, a),
                    lower_pieces(Shape::RootExp { h: h2, q: q2, rate: l2h }, k.xihat2, k.deltahat2),
                    (g1.max, g2.max),
                )
            } else {
                let mu2 = k.muhat2.ok_or_else(|| Error::InvalidConfig("missing muhat2".into()))?;
                let q2 = k.big_qhat2.ok_or_else(|| Error::InvalidConfig("missing Qhat2".into()))?;
                let f2 = bump_extrema(a, r.lambda2, mu2, q2)?;
                (
                    uu,
                    ul,
                    PiecewiseProfile::new(
                        vec![0.0],
                        vec![Shape::Exponential { amp: a, rate: r.lambda2 }, Shape::Constant { value: a }],
                    ),
                    lower_pieces(Shape::Bump { coef: a, rate: r.lambda2, mu: mu2, q: q2 }, k.xihat2, k.deltahat2),
                    (g1.max, f2.max),
                )
            }
        }
    };
    if let Some(sw) = ep.swap {
        // u = a V(xi/k), v = a U(xi/k) with (U, V) the swapped species.
        let (k, m) = (sw.x_scale, sw.value_scale);
        let (nu_u, nu_l) = (vu.rescaled(k, m), vl.rescaled(k, m));
        let (nv_u, nv_l) = (uu.rescaled(k, m), ul.rescaled(k, m));
        uu = nu_u;
        ul = nu_l;
        vu = nv_u;
        vl = nv_l;
        maxes = (m * maxes.1, m * maxes.0);
    }
    for (name, prof) in [("u_upper", &uu), ("u_lower", &ul), ("v_upper", &vu), ("v_lower", &vl)] {
        let defect = prof.continuity_defect();
        if defect > 1e-10 {
            return Err(Error::InvalidConfig(format!("{name} is discontinuous (jump {defect})")));
        }
    }
    Ok(EnvelopeSet {
        u_upper: uu,
        u_lower: ul,
        v_upper: vu,
        v_lower: vl,
        params: ep.clone(),
        speed: s,
        case: ep.case,
        lower_max: maxes,
    })
}

/// Selection followed by construction.
pub fn envelopes_for(p: SystemParams, s: f64, knobs: &SelectionKnobs) -> Result<EnvelopeSet> {
    let ep = select(p, s, knobs)?;
    build_envelopes(p, s, &ep)
}
