//! Parameters, regimes, equilibria, critical speed and linear decay rates.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Equality tolerance for the regime boundaries `ac = 1`, `a = b` and `s = s*`.
pub const EQ_TOL: f64 = 1e-12;

/// Coefficients of the system. `a` is the carrying capacity of `v`, `b` and
/// `c` the competition coefficients, `d` the diffusivity of `v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl SystemParams {
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let p = SystemParams { a, b, c, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)] {
            if !(x.is_finite() && x > 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {x} must be positive")));
            }
        }
        Ok(())
    }

    /// Parameters of the system obtained by exchanging the roles of the two
    /// species: `(a, b, c, d) -> (1/a, c, b, 1/d)`. The map is an involution.
    pub fn swapped(&self) -> SystemParams {
        SystemParams { a: 1.0 / self.a, b: self.c, c: self.b, d: 1.0 / self.d }
    }
}

impl fmt::Display for SystemParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a={}, b={}, c={}, d={}", self.a, self.b, self.c, self.d)
    }
}

/// The species swap in wave coordinates.
///
/// With `k = sqrt(d/a)`, a wave `(u, v)` of speed `s` corresponds to the wave
/// `U(x) = v(k x)/a`, `V(x) = u(k x)/a` of the swapped system at speed
/// `s/sqrt(ad)`. Mapping back: `u(xi) = a V(xi/k)`, `v(xi) = a U(xi/k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeciesSwap {
    pub original: SystemParams,
}

impl SpeciesSwap {
    pub fn params(&self) -> SystemParams {
        self.original.swapped()
    }

    pub fn speed(&self, s: f64) -> f64 {
        s / (self.original.a * self.original.d).sqrt()
    }

    /// Spatial scale `k`: original abscissa = `k` times swapped abscissa.
    pub fn space_scale(&self) -> f64 {
        (self.original.d / self.original.a).sqrt()
    }

    /// Factor applied to swapped values when mapping back.
    pub fn value_scale(&self) -> f64 {
        self.original.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    StrictWeak,
    CriticalWeakC,
    CriticalWeakB,
    OutOfScope,
}

pub fn classify_regime(p: SystemParams) -> Regime {
    classify_regime_with_tol(p, EQ_TOL)
}

pub fn classify_regime_with_tol(p: SystemParams, tol: f64) -> Regime {
    let ac_one = (p.a * p.c - 1.0).abs() <= tol;
    let a_eq_b = (p.a - p.b).abs() <= tol;
    if ac_one {
        if p.b < p.a && !a_eq_b {
            Regime::CriticalWeakC
        } else {
            Regime::OutOfScope
        }
    } else if a_eq_b {
        if p.a * p.c < 1.0 {
            Regime::CriticalWeakB
        } else {
            Regime::OutOfScope
        }
    } else if p.b < p.a && p.a * p.c < 1.0 {
        Regime::StrictWeak
    } else {
        Regime::OutOfScope
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Equilibria {
    pub extinction: (f64, f64),
    pub semitrivial_u: (f64, f64),
    pub semitrivial_v: (f64, f64),
    pub coexistence: Option<(f64, f64)>,
}

pub fn equilibria(p: SystemParams) -> Result<Equilibria> {
    let coexistence = match classify_regime(p) {
        Regime::StrictWeak => Some(coexistence(p)),
        Regime::CriticalWeakC => Some((0.0, p.a)),
        Regime::CriticalWeakB => Some((1.0, 0.0)),
        r @ Regime::OutOfScope => return Err(Error::UnsupportedRegime(r)),
    };
    Ok(Equilibria {
        extinction: (0.0, 0.0),
        semitrivial_u: (1.0, 0.0),
        semitrivial_v: (0.0, p.a),
        coexistence,
    })
}

/// Closed-form `(u*, v*)`; meaningful whenever `bc != 1`.
pub fn coexistence(p: SystemParams) -> (f64, f64) {
    let den = 1.0 - p.b * p.c;
    ((1.0 - p.a * p.c) / den, (p.a - p.b) / den)
}

pub fn critical_speed(p: SystemParams) -> f64 {
    f64::max(2.0, 2.0 * (p.a * p.d).sqrt())
}

pub fn is_critical_speed(p: SystemParams, s: f64) -> bool {
    (s - critical_speed(p)).abs() <= EQ_TOL
}

/// Positive roots of the linearizations at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub lambda4: f64,
    pub hat_lambda1: Option<f64>,
    pub hat_lambda2: Option<f64>,
    pub hat_lambda4: Option<f64>,
}

impl DecayRates {
    pub fn is_critical(&self) -> bool {
        self.hat_lambda1.is_some()
    }
}

/// Roots `(small, large)` of `k x^2 - s x + m`, with the discriminant clamped
/// to zero when it is within tolerance below it.
fn positive_roots(k: f64, s: f64, m: f64) -> Option<(f64, f64)> {
    let mut disc = s * s - 4.0 * k * m;
    if disc < 0.0 && disc > -EQ_TOL {
        disc = 0.0;
    }
    if disc < 0.0 {
        return None;
    }
    let r = disc.sqrt();
    // The small root via the product form keeps precision when r ~ s.
    let large = (s + r) / (2.0 * k);
    let small = if r == 0.0 { s / (2.0 * k) } else { m / (k * large) };
    Some((small, large))
}

pub fn decay_rates(p: SystemParams, s: f64) -> Result<DecayRates> {
    let critical = critical_speed(p);
    if s < critical - EQ_TOL {
        return Err(Error::SubcriticalSpeed { speed: s, critical });
    }
    // Within tolerance of s*, evaluate at s* itself so the double root is exact.
    let at_critical = (s - critical).abs() <= EQ_TOL;
    let s_eval = if at_critical { critical } else { s };
    let (l1, l3) = positive_roots(1.0, s_eval, 1.0)
        .ok_or(Error::SubcriticalSpeed { speed: s, critical })?;
    let (l2, l4) = positive_roots(p.d, s_eval, p.a)
        .ok_or(Error::SubcriticalSpeed { speed: s, critical })?;
    Ok(DecayRates {
        lambda1: l1,
        lambda2: l2,
        lambda3: l3,
        lambda4: l4,
        hat_lambda1: at_critical.then_some(l1),
        hat_lambda2: at_critical.then_some(l2),
        hat_lambda4: at_critical.then_some(l4),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TooSlowReason {
    NonpositiveSpeed,
    ComplexRoots,
}

impl fmt::Display for TooSlowReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TooSlowReason::NonpositiveSpeed => "nonpositive speed",
            TooSlowReason::ComplexRoots => "complex linearization roots",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Admissibility {
    Admissible,
    TooSlow { reason: TooSlowReason },
}

pub fn admissibility(p: SystemParams, s: f64) -> Admissibility {
    if s <= 0.0 {
        Admissibility::TooSlow { reason: TooSlowReason::NonpositiveSpeed }
    } else if s < critical_speed(p) - EQ_TOL {
        Admissibility::TooSlow { reason: TooSlowReason::ComplexRoots }
    } else {
        Admissibility::Admissible
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64, c: f64, d: f64) -> SystemParams {
        SystemParams::new(a, b, c, d).unwrap()
    }

    #[test]
    fn regimes_of_reference_points() {
        assert_eq!(classify_regime(p(1.0, 0.5, 0.5, 1.0)), Regime::StrictWeak);
        assert_eq!(classify_regime(p(1.0, 0.5, 1.0, 1.0)), Regime::CriticalWeakC);
        assert_eq!(classify_regime(p(1.0, 1.0, 0.5, 1.0)), Regime::CriticalWeakB);
        assert_eq!(classify_regime(p(1.0, 1.5, 0.5, 1.0)), Regime::OutOfScope);
        assert_eq!(classify_regime(p(1.0, 1.0, 1.0, 1.0)), Regime::OutOfScope);
        assert_eq!(classify_regime(p(2.0, 0.5, 0.6, 1.0)), Regime::OutOfScope);
    }

    #[test]
    fn tolerance_reaches_boundaries() {
        let q = p(1.0, 0.5, 1.0 + 5e-13, 1.0);
        assert_eq!(classify_regime(q), Regime::CriticalWeakC);
        let q = p(1.0, 0.5, 1.0 - 1e-9, 1.0);
        assert_eq!(classify_regime(q), Regime::StrictWeak);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(SystemParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(SystemParams::new(1.0, f64::NAN, 1.0, 1.0).is_err());
    }

    #[test]
    fn swap_is_involution() {
        let q = p(0.7, 0.2, 1.3, 2.5);
        let back = q.swapped().swapped();
        assert!((back.a - q.a).abs() < 1e-15 && (back.d - q.d).abs() < 1e-15);
        assert_eq!(back.b, q.b);
        assert_eq!(back.c, q.c);
    }

    #[test]
    fn degenerate_equilibria() {
        assert_eq!(equilibria(p(1.0, 1.0, 0.5, 1.0)).unwrap().coexistence, Some((1.0, 0.0)));
        assert_eq!(equilibria(p(2.0, 0.5, 0.5, 1.0)).unwrap().coexistence, Some((0.0, 2.0)));
        assert!(matches!(
            equilibria(p(1.0, 2.0, 0.5, 1.0)),
            Err(Error::UnsupportedRegime(Regime::OutOfScope))
        ));
    }

    #[test]
    fn subcritical_decay_rates_rejected() {
        assert!(matches!(
            decay_rates(p(1.0, 0.5, 0.5, 1.0), 1.5),
            Err(Error::SubcriticalSpeed { .. })
        ));
    }

    #[test]
    fn too_slow_reasons_display() {
        assert_eq!(TooSlowReason::ComplexRoots.to_string(), "complex linearization roots");
        assert_eq!(TooSlowReason::NonpositiveSpeed.to_string(), "nonpositive speed");
    }
}
