//! Piecewise-analytic functions of one variable with closed-form derivatives.

use serde::{Deserialize, Serialize};

/// Analytic form of one piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// `value`
    Constant { value: f64 },
    /// `amp e^{rate x}`
    Exponential { amp: f64, rate: f64 },
    /// `coef e^{rate x} - q e^{mu rate x}`
    Bump { coef: f64, rate: f64, mu: f64, q: f64 },
    /// `-h x e^{rate x}`
    LinearExp { h: f64, rate: f64 },
    /// `(-h x - q sqrt(-x)) e^{rate x}`, defined for `x < 0`
    RootExp { h: f64, q: f64, rate: f64 },
}

impl Shape {
    /// Value and first two derivatives at `x`.
    pub fn jet(&self, x: f64) -> [f64; 3] {
        match *self {
            Shape::Constant { value } => [value, 0.0, 0.0],
            Shape::Exponential { amp, rate } => {
                let e = amp * (rate * x).exp();
                [e, rate * e, rate * rate * e]
            }
            Shape::Bump { coef, rate, mu, q } => {
                let e1 = coef * (rate * x).exp();
                let r2 = mu * rate;
                let e2 = q * (r2 * x).exp();
                [e1 - e2, rate * e1 - r2 * e2, rate * rate * e1 - r2 * r2 * e2]
            }
            Shape::LinearExp { h, rate } => {
                let e = (rate * x).exp();
                let phi = -h * x;
                [phi * e, (-h + rate * phi) * e, (-2.0 * rate * h + rate * rate * phi) * e]
            }
            Shape::RootExp { h, q, rate } => {
                let y = (-x).max(f64::MIN_POSITIVE);
                let sy = y.sqrt();
                let e = (rate * x).exp();
                let phi = h * y - q * sy;
                let dphi = -h + q / (2.0 * sy);
                let ddphi = q / (4.0 * y * sy);
                [
                    phi * e,
                    (dphi + rate * phi) * e,
                    (ddphi + 2.0 * rate * dphi + rate * rate * phi) * e,
                ]
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }
}

/// A function assembled from [`Shape`]s on consecutive intervals, evaluated
/// as `value_scale * g((x - shift) / x_scale)` where `g` is the raw
/// piecewise function.
///
/// Piece `i` covers `[joins[i-1], joins[i]]` in raw coordinates, with the
/// first and last pieces extending to infinity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseProfile {
    joins: Vec<f64>,
    shapes: Vec<Shape>,
    #[serde(default)]
    transform: Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub shift: f64,
    pub x_scale: f64,
    pub value_scale: f64,
}

impl Default for Affine {
    fn default() -> Self {
        Affine { shift: 0.0, x_scale: 1.0, value_scale: 1.0 }
    }
}

/// Side from which a derivative is taken at a join point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl PiecewiseProfile {
    /// # Panics
    /// If `shapes.len() != joins.len() + 1` or the joins are not increasing.
    pub fn new(joins: Vec<f64>, shapes: Vec<Shape>) -> Self {
        assert_eq!(shapes.len(), joins.len() + 1, "one more shape than join points");
        assert!(joins.windows(2).all(|w| w[0] < w[1]), "join points must increase");
        PiecewiseProfile { joins, shapes, transform: Affine::default() }
    }

    pub fn constant(value: f64) -> Self {
        Self::new(Vec::new(), vec![Shape::Constant { value }])
    }

    pub fn shapes(&self) -> &[Shape] {
        &self.shapes
    }

    pub fn transform(&self) -> Affine {
        self.transform
    }

    /// Join points in outer coordinates.
    pub fn join_points(&self) -> Vec<f64> {
        self.joins.iter().map(|&j| self.to_outer(j)).collect()
    }

    fn to_outer(&self, raw: f64) -> f64 {
        raw * self.transform.x_scale + self.transform.shift
    }

    fn to_raw(&self, x: f64) -> f64 {
        (x - self.transform.shift) / self.transform.x_scale
    }

    /// Translate the graph right by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut out = self.clone();
        out.transform.shift += delta;
        out
    }

    /// `x -> value_scale * f(x / x_scale)`.
    pub fn rescaled(&self, x_scale: f64, value_scale: f64) -> Self {
        let mut out = self.clone();
        out.transform.shift *= x_scale;
        out.transform.x_scale *= x_scale;
        out.transform.value_scale *= value_scale;
        out
    }

    /// Multiply all values by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        self.rescaled(1.0, factor)
    }

    fn raw_jet(&self, raw: f64, side: Side) -> [f64; 3] {
        let k = match side {
            Side::Left => self.joins.partition_point(|&j| j < raw),
            Side::Right => self.joins.partition_point(|&j| j <= raw),
        };
        self.shapes[k].jet(raw)
    }

    /// Value and first two derivatives, taking the piece to the right at join points.
    pub fn jet(&self, x: f64) -> [f64; 3] {
        self.jet_side(x, Side::Right)
    }

    pub fn jet_side(&self, x: f64, side: Side) -> [f64; 3] {
        let t = self.transform;
        let [f, f1, f2] = self.raw_jet(self.to_raw(x), side);
        [
            t.value_scale * f,
            t.value_scale * f1 / t.x_scale,
            t.value_scale * f2 / (t.x_scale * t.x_scale),
        ]
    }

    pub fn value(&self, x: f64) -> f64 {
        self.jet(x)[0]
    }

    pub fn derivative(&self, x: f64, side: Side) -> f64 {
        self.jet_side(x, side)[1]
    }

    /// Largest jump in value across a join point.
    pub fn continuity_defect(&self) -> f64 {
        self.joins
            .iter()
            .map(|&j| (self.raw_jet(j, Side::Left)[0] - self.raw_jet(j, Side::Right)[0]).abs())
            .fold(0.0, f64::max)
            * self.transform.value_scale.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: &PiecewiseProfile, x: f64, h: f64) -> (f64, f64) {
        let (a, b, c) = (f.value(x - h), f.value(x), f.value(x + h));
        ((c - a) / (2.0 * h), (c - 2.0 * b + a) / (h * h))
    }

    #[test]
    fn shapes_match_finite_differences() {
        let shapes = [
            Shape::Exponential { amp: 2.0, rate: 0.7 },
            Shape::Bump { coef: 1.0, rate: 0.5, mu: 1.6, q: 2.2 },
            Shape::LinearExp { h: 3.0, rate: 1.0 },
            Shape::RootExp { h: 2.0, q: 1.5, rate: 0.8 },
        ];
        for s in shapes {
            let f = PiecewiseProfile::new(vec![], vec![s]).rescaled(1.7, 0.6).shifted(-0.4);
            for &x in &[-7.3, -3.1, -1.2] {
                let [_, d1, d2] = f.jet(x);
                let (n1, n2) = central(&f, x, 1e-4);
                assert!((d1 - n1).abs() <= 1e-6 * d1.abs().max(1e-3), "{s:?} d1 at {x}");
                assert!((d2 - n2).abs() <= 1e-4 * d2.abs().max(1e-2), "{s:?} d2 at {x}");
            }
        }
    }

    #[test]
    fn join_sides_pick_adjacent_pieces() {
        let f = PiecewiseProfile::new(
            vec![0.0],
            vec![Shape::Exponential { amp: 1.0, rate: 0.5 }, Shape::Constant { value: 1.0 }],
        );
        assert_eq!(f.derivative(0.0, Side::Left), 0.5);
        assert_eq!(f.derivative(0.0, Side::Right), 0.0);
        assert_eq!(f.continuity_defect(), 0.0);
        let g = f.shifted(2.0);
        assert_eq!(g.join_points(), vec![2.0]);
        assert_eq!(g.derivative(2.0, Side::Left), 0.5);
    }

    #[test]
    fn rescale_moves_joins_and_values() {
        let f = PiecewiseProfile::new(
            vec![-1.0],
            vec![Shape::Exponential { amp: 1.0, rate: 1.0 }, Shape::Constant { value: 0.5 }],
        );
        let g = f.rescaled(2.0, 3.0);
        assert_eq!(g.join_points(), vec![-2.0]);
        assert!((g.value(-4.0) - 3.0 * f.value(-2.0)).abs() < 1e-15);
        assert!((g.derivative(-4.0, Side::Right) - 1.5 * f.derivative(-2.0, Side::Right)).abs() < 1e-15);
    }
}
