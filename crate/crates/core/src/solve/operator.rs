//! The shifted integral operator and its exact discretization.

use crate::model::SystemParams;
use crate::numeric::{join, xexp_minus_expm1};
use crate::{Error, Result};

/// Smallest shift making both reactions nondecreasing in their own variable
/// on `[0, 1] x [0, a]`.
pub fn beta_floor(p: SystemParams) -> f64 {
    f64::max(1.0 + p.a * p.c, p.a + p.b)
}

/// Roots `(negative, positive)` of `k r^2 - s r - beta`.
fn kernel_pair(k: f64, s: f64, beta: f64) -> (f64, f64) {
    let pos = (s + (s * s + 4.0 * k * beta).sqrt()) / (2.0 * k);
    (-beta / (k * pos), pos)
}

/// Kernel exponents for the `u` equation (diffusivity 1) and the `v`
/// equation (diffusivity `d`).
pub fn kernel_rates(p: SystemParams, s: f64, beta: f64) -> ((f64, f64), (f64, f64)) {
    (kernel_pair(1.0, s, beta), kernel_pair(p.d, s, beta))
}

/// `int_0^h e^{l t} dt` and `int_0^h t e^{l t} dt`.
fn moments(l: f64, h: f64) -> (f64, f64) {
    let x = l * h;
    if x == 0.0 {
        return (h, 0.5 * h * h);
    }
    (x.exp_m1() / l, xexp_minus_expm1(x) / (l * l))
}

/// Precomputed recurrence weights for one component.
#[derive(Debug, Clone)]
struct Kernel {
    neg: f64,
    pos: f64,
    norm: f64,
    /// Per interval: decay, weight of the left sample, weight of the right sample.
    left: Vec<[f64; 3]>,
    right: Vec<[f64; 3]>,
}

impl Kernel {
    fn new(grid: &[f64], k: f64, s: f64, beta: f64) -> Self {
        let (neg, pos) = kernel_pair(k, s, beta);
        let mut left = Vec::with_capacity(grid.len() - 1);
        let mut right = Vec::with_capacity(grid.len() - 1);
        for w in grid.windows(2) {
            let h = w[1] - w[0];
            // Left integral over [x_i, x_{i+1}] with t = x_{i+1} - tau.
            let (i0, i1) = moments(neg, h);
            left.push([(neg * h).exp(), i1 / h, i0 - i1 / h]);
            // Right integral over [x_i, x_{i+1}] with t = x_i + tau.
            let (j0, j1) = moments(-pos, h);
            right.push([(-pos * h).exp(), j0 - j1 / h, j1 / h]);
        }
        Kernel { neg, pos, norm: 1.0 / (k * (pos - neg)), left, right }
    }

    /// Applies the kernel to the piecewise-linear interpolant of `f`, extended
    /// by the constants `f_left` and `f_right` outside the grid.
    fn apply(&self, f: &[f64], f_left: f64, f_right: f64, out: &mut [f64]) {
        let n = f.len();
        let mut l = f_left / (-self.neg);
        out[0] = l;
        for i in 0..n - 1 {
            let [e, wa, wb] = self.left[i];
            l = e * l + wa * f[i] + wb * f[i + 1];
            out[i + 1] = l;
        }
        let mut r = f_right / self.pos;
        out[n - 1] = self.norm * (out[n - 1] + r);
        for i in (0..n - 1).rev() {
            let [e, wa, wb] = self.right[i];
            r = e * r + wa * f[i] + wb * f[i + 1];
            out[i] = self.norm * (out[i] + r);
        }
    }
}

/// The operator `P = (P1, P2)` on a fixed grid with constant extensions.
#[derive(Debug, Clone)]
pub struct IntegralOperator {
    pub grid: Vec<f64>,
    pub params: SystemParams,
    pub speed: f64,
    pub beta: f64,
    /// State assumed to the left of the grid.
    pub left_state: (f64, f64),
    /// State assumed to the right of the grid.
    pub right_state: (f64, f64),
    k1: Kernel,
    k2: Kernel,
}

impl IntegralOperator {
    pub fn new(
        grid: Vec<f64>,
        params: SystemParams,
        speed: f64,
        beta: f64,
        left_state: (f64, f64),
        right_state: (f64, f64),
    ) -> Result<Self> {
        if grid.len() < 2 || !grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidConfig("grid must have at least two increasing points".into()));
        }
        if !(beta > 0.0 && speed > 0.0) {
            return Err(Error::InvalidConfig("beta and speed must be positive".into()));
        }
        let k1 = Kernel::new(&grid, 1.0, speed, beta);
        let k2 = Kernel::new(&grid, params.d, speed, beta);
        Ok(IntegralOperator { grid, params, speed, beta, left_state, right_state, k1, k2 })
    }

    pub fn reactions(&self, u: f64, v: f64) -> (f64, f64) {
        let SystemParams { a, b, c, .. } = self.params;
        (self.beta * u + u * (1.0 - u - c * v), self.beta * v + v * (a - b * u - v))
    }

    /// `P(u, v)` at the grid points.
    pub fn apply(&self, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.grid.len();
        if u.len() != n || v.len() != n {
            return Err(Error::InvalidProfile(format!("expected {n} samples")));
        }
        if let Some(k) = u.iter().chain(v).position(|x| !x.is_finite()) {
            return Err(Error::InvalidProfile(format!("non-finite sample at index {}", k % n)));
        }
        let mut f1 = Vec::with_capacity(n);
        let mut f2 = Vec::with_capacity(n);
        for (&x, &y) in u.iter().zip(v) {
            let (a, b) = self.reactions(x, y);
            f1.push(a);
            f2.push(b);
        }
        let (l1, l2) = self.reactions(self.left_state.0, self.left_state.1);
        let (r1, r2) = self.reactions(self.right_state.0, self.right_state.1);
        let mut pu = vec![0.0; n];
        let mut pv = vec![0.0; n];
        join(
            || self.k1.apply(&f1, l1, r1, &mut pu),
            || self.k2.apply(&f2, l2, r2, &mut pv),
        );
        Ok((pu, pv))
    }
}
