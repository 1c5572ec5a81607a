//! Traveling waves of the two-species Lotka-Volterra competition-diffusion
//! system in the weak competition regime.
//!
//! The wave equations are
//!
//! ```text
//! u'' - s u' + u (1 - u - c v) = 0
//! d v'' - s v' + v (a - b u - v) = 0
//! ```
//!
//! with `(u, v) -> (0, 0)` on the left and `(u, v) -> (u*, v*)` on the right.
//! The crate builds explicit super/sub-solution pairs, checks them on a grid,
//! computes profiles as fixed points of the shifted integral operator, and
//! runs continuation toward the degenerate front-pulse limits.

// Negated comparisons reject NaN on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analyze;
pub mod certify;
pub mod envelopes;
mod error;
pub mod model;
pub mod numeric;
pub mod piecewise;
pub mod pulse;
pub mod solve;

pub use error::{Error, Result};
pub use model::SystemParams;
