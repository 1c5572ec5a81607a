use thiserror::Error;

use crate::model::Regime;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("unsupported regime: {0:?}")]
    UnsupportedRegime(Regime),
    #[error("subcritical speed: s = {speed} is below s* = {critical}")]
    SubcriticalSpeed { speed: f64, critical: f64 },
    #[error("supercritical selection requires s > s* (s = {speed}, s* = {critical})")]
    NotSupercritical { speed: f64, critical: f64 },
    #[error("critical selection requires s = s* (s = {speed}, s* = {critical})")]
    NotCritical { speed: f64, critical: f64 },
    #[error("apply species swap: critical construction needs ad <= 1 (ad = {0})")]
    NeedsSpeciesSwap(f64),
    #[error("no interior zero: q = {q} must exceed the leading coefficient {coef}")]
    NoInteriorZero { coef: f64, q: f64 },
    #[error("delta above envelope maximum: delta = {delta}, max = {max}")]
    DeltaAboveMax { delta: f64, max: f64 },
    #[error("no continuity point in bracket [{lo}, {hi}]")]
    NoContinuityPoint { lo: f64, hi: f64 },
    #[error("envelope maximum underflows: log10(max) = {0}")]
    EnvelopeUnderflow(f64),
    #[error("invalid input profile: {0}")]
    InvalidProfile(String),
    #[error("iteration escaped envelope at xi = {xi} by {amount} (iteration {iteration})")]
    EscapedEnvelope { iteration: usize, xi: f64, amount: f64 },
    #[error("classify requires converged profile")]
    Unconverged,
    #[error("diagnostic applies to subcritical speeds only")]
    NotSubcritical,
    #[error("comparison parameter eps = {eps} must lie in (0, {bound})")]
    EpsOutOfRange { eps: f64, bound: f64 },
    #[error("target not reachable: {0}")]
    Unreachable(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
