//! Closed-form and quadrature bounds on the mean first passage time `E(τ)`.

mod critical;
mod inverse;
mod lambert;
mod quadrature;

pub use critical::{
    find_t_switch, mean_fpt_critical, psi, truncated_second_moment, upper_bound_psi,
    upper_bound_psi_with_min, upper_bound_thm, PsiVariant,
};
pub use inverse::{inverse_bound, inverse_bound_expr, linear_crossing_prob, InverseDirection};
pub use lambert::lambert_w0;
pub use quadrature::{integrate, Quadrature};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::barrier::GbmParams;
use crate::expr::EvalError;
use crate::ext::ExtReal;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("tail domination past the scan horizon is not attested")]
    UnattestedTail,
    #[error("barrier does not dominate the critical barrier at the end of the scan (t={0})")]
    NoDomination(f64),
    #[error("barrier dips below its chord on [0, T] at t={0}")]
    ChordViolation(f64),
    #[error("function decreases at t={0}")]
    NotMonotone(f64),
    #[error("function never reaches the level below t=1e12")]
    NoCrossing,
    #[error("attested shape fails a spot check: {0}")]
    ShapeViolation(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    ExactMean,
    UpperThm,
    UpperPsiMin,
    UpperPsiChord,
    LambertUpper,
    InverseUpper,
    InverseLower,
    ExactLinear,
}

/// A bound on `E(τ)` in time units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub value: ExtReal,
    /// Switch time `T` after which the barrier dominates the critical one.
    pub t_switch: Option<f64>,
    pub quadrature_error: f64,
    pub assumptions: Vec<String>,
}

/// `E(τ)` for the Example-1 barrier `B̃(t) = σ√(t ln(t+1))` is at most
/// `(q/σ)² / W₀((q/σ)²/e)`.
pub fn lambert_upper(params: &GbmParams) -> Result<BoundReport, BoundsError> {
    let q = params.q();
    if !(q > 0.0) {
        return Err(BoundsError::InvalidParams(format!("q must be > 0, got {q}")));
    }
    let a = (q / params.sigma).powi(2);
    let value = a / lambert_w0(a / std::f64::consts::E);
    Ok(BoundReport {
        kind: BoundKind::LambertUpper,
        value: ExtReal(value),
        t_switch: None,
        quadrature_error: 0.0,
        assumptions: vec!["barrier residual is sigma*sqrt(t*ln(t+1))".into()],
    })
}
