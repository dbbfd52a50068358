//! Risk-zone classification from the long-time behavior of the barrier.
//!
//! Six asymptotic ratios of `B(t)` against reference barriers decide which
//! qualitative zone the first passage time falls into:
//!
//! * `I±`, `S±`: liminf / limsup of `B(t) / K·exp[(μ−σ²/2)t ± σ√(2t ln ln t)]`
//! * `Ī_ε`: liminf of `B(t) / K·exp[(μ−σ²/2)t + (σ+ε)√t]`
//! * `S̄₀`: limsup of `B(t) / K·exp[(μ−σ²/2)t + σ√t]`
//!
//! Limits come either from a declared [`AsymptoticProfile`](crate::barrier::AsymptoticProfile)
//! (exact, see [`limits_from_profile`]) or from numeric probing on a finite
//! grid ([`probe_limits`], always flagged heuristic).

mod asymptotics;
mod probe;
mod zone;

pub use asymptotics::{limits_from_profile, liminf_against_sqrt, AsymptoticError};
pub use probe::{probe_limits, ProbeError, ProbeGrid, ProbeSummary};
pub use zone::{
    classify, classify_definite, classify_spec, RiskZone, RuleFired, SpecClassifyError, Zone,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ext::ExtReal;

/// Relative slack used when checking the partial order between limits.
const ORDER_TOL: f64 = 1e-12;

/// Number of halvings in the ε grid `{σ·2^{−k}, k = 0..=20}`.
pub const EPS_HALVINGS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("inconsistent limits: {0}")]
    InconsistentLimits(String),
}

/// Where a set of limits came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    #[default]
    Declared,
    Probed(ProbeSummary),
}

/// The six asymptotic quantities. `ibar` is materialized on an ε grid that
/// always contains `ε = 0`, sorted by increasing ε.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLimits {
    pub i_minus: ExtReal,
    pub i_plus: ExtReal,
    pub s_minus: ExtReal,
    pub s_plus: ExtReal,
    pub ibar: Vec<(f64, ExtReal)>,
    pub sbar0: ExtReal,
    #[serde(default)]
    pub provenance: Provenance,
}

/// `[0] ∪ {σ·2^{−k}}`, ascending.
pub fn eps_grid(sigma: f64) -> Vec<f64> {
    let mut eps: Vec<f64> = (0..=EPS_HALVINGS)
        .rev()
        .map(|k| sigma * 0.5f64.powi(k as i32))
        .collect();
    eps.insert(0, 0.0);
    eps
}

fn ge(a: ExtReal, b: ExtReal) -> bool {
    let (a, b) = (a.0, b.0);
    a >= b || (a.is_finite() && b.is_finite() && a >= b - ORDER_TOL * a.abs().max(b.abs()))
}

impl AsymptoticLimits {
    /// `Ī_0`.
    pub fn ibar_zero(&self) -> Option<ExtReal> {
        self.ibar.iter().find(|(e, _)| *e == 0.0).map(|(_, v)| *v)
    }

    pub fn is_probed(&self) -> bool {
        matches!(self.provenance, Provenance::Probed(_))
    }

    /// Checks the partial order these quantities satisfy by construction:
    /// `S₋ ≥ S₊ ≥ I₊`, `S₋ ≥ I₋ ≥ I₊`, `S̄₀ ≥ Ī_ε`, `I₋ ≥ Ī_ε ≥ I₊`,
    /// `S₋ ≥ S̄₀ ≥ S₊`, with `Ī_ε` non-increasing in ε.
    pub fn check_consistency(&self) -> Result<(), ClassifyError> {
        let fail = |m: String| Err(ClassifyError::InconsistentLimits(m));
        let named = [
            ("i_minus", self.i_minus),
            ("i_plus", self.i_plus),
            ("s_minus", self.s_minus),
            ("s_plus", self.s_plus),
            ("sbar0", self.sbar0),
        ];
        for (name, v) in named
            .iter()
            .copied()
            .chain(self.ibar.iter().map(|(_, v)| ("ibar", *v)))
        {
            if v.0.is_nan() || v.0 < 0.0 {
                return fail(format!("{name} = {v} is not in [0, inf]"));
            }
        }
        if self.ibar_zero().is_none() {
            return fail("ibar grid must contain eps = 0".into());
        }
        let pairs = [
            ("s_minus", self.s_minus, "s_plus", self.s_plus),
            ("s_plus", self.s_plus, "i_plus", self.i_plus),
            ("s_minus", self.s_minus, "i_minus", self.i_minus),
            ("i_minus", self.i_minus, "i_plus", self.i_plus),
            ("s_minus", self.s_minus, "sbar0", self.sbar0),
            ("sbar0", self.sbar0, "s_plus", self.s_plus),
        ];
        for (an, a, bn, b) in pairs {
            if !ge(a, b) {
                return fail(format!("{an} = {a} < {bn} = {b}"));
            }
        }
        let mut prev: Option<(f64, ExtReal)> = None;
        for &(eps, v) in &self.ibar {
            if eps.is_nan() || eps < 0.0 {
                return fail(format!("eps = {eps} must be >= 0"));
            }
            if !ge(self.sbar0, v) || !ge(self.i_minus, v) || !ge(v, self.i_plus) {
                return fail(format!(
                    "ibar({eps}) = {v} violates sbar0/i_minus >= ibar >= i_plus"
                ));
            }
            if let Some((pe, pv)) = prev {
                if eps <= pe {
                    return fail("ibar grid must be strictly increasing in eps".into());
                }
                if !ge(pv, v) {
                    return fail(format!("ibar increases from eps={pe} to eps={eps}"));
                }
            }
            prev = Some((eps, v));
        }
        Ok(())
    }
}
