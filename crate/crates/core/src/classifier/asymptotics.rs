//! Exact limits from declared growth classes.
//!
//! The log of every ratio is `B̃(t)` minus a reference curve. Both sides are
//! sums of terms `c·f(t)` over a totally ordered family of scales
//! (`1 ≺ t^p ≺ √t ≺ √(t ln ln t) ≺ t^p' ≺ t ≺ … ≺ superlinear`, `p < ½ < p'`),
//! so the limit of the ratio is decided by the dominant scale whose combined
//! coefficient does not vanish.

use std::cmp::Ordering;
use std::f64::consts::SQRT_2;

use thiserror::Error;

use super::{eps_grid, AsymptoticLimits, Provenance};
use crate::barrier::{AsymptoticProfile, GbmParams, GrowthClass};
use crate::ext::ExtReal;

/// Coefficients closer than this (relative) are treated as an exact tie.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AsymptoticError {
    #[error("unsupported profile: {0}")]
    UnsupportedProfile(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scale {
    /// `t^p (ln ln t)^{loglog/2}`; `p = 0, loglog = false` is the constant scale.
    Power { p: f64, loglog: bool },
    Superlinear,
}

impl Scale {
    const ONE: Scale = Scale::Power { p: 0.0, loglog: false };
    const SQRT: Scale = Scale::Power { p: 0.5, loglog: false };
    const SQRT_LOGLOG: Scale = Scale::Power { p: 0.5, loglog: true };

    fn cmp(&self, other: &Scale) -> Ordering {
        match (self, other) {
            (Scale::Superlinear, Scale::Superlinear) => Ordering::Equal,
            (Scale::Superlinear, _) => Ordering::Greater,
            (_, Scale::Superlinear) => Ordering::Less,
            (Scale::Power { p: a, loglog: la }, Scale::Power { p: b, loglog: lb }) => {
                a.total_cmp(b).then(la.cmp(lb))
            }
        }
    }
}

/// A single leading-order term of `B̃`.
fn term_of(g: &GrowthClass) -> Result<(Scale, f64), AsymptoticError> {
    Ok(match g {
        GrowthClass::Constant { value } => (Scale::ONE, *value),
        GrowthClass::Power { p, c } => (Scale::Power { p: *p, loglog: false }, *c),
        GrowthClass::SqrtT { c } => (Scale::SQRT, *c),
        GrowthClass::SqrtTLogLog { c } => (Scale::SQRT_LOGLOG, *c),
        GrowthClass::Linear { c } => (Scale::Power { p: 1.0, loglog: false }, *c),
        GrowthClass::Superlinear => (Scale::Superlinear, 1.0),
        GrowthClass::Oscillating { .. } | GrowthClass::CustomLimits { .. } => {
            return Err(AsymptoticError::UnsupportedProfile(
                "nested oscillating or custom class cannot be ordered".into(),
            ))
        }
    })
}

/// `lim exp(c_b·f_b(t) − c_r·f_r(t))` for a profile term `(f_b, c_b)` and a
/// reference term `(f_r, c_r)`. Reference terms never sit on the constant scale.
fn ratio_limit(body: (Scale, f64), reference: (Scale, f64)) -> ExtReal {
    let (sb, cb) = body;
    let (sr, cr) = reference;
    let sign_to_limit = |c: f64| {
        if c > 0.0 {
            ExtReal::INFINITY
        } else if c < 0.0 {
            ExtReal::ZERO
        } else {
            ExtReal::ONE
        }
    };
    let body_is_const = sb.cmp(&Scale::ONE) == Ordering::Equal;
    match sb.cmp(&sr) {
        Ordering::Greater if !body_is_const && cb != 0.0 => sign_to_limit(cb),
        Ordering::Less | Ordering::Greater => {
            if cr != 0.0 {
                sign_to_limit(-cr)
            } else if body_is_const {
                ExtReal(cb.exp())
            } else {
                sign_to_limit(cb)
            }
        }
        Ordering::Equal => {
            let diff = cb - cr;
            if diff.abs() <= TIE_TOL * cb.abs().max(cr.abs()) {
                ExtReal::ONE
            } else {
                sign_to_limit(diff)
            }
        }
    }
}

struct References {
    minus: (Scale, f64),
    plus: (Scale, f64),
    sbar: (Scale, f64),
    ibar: Vec<(f64, (Scale, f64))>,
}

fn references(sigma: f64) -> References {
    References {
        // B(t)/[K e^{γt − σ√(2t ln ln t)}] = exp(B̃ + σ√2·√(t ln ln t))
        minus: (Scale::SQRT_LOGLOG, -sigma * SQRT_2),
        plus: (Scale::SQRT_LOGLOG, sigma * SQRT_2),
        sbar: (Scale::SQRT, sigma),
        ibar: eps_grid(sigma)
            .into_iter()
            .map(|e| (e, (Scale::SQRT, sigma + e)))
            .collect(),
    }
}

/// Exact limits for a declared profile.
pub fn limits_from_profile(
    profile: &AsymptoticProfile,
    params: &GbmParams,
) -> Result<AsymptoticLimits, AsymptoticError> {
    let (lower, upper) = match &profile.growth_class {
        GrowthClass::CustomLimits { limits } => {
            let mut l = limits.clone();
            l.provenance = Provenance::Declared;
            l.check_consistency()
                .map_err(|e| AsymptoticError::UnsupportedProfile(e.to_string()))?;
            return Ok(l);
        }
        GrowthClass::Oscillating { lower, upper } => (term_of(lower)?, term_of(upper)?),
        g => {
            let t = term_of(g)?;
            (t, t)
        }
    };
    let refs = references(params.sigma);
    let limits = AsymptoticLimits {
        i_minus: ratio_limit(lower, refs.minus),
        i_plus: ratio_limit(lower, refs.plus),
        s_minus: ratio_limit(upper, refs.minus),
        s_plus: ratio_limit(upper, refs.plus),
        ibar: refs
            .ibar
            .iter()
            .map(|&(e, r)| (e, ratio_limit(lower, r)))
            .collect(),
        sbar0: ratio_limit(upper, refs.sbar),
        provenance: Provenance::Declared,
    };
    limits.check_consistency().map_err(|e| {
        AsymptoticError::UnsupportedProfile(format!("envelopes cannot be ordered: {e}"))
    })?;
    Ok(limits)
}

/// `liminf_{t→∞} B(t)/B_c(t, α) = liminf exp(B̃(t) − α√t)` for a declared
/// profile; used to certify tail domination of the critical barrier.
pub fn liminf_against_sqrt(
    profile: &AsymptoticProfile,
    alpha: f64,
) -> Result<ExtReal, AsymptoticError> {
    let lower = match &profile.growth_class {
        GrowthClass::Oscillating { lower, .. } => term_of(lower)?,
        GrowthClass::CustomLimits { .. } => {
            return Err(AsymptoticError::UnsupportedProfile(
                "custom limits do not determine the ratio against an arbitrary sqrt barrier"
                    .into(),
            ))
        }
        g => term_of(g)?,
    };
    Ok(ratio_limit(lower, (Scale::SQRT, alpha)))
}
