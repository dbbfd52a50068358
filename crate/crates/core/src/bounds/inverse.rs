//! Bounds through the inverse of a monotone residual, and the linear barrier.

use serde::{Deserialize, Serialize};

use super::{BoundKind, BoundReport, BoundsError};
use crate::expr::{EvalError, TildeExpr};
use crate::ext::ExtReal;

const T_HI_LIMIT: f64 = 1e12;
const REL_TOL: f64 = 1e-10;
const SCAN_POINTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InverseDirection {
    /// Convex, strictly increasing `B̃` with `B̃(0) = 0`: `E(τ) ≤ B̃⁻¹(q)`.
    UpperConvex,
    /// Concave, strictly increasing `B̃` with `B̃(t) → ∞`: `E(τ) ≥ B̃⁻¹(q)`.
    LowerConcave,
}

fn shape_tol(a: f64, b: f64) -> f64 {
    1e-9 * (1.0 + a.abs().max(b.abs()))
}

/// `B̃⁻¹(q)` for an increasing residual `f`, with spot checks of the
/// attested shape on a 1024-point grid over `[0, t_hi]`.
pub fn inverse_bound<F>(f: F, q: f64, direction: InverseDirection) -> Result<BoundReport, BoundsError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    if !(q > 0.0) || !q.is_finite() {
        return Err(BoundsError::InvalidParams(format!("q must be > 0, got {q}")));
    }
    let mut t_hi = 1.0;
    while f(t_hi)? <= q {
        t_hi *= 2.0;
        if t_hi > T_HI_LIMIT {
            return Err(BoundsError::NoCrossing);
        }
    }

    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| t_hi * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let vals = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>, _>>()?;
    for i in 1..SCAN_POINTS {
        if vals[i] < vals[i - 1] - shape_tol(vals[i], vals[i - 1]) {
            return Err(BoundsError::NotMonotone(grid[i]));
        }
    }
    for i in 1..SCAN_POINTS - 1 {
        // Second difference on a uniform grid.
        let d2 = vals[i + 1] - 2.0 * vals[i] + vals[i - 1];
        let tol = shape_tol(vals[i + 1], vals[i - 1]);
        let bad = match direction {
            InverseDirection::UpperConvex => d2 < -tol,
            InverseDirection::LowerConcave => d2 > tol,
        };
        if bad {
            let shape = match direction {
                InverseDirection::UpperConvex => "convex",
                InverseDirection::LowerConcave => "concave",
            };
            return Err(BoundsError::ShapeViolation(format!("not {shape} near t={}", grid[i])));
        }
    }
    if direction == InverseDirection::UpperConvex && vals[0].abs() > 1e-12 {
        return Err(BoundsError::ShapeViolation(format!("B~(0) = {} is not 0", vals[0])));
    }

    let mut lo = 0.0;
    let mut hi = t_hi;
    while hi - lo > REL_TOL * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (kind, assumption) = match direction {
        InverseDirection::UpperConvex => (
            BoundKind::InverseUpper,
            "B~ is convex and strictly increasing with B~(0) = 0",
        ),
        InverseDirection::LowerConcave => (
            BoundKind::InverseLower,
            "B~ is concave, strictly increasing, continuous at 0 and unbounded",
        ),
    };
    Ok(BoundReport {
        kind,
        value: ExtReal(0.5 * (lo + hi)),
        t_switch: None,
        quadrature_error: 0.0,
        assumptions: vec![assumption.into()],
    })
}

pub fn inverse_bound_expr(
    tilde: &TildeExpr,
    q: f64,
    direction: InverseDirection,
) -> Result<BoundReport, BoundsError> {
    inverse_bound(|t| tilde.eval(t), q, direction)
}

/// `P(W_t = c + bt for some t ≥ 0)` for `c < 0`.
pub fn linear_crossing_prob(c: f64, b: f64) -> Result<f64, BoundsError> {
    if !(c < 0.0) || !c.is_finite() || b.is_nan() {
        return Err(BoundsError::InvalidParams(format!(
            "need finite c < 0 and real b, got c={c}, b={b}"
        )));
    }
    if b >= 0.0 {
        Ok(1.0)
    } else {
        Ok((-2.0 * b * c).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_tilde;

    fn inv(text: &str, q: f64, d: InverseDirection) -> Result<BoundReport, BoundsError> {
        inverse_bound_expr(&parse_tilde(text).unwrap(), q, d)
    }

    #[test]
    fn linear_both_directions() {
        for d in [InverseDirection::UpperConvex, InverseDirection::LowerConcave] {
            let r = inv("0.5*t", 1.0, d).unwrap();
            assert!((r.value.0 - 2.0).abs() < 1e-9);
        }
        assert_eq!(inv("0.5*t", 1.0, InverseDirection::UpperConvex).unwrap().kind, BoundKind::InverseUpper);
        assert_eq!(inv("0.5*t", 1.0, InverseDirection::LowerConcave).unwrap().kind, BoundKind::InverseLower);
    }

    #[test]
    fn power_examples() {
        let r = inv("t^2", 4.0, InverseDirection::UpperConvex).unwrap();
        assert!((r.value.0 - 2.0).abs() < 2e-10 * 2.0);
        let r = inv("sqrt(t)", 2.0, InverseDirection::LowerConcave).unwrap();
        assert!((r.value.0 - 4.0).abs() < 4e-10 * 2.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            inv("sin(t)", 2.0, InverseDirection::UpperConvex),
            Err(BoundsError::NoCrossing)
        ));
        assert!(matches!(
            inv("t - 2*sin(t)", 5.0, InverseDirection::LowerConcave),
            Err(BoundsError::NotMonotone(_))
        ));
        assert!(matches!(
            inv("sqrt(t)", 2.0, InverseDirection::UpperConvex),
            Err(BoundsError::ShapeViolation(_))
        ));
        assert!(matches!(
            inv("t+1", 2.0, InverseDirection::UpperConvex),
            Err(BoundsError::ShapeViolation(_))
        ));
    }

    #[test]
    fn crossing_probability() {
        assert!((linear_crossing_prob(-1.0, -1.0).unwrap() - (-2f64).exp()).abs() < 1e-16);
        assert_eq!(linear_crossing_prob(-1.0, 0.0).unwrap(), 1.0);
        let v = linear_crossing_prob(-1.0, -10.0).unwrap();
        assert!((v - 2.061_153_622_438_558e-9).abs() < 1e-22);
        assert!(linear_crossing_prob(0.0, 1.0).is_err());
        let near = linear_crossing_prob(-1.0, -1e-12).unwrap();
        assert!(near > 0.0 && near <= 1.0 && 1.0 - near < 1e-11);
    }
}
