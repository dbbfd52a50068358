//! Bounds anchored on the critical barrier `B_c(t, α) = K·exp[(μ−σ²/2)t + α√t]`.

use serde::{Deserialize, Serialize};
use libm::erfc;

use super::quadrature::integrate;
use super::{BoundKind, BoundReport, BoundsError};
use crate::barrier::{BarrierSpec, GbmParams};
use crate::classifier::liminf_against_sqrt;
use crate::ext::ExtReal;

const SCAN_POINTS: usize = 1024;
const BISECT_TOL: f64 = 1e-9;
const MIN_GRID: usize = 4096;
const CHORD_GRID: usize = 1024;
/// Upper integration limit, in standard deviations above `q`.
const TRUNC_SD: f64 = 12.0;
const QUAD_TOL: f64 = 1e-12;
const QUAD_MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PsiVariant {
    MinOnInterval,
    Chord,
}

fn check_alpha(sigma: f64, alpha: f64) -> Result<(), BoundsError> {
    if !alpha.is_finite() || alpha <= sigma {
        return Err(BoundsError::InvalidParams(format!(
            "alpha must exceed sigma = {sigma}, got {alpha}"
        )));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<(), BoundsError> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(BoundsError::InvalidParams(format!("q = ln(v0/k) must be > 0, got {q}")));
    }
    Ok(())
}

fn check_t(t_switch: f64) -> Result<(), BoundsError> {
    if !t_switch.is_finite() || t_switch < 0.0 {
        return Err(BoundsError::InvalidParams(format!(
            "t_switch must be finite and >= 0, got {t_switch}"
        )));
    }
    Ok(())
}

/// `E(τ) = q²/(α²−σ²)` for the critical barrier when `α > σ`, else `+∞`.
pub fn mean_fpt_critical(params: &GbmParams, alpha: f64) -> Result<ExtReal, BoundsError> {
    let q = params.q();
    check_q(q)?;
    if alpha.is_nan() {
        return Err(BoundsError::InvalidParams("alpha is NaN".into()));
    }
    let s = params.sigma;
    if alpha <= s {
        return Ok(ExtReal::INFINITY);
    }
    Ok(ExtReal(q * q / (alpha * alpha - s * s)))
}

fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn upper_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `∫_a^∞ x² φ_{q,s}(x) dx` for a normal density with mean `q` and standard
/// deviation `s ≥ 0`.
pub fn truncated_second_moment(q: f64, s: f64, a: f64) -> f64 {
    if s == 0.0 {
        return if q > a { q * q } else { 0.0 };
    }
    let z = (a - q) / s;
    (q * q + s * s) * upper_tail(z) + s * std_normal_pdf(z) * (q + a)
}

/// `1 − exp(−2ab/c²)`.
pub fn psi(a: f64, b: f64, c: f64) -> f64 {
    -(-2.0 * a * b / (c * c)).exp_m1()
}

fn time_grid(horizon: f64) -> Vec<f64> {
    if horizon <= 1.0 {
        return (0..SCAN_POINTS)
            .map(|i| horizon * i as f64 / (SCAN_POINTS - 1) as f64)
            .collect();
    }
    let n_lin = SCAN_POINTS / 2;
    let n_log = SCAN_POINTS - n_lin;
    let mut grid: Vec<f64> = (0..n_lin).map(|i| i as f64 / n_lin as f64).collect();
    let span = horizon.ln();
    grid.extend((0..n_log).map(|i| (span * i as f64 / (n_log - 1) as f64).exp()));
    *grid.last_mut().unwrap() = horizon;
    grid
}

/// Locates `T = inf{t ≥ 0 : B(s) ≥ B_c(s, α) for all s ≥ t}` from the last
/// sign change of `B̃(t) − α√t` on `[0, horizon]`.
///
/// The scan says nothing about `t > horizon`. Domination there must come
/// from `attest_beyond` or from a declared profile whose liminf against
/// `exp(α√t)` exceeds one.
pub fn find_t_switch(
    spec: &BarrierSpec,
    alpha: f64,
    horizon: f64,
    attest_beyond: bool,
) -> Result<f64, BoundsError> {
    check_alpha(spec.params().sigma, alpha)?;
    if !horizon.is_finite() || horizon <= 0.0 {
        return Err(BoundsError::InvalidParams(format!(
            "horizon must be finite and > 0, got {horizon}"
        )));
    }
    let g = |t: f64| -> Result<f64, BoundsError> {
        Ok(spec.eval_effective_tilde(t)? - alpha * t.sqrt())
    };
    let grid = time_grid(horizon);
    let values = grid.iter().map(|&t| g(t)).collect::<Result<Vec<_>, _>>()?;
    if *values.last().unwrap() < 0.0 {
        return Err(BoundsError::NoDomination(horizon));
    }
    let tail_ok = attest_beyond
        || spec
            .profile()
            .and_then(|p| liminf_against_sqrt(p, alpha).ok())
            .is_some_and(|l| l.0 > 1.0);
    if !tail_ok {
        return Err(BoundsError::UnattestedTail);
    }
    let Some(last_neg) = values.iter().rposition(|&v| v < 0.0) else {
        return Ok(0.0);
    };
    let (mut lo, mut hi) = (grid[last_neg], grid[last_neg + 1]);
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

fn base_assumptions(alpha: f64, t_switch: f64) -> Vec<String> {
    vec![
        format!("alpha = {alpha} exceeds sigma"),
        format!("B(s) >= B_c(s, alpha) for all s >= T = {t_switch}"),
    ]
}

/// `T + ∫_{α√T}^∞ x²/(α²−σ²) φ_{q,σ√T}(x) dx`, evaluated in closed form.
pub fn upper_bound_thm(
    spec: &BarrierSpec,
    alpha: f64,
    t_switch: f64,
) -> Result<BoundReport, BoundsError> {
    let params = spec.params();
    let (q, sigma) = (params.q(), params.sigma);
    check_q(q)?;
    check_alpha(sigma, alpha)?;
    check_t(t_switch)?;
    let s = sigma * t_switch.sqrt();
    let a = alpha * t_switch.sqrt();
    let m2 = truncated_second_moment(q, s, a);
    Ok(BoundReport {
        kind: BoundKind::UpperThm,
        value: ExtReal(t_switch + m2 / (alpha * alpha - sigma * sigma)),
        t_switch: Some(t_switch),
        quadrature_error: 0.0,
        assumptions: base_assumptions(alpha, t_switch),
    })
}

/// `T + ∫_{α√T}^∞ x²/(α²−σ²) Ψ(psi_a, x − shift, σ√T) φ_{q,σ√T}(x) dx`.
/// The part beyond `q + 12σ√T` is replaced by its `Ψ ≤ 1` majorant.
fn psi_weighted(q: f64, sigma: f64, alpha: f64, t_switch: f64, psi_a: f64, shift: f64) -> (f64, f64) {
    let s = sigma * t_switch.sqrt();
    let a = alpha * t_switch.sqrt();
    let denom = alpha * alpha - sigma * sigma;
    let cut = q + TRUNC_SD * s;
    if a >= cut {
        return (t_switch + truncated_second_moment(q, s, a) / denom, 0.0);
    }
    let norm = 1.0 / (s * (2.0 * std::f64::consts::PI).sqrt());
    let integrand = |x: f64| {
        let z = (x - q) / s;
        x * x * psi(psi_a, x - shift, s) * norm * (-0.5 * z * z).exp()
    };
    let body = integrate(integrand, a, cut, QUAD_TOL, QUAD_TOL, QUAD_MAX_INTERVALS);
    let tail = truncated_second_moment(q, s, cut);
    (
        t_switch + (body.value + tail) / denom,
        (body.error + tail) / denom,
    )
}

/// Ψ-refined bound with an explicit lower level `m ≤ min_{[0,T]} B̃`.
/// `m = −∞` makes `Ψ ≡ 1` and recovers [`upper_bound_thm`].
pub fn upper_bound_psi_with_min(
    params: &GbmParams,
    alpha: f64,
    t_switch: f64,
    m: f64,
) -> Result<BoundReport, BoundsError> {
    let (q, sigma) = (params.q(), params.sigma);
    check_q(q)?;
    check_alpha(sigma, alpha)?;
    check_t(t_switch)?;
    if t_switch == 0.0 {
        return Err(BoundsError::InvalidParams("Psi bounds need t_switch > 0".into()));
    }
    let (value, err) = psi_weighted(q, sigma, alpha, t_switch, q - m, m);
    let mut assumptions = base_assumptions(alpha, t_switch);
    assumptions.push(format!("B~(t) >= m = {m} on [0, T]"));
    Ok(BoundReport {
        kind: BoundKind::UpperPsiMin,
        value: ExtReal(value),
        t_switch: Some(t_switch),
        quadrature_error: err,
        assumptions,
    })
}

fn golden_min<F: FnMut(f64) -> Result<f64, BoundsError>>(
    mut f: F,
    mut a: f64,
    mut b: f64,
) -> Result<f64, BoundsError> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(fc.min(fd))
}

/// `min_{[0,T]} B̃` from a 4096-point grid refined by golden section around
/// the best grid point.
fn min_on_interval(spec: &BarrierSpec, t_switch: f64) -> Result<f64, BoundsError> {
    let f = |t: f64| -> Result<f64, BoundsError> { Ok(spec.eval_effective_tilde(t)?) };
    let step = t_switch / (MIN_GRID - 1) as f64;
    let mut best = (0usize, f64::INFINITY);
    for i in 0..MIN_GRID {
        let v = f(i as f64 * step)?;
        if v < best.1 {
            best = (i, v);
        }
    }
    let lo = best.0.saturating_sub(1) as f64 * step;
    let hi = ((best.0 + 1).min(MIN_GRID - 1)) as f64 * step;
    Ok(best.1.min(golden_min(f, lo, hi)?))
}

/// Ψ-refined upper bound. `MinOnInterval` uses `Ψ(q−m, x−m, σ√T)`; `Chord`
/// uses `Ψ(q − B̃(0), x − α√T, σ√T)` after checking that `B̃` stays above the
/// chord from `(0, B̃(0))` to `(T, α√T)`.
pub fn upper_bound_psi(
    spec: &BarrierSpec,
    alpha: f64,
    t_switch: f64,
    variant: PsiVariant,
) -> Result<BoundReport, BoundsError> {
    let params = spec.params();
    check_alpha(params.sigma, alpha)?;
    check_t(t_switch)?;
    if t_switch == 0.0 {
        return Err(BoundsError::InvalidParams("Psi bounds need t_switch > 0".into()));
    }
    match variant {
        PsiVariant::MinOnInterval => {
            let m = min_on_interval(spec, t_switch)?;
            upper_bound_psi_with_min(params, alpha, t_switch, m)
        }
        PsiVariant::Chord => {
            let (q, sigma) = (params.q(), params.sigma);
            check_q(q)?;
            let b0 = spec.eval_effective_tilde(0.0)?;
            let bt = alpha * t_switch.sqrt();
            for i in 1..CHORD_GRID {
                let t = t_switch * i as f64 / (CHORD_GRID - 1) as f64;
                let chord = b0 + (bt - b0) * t / t_switch;
                if spec.eval_effective_tilde(t)? < chord - 1e-8 * (1.0 + chord.abs()) {
                    return Err(BoundsError::ChordViolation(t));
                }
            }
            let (value, err) = psi_weighted(q, sigma, alpha, t_switch, q - b0, bt);
            let mut assumptions = base_assumptions(alpha, t_switch);
            assumptions.push("B~ lies above its chord on [0, T]".into());
            Ok(BoundReport {
                kind: BoundKind::UpperPsiChord,
                value: ExtReal(value),
                t_switch: Some(t_switch),
                quadrature_error: err,
                assumptions,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(sigma: f64, q: f64, tilde: &str) -> BarrierSpec {
        BarrierSpec::parse(GbmParams::new(0.0, sigma, q.exp(), 1.0).unwrap(), tilde).unwrap()
    }

    // Composite Simpson on [a, b] with n (even) panels.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(a + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn critical_mean_examples() {
        let p = |q: f64| GbmParams::new(0.0, 1.0, q.exp(), 1.0).unwrap();
        // α² is not exactly representable, so "exact" means a few ulp.
        for (q, alpha) in [(1.0, 2f64.sqrt()), (2.0, 5f64.sqrt())] {
            let v = mean_fpt_critical(&p(q), alpha).unwrap().0;
            assert!((v - 1.0).abs() <= 4.0 * f64::EPSILON, "{v}");
        }
        assert!(mean_fpt_critical(&p(1.0), 1.0).unwrap().is_infinite());
        assert!(mean_fpt_critical(&p(1.0), 0.3).unwrap().is_infinite());
    }

    #[test]
    fn critical_mean_decreasing_and_divergent() {
        let p = GbmParams::new(0.0, 1.0, 1f64.exp(), 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let alpha = 1.0 + 1e-6 * 1.5f64.powi(k);
            let v = mean_fpt_critical(&p, alpha).unwrap().0;
            assert!(v < prev);
            prev = v;
        }
        assert!(mean_fpt_critical(&p, 1.0 + 1e-12).unwrap().0 > 1e11);
    }

    #[test]
    fn t_switch_examples() {
        let s = spec(1.0, 1.0, "2*sqrt(t)");
        assert_eq!(find_t_switch(&s, 1.5, 100.0, true).unwrap(), 0.0);
        let s = spec(1.0, 1.0, "2*sqrt(t) - 1");
        let t = find_t_switch(&s, 1.5, 100.0, true).unwrap();
        assert!((t - 4.0).abs() < 1e-8, "{t}");
        let s = spec(1.0, 1.0, "-t");
        assert!(matches!(
            find_t_switch(&s, 1.5, 100.0, true),
            Err(BoundsError::NoDomination(_))
        ));
    }

    #[test]
    fn t_switch_needs_tail_attestation() {
        let s = spec(1.0, 1.0, "2*sqrt(t) - 1");
        assert_eq!(find_t_switch(&s, 1.5, 100.0, false), Err(BoundsError::UnattestedTail));
        let declared = s.with_profile(
            crate::barrier::AsymptoticProfile::new(crate::barrier::GrowthClass::SqrtT { c: 2.0 })
                .unwrap(),
        );
        let t = find_t_switch(&declared, 1.5, 100.0, false).unwrap();
        assert!((t - 4.0).abs() < 1e-8);
    }

    #[test]
    fn t_switch_bisection_oracle() {
        // 3√t − 2 crosses 1.2√t once; compare against an independent bisection.
        let s = spec(1.0, 3.0, "3*sqrt(t) - 2");
        let t = find_t_switch(&s, 1.2, 1e4, true).unwrap();
        let (mut lo, mut hi) = (0.0f64, 10.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if 1.8 * mid.sqrt() - 2.0 < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        assert!((t - lo).abs() < 1e-8, "{t} vs {lo}");
    }

    #[test]
    fn thm_examples() {
        let s = spec(1.0, 1.0, "0");
        let r = upper_bound_thm(&s, 2f64.sqrt(), 0.0).unwrap();
        assert!((r.value.0 - 1.0).abs() < 1e-15);
        assert_eq!(r.kind, BoundKind::UpperThm);
        assert!(matches!(upper_bound_thm(&s, 1.0, 0.0), Err(BoundsError::InvalidParams(_))));
    }

    #[test]
    fn thm_closed_form_matches_simpson_and_frozen_value() {
        let s = spec(1.0, 1.0, "0");
        let v = upper_bound_thm(&s, 2f64.sqrt(), 4.0).unwrap().value.0;
        let pdf = |x: f64| (-0.5 * ((x - 1.0) / 2.0).powi(2)).exp() / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
        let oracle = 4.0 + simpson(|x| x * x * pdf(x), 2.0 * 2f64.sqrt(), 1.0 + 30.0, 200_000);
        assert!((v - oracle).abs() / oracle < 1e-8, "{v} vs {oracle}");
        assert!((v - 6.912_787_856_094_61).abs() < 1e-12, "{v}");
    }

    #[test]
    fn thm_continuity_as_t_vanishes() {
        let s = spec(1.0, 1.0, "0");
        let diffs: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&t| (upper_bound_thm(&s, 2f64.sqrt(), t).unwrap().value.0 - 1.0).abs())
            .collect();
        assert!(diffs[0] > diffs[1] && diffs[1] > diffs[2], "{diffs:?}");
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi(3.0, 0.0, 1.0), 0.0);
        assert!((psi(1.0, 1.0, 2f64.sqrt()) - (1.0 - (-1f64).exp())).abs() < 1e-15);
        assert!(1.0 - psi(10.0, 10.0, 1.0) < 1e-80);
    }

    #[test]
    fn psi_to_one_recovers_thm() {
        let s = spec(1.0, 1.0, "2*sqrt(t) - 1");
        let thm = upper_bound_thm(&s, 1.5, 4.0).unwrap().value.0;
        let r = upper_bound_psi_with_min(s.params(), 1.5, 4.0, f64::NEG_INFINITY).unwrap();
        assert!((r.value.0 - thm).abs() < 1e-9, "{} vs {thm}", r.value.0);
    }

    #[test]
    fn psi_bounds_are_ordered_and_strict() {
        let s = spec(1.0, 1.0, "2*sqrt(t) - 1");
        let thm = upper_bound_thm(&s, 1.5, 4.0).unwrap().value.0;
        let min = upper_bound_psi(&s, 1.5, 4.0, PsiVariant::MinOnInterval).unwrap();
        let chord = upper_bound_psi(&s, 1.5, 4.0, PsiVariant::Chord).unwrap();
        assert!(min.value.0 < thm);
        assert!(chord.value.0 <= min.value.0 + 1e-7);
        assert!(min.quadrature_error < 1e-7);
    }

    #[test]
    fn psi_min_matches_simpson_oracle() {
        let s = spec(1.0, 1.0, "2*sqrt(t) - 1");
        let v = upper_bound_psi(&s, 1.5, 4.0, PsiVariant::MinOnInterval).unwrap().value.0;
        // m = −1, σ√T = 2, α√T = 3.
        let f = |x: f64| {
            let p = 1.0 - (-2.0 * 2.0 * (x + 1.0) / 4.0).exp();
            let d = (-0.5 * ((x - 1.0) / 2.0).powi(2)).exp() / (2.0 * (2.0 * std::f64::consts::PI).sqrt());
            x * x * p * d / (2.25 - 1.0)
        };
        let oracle = 4.0 + simpson(f, 3.0, 40.0, 200_000);
        assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
    }

    #[test]
    fn chord_violation_detected() {
        // Convex dip below the chord on [0, T].
        let s = spec(1.0, 1.0, "t*t/8 - 1");
        let t = find_t_switch(&s, 1.5, 100.0, true).unwrap();
        assert!(matches!(
            upper_bound_psi(&s, 1.5, t, PsiVariant::Chord),
            Err(BoundsError::ChordViolation(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn psi_range_and_monotone(a in 0.0f64..10.0, b in 0.0f64..10.0, c in 0.1f64..5.0, d in 0.0f64..1.0) {
            let v = psi(a, b, c);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v < 1.0 || a * b / (c * c) > 15.0);
            prop_assert!(psi(a + d, b, c) >= v);
            prop_assert!(psi(a, b + d, c) >= v);
        }

        #[test]
        fn bounds_positive(q in 0.05f64..5.0, sigma in 0.1f64..2.0, ratio in 1.01f64..4.0, t in 0.0f64..20.0) {
            let s = spec(sigma, q, "0");
            let v = upper_bound_thm(&s, sigma * ratio, t).unwrap().value.0;
            prop_assert!(v > 0.0 && v.is_finite());
        }
    }
}
