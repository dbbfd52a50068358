//! Principal branch of the Lambert W function.

/// Relative convergence target for the Halley iteration.
const TOL: f64 = 1e-14;
const MAX_ITER: usize = 64;

/// `W₀(x)` for `x ≥ −1/e`, the solution `w ≥ −1` of `w·e^w = x`.
/// Returns NaN below the branch point.
pub fn lambert_w0(x: f64) -> f64 {
    let branch = -(-1f64).exp();
    if x.is_nan() || x < branch {
        return f64::NAN;
    }
    if x == 0.0 {
        return 0.0;
    }
    if x == branch {
        return -1.0;
    }
    if x == f64::INFINITY {
        return f64::INFINITY;
    }
    let mut w = if x < 0.25 {
        // Series about the branch point.
        let p = (2.0 * (std::f64::consts::E * x + 1.0)).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if x < 3.0 {
        (1.0 + x).ln() * 0.75
    } else {
        let l1 = x.ln();
        l1 - l1.ln()
    };
    for _ in 0..MAX_ITER {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        // Halley step: f / (f' − f·f''/(2f')) with f' = e^w (w+1).
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= TOL * w.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    w
}
