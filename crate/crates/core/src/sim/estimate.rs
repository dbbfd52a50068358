use serde::{Deserialize, Serialize};

use super::{FptSampleSet, SimError};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Smallest sample set accepted by [`estimate`].
pub const MIN_PATHS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub estimate: f64,
    pub std_error: f64,
    /// Wilson score interval at 95%.
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailSlope {
    pub slope: f64,
    pub rms_residual: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FptEstimate {
    pub n_paths: usize,
    pub horizon: f64,
    pub survival_at_horizon: SurvivalEstimate,
    /// Mean of `min(τ, horizon)`.
    pub truncated_mean: MeanEstimate,
    /// Least-squares slope of `ln P(τ > t)` against `ln t` on `[horizon/10, horizon]`.
    pub tail_slope: Option<TailSlope>,
}

pub fn wilson(successes: usize, n: usize) -> SurvivalEstimate {
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    SurvivalEstimate {
        estimate: p,
        std_error: (p * (1.0 - p) / nf).sqrt(),
        lower: if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
        upper: if successes == n { 1.0 } else { (centre + half).min(1.0) },
    }
}

fn tail_slope(samples: &FptSampleSet) -> Option<TailSlope> {
    let horizon = samples.config.horizon;
    let n = samples.n_paths() as f64;
    let mut times: Vec<f64> = samples.crossing_times().collect();
    times.sort_by(f64::total_cmp);
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let total = times.len();
    let mut i = 0;
    while i < total {
        let t = times[i];
        let mut j = i;
        while j < total && times[j] == t {
            j += 1;
        }
        // Paths with τ > t: later crossings plus the censored ones.
        let alive = (total - j) as f64 + samples.n_censored as f64;
        if t >= horizon / 10.0 && alive > 0.0 {
            pts.push((t.ln(), (alive / n).ln()));
        }
        i = j;
    }
    if pts.len() < 3 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rss: f64 = pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum();
    Some(TailSlope {
        slope,
        rms_residual: (rss / m).sqrt(),
        n_points: pts.len(),
    })
}

pub fn estimate(samples: &FptSampleSet) -> Result<FptEstimate, SimError> {
    let n = samples.n_paths();
    if n < MIN_PATHS {
        return Err(SimError::DegenerateSamples(format!(
            "need at least {MIN_PATHS} paths, got {n}"
        )));
    }
    let horizon = samples.config.horizon;
    let truncated: Vec<f64> = samples
        .times
        .iter()
        .map(|t| t.unwrap_or(horizon).min(horizon))
        .collect();
    let nf = n as f64;
    let mean = truncated.iter().sum::<f64>() / nf;
    let var = truncated.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    Ok(FptEstimate {
        n_paths: n,
        horizon,
        survival_at_horizon: wilson(samples.n_censored, n),
        truncated_mean: MeanEstimate {
            estimate: mean,
            std_error: (var / nf).sqrt(),
        },
        tail_slope: tail_slope(samples),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::SimConfig;

    fn set(times: Vec<Option<f64>>, horizon: f64) -> FptSampleSet {
        let n_censored = times.iter().filter(|t| t.is_none()).count();
        FptSampleSet {
            times,
            n_censored,
            config: SimConfig {
                n_paths: 0,
                horizon,
                dt: 0.01,
                ..Default::default()
            },
            wall_time_secs: 0.0,
        }
    }

    #[test]
    fn all_censored() {
        let e = estimate(&set(vec![None; 200], 5.0)).unwrap();
        assert_eq!(e.survival_at_horizon.estimate, 1.0);
        assert_eq!(e.truncated_mean.estimate, 5.0);
        assert_eq!(e.truncated_mean.std_error, 0.0);
        assert!(e.survival_at_horizon.upper <= 1.0 && e.survival_at_horizon.lower < 1.0);
        assert!(e.tail_slope.is_none());
    }

    #[test]
    fn too_few_paths() {
        assert!(matches!(
            estimate(&set(vec![None; 10], 1.0)),
            Err(SimError::DegenerateSamples(_))
        ));
    }

    #[test]
    fn wilson_known_value() {
        // 50/100: centre 0.5, half-width z·sqrt(0.0025 + z²/40000)/(1 + z²/100).
        let w = wilson(50, 100);
        let z = Z95;
        let half = z * (0.0025 + z * z / 40000.0f64).sqrt() / (1.0 + z * z / 100.0);
        assert!((w.upper - (0.5 + half)).abs() < 1e-15);
        assert!((w.lower - (0.5 - half)).abs() < 1e-15);
        let w = wilson(0, 100);
        assert_eq!(w.lower, 0.0);
        assert!(w.upper > 0.0);
    }

    #[test]
    fn exact_power_law_slope() {
        // Survival k/n at t = (n/k)^2 has slope exactly −1/2 in log-log.
        let n = 1000usize;
        let horizon = 100.0;
        let mut times = Vec::new();
        for k in (1..=n).rev() {
            let t = (n as f64 / k as f64).powi(2);
            // The path crossing at t leaves k − 1 survivors.
            times.push(if t <= horizon && k > 100 { Some(t * (1.0 + 1e-12)) } else { None });
        }
        let s = set(times, horizon);
        let slope = tail_slope(&s).unwrap();
        assert!((slope.slope + 0.5).abs() < 0.05, "{slope:?}");
    }
}
