use serde::{Deserialize, Serialize};

use super::{estimate, simulate_fpt, FptEstimate, SimConfig, SimError};
use crate::barrier::BarrierSpec;
use crate::classifier::Zone;

const DOMINANCE_GRID: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub n_paths: usize,
    pub violations: usize,
    /// Paths on which both passage times coincide (both censored included).
    pub n_equal: usize,
    pub first_violation: Option<usize>,
}

/// Common-random-number comparison of two barriers with `B_hi ≥ B_lo`.
pub fn pathwise_dominance_check(
    spec_hi: &BarrierSpec,
    spec_lo: &BarrierSpec,
    config: &SimConfig,
) -> Result<DominanceReport, SimError> {
    config.validate()?;
    if spec_hi.params() != spec_lo.params() {
        return Err(SimError::Config(
            "dominance check needs identical GBM parameters".into(),
        ));
    }
    for i in 0..DOMINANCE_GRID {
        let t = config.horizon * i as f64 / (DOMINANCE_GRID - 1) as f64;
        let hi = spec_hi.eval_barrier(t)?;
        let lo = spec_lo.eval_barrier(t)?;
        if hi < lo - 1e-12 * lo.abs() {
            return Err(SimError::NotDominated(t));
        }
    }
    let a = simulate_fpt(spec_hi, config)?;
    let b = simulate_fpt(spec_lo, config)?;
    let inf = f64::INFINITY;
    let mut report = DominanceReport {
        n_paths: config.n_paths,
        violations: 0,
        n_equal: 0,
        first_violation: None,
    };
    for (i, (x, y)) in a.times.iter().zip(&b.times).enumerate() {
        let (x, y) = (x.unwrap_or(inf), y.unwrap_or(inf));
        if x > y {
            report.violations += 1;
            report.first_violation.get_or_insert(i);
        } else if x == y {
            report.n_equal += 1;
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub zone: Zone,
    pub horizons: Vec<f64>,
    pub estimates: Vec<FptEstimate>,
    pub criteria: Vec<CriterionResult>,
    pub verdict: Verdict,
}

/// Relative change of the truncated mean over the last horizon step below
/// which the mean counts as stabilized.
pub const MEAN_STABLE_REL: f64 = 0.05;
/// Accepted tail-slope band for a Yellow verdict.
pub const YELLOW_SLOPE: (f64, f64) = (-0.7, -0.3);

fn crit(name: &str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult {
        name: name.into(),
        passed,
        detail,
    }
}

/// Simulates once at the largest horizon and reads the smaller horizons off
/// the same paths, then tests the behavior `zone` predicts.
///
/// Red: the truncated mean changes by less than 5% on the last horizon step
/// and survival falls toward 0. Yellow: survival falls, the truncated mean is
/// still growing by at least 5%, and the tail slope lies in [−0.7, −0.3].
/// Green: the last two survival estimates agree within two combined standard
/// errors and stay positive. Undecidable zones are inconclusive.
pub fn zone_consistency_check(
    spec: &BarrierSpec,
    zone: Zone,
    config: &SimConfig,
    horizons: &[f64],
) -> Result<ConsistencyReport, SimError> {
    let mut hs: Vec<f64> = horizons.to_vec();
    if hs.len() < 2 {
        return Err(SimError::Config("need at least two horizons".into()));
    }
    if hs.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
        return Err(SimError::Config("horizons must be finite and > 0".into()));
    }
    hs.sort_by(f64::total_cmp);
    hs.dedup();
    if hs.len() < 2 {
        return Err(SimError::Config("need at least two distinct horizons".into()));
    }
    if !zone.is_decidable() {
        return Ok(ConsistencyReport {
            zone,
            horizons: hs,
            estimates: vec![],
            criteria: vec![],
            verdict: Verdict::Inconclusive,
        });
    }
    let full = simulate_fpt(
        spec,
        &SimConfig {
            horizon: *hs.last().unwrap(),
            ..*config
        },
    )?;
    let estimates = hs
        .iter()
        .map(|&h| estimate(&full.censor_at(h)))
        .collect::<Result<Vec<_>, _>>()?;
    let first = &estimates[0];
    let prev = &estimates[estimates.len() - 2];
    let last = &estimates[estimates.len() - 1];
    let (s0, s_prev, s_last) = (
        first.survival_at_horizon,
        prev.survival_at_horizon,
        last.survival_at_horizon,
    );
    let mean_change = (last.truncated_mean.estimate - prev.truncated_mean.estimate)
        / prev.truncated_mean.estimate.max(f64::MIN_POSITIVE);
    let survival_falls = s_last.estimate < s0.estimate
        && s0.estimate - s_last.estimate
            > 2.0 * (s0.std_error.powi(2) + s_last.std_error.powi(2)).sqrt();

    let mut criteria = Vec::new();
    match zone {
        Zone::Red => {
            criteria.push(crit(
                "mean_stabilizes",
                mean_change.abs() < MEAN_STABLE_REL,
                format!("relative change of truncated mean on the last step = {mean_change:.4}"),
            ));
            criteria.push(crit(
                "survival_to_zero",
                s_last.estimate <= s0.estimate && s_last.upper < 0.05,
                format!(
                    "survival {:.3e} at t={} and {:.3e} at t={}",
                    s0.estimate, hs[0], s_last.estimate, last.horizon
                ),
            ));
        }
        Zone::Yellow => {
            criteria.push(crit(
                "survival_decreasing",
                survival_falls,
                format!(
                    "survival {:.4} at t={} and {:.4} at t={}",
                    s0.estimate, hs[0], s_last.estimate, last.horizon
                ),
            ));
            criteria.push(crit(
                "mean_keeps_growing",
                mean_change >= MEAN_STABLE_REL,
                format!("relative change of truncated mean on the last step = {mean_change:.4}"),
            ));
            let slope = last.tail_slope.map(|s| s.slope);
            criteria.push(crit(
                "tail_slope_in_band",
                slope.is_some_and(|s| (YELLOW_SLOPE.0..=YELLOW_SLOPE.1).contains(&s)),
                format!("tail slope {slope:?}, band {YELLOW_SLOPE:?}"),
            ));
        }
        Zone::Green => {
            let se = (s_prev.std_error.powi(2) + s_last.std_error.powi(2)).sqrt();
            criteria.push(crit(
                "survival_plateau",
                (s_prev.estimate - s_last.estimate).abs() <= 2.0 * se,
                format!(
                    "survival {:.4} at t={} and {:.4} at t={} (2 se = {:.4})",
                    s_prev.estimate, prev.horizon, s_last.estimate, last.horizon, 2.0 * se
                ),
            ));
            criteria.push(crit(
                "plateau_positive",
                s_last.estimate > 0.0 && s_last.lower > 0.0,
                format!("Wilson lower bound {:.4}", s_last.lower),
            ));
        }
        _ => unreachable!("undecidable zones return early"),
    }
    let verdict = if criteria.iter().all(|c| c.passed) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(ConsistencyReport {
        zone,
        horizons: hs,
        estimates,
        criteria,
        verdict,
    })
}
