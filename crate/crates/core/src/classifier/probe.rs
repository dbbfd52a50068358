//! Numeric stand-in for the asymptotic limits when no profile is declared.
//!
//! The barrier residual is sampled on a log-spaced grid; the upper half of the
//! grid is the "tail". Around every tail point a short window is sampled
//! densely and each log-ratio is refined by golden-section search at its
//! window extremum, which catches narrow excursions such as the zeros of
//! `t·|sin t|`. Running inf/sup over all tail samples stand in for
//! liminf/limsup. Nothing here certifies a limit.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{eps_grid, AsymptoticLimits, Provenance};
use crate::barrier::BarrierSpec;
use crate::expr::EvalError;
use crate::ext::ExtReal;

/// Below `e^{e²}` the reference `σ√(2t ln ln t)` is smaller than `2σ√t` and
/// the pointwise ordering of the ratios breaks down; tail samples start above it.
const TAIL_FLOOR: f64 = 1_618.177_991_912_653_5;
const GOLDEN_ITERS: usize = 48;
const OSCILLATION_TOL: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("degenerate probe grid: {0}")]
    DegenerateGrid(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Log-spaced probe grid with a dense refinement window after each tail point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub window: f64,
    pub window_samples: usize,
}

impl Default for ProbeGrid {
    fn default() -> Self {
        ProbeGrid {
            t_min: 10.0,
            t_max: 1e8,
            n_points: 64,
            window: 8.0,
            window_samples: 256,
        }
    }
}

impl ProbeGrid {
    pub fn validate(&self) -> Result<(), ProbeError> {
        let bad = |m: String| Err(ProbeError::DegenerateGrid(m));
        if self.n_points < 32 {
            return bad(format!("need at least 32 points, got {}", self.n_points));
        }
        if !(self.t_min > std::f64::consts::E) {
            return bad(format!("t_min must exceed e, got {}", self.t_min));
        }
        if !(self.t_max >= 1e6) || !self.t_max.is_finite() {
            return bad(format!("t_max must be >= 1e6, got {}", self.t_max));
        }
        if self.t_min >= self.t_max {
            return bad("t_min must be below t_max".into());
        }
        if !(self.window >= 0.0) || !self.window.is_finite() {
            return bad("window must be finite and >= 0".into());
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        let n = self.n_points;
        (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
    pub tail_start: f64,
    pub n_evaluations: usize,
    /// Residual both rises and falls by more than 0.1 across the tail.
    pub oscillating: bool,
}

/// Log-ratios at one time point; index layout:
/// 0 = minus ref, 1 = plus ref, 2 = σ√t ref, 3.. = (σ+ε)√t refs.
struct Refs {
    sigma: f64,
    eps: Vec<f64>,
}

impl Refs {
    fn n(&self) -> usize {
        3 + self.eps.len()
    }

    fn value(&self, idx: usize, t: f64, b: f64) -> f64 {
        let root = t.sqrt();
        match idx {
            0 => b + self.sigma * SQRT_2 * (t * t.ln().ln()).sqrt(),
            1 => b - self.sigma * SQRT_2 * (t * t.ln().ln()).sqrt(),
            2 => b - self.sigma * root,
            k => b - (self.sigma + self.eps[k - 3]) * root,
        }
    }

    /// Quantities 0, 1, 3.. are liminfs (minimize); 0, 1, 2 are limsups (maximize).
    fn targets(&self) -> Vec<(usize, bool)> {
        let mut v = vec![(0, false), (0, true), (1, false), (1, true), (2, true)];
        v.extend((3..self.n()).map(|k| (k, false)));
        v
    }
}

fn golden_extremum<F>(f: &mut F, mut a: f64, mut b: f64, maximize: bool) -> Result<f64, EvalError>
where
    F: FnMut(f64) -> Result<f64, EvalError>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let sgn = if maximize { -1.0 } else { 1.0 };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = sgn * f(c)?;
    let mut fd = sgn * f(d)?;
    for _ in 0..GOLDEN_ITERS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sgn * f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sgn * f(d)?;
        }
    }
    Ok(0.5 * (a + b))
}

/// Heuristic limits from a finite grid; provenance is always `Probed`.
pub fn probe_limits(spec: &BarrierSpec, grid: &ProbeGrid) -> Result<AsymptoticLimits, ProbeError> {
    grid.validate()?;
    let sigma = spec.params().sigma;
    let refs = Refs {
        sigma,
        eps: eps_grid(sigma),
    };
    let points = grid.points();
    let half = points.len() / 2;
    let tail: Vec<f64> = points[half..]
        .iter()
        .copied()
        .filter(|&t| t >= TAIL_FLOOR)
        .collect();
    if tail.is_empty() {
        return Err(ProbeError::DegenerateGrid(format!(
            "no tail points above {TAIL_FLOOR}"
        )));
    }

    let mut evals = 0usize;
    let mut residual = |t: f64| -> Result<f64, EvalError> {
        evals += 1;
        spec.eval_effective_tilde(t)
    };

    // Every (t, B̃(t)) pair that enters the inf/sup; sharing one sample set
    // across quantities keeps the partial order between them exact.
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for &t0 in &tail {
        samples.push((t0, residual(t0)?));
        let m = grid.window_samples;
        if grid.window <= 0.0 || m < 3 {
            continue;
        }
        let ts: Vec<f64> = (1..=m)
            .map(|j| t0 + grid.window * j as f64 / m as f64)
            .collect();
        let mut bs = Vec::with_capacity(m);
        for &t in &ts {
            bs.push(residual(t)?);
        }
        for (idx, maximize) in refs.targets() {
            let mut best = 0usize;
            let mut best_v = refs.value(idx, ts[0], bs[0]);
            for j in 1..m {
                let v = refs.value(idx, ts[j], bs[j]);
                if (maximize && v > best_v) || (!maximize && v < best_v) {
                    best = j;
                    best_v = v;
                }
            }
            let lo = if best == 0 { t0 } else { ts[best - 1] };
            let hi = ts[(best + 1).min(m - 1)];
            let mut objective = |t: f64| residual(t).map(|b| refs.value(idx, t, b));
            let t_star = golden_extremum(&mut objective, lo, hi, maximize)?;
            samples.push((t_star, residual(t_star)?));
        }
        samples.extend(ts.into_iter().zip(bs));
    }

    let n_q = refs.n();
    let mut lo = vec![f64::INFINITY; n_q];
    let mut hi = vec![f64::NEG_INFINITY; n_q];
    for &(t, b) in &samples {
        for k in 0..n_q {
            let v = refs.value(k, t, b);
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    let ratio = |log_v: f64| ExtReal(log_v.exp());

    // Oscillation: tail residual (in time order) has both a drawdown and a
    // drawup beyond tolerance.
    let mut ordered = samples.clone();
    ordered.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut run_max, mut run_min) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut drawdown, mut drawup) = (0f64, 0f64);
    for &(_, b) in &ordered {
        run_max = run_max.max(b);
        run_min = run_min.min(b);
        drawdown = drawdown.max(run_max - b);
        drawup = drawup.max(b - run_min);
    }

    Ok(AsymptoticLimits {
        i_minus: ratio(lo[0]),
        i_plus: ratio(lo[1]),
        s_minus: ratio(hi[0]),
        s_plus: ratio(hi[1]),
        ibar: refs
            .eps
            .iter()
            .enumerate()
            .map(|(j, &e)| (e, ratio(lo[3 + j])))
            .collect(),
        sbar0: ratio(hi[2]),
        provenance: Provenance::Probed(ProbeSummary {
            t_min: grid.t_min,
            t_max: grid.t_max,
            n_points: grid.n_points,
            tail_start: tail[0],
            n_evaluations: evals,
            oscillating: drawdown > OSCILLATION_TOL && drawup > OSCILLATION_TOL,
        }),
    })
}
