use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::barrier::BarrierSpec;

/// Largest number of time steps accepted for one run.
pub const MAX_STEPS: usize = 50_000_000;

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n_paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    #[serde(default = "default_true")]
    pub bridge_correction: bool,
    #[serde(default)]
    pub antithetic: bool,
    /// Run paths on the rayon pool. Results do not depend on this flag.
    #[serde(default = "default_true")]
    pub parallel: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_paths: 10_000,
            dt: 1e-2,
            horizon: 100.0,
            seed: 0,
            bridge_correction: true,
            antithetic: false,
            parallel: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Config(m));
        if self.n_paths == 0 {
            return bad("n_paths must be >= 1".into());
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("dt must be finite and > 0, got {}", self.dt));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return bad(format!("horizon must be finite and > 0, got {}", self.horizon));
        }
        if self.dt > self.horizon {
            return bad(format!("dt = {} exceeds horizon = {}", self.dt, self.horizon));
        }
        if self.n_steps() > MAX_STEPS {
            return bad(format!(
                "horizon/dt = {} steps exceeds the limit of {MAX_STEPS}",
                self.n_steps()
            ));
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened so the grid ends at the horizon.
    pub fn n_steps(&self) -> usize {
        let r = self.horizon / self.dt;
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r {
            n as usize
        } else {
            r.ceil() as usize
        }
    }

    /// Grid times `t_0 = 0, …, t_N = horizon`.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.n_steps();
        let mut g: Vec<f64> = (0..=n).map(|k| (k as f64 * self.dt).min(self.horizon)).collect();
        g[n] = self.horizon;
        g
    }
}

/// Per-path first passage times (`None` when censored at the horizon).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FptSampleSet {
    pub times: Vec<Option<f64>>,
    pub n_censored: usize,
    pub config: SimConfig,
    pub wall_time_secs: f64,
}

/// Equality on the samples and configuration; wall time is ignored.
impl PartialEq for FptSampleSet {
    fn eq(&self, other: &Self) -> bool {
        self.n_censored == other.n_censored
            && self.config == other.config
            && self.times.len() == other.times.len()
            && self
                .times
                .iter()
                .zip(&other.times)
                .all(|(a, b)| a.map(f64::to_bits) == b.map(f64::to_bits))
    }
}

impl FptSampleSet {
    pub fn n_paths(&self) -> usize {
        self.times.len()
    }

    pub fn crossing_times(&self) -> impl Iterator<Item = f64> + '_ {
        self.times.iter().flatten().copied()
    }

    /// Fraction of paths still alive strictly after `t`.
    pub fn survival_at(&self, t: f64) -> f64 {
        let alive = self.times.iter().filter(|x| x.is_none_or(|v| v > t)).count();
        alive as f64 / self.n_paths() as f64
    }

    /// The same sample set viewed at a shorter horizon.
    pub fn censor_at(&self, horizon: f64) -> FptSampleSet {
        let times: Vec<Option<f64>> = self
            .times
            .iter()
            .map(|x| x.filter(|&v| v <= horizon))
            .collect();
        let n_censored = times.iter().filter(|x| x.is_none()).count();
        FptSampleSet {
            times,
            n_censored,
            config: SimConfig {
                horizon,
                ..self.config
            },
            wall_time_secs: self.wall_time_secs,
        }
    }

    /// Rows `path_id,crossed,time`; censored paths report the horizon.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.times.len() * 24 + 32);
        out.push_str("path_id,crossed,time\n");
        for (i, t) in self.times.iter().enumerate() {
            match t {
                Some(v) => out.push_str(&format!("{i},1,{v}\n")),
                None => out.push_str(&format!("{i},0,{}\n", self.config.horizon)),
            }
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "n_paths": self.n_paths(),
            "n_crossed": self.n_paths() - self.n_censored,
            "n_censored": self.n_censored,
            "wall_time_secs": self.wall_time_secs,
        })
    }
}

/// Random stream of one path. Antithetic pairs `(2k, 2k+1)` share stream `k`
/// and the odd member negates its normals.
fn path_rng(config: &SimConfig, path: usize) -> (ChaCha8Rng, f64) {
    let (stream, sign) = if config.antithetic {
        ((path / 2) as u64, if path % 2 == 1 { -1.0 } else { 1.0 })
    } else {
        (path as u64, 1.0)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    (rng, sign)
}

fn run_path(config: &SimConfig, grid: &[f64], sqrt_dt: &[f64], barrier: &[f64], path: usize) -> Option<f64> {
    let (mut rng, sign) = path_rng(config, path);
    let mut w = 0.0f64;
    for k in 1..grid.len() {
        let z: f64 = rng.sample(StandardNormal);
        let next = w + sign * sqrt_dt[k] * z;
        if config.bridge_correction {
            // Drawn every step so that paths stay aligned across barriers.
            let u: f64 = rng.random();
            if next <= barrier[k] {
                return Some(0.5 * (grid[k - 1] + grid[k]));
            }
            let d0 = w - barrier[k - 1];
            let d1 = next - barrier[k];
            let dt = grid[k] - grid[k - 1];
            if u < (-2.0 * d0 * d1 / dt).exp() {
                return Some(0.5 * (grid[k - 1] + grid[k]));
            }
        } else if next <= barrier[k] {
            return Some(grid[k]);
        }
        w = next;
    }
    None
}

/// Simulates `W` with exact Gaussian increments on a uniform grid and records
/// the first time it reaches `B̂(t) = (B̃(t) − ln A(t) − q)/σ`.
pub fn simulate_fpt(spec: &BarrierSpec, config: &SimConfig) -> Result<FptSampleSet, SimError> {
    config.validate()?;
    let start = Instant::now();
    let wspace = spec.to_wspace()?;
    let grid = config.grid();
    let barrier = grid
        .iter()
        .map(|&t| wspace.eval(t))
        .collect::<Result<Vec<_>, _>>()?;
    let sqrt_dt: Vec<f64> = std::iter::once(0.0)
        .chain(grid.windows(2).map(|w| (w[1] - w[0]).sqrt()))
        .collect();
    let one = |i: usize| run_path(config, &grid, &sqrt_dt, &barrier, i);
    let times: Vec<Option<f64>> = if config.parallel {
        (0..config.n_paths).into_par_iter().map(one).collect()
    } else {
        (0..config.n_paths).map(one).collect()
    };
    let n_censored = times.iter().filter(|t| t.is_none()).count();
    Ok(FptSampleSet {
        times,
        n_censored,
        config: *config,
        wall_time_secs: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::GbmParams;

    fn spec(tilde: &str) -> BarrierSpec {
        BarrierSpec::parse(GbmParams::critical(1.0, 1.0).unwrap(), tilde).unwrap()
    }

    fn cfg(n: usize, dt: f64, horizon: f64) -> SimConfig {
        SimConfig {
            n_paths: n,
            dt,
            horizon,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn config_validation() {
        assert!(cfg(0, 0.1, 1.0).validate().is_err());
        assert!(cfg(1, 2.0, 1.0).validate().is_err());
        assert!(cfg(1, f64::NAN, 1.0).validate().is_err());
        assert!(cfg(1, 1e-9, 1e3).validate().is_err());
        assert!(cfg(1, 0.1, 1.0).validate().is_ok());
    }

    #[test]
    fn grid_ends_at_horizon() {
        let c = cfg(1, 0.3, 1.0);
        let g = c.grid();
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let c = cfg(1, 0.1, 1.0);
        assert_eq!(c.n_steps(), 10);
    }

    #[test]
    fn single_path_is_reproducible() {
        let s = spec("sqrt(t)");
        let c = cfg(1, 1e-2, 10.0);
        assert_eq!(simulate_fpt(&s, &c).unwrap(), simulate_fpt(&s, &c).unwrap());
    }

    #[test]
    fn serial_matches_parallel() {
        let s = spec("0.5*t");
        let c = cfg(500, 1e-2, 10.0);
        let a = simulate_fpt(&s, &c).unwrap();
        let b = simulate_fpt(&s, &SimConfig { parallel: false, ..c }).unwrap();
        assert_eq!(a.times, b.times);
    }

    #[test]
    fn sample_invariants() {
        let s = spec("0");
        let c = cfg(2000, 1e-2, 5.0);
        let r = simulate_fpt(&s, &c).unwrap();
        assert_eq!(r.crossing_times().count() + r.n_censored, r.n_paths());
        assert!(r.crossing_times().all(|t| t > 0.0 && t <= 5.0));
    }

    #[test]
    fn antithetic_pairs_mirror_each_other() {
        let s = spec("0");
        let c = SimConfig {
            antithetic: true,
            bridge_correction: false,
            ..cfg(2, 1e-2, 1.0)
        };
        let (mut a, sa) = path_rng(&c, 0);
        let (mut b, sb) = path_rng(&c, 1);
        let za: f64 = a.sample(StandardNormal);
        let zb: f64 = b.sample(StandardNormal);
        assert_eq!(sa * za, -(sb * zb));
        simulate_fpt(&s, &c).unwrap();
    }

    #[test]
    fn censoring_view() {
        let s = spec("0");
        let r = simulate_fpt(&s, &cfg(1000, 1e-2, 4.0)).unwrap();
        let v = r.censor_at(1.0);
        assert_eq!(v.config.horizon, 1.0);
        assert!((v.survival_at(1.0) - r.survival_at(1.0)).abs() < 1e-15);
        assert_eq!(v.n_censored as f64 / 1000.0, r.survival_at(1.0));
    }

    #[test]
    fn csv_layout() {
        let s = spec("0");
        let r = simulate_fpt(&s, &cfg(3, 0.1, 1.0)).unwrap();
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "path_id,crossed,time");
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,"));
    }
}
