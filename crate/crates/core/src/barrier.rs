//! Barrier model: GBM parameters, the barrier
//! `B(t) = K·exp((μ − σ²/2)t + B̃(t) − ln A(t))`, and its Brownian-motion
//! image `B̂(t) = (B̃(t) − ln A(t) − q)/σ` with `q = ln(V0/K)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::AsymptoticLimits;
use crate::expr::{parse_tilde, EvalError, ParseError, TildeExpr};

/// Tolerance on `ln A(0) = 0`.
pub const INFLATION_ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BarrierError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("inflation log-factor must vanish at t=0, got ln A(0) = {0}")]
    InvalidInflation(f64),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

/// Drift `mu`, volatility `sigma`, initial value `v0` and barrier scale `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct GbmParams {
    pub mu: f64,
    pub sigma: f64,
    pub v0: f64,
    pub k: f64,
}

#[derive(Deserialize)]
struct RawParams {
    mu: f64,
    sigma: f64,
    v0: f64,
    k: f64,
}

impl TryFrom<RawParams> for GbmParams {
    type Error = BarrierError;

    fn try_from(r: RawParams) -> Result<Self, Self::Error> {
        GbmParams::new(r.mu, r.sigma, r.v0, r.k)
    }
}

impl GbmParams {
    pub fn new(mu: f64, sigma: f64, v0: f64, k: f64) -> Result<Self, BarrierError> {
        let bad = |m: String| Err(BarrierError::InvalidParams(m));
        if ![mu, sigma, v0, k].iter().all(|x| x.is_finite()) {
            return bad("parameters must be finite".into());
        }
        if sigma <= 0.0 {
            return bad(format!("sigma must be > 0, got {sigma}"));
        }
        if v0 <= 0.0 || k <= 0.0 {
            return bad(format!("v0 and k must be > 0, got v0={v0}, k={k}"));
        }
        if k >= v0 {
            return bad(format!("barrier scale k={k} must lie below v0={v0}"));
        }
        Ok(GbmParams { mu, sigma, v0, k })
    }

    /// Parameters with `μ = σ²/2` (zero log-drift) and the given `q = ln(V0/K)`,
    /// taking `K = 1`.
    pub fn critical(sigma: f64, q: f64) -> Result<Self, BarrierError> {
        GbmParams::new(0.5 * sigma * sigma, sigma, q.exp(), 1.0)
    }

    /// Log-moneyness `q = ln(V0/K) > 0`.
    pub fn q(&self) -> f64 {
        (self.v0 / self.k).ln()
    }

    /// `μ − σ²/2`.
    pub fn log_drift(&self) -> f64 {
        self.mu - 0.5 * self.sigma * self.sigma
    }
}

/// Declared leading-order behavior of `B̃(t)` as `t → ∞`.
///
/// Every class except `Oscillating` and `CustomLimits` means
/// `B̃(t) = c·f(t) + o(1)` for the class's reference function `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum GrowthClass {
    /// `B̃(t) → value`.
    Constant {
        #[serde(default)]
        value: f64,
    },
    /// `c·t^p`, `p > 0`, `c ≠ 0`.
    Power { p: f64, c: f64 },
    /// `c·√t`.
    SqrtT { c: f64 },
    /// `c·√(t ln ln t)`.
    SqrtTLogLog { c: f64 },
    /// `c·t`.
    Linear { c: f64 },
    /// Grows to `+∞` faster than any multiple of `t`.
    Superlinear,
    /// Stays between two envelopes and touches each along a sequence `t_n → ∞`.
    Oscillating {
        lower: Box<GrowthClass>,
        upper: Box<GrowthClass>,
    },
    /// Limits supplied directly.
    CustomLimits { limits: AsymptoticLimits },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AsymptoticProfile {
    pub growth_class: GrowthClass,
}

impl AsymptoticProfile {
    pub fn new(growth_class: GrowthClass) -> Result<Self, BarrierError> {
        validate_class(&growth_class, false)?;
        Ok(AsymptoticProfile { growth_class })
    }
}

fn validate_class(g: &GrowthClass, nested: bool) -> Result<(), BarrierError> {
    let bad = |m: &str| Err(BarrierError::InvalidProfile(m.to_string()));
    let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
    match g {
        GrowthClass::Constant { value } if !finite(&[*value]) => bad("constant must be finite"),
        GrowthClass::Power { p, c } => {
            if !finite(&[*p, *c]) || *p <= 0.0 || *c == 0.0 {
                bad("power class requires p > 0 and c != 0")
            } else {
                Ok(())
            }
        }
        GrowthClass::SqrtT { c } | GrowthClass::SqrtTLogLog { c } | GrowthClass::Linear { c }
            if !finite(&[*c]) =>
        {
            bad("coefficient must be finite")
        }
        GrowthClass::Oscillating { lower, upper } => {
            if nested {
                return bad("oscillating envelopes cannot themselves oscillate");
            }
            validate_class(lower, true)?;
            validate_class(upper, true)
        }
        GrowthClass::CustomLimits { limits } => {
            if nested {
                return bad("custom limits cannot be used as an envelope");
            }
            limits
                .check_consistency()
                .map_err(|e| BarrierError::InvalidProfile(e.to_string()))
        }
        _ => Ok(()),
    }
}

/// A complete barrier specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BarrierDoc", into = "BarrierDoc")]
pub struct BarrierSpec {
    params: GbmParams,
    tilde: TildeExpr,
    profile: Option<AsymptoticProfile>,
    inflation: Option<TildeExpr>,
}

/// JSON document form of a [`BarrierSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BarrierDoc {
    pub mu: f64,
    pub sigma: f64,
    pub v0: f64,
    pub k: f64,
    pub tilde: String,
    #[serde(default)]
    pub ln_a: Option<String>,
    #[serde(default)]
    pub profile: Option<AsymptoticProfile>,
}

impl TryFrom<BarrierDoc> for BarrierSpec {
    type Error = BarrierError;

    fn try_from(doc: BarrierDoc) -> Result<Self, Self::Error> {
        let params = GbmParams::new(doc.mu, doc.sigma, doc.v0, doc.k)?;
        let mut spec = BarrierSpec::new(params, parse_tilde(&doc.tilde)?)?;
        if let Some(p) = doc.profile {
            spec = spec.with_profile(AsymptoticProfile::new(p.growth_class)?);
        }
        if let Some(ln_a) = doc.ln_a {
            spec = spec.apply_inflation(&parse_tilde(&ln_a)?)?;
        }
        Ok(spec)
    }
}

impl From<BarrierSpec> for BarrierDoc {
    fn from(s: BarrierSpec) -> Self {
        BarrierDoc {
            mu: s.params.mu,
            sigma: s.params.sigma,
            v0: s.params.v0,
            k: s.params.k,
            tilde: s.tilde.to_string(),
            ln_a: s.inflation.as_ref().map(|e| e.to_string()),
            profile: s.profile,
        }
    }
}

impl BarrierSpec {
    /// Builds a spec. `B̃(0)` need not vanish, but the barrier must start
    /// strictly below the process: `K·e^{B̃(0)} < V0`.
    pub fn new(params: GbmParams, tilde: TildeExpr) -> Result<Self, BarrierError> {
        let b0 = tilde.eval(0.0)?;
        if b0 >= params.q() {
            return Err(BarrierError::InvalidParams(format!(
                "barrier starts at or above the process: B~(0)={b0} >= q={}",
                params.q()
            )));
        }
        Ok(BarrierSpec {
            params,
            tilde,
            profile: None,
            inflation: None,
        })
    }

    pub fn parse(params: GbmParams, tilde: &str) -> Result<Self, BarrierError> {
        BarrierSpec::new(params, parse_tilde(tilde)?)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn with_profile(mut self, profile: AsymptoticProfile) -> Self {
        self.profile = Some(profile);
        self
    }

    pub fn params(&self) -> &GbmParams {
        &self.params
    }

    pub fn tilde(&self) -> &TildeExpr {
        &self.tilde
    }

    pub fn profile(&self) -> Option<&AsymptoticProfile> {
        self.profile.as_ref()
    }

    pub fn inflation(&self) -> Option<&TildeExpr> {
        self.inflation.as_ref()
    }

    pub fn q(&self) -> f64 {
        self.params.q()
    }

    /// Residual of the barrier actually faced by the process:
    /// `B̃(t) − ln A(t)`.
    pub fn effective_tilde(&self) -> TildeExpr {
        match &self.inflation {
            Some(ln_a) => self.tilde.minus(ln_a),
            None => self.tilde.clone(),
        }
    }

    pub fn eval_effective_tilde(&self, t: f64) -> Result<f64, EvalError> {
        let base = self.tilde.eval(t)?;
        match &self.inflation {
            Some(ln_a) => Ok(base - ln_a.eval(t)?),
            None => Ok(base),
        }
    }

    /// `K·exp((μ − σ²/2)t + B̃(t) − ln A(t))`.
    pub fn eval_barrier(&self, t: f64) -> Result<f64, EvalError> {
        let exponent = self.params.log_drift() * t + self.eval_effective_tilde(t)?;
        Ok(self.params.k * exponent.exp())
    }

    pub fn to_wspace(&self) -> Result<WspaceBarrier, BarrierError> {
        let q = self.q();
        if q <= 0.0 || !q.is_finite() {
            return Err(BarrierError::InvalidParams(format!("q must be > 0, got {q}")));
        }
        Ok(WspaceBarrier {
            tilde: self.tilde.clone(),
            ln_a: self.inflation.clone(),
            q,
            sigma: self.params.sigma,
        })
    }

    /// Divides the barrier by `A(t) = exp(ln_a(t))`. Inflations compose
    /// additively in `ln A`. A declared profile describes the pre-inflation
    /// residual, so it is dropped.
    pub fn apply_inflation(&self, ln_a: &TildeExpr) -> Result<BarrierSpec, BarrierError> {
        let at_origin = ln_a.eval(0.0)?;
        if at_origin.abs() > INFLATION_ORIGIN_TOL {
            return Err(BarrierError::InvalidInflation(at_origin));
        }
        if ln_a.is_literal_zero() {
            return Ok(self.clone());
        }
        let inflation = match &self.inflation {
            Some(prev) => prev.plus(ln_a),
            None => ln_a.clone(),
        };
        Ok(BarrierSpec {
            params: self.params,
            tilde: self.tilde.clone(),
            profile: None,
            inflation: Some(inflation),
        })
    }

    /// Equivalent spec with `B̃(0) = 0`: the offset is folded into the scale,
    /// `K' = K·e^{B̃(0)}`, `B̃' = B̃ − B̃(0)`. The process-vs-barrier geometry is
    /// unchanged.
    pub fn normalized(&self) -> Result<BarrierSpec, BarrierError> {
        let b0 = self.tilde.eval(0.0)?;
        if b0 == 0.0 {
            return Ok(self.clone());
        }
        let params = GbmParams::new(
            self.params.mu,
            self.params.sigma,
            self.params.v0,
            self.params.k * b0.exp(),
        )?;
        let shift = TildeExpr::new(crate::expr::Expr::Const(b0));
        Ok(BarrierSpec {
            params,
            tilde: self.tilde.minus(&shift),
            profile: self.profile.clone(),
            inflation: self.inflation.clone(),
        })
    }
}

/// The barrier seen by a standard Brownian motion started at 0:
/// `t ↦ (B̃(t) − ln A(t) − q)/σ`.
#[derive(Debug, Clone)]
pub struct WspaceBarrier {
    tilde: TildeExpr,
    ln_a: Option<TildeExpr>,
    pub q: f64,
    pub sigma: f64,
}

impl WspaceBarrier {
    pub fn eval(&self, t: f64) -> Result<f64, EvalError> {
        let mut v = self.tilde.eval(t)?;
        if let Some(ln_a) = &self.ln_a {
            v -= ln_a.eval(t)?;
        }
        Ok((v - self.q) / self.sigma)
    }
}
