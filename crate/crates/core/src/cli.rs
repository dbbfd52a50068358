//! Command implementations behind the `fpt-barrier` binary.
//!
//! Each command takes a resolved [`RunConfig`] and returns a [`CommandOutput`]
//! holding the exit code, the report body and any stderr warnings. The binary
//! only parses flags and performs I/O.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::barrier::{BarrierDoc, BarrierSpec};
use crate::bounds::{
    find_t_switch, inverse_bound_expr, lambert_upper, linear_crossing_prob, mean_fpt_critical,
    upper_bound_psi, upper_bound_thm, BoundKind, BoundReport, BoundsError, InverseDirection,
    PsiVariant,
};
use crate::classifier::{classify_spec, ProbeGrid, Zone};
use crate::ext::ExtReal;
use crate::sim::{estimate, simulate_fpt, zone_consistency_check, SimConfig, Verdict};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNDECIDABLE: i32 = 3;
pub const EXIT_INCONSISTENT: i32 = 4;

/// Canonical barriers with their expected zones, one JSON array.
pub const CORPUS_JSON: &str = include_str!("../corpus/barriers.json");

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct CorpusEntry {
    pub name: String,
    pub spec: BarrierSpec,
    /// Accepted zones; more than one when the classifier may legitimately
    /// return either.
    pub expected: Vec<Zone>,
}

pub fn corpus() -> Vec<CorpusEntry> {
    serde_json::from_str(CORPUS_JSON).expect("bundled corpus is valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

/// Options shared by all commands. Every field is optional so that a config
/// file and command-line flags can be layered; see [`RunOptions::merge`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub alpha: Option<f64>,
    pub horizon: Option<Vec<f64>>,
    pub n_paths: Option<usize>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub bridge_correction: Option<bool>,
    pub antithetic: Option<bool>,
    pub parallel: Option<bool>,
    pub attest_tail: Option<bool>,
    pub assume_zone: Option<Zone>,
}

impl RunOptions {
    /// Fields set in `over` win.
    pub fn merge(self, over: RunOptions) -> RunOptions {
        RunOptions {
            alpha: over.alpha.or(self.alpha),
            horizon: over.horizon.or(self.horizon),
            n_paths: over.n_paths.or(self.n_paths),
            dt: over.dt.or(self.dt),
            seed: over.seed.or(self.seed),
            bridge_correction: over.bridge_correction.or(self.bridge_correction),
            antithetic: over.antithetic.or(self.antithetic),
            parallel: over.parallel.or(self.parallel),
            attest_tail: over.attest_tail.or(self.attest_tail),
            assume_zone: over.assume_zone.or(self.assume_zone),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Bounds,
    Simulate,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::Verify => "verify",
        }
    }

    fn default_horizons(self) -> Vec<f64> {
        match self {
            Command::Verify => vec![1e2, 1e3, 1e4],
            Command::Bounds => vec![1e4],
            _ => vec![100.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub spec: BarrierSpec,
    pub options: RunOptions,
    pub format: OutputFormat,
}

/// Fully resolved settings, echoed into every report.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub command: &'static str,
    pub spec: BarrierDoc,
    pub alpha: Option<f64>,
    pub horizons: Vec<f64>,
    pub sim: SimConfig,
    pub attest_tail: bool,
    pub assume_zone: Option<Zone>,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn resolve(&self, command: Command) -> ResolvedConfig {
        let o = &self.options;
        let horizons = o.horizon.clone().unwrap_or_else(|| command.default_horizons());
        let base = SimConfig::default();
        let sim = SimConfig {
            n_paths: o.n_paths.unwrap_or(base.n_paths),
            dt: o.dt.unwrap_or(base.dt),
            horizon: horizons.iter().copied().fold(f64::NAN, f64::max),
            seed: o.seed.unwrap_or(base.seed),
            bridge_correction: o.bridge_correction.unwrap_or(base.bridge_correction),
            antithetic: o.antithetic.unwrap_or(base.antithetic),
            parallel: o.parallel.unwrap_or(base.parallel),
        };
        ResolvedConfig {
            command: command.name(),
            spec: self.spec.clone().into(),
            alpha: o.alpha,
            horizons,
            sim,
            attest_tail: o.attest_tail.unwrap_or(false),
            assume_zone: o.assume_zone,
            format: self.format,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommandOutput {
    pub exit_code: i32,
    pub body: String,
    pub warnings: Vec<String>,
}

/// A failure reported on stderr as `{"error": kind, "detail": ...}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub kind: &'static str,
    pub detail: String,
}

impl CliError {
    pub fn new(kind: &'static str, detail: impl ToString) -> Self {
        CliError {
            kind,
            detail: detail.to_string(),
        }
    }

    pub fn to_json_line(&self) -> String {
        json!({ "error": self.kind, "detail": self.detail }).to_string()
    }
}

pub fn run(command: Command, config: &RunConfig) -> Result<CommandOutput, CliError> {
    match command {
        Command::Classify => cmd_classify(config),
        Command::Bounds => cmd_bounds(config),
        Command::Simulate => cmd_simulate(config),
        Command::Verify => cmd_verify(config),
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

const PROBE_WARNING: &str =
    "warning: no asymptotic profile declared; zone is based on finite-grid probing and is heuristic";

pub fn cmd_classify(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let resolved = config.resolve(Command::Classify);
    let (limits, zone) = classify_spec(&config.spec, &ProbeGrid::default())
        .map_err(|e| CliError::new("ClassifyError", e))?;
    let mut warnings = Vec::new();
    if zone.heuristic {
        warnings.push(PROBE_WARNING.to_string());
    }
    let exit_code = if zone.zone.is_decidable() {
        EXIT_OK
    } else {
        EXIT_UNDECIDABLE
    };
    let body = match config.format {
        OutputFormat::Json => pretty(&json!({
            "config": resolved,
            "zone": zone,
            "limits": limits,
        })),
        OutputFormat::Csv => {
            let rule = zone.basis.first().map(|r| r.rule.as_str()).unwrap_or("");
            format!("zone,heuristic,rule\n{:?},{},{}\n", zone.zone, zone.heuristic, rule)
        }
    };
    Ok(CommandOutput {
        exit_code,
        body,
        warnings,
    })
}

const SHAPE_GRID: [f64; 9] = [0.01, 0.1, 0.5, 1.0, 2.0, 10.0, 100.0, 1e3, 1e4];

fn matches_shape(spec: &BarrierSpec, f: impl Fn(f64) -> f64) -> bool {
    SHAPE_GRID.iter().all(|&t| match spec.eval_effective_tilde(t) {
        Ok(v) => {
            let r = f(t);
            (v - r).abs() <= 1e-9 * (1.0 + r.abs())
        }
        Err(_) => false,
    })
}

/// Recognized closed-form residual shapes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KnownShape {
    /// `c·√t`
    Critical(f64),
    /// `ν·t`
    Linear(f64),
    /// `σ·√(t ln(t+1))`
    Lambert,
}

pub fn detect_shape(spec: &BarrierSpec) -> Option<KnownShape> {
    let at_one = spec.eval_effective_tilde(1.0).ok()?;
    let sigma = spec.params().sigma;
    if matches_shape(spec, |t| at_one * t.sqrt()) {
        return Some(KnownShape::Critical(at_one));
    }
    if matches_shape(spec, |t| at_one * t) {
        return Some(KnownShape::Linear(at_one));
    }
    if matches_shape(spec, |t| sigma * (t * (t + 1.0).ln()).sqrt()) {
        return Some(KnownShape::Lambert);
    }
    None
}

#[derive(Debug, Clone, Serialize)]
struct Skipped {
    bound: &'static str,
    reason: String,
}

pub fn cmd_bounds(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let resolved = config.resolve(Command::Bounds);
    let spec = &config.spec;
    let params = spec.params();
    let mut bounds: Vec<BoundReport> = Vec::new();
    let mut skipped: Vec<Skipped> = Vec::new();
    let mut extra = serde_json::Map::new();
    let mut skip = |bound: &'static str, e: &dyn std::fmt::Display| {
        skipped.push(Skipped {
            bound,
            reason: e.to_string(),
        })
    };

    let shape = detect_shape(spec);
    match shape {
        Some(KnownShape::Critical(c)) => {
            let v = mean_fpt_critical(params, c).map_err(|e| CliError::new("BoundsError", e))?;
            bounds.push(BoundReport {
                kind: BoundKind::ExactMean,
                value: v,
                t_switch: None,
                quadrature_error: 0.0,
                assumptions: vec![format!("barrier residual is {c}*sqrt(t)")],
            });
        }
        Some(KnownShape::Linear(nu)) => {
            let q = params.q();
            let value = if nu > 0.0 { ExtReal(q / nu) } else { ExtReal::INFINITY };
            bounds.push(BoundReport {
                kind: BoundKind::ExactLinear,
                value,
                t_switch: None,
                quadrature_error: 0.0,
                assumptions: vec![format!("barrier residual is {nu}*t")],
            });
            let p = linear_crossing_prob(-q / params.sigma, nu / params.sigma)
                .map_err(|e| CliError::new("BoundsError", e))?;
            extra.insert("crossing_probability".into(), json!(p));
        }
        Some(KnownShape::Lambert) => {
            bounds.push(lambert_upper(params).map_err(|e| CliError::new("BoundsError", e))?);
        }
        None => {}
    }

    let tilde = spec.effective_tilde();
    for (name, dir) in [
        ("InverseUpper", InverseDirection::UpperConvex),
        ("InverseLower", InverseDirection::LowerConcave),
    ] {
        match inverse_bound_expr(&tilde, params.q(), dir) {
            Ok(r) => bounds.push(r),
            Err(e) => skip(name, &e),
        }
    }

    match config.options.alpha {
        None => skip("UpperThm", &"no --alpha given"),
        Some(alpha) => {
            let horizon = resolved.sim.horizon;
            match find_t_switch(spec, alpha, horizon, resolved.attest_tail) {
                Err(e) => skip("UpperThm", &e),
                Ok(t) => {
                    match upper_bound_thm(spec, alpha, t) {
                        Ok(r) => bounds.push(r),
                        Err(e) => skip("UpperThm", &e),
                    }
                    if t > 0.0 {
                        for (name, v) in [
                            ("UpperPsiMin", PsiVariant::MinOnInterval),
                            ("UpperPsiChord", PsiVariant::Chord),
                        ] {
                            match upper_bound_psi(spec, alpha, t, v) {
                                Ok(r) => bounds.push(r),
                                Err(e) => skip(name, &e),
                            }
                        }
                    } else {
                        let e = BoundsError::InvalidParams("T = 0".into());
                        skip("UpperPsiMin", &e);
                        skip("UpperPsiChord", &e);
                    }
                }
            }
        }
    }

    let body = match config.format {
        OutputFormat::Json => {
            let mut v = json!({
                "config": resolved,
                "bounds": bounds,
                "skipped": skipped,
            });
            v.as_object_mut().unwrap().extend(extra);
            pretty(&v)
        }
        OutputFormat::Csv => {
            let mut s = String::from("kind,value,t_switch,quadrature_error\n");
            for b in &bounds {
                let t = b.t_switch.map(|t| t.to_string()).unwrap_or_default();
                let _ = writeln!(s, "{:?},{},{},{}", b.kind, b.value, t, b.quadrature_error);
            }
            s
        }
    };
    Ok(CommandOutput {
        exit_code: EXIT_OK,
        body,
        warnings: vec![],
    })
}

pub fn cmd_simulate(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let resolved = config.resolve(Command::Simulate);
    let samples =
        simulate_fpt(&config.spec, &resolved.sim).map_err(|e| CliError::new("SimError", e))?;
    let mut warnings = vec![format!("seed = {}", resolved.sim.seed)];
    let body = match config.format {
        OutputFormat::Csv => samples.to_csv(),
        OutputFormat::Json => {
            let mut hs = resolved.horizons.clone();
            hs.sort_by(f64::total_cmp);
            let estimates: Vec<Value> = match hs
                .iter()
                .map(|&h| estimate(&samples.censor_at(h)))
                .collect::<Result<Vec<_>, _>>()
            {
                Ok(v) => v.into_iter().map(|e| json!(e)).collect(),
                Err(e) => {
                    warnings.push(format!("warning: no estimates: {e}"));
                    vec![]
                }
            };
            pretty(&json!({
                "config": resolved,
                "seed": resolved.sim.seed,
                "summary": samples.summary_json(),
                "estimates": estimates,
            }))
        }
    };
    Ok(CommandOutput {
        exit_code: EXIT_OK,
        body,
        warnings,
    })
}

pub fn cmd_verify(config: &RunConfig) -> Result<CommandOutput, CliError> {
    let resolved = config.resolve(Command::Verify);
    let (_, classified) = classify_spec(&config.spec, &ProbeGrid::default())
        .map_err(|e| CliError::new("ClassifyError", e))?;
    let mut warnings = Vec::new();
    if classified.heuristic {
        warnings.push(PROBE_WARNING.to_string());
    }
    let zone = match config.options.assume_zone {
        Some(z) => {
            warnings.push(format!(
                "warning: checking assumed zone {z:?} instead of classified zone {:?}",
                classified.zone
            ));
            z
        }
        None => classified.zone,
    };
    let report = zone_consistency_check(&config.spec, zone, &resolved.sim, &resolved.horizons)
        .map_err(|e| CliError::new("SimError", e))?;
    let exit_code = match report.verdict {
        Verdict::Pass => EXIT_OK,
        Verdict::Fail => EXIT_INCONSISTENT,
        Verdict::Inconclusive => EXIT_UNDECIDABLE,
    };
    let body = match config.format {
        OutputFormat::Json => pretty(&json!({
            "config": resolved,
            "classified": classified,
            "report": report,
        })),
        OutputFormat::Csv => {
            let mut s = String::from("criterion,passed,detail\n");
            for c in &report.criteria {
                let _ = writeln!(s, "{},{},\"{}\"", c.name, c.passed, c.detail.replace('"', "'"));
            }
            s
        }
    };
    Ok(CommandOutput {
        exit_code,
        body,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::GbmParams;

    fn cfg(tilde: &str, q: f64) -> RunConfig {
        RunConfig {
            spec: BarrierSpec::parse(GbmParams::critical(1.0, q).unwrap(), tilde).unwrap(),
            options: RunOptions::default(),
            format: OutputFormat::Json,
        }
    }

    #[test]
    fn corpus_parses_and_classifies_as_expected() {
        let entries = corpus();
        assert!(entries.len() >= 6);
        for e in entries {
            let (_, z) = classify_spec(&e.spec, &ProbeGrid::default()).unwrap();
            assert!(e.expected.contains(&z.zone), "{}: got {:?}", e.name, z.zone);
        }
    }

    #[test]
    fn shapes_are_detected() {
        assert_eq!(detect_shape(&cfg("2*sqrt(t)", 1.0).spec), Some(KnownShape::Critical(2.0)));
        assert_eq!(detect_shape(&cfg("0.5*t", 1.0).spec), Some(KnownShape::Linear(0.5)));
        assert_eq!(detect_shape(&cfg("sqrt(t*ln(t+1))", 1.0).spec), Some(KnownShape::Lambert));
        assert_eq!(detect_shape(&cfg("t^2", 1.0).spec), None);
    }

    #[test]
    fn bounds_examples() {
        let mut c = cfg("sqrt(2)*sqrt(t)", 1.0);
        let out = cmd_bounds(&c).unwrap();
        let v: Value = serde_json::from_str(&out.body).unwrap();
        assert_eq!(v["bounds"][0]["kind"], "ExactMean");
        assert!((v["bounds"][0]["value"].as_f64().unwrap() - 1.0).abs() < 1e-15);

        c = cfg("sqrt(t*ln(t+1))", 1.0);
        let v: Value = serde_json::from_str(&cmd_bounds(&c).unwrap().body).unwrap();
        assert_eq!(v["bounds"][0]["kind"], "LambertUpper");
        assert!((v["bounds"][0]["value"].as_f64().unwrap() - 3.591_121_476_668_622).abs() < 1e-12);

        c = cfg("0.5*t", 1.0);
        let v: Value = serde_json::from_str(&cmd_bounds(&c).unwrap().body).unwrap();
        assert_eq!(v["bounds"][0]["kind"], "ExactLinear");
        assert_eq!(v["bounds"][0]["value"], 2.0);
        assert_eq!(v["crossing_probability"], 1.0);
    }

    #[test]
    fn yellow_mean_serializes_as_inf() {
        let v: Value = serde_json::from_str(&cmd_bounds(&cfg("0", 1.0)).unwrap().body).unwrap();
        assert_eq!(v["bounds"][0]["value"], "inf");
    }

    #[test]
    fn bounds_with_alpha_include_comparison_family() {
        let mut c = cfg("2*sqrt(t) - 1", 1.0);
        c.options.alpha = Some(1.5);
        c.options.attest_tail = Some(true);
        let v: Value = serde_json::from_str(&cmd_bounds(&c).unwrap().body).unwrap();
        let kinds: Vec<&str> = v["bounds"]
            .as_array()
            .unwrap()
            .iter()
            .map(|b| b["kind"].as_str().unwrap())
            .collect();
        for k in ["UpperThm", "UpperPsiMin", "UpperPsiChord"] {
            assert!(kinds.contains(&k), "{kinds:?}");
        }
    }

    #[test]
    fn classify_exit_codes() {
        assert_eq!(cmd_classify(&cfg("2*sqrt(t)", 1.0)).unwrap().exit_code, EXIT_OK);
        let out = cmd_classify(&cfg("-t*abs(sin(t))", 1.0)).unwrap();
        assert_eq!(out.exit_code, EXIT_UNDECIDABLE);
        assert!(!out.warnings.is_empty());
    }

    #[test]
    fn simulate_rejects_zero_paths() {
        let mut c = cfg("0", 1.0);
        c.options.n_paths = Some(0);
        let e = cmd_simulate(&c).unwrap_err();
        assert_eq!(e.kind, "SimError");
        let line = e.to_json_line();
        assert!(!line.contains('\n'));
        let v: Value = serde_json::from_str(&line).unwrap();
        assert!(v["detail"].as_str().unwrap().contains("n_paths"));
    }

    #[test]
    fn report_embeds_resolved_config() {
        let mut c = cfg("0", 1.0);
        c.options.seed = Some(99);
        c.options.n_paths = Some(200);
        c.options.horizon = Some(vec![1.0, 2.0]);
        let v: Value = serde_json::from_str(&cmd_simulate(&c).unwrap().body).unwrap();
        assert_eq!(v["config"]["sim"]["seed"], 99);
        assert_eq!(v["config"]["sim"]["horizon"], 2.0);
        assert_eq!(v["config"]["spec"]["tilde"], "0");
        assert_eq!(v["estimates"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn options_merge_prefers_overrides() {
        let a = RunOptions {
            seed: Some(1),
            dt: Some(0.1),
            ..Default::default()
        };
        let b = RunOptions {
            seed: Some(2),
            ..Default::default()
        };
        let m = a.merge(b);
        assert_eq!(m.seed, Some(2));
        assert_eq!(m.dt, Some(0.1));
    }
}
