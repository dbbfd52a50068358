use serde::{Deserialize, Serialize};

use super::{
    limits_from_profile, probe_limits, AsymptoticError, AsymptoticLimits, ClassifyError,
    ProbeError, ProbeGrid,
};
use crate::barrier::BarrierSpec;
use crate::ext::ExtReal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Zone {
    /// Finite mean first passage time.
    Red,
    /// Finite almost surely, infinite mean.
    Yellow,
    /// Survives forever with positive probability (hence infinite mean).
    Green,
    /// Finite almost surely; finiteness of the mean undecided.
    TwilightMeanUnknown,
    /// Infinite mean; almost-sure finiteness undecided.
    TwilightFinitenessUnknown,
    /// Nothing decided.
    Dark,
}

impl Zone {
    pub fn is_decidable(self) -> bool {
        matches!(self, Zone::Red | Zone::Yellow | Zone::Green)
    }

    pub fn asserts_finite_almost_surely(self) -> bool {
        matches!(self, Zone::Red | Zone::Yellow | Zone::TwilightMeanUnknown)
    }

    pub fn asserts_finite_mean(self) -> bool {
        self == Zone::Red
    }

    pub fn asserts_infinite_mean(self) -> bool {
        matches!(
            self,
            Zone::Yellow | Zone::Green | Zone::TwilightFinitenessUnknown
        )
    }

    pub fn asserts_positive_survival(self) -> bool {
        self == Zone::Green
    }

    pub fn parse(name: &str) -> Option<Zone> {
        let n = name.to_ascii_lowercase().replace(['_', '-'], "");
        Some(match n.as_str() {
            "red" => Zone::Red,
            "yellow" => Zone::Yellow,
            "green" => Zone::Green,
            "twilightmeanunknown" => Zone::TwilightMeanUnknown,
            "twilightfinitenessunknown" => Zone::TwilightFinitenessUnknown,
            "dark" => Zone::Dark,
            _ => return None,
        })
    }
}

/// One classification rule that fired, with the condition it checked and
/// what it lets us conclude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFired {
    pub rule: String,
    pub condition: String,
    pub conclusion: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskZone {
    pub zone: Zone,
    pub basis: Vec<RuleFired>,
    pub heuristic: bool,
}

fn fired(rule: &str, condition: String, conclusion: &str) -> Vec<RuleFired> {
    vec![RuleFired {
        rule: rule.into(),
        condition,
        conclusion: conclusion.into(),
    }]
}

/// Assigns a zone; rules are tried in order R1..R7 and the first match wins.
pub fn classify(limits: &AsymptoticLimits) -> Result<RiskZone, ClassifyError> {
    limits.check_consistency()?;
    let l = limits;
    let one = ExtReal::ONE;
    let ibar0 = l.ibar_zero().expect("checked above");
    let heuristic = l.is_probed();

    let (zone, basis) = if let Some(&(eps, v)) =
        l.ibar.iter().find(|&&(e, v)| e > 0.0 && v >= one)
    {
        (
            Zone::Red,
            fired(
                "R1",
                format!("ibar({eps}) = {v} >= 1"),
                "barrier eventually dominates a critical sqrt barrier with alpha > sigma: E(tau) < inf",
            ),
        )
    } else if l.i_minus >= one && l.sbar0 < one {
        (
            Zone::Yellow,
            fired(
                "R2",
                format!("i_minus = {} >= 1 and sbar0 = {} < 1", l.i_minus, l.sbar0),
                "barrier stays above the lower iterated-log envelope and below the sigma*sqrt(t) barrier: P(tau < inf) = 1, E(tau) = inf",
            ),
        )
    } else if l.s_minus < one {
        (
            Zone::Green,
            fired(
                "R3",
                format!("s_minus = {} < 1", l.s_minus),
                "barrier eventually below the lower iterated-log envelope: 0 < P(tau < inf) < 1, E(tau) = inf",
            ),
        )
    } else if l.s_plus > one && ibar0 < one {
        (
            Zone::TwilightMeanUnknown,
            fired(
                "R4",
                format!("s_plus = {} > 1 and ibar(0) = {} < 1", l.s_plus, ibar0),
                "barrier exceeds the upper iterated-log envelope infinitely often: P(tau < inf) = 1; mean undecided",
            ),
        )
    } else if l.i_minus >= one {
        (
            Zone::TwilightMeanUnknown,
            fired(
                "R5",
                format!("i_minus = {} >= 1 and sbar0 = {} >= 1", l.i_minus, l.sbar0),
                "barrier stays above the lower iterated-log envelope: P(tau < inf) = 1; mean undecided",
            ),
        )
    } else if l.s_minus >= one && l.sbar0 < one {
        (
            Zone::TwilightFinitenessUnknown,
            fired(
                "R6",
                format!(
                    "s_minus = {} >= 1, i_minus = {} < 1, sbar0 = {} < 1",
                    l.s_minus, l.i_minus, l.sbar0
                ),
                "barrier eventually below the sigma*sqrt(t) barrier: E(tau) = inf; a.s. finiteness undecided",
            ),
        )
    } else {
        (
            Zone::Dark,
            fired(
                "R7",
                format!(
                    "s_minus = {}, i_minus = {}, s_plus = {}, sbar0 = {}",
                    l.s_minus, l.i_minus, l.s_plus, l.sbar0
                ),
                "no rule applies: finiteness of tau and of its mean undecided",
            ),
        )
    };
    Ok(RiskZone {
        zone,
        basis,
        heuristic,
    })
}

/// Classification when the liminf and limsup against the lower iterated-log
/// envelope coincide (`I₋ = S₋ = limit`). The dichotomy is then exhaustive.
pub fn classify_definite(limit: ExtReal, sbar0: Option<ExtReal>) -> RiskZone {
    let (zone, basis) = if limit < ExtReal::ONE {
        (
            Zone::Green,
            fired(
                "D1",
                format!("definite limit {limit} < 1"),
                "0 < P(tau < inf) < 1",
            ),
        )
    } else {
        match sbar0 {
            Some(s) if s < ExtReal::ONE => (
                Zone::Yellow,
                fired(
                    "D2",
                    format!("definite limit {limit} >= 1 and sbar0 = {s} < 1"),
                    "P(tau < inf) = 1 and E(tau) = inf",
                ),
            ),
            _ => (
                Zone::TwilightMeanUnknown,
                fired(
                    "D3",
                    format!("definite limit {limit} >= 1"),
                    "P(tau < inf) = 1; mean undecided",
                ),
            ),
        }
    };
    RiskZone {
        zone,
        basis,
        heuristic: false,
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpecClassifyError {
    #[error(transparent)]
    Asymptotic(#[from] AsymptoticError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

/// Limits from the declared profile when present, otherwise probed; then
/// classified.
pub fn classify_spec(
    spec: &BarrierSpec,
    grid: &ProbeGrid,
) -> Result<(AsymptoticLimits, RiskZone), SpecClassifyError> {
    let limits = match spec.profile() {
        Some(p) => limits_from_profile(p, spec.params())?,
        None => probe_limits(spec, grid)?,
    };
    let zone = classify(&limits)?;
    Ok((limits, zone))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::{AsymptoticProfile, GbmParams, GrowthClass};
    use crate::classifier::Provenance;
    use proptest::prelude::*;

    fn declared(g: GrowthClass, sigma: f64) -> AsymptoticLimits {
        let p = GbmParams::new(0.0, sigma, 3.0, 1.0).unwrap();
        limits_from_profile(&AsymptoticProfile::new(g).unwrap(), &p).unwrap()
    }

    #[test]
    fn corpus_zones() {
        let s = 0.8;
        assert_eq!(classify(&declared(GrowthClass::SqrtT { c: 2.0 * s }, s)).unwrap().zone, Zone::Red);
        assert_eq!(
            classify(&declared(GrowthClass::Constant { value: 0.0 }, s)).unwrap().zone,
            Zone::Yellow
        );
        assert_eq!(classify(&declared(GrowthClass::Linear { c: -1.0 }, s)).unwrap().zone, Zone::Green);
        let osc = GrowthClass::Oscillating {
            lower: Box::new(GrowthClass::Linear { c: -s }),
            upper: Box::new(GrowthClass::Constant { value: 0.0 }),
        };
        let z = classify(&declared(osc, s)).unwrap();
        assert_eq!(z.zone, Zone::TwilightFinitenessUnknown);
        assert_eq!(z.basis[0].rule, "R6");
        assert!(!z.heuristic);
    }

    #[test]
    fn remaining_rules() {
        let s = 1.0;
        // sqrt(t ln ln t) growth beyond the upper envelope: R1 (dominates every sqrt barrier).
        assert_eq!(
            classify(&declared(GrowthClass::SqrtTLogLog { c: 3.0 }, s)).unwrap().zone,
            Zone::Red
        );
        // Oscillating between far above and far below: limsup beats the upper
        // envelope, liminf is below sigma*sqrt(t): R4.
        let osc = GrowthClass::Oscillating {
            lower: Box::new(GrowthClass::Linear { c: -1.0 }),
            upper: Box::new(GrowthClass::Linear { c: 1.0 }),
        };
        let z = classify(&declared(osc, s)).unwrap();
        assert_eq!((z.zone, z.basis[0].rule.as_str()), (Zone::TwilightMeanUnknown, "R4"));
        // Exactly critical sqrt barrier: i_minus = inf, sbar0 = 1: R5.
        let z = classify(&declared(GrowthClass::SqrtT { c: s }, s)).unwrap();
        assert_eq!((z.zone, z.basis[0].rule.as_str()), (Zone::TwilightMeanUnknown, "R5"));
        // Oscillating between the critical sqrt barrier and -t: sbar0 = 1, i_minus = 0,
        // s_plus = 0: R7.
        let osc = GrowthClass::Oscillating {
            lower: Box::new(GrowthClass::Linear { c: -1.0 }),
            upper: Box::new(GrowthClass::SqrtT { c: s }),
        };
        let z = classify(&declared(osc, s)).unwrap();
        assert_eq!((z.zone, z.basis[0].rule.as_str()), (Zone::Dark, "R7"));
    }

    #[test]
    fn inconsistent_limits_rejected() {
        let mut l = declared(GrowthClass::Constant { value: 0.0 }, 1.0);
        l.i_plus = ExtReal::INFINITY;
        assert!(matches!(classify(&l), Err(ClassifyError::InconsistentLimits(_))));
    }

    #[test]
    fn definite_examples() {
        assert_eq!(classify_definite(ExtReal(0.5), None).zone, Zone::Green);
        assert!(classify_definite(ExtReal(1.0), None).zone.asserts_finite_almost_surely());
        assert!(classify_definite(ExtReal::INFINITY, None)
            .zone
            .asserts_finite_almost_surely());
        assert_eq!(
            classify_definite(ExtReal::INFINITY, Some(ExtReal::ZERO)).zone,
            Zone::Yellow
        );
    }

    #[test]
    fn probed_limits_are_flagged() {
        let spec = BarrierSpec::parse(GbmParams::critical(1.0, 1.0).unwrap(), "2*sqrt(t)").unwrap();
        let (limits, zone) = classify_spec(&spec, &ProbeGrid::default()).unwrap();
        assert!(matches!(limits.provenance, Provenance::Probed(_)));
        assert_eq!(zone.zone, Zone::Red);
        assert!(zone.heuristic);
    }

    #[test]
    fn zone_names_parse() {
        for z in [
            Zone::Red,
            Zone::Yellow,
            Zone::Green,
            Zone::TwilightMeanUnknown,
            Zone::TwilightFinitenessUnknown,
            Zone::Dark,
        ] {
            assert_eq!(Zone::parse(&format!("{z:?}")), Some(z));
        }
        assert_eq!(Zone::parse("twilight_mean_unknown"), Some(Zone::TwilightMeanUnknown));
        assert_eq!(Zone::parse("blue"), None);
    }

    fn arb_class() -> impl Strategy<Value = GrowthClass> {
        prop_oneof![
            (-3.0..3.0f64).prop_map(|value| GrowthClass::Constant { value }),
            (0.05..3.0f64, prop_oneof![-4.0..-0.01f64, 0.01..4.0f64])
                .prop_map(|(p, c)| GrowthClass::Power { p, c }),
            prop_oneof![(-4.0..4.0f64), Just(1.0), Just(2.0), Just(-SQRT_2_F)]
                .prop_map(|c| GrowthClass::SqrtT { c }),
            prop_oneof![(-4.0..4.0f64), Just(SQRT_2_F), Just(-SQRT_2_F)]
                .prop_map(|c| GrowthClass::SqrtTLogLog { c }),
            (-4.0..4.0f64).prop_map(|c| GrowthClass::Linear { c }),
            Just(GrowthClass::Superlinear),
        ]
    }

    const SQRT_2_F: f64 = std::f64::consts::SQRT_2;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn classify_total_on_declared_profiles(g in arb_class()) {
            let l = declared(g, 1.0);
            let z = classify(&l).unwrap();
            prop_assert_eq!(z.basis.len(), 1);
            prop_assert!(!z.heuristic);
        }

        #[test]
        fn definite_limits_agree(g in arb_class(), sigma in 0.1..3.0f64) {
            let l = declared(g, sigma);
            prop_assume!(l.i_minus == l.s_minus);
            let full = classify(&l).unwrap().zone;
            let def = classify_definite(l.i_minus, Some(l.sbar0)).zone;
            // R1 refines the "finite a.s., mean undecided" answer into Red.
            if full == Zone::Red {
                prop_assert_eq!(def, Zone::TwilightMeanUnknown);
            } else {
                prop_assert_eq!(full, def);
            }
        }

        #[test]
        fn common_rescaling_keeps_zone(scale in 0.01..100.0f64, q in 0.05..3.0f64, c in -3.0..3.0f64) {
            let p1 = GbmParams::new(0.1, 1.0, q.exp(), 1.0).unwrap();
            let p2 = GbmParams::new(0.1, 1.0, scale * q.exp(), scale).unwrap();
            let g = GrowthClass::SqrtT { c };
            let prof = AsymptoticProfile::new(g).unwrap();
            let z1 = classify(&limits_from_profile(&prof, &p1).unwrap()).unwrap().zone;
            let z2 = classify(&limits_from_profile(&prof, &p2).unwrap()).unwrap().zone;
            prop_assert_eq!(z1, z2);
        }
    }
}
