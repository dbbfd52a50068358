//! Monte Carlo first passage engine and its estimators.

mod checks;
mod engine;
mod estimate;

pub use checks::{
    pathwise_dominance_check, zone_consistency_check, ConsistencyReport, CriterionResult,
    DominanceReport, Verdict, MEAN_STABLE_REL, YELLOW_SLOPE,
};
pub use engine::{simulate_fpt, FptSampleSet, SimConfig, MAX_STEPS};
pub use estimate::{
    estimate, wilson, FptEstimate, MeanEstimate, SurvivalEstimate, TailSlope, MIN_PATHS, Z95,
};

use thiserror::Error;

use crate::barrier::BarrierError;
use crate::expr::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Barrier(#[from] BarrierError),
    #[error("degenerate samples: {0}")]
    DegenerateSamples(String),
    #[error("upper barrier falls below the lower one at t={0}")]
    NotDominated(f64),
}
