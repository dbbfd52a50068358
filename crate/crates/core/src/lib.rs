//! First-passage risk analysis for a geometric Brownian motion against a
//! moving barrier: zone classification, mean-time bounds and Monte Carlo
//! verification.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barrier;
pub mod bounds;
pub mod classifier;
pub mod cli;
pub mod expr;
pub mod ext;
pub mod sim;

pub use barrier::{AsymptoticProfile, BarrierError, BarrierSpec, GbmParams, GrowthClass};
pub use classifier::{AsymptoticLimits, RiskZone, Zone};
pub use ext::ExtReal;
