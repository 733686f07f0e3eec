//! Histogram-based auditing of differential privacy guarantees.
//!
//! Given score samples from two neighboring mechanism outputs, the crate bins
//! them, computes the hockey-stick divergence of the binned distributions,
//! and turns it into ε estimates, confidence lower bounds, trade-off curves
//! and composed profiles. Analytic mechanisms, seeded samplers and canary
//! simulators provide reference data.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canary;
pub mod confidence;
pub mod discrete;
pub mod error;
pub mod estimators;
pub mod histogram;
pub mod io;
pub mod mechanisms;
pub mod pld;
pub mod profile;
pub mod sampling;
pub mod special;
pub mod tradeoff;

pub use discrete::{hs_divergence, symmetric_delta, tv_distance, DiscreteDistribution};
pub use error::{AuditError, ErrorKind, Result};
pub use estimators::{histogram_audit, AuditConfig, AuditReport};
pub use histogram::{BinningMode, BinningSpec, HistogramEstimate};
pub use profile::{EpsEstimate, PrivacyProfile, TabulatedProfile};
pub use tradeoff::TradeoffCurve;
