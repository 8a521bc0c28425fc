//! Numerical laboratory for superefficiency.
//!
//! The crate is organised around four layers:
//!
//! * [`models`]: the Gaussian location model, discrete model pairs, affinity
//!   and variation distance, and the regularity-condition checkers.
//! * [`estimators`]: the MLE / Hodges / constant estimator zoo with exact
//!   (sufficient-statistic) and Monte Carlo concentration probabilities.
//! * [`efficiency`]: finite-grid approximation of the asymptotic efficiency
//!   functional and the all-or-nothing demonstration.
//! * [`extraction`]: the certified interval-shrinking algorithm that recovers
//!   the point of superefficiency of an estimator to arbitrary precision.
//!
//! Everything below is a pure function of its inputs. Monte Carlo routines are
//! pure given a seed and produce bit-identical results whether they run on one
//! thread or many.

// `!(a < b)` is used deliberately so that NaN inputs are rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod efficiency;
pub mod error;
pub mod estimators;
pub mod extended;
pub mod extraction;
pub mod models;
pub mod normal;
pub mod rational;
pub mod sampling;

pub use error::{Error, Result};
pub use estimators::{ConcentrationQuery, ConcentrationResult, EstimatorSpec, Method};
pub use models::{DiscreteModelPair, GaussianLocationModel, ParameterDomain};
pub use normal::{log_normal_cdf, normal_cdf};

/// Version string embedded in every emitted artifact.
pub const ARTIFACT_VERSION: &str = concat!("superefficiency/", env!("CARGO_PKG_VERSION"));
