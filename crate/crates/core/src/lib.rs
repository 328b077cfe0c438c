//! Mean and linear-regression estimation when data are missing not at random
//! with probability ε on top of an MCAR baseline.
//!
//! Observations live in `ℝ ∪ {⋆}` ([`types::ExtendedValue`]). The crate
//! provides samplers for MCAR, realisable and arbitrary contamination
//! ([`models`]), Kolmogorov distances to realisable sets ([`kolmogorov`]),
//! univariate and multivariate estimators, a regression estimator, and a
//! Monte Carlo harness ([`harness`]).
// `!(x > 0.0)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod harness;
pub mod kolmogorov;
pub mod models;
pub mod multivariate;
pub mod par;
pub mod regression;
pub mod rng;
pub mod special;
pub mod types;
pub mod univariate;

pub use error::{Error, Result};
pub use types::{
    effective_contamination, make_observation, observed_indices, sigma_ipw, ContaminationParams,
    ExtendedValue, ExtendedVector, Missingness, PatternDistribution, RevelationPattern,
};
