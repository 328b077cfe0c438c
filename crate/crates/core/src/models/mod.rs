//! Contamination models and their samplers.

pub mod adversary;
pub mod base;
pub mod bias;
pub mod dump;
pub mod law;
pub mod mechanism;
pub mod regression;
pub mod sampler;

pub use adversary::{adversary_two_point, AdversaryDensity, AdversaryName, TwoPointPair};
pub use base::BaseDistribution;
pub use law::{sandwich_check, RealisableLaw, SandwichReport};
pub use mechanism::MnarMechanism;
pub use regression::{sample_regression, MarRate, RegressionSpec, ResponseMechanism};
pub use sampler::{
    sample_arbitrary, sample_mcar, sample_realisable, sample_realisable_projected, Contaminant,
    ContaminationSpec,
};
