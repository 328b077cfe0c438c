//! Kolmogorov distances on `ℝ_⋆` and distances to realisable sets.

pub mod bruteforce;
pub mod chain;
pub mod distance;
pub mod profile;

pub use bruteforce::{dist_to_realisable_bruteforce, dist_to_realisable_sym_bruteforce};
pub use chain::{
    dist_to_realisable, dist_to_realisable_bisection, dist_to_realisable_sym,
    dist_to_realisable_sym_scan, ChainBounds, RealisableSetSpec,
};
pub use distance::{
    kolmogorov_distance, sym_kolmogorov_distance, DiscreteLaw, EmpiricalSummary, ExtendedCdf,
    ScaledLaw,
};
pub use profile::{profile_b, separation_profile};
