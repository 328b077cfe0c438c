//! Samplers for MCAR, realisable and arbitrary contamination.
//!
//! Stream layout (each replication has one master seed):
//! * main stream: the base draw, then one uniform for the reveal decision;
//! * `MIXING` child stream: one uniform per row for the branch `W ~ Ber(ε)`;
//! * `CONTAMINANT` child stream: draws from the arbitrary contaminant.
//!
//! Keeping the branch uniform on its own stream makes `ε = 0` reproduce the
//! MCAR sampler bit for bit.

use super::base::BaseDistribution;
use super::mechanism::MnarMechanism;
use crate::error::{Error, Result};
use crate::rng::{tag, Stream};
use crate::types::{
    make_observation, ExtendedValue, ExtendedVector, PatternDistribution, RevelationPattern,
};
use serde::{Deserialize, Serialize};

fn check_eps(epsilon: f64) -> Result<()> {
    if (0.0..1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::domain(format!("epsilon = {epsilon} outside [0, 1)")))
    }
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q <= 1.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q = {q} outside (0, 1]")))
    }
}

/// `n` i.i.d. rows `X ⊛ Ω` with `X ~ base`, `Ω ~ π` independent.
pub fn sample_mcar(
    base: &BaseDistribution,
    pi: &PatternDistribution,
    n: usize,
    seed: u64,
) -> Result<Vec<ExtendedVector>> {
    if pi.dim() != base.dim() {
        return Err(Error::Dimension {
            expected: base.dim(),
            got: pi.dim(),
        });
    }
    let mut main = Stream::new(seed);
    (0..n)
        .map(|_| {
            let x = base.sample(&mut main);
            let omega = pi.sample(&mut main);
            make_observation(&x, &omega)
        })
        .collect()
}

/// Univariate realisable contamination: with probability `1 - ε` reveal `X`
/// with probability `q`, otherwise reveal `X` with probability `m(X)`.
pub fn sample_realisable(
    base: &BaseDistribution,
    epsilon: f64,
    q: f64,
    mechanism: &MnarMechanism,
    n: usize,
    seed: u64,
) -> Result<Vec<ExtendedValue>> {
    if base.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            got: base.dim(),
        });
    }
    let rows = sample_realisable_projected(base, &[1.0], epsilon, q, mechanism, n, seed)?;
    Ok(rows.into_iter().map(|r| r.get(0)).collect())
}

/// All-or-nothing realisable contamination in `ℝ^d`: each row is fully
/// observed or fully missing, and the MNAR branch reveals with probability
/// `m(vᵀX)` for the given direction `v`.
pub fn sample_realisable_projected(
    base: &BaseDistribution,
    direction: &[f64],
    epsilon: f64,
    q: f64,
    mechanism: &MnarMechanism,
    n: usize,
    seed: u64,
) -> Result<Vec<ExtendedVector>> {
    check_eps(epsilon)?;
    check_q(q)?;
    mechanism.validate()?;
    let d = base.dim();
    if direction.len() != d {
        return Err(Error::Dimension {
            expected: d,
            got: direction.len(),
        });
    }
    let mut main = Stream::new(seed);
    let mut mixing = Stream::child(seed, tag::MIXING, 0);
    (0..n)
        .map(|_| {
            let x = base.sample(&mut main);
            let u = main.uniform();
            let contaminated = mixing.uniform() < epsilon;
            let p = if contaminated {
                let proj: f64 = x.iter().zip(direction).map(|(a, b)| a * b).sum();
                mechanism.prob(proj)
            } else {
                q
            };
            let omega = if u < p {
                RevelationPattern::full(d)
            } else {
                RevelationPattern::empty(d)
            };
            make_observation(&x, &omega)
        })
        .collect()
}

/// The `Q` of an arbitrary contamination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Contaminant {
    /// A finite list of atoms in `ℝ_⋆^d` with probabilities.
    Atoms(Vec<(ExtendedVector, f64)>),
    /// The MCAR view of another base law.
    Mcar {
        base: BaseDistribution,
        pattern: PatternDistribution,
    },
}

impl Contaminant {
    pub fn point_mass(z: ExtendedVector) -> Self {
        Contaminant::Atoms(vec![(z, 1.0)])
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            Contaminant::Atoms(a) => a.first().map(|(z, _)| z.dim()),
            Contaminant::Mcar { base, .. } => Some(base.dim()),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Contaminant::Atoms(atoms) => {
                if atoms.is_empty() {
                    return Err(Error::domain("contaminant has no atoms"));
                }
                let mut total = 0.0;
                for (z, p) in atoms {
                    if z.dim() != d {
                        return Err(Error::Dimension {
                            expected: d,
                            got: z.dim(),
                        });
                    }
                    if !(p.is_finite() && *p >= 0.0) {
                        return Err(Error::domain(format!("invalid atom probability {p}")));
                    }
                    total += p;
                }
                if (total - 1.0).abs() > 1e-12 {
                    return Err(Error::domain(format!("atom probabilities sum to {total}")));
                }
                Ok(())
            }
            Contaminant::Mcar { base, pattern } => {
                if base.dim() != d || pattern.dim() != d {
                    return Err(Error::Dimension {
                        expected: d,
                        got: base.dim(),
                    });
                }
                Ok(())
            }
        }
    }

    fn sample(&self, stream: &mut Stream) -> Result<ExtendedVector> {
        match self {
            Contaminant::Atoms(atoms) => {
                let u = stream.uniform();
                let mut acc = 0.0;
                for (z, p) in atoms {
                    acc += p;
                    if u < acc {
                        return Ok(z.clone());
                    }
                }
                Ok(atoms[atoms.len() - 1].0.clone())
            }
            Contaminant::Mcar { base, pattern } => {
                let x = base.sample(stream);
                let omega = pattern.sample(stream);
                make_observation(&x, &omega)
            }
        }
    }
}

/// Arbitrary contamination `(1 - ε) MCAR(π, P) + ε Q`.
///
/// The MCAR row is drawn on every row so that the main stream does not
/// depend on `ε`.
pub fn sample_arbitrary(
    base: &BaseDistribution,
    epsilon: f64,
    pi: &PatternDistribution,
    contaminant: &Contaminant,
    n: usize,
    seed: u64,
) -> Result<Vec<ExtendedVector>> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::domain(format!("epsilon = {epsilon} outside [0, 1]")));
    }
    let d = base.dim();
    if pi.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: pi.dim(),
        });
    }
    contaminant.validate(d)?;
    let mut main = Stream::new(seed);
    let mut mixing = Stream::child(seed, tag::MIXING, 0);
    let mut other = Stream::child(seed, tag::CONTAMINANT, 0);
    (0..n)
        .map(|_| {
            let x = base.sample(&mut main);
            let omega = pi.sample(&mut main);
            if mixing.uniform() < epsilon {
                contaminant.sample(&mut other)
            } else {
                make_observation(&x, &omega)
            }
        })
        .collect()
}

/// A fully specified contamination model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ContaminationSpec {
    Mcar {
        base: BaseDistribution,
        pattern: PatternDistribution,
    },
    Realisable {
        base: BaseDistribution,
        epsilon: f64,
        q: f64,
        mechanism: MnarMechanism,
        /// Direction fed to the mechanism; defaults to `e₁`.
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    Arbitrary {
        base: BaseDistribution,
        epsilon: f64,
        pattern: PatternDistribution,
        contaminant: Contaminant,
    },
}

impl ContaminationSpec {
    pub fn base(&self) -> &BaseDistribution {
        match self {
            ContaminationSpec::Mcar { base, .. }
            | ContaminationSpec::Realisable { base, .. }
            | ContaminationSpec::Arbitrary { base, .. } => base,
        }
    }

    pub fn theta0(&self) -> Vec<f64> {
        self.base().mean()
    }

    pub fn dim(&self) -> usize {
        self.base().dim()
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<ExtendedVector>> {
        match self {
            ContaminationSpec::Mcar { base, pattern } => sample_mcar(base, pattern, n, seed),
            ContaminationSpec::Realisable {
                base,
                epsilon,
                q,
                mechanism,
                direction,
            } => {
                let d = base.dim();
                let v = direction.clone().unwrap_or_else(|| {
                    let mut e = vec![0.0; d];
                    e[0] = 1.0;
                    e
                });
                sample_realisable_projected(base, &v, *epsilon, *q, mechanism, n, seed)
            }
            ContaminationSpec::Arbitrary {
                base,
                epsilon,
                pattern,
                contaminant,
            } => sample_arbitrary(base, *epsilon, pattern, contaminant, n, seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::observed_values;

    fn std_normal() -> BaseDistribution {
        BaseDistribution::normal(0.0, 1.0).unwrap()
    }

    fn observed_fraction(z: &[ExtendedValue]) -> f64 {
        observed_values(z).len() as f64 / z.len() as f64
    }

    #[test]
    fn mcar_examples() {
        let full = PatternDistribution::univariate(1.0).unwrap();
        let rows = sample_mcar(&std_normal(), &full, 3, 1).unwrap();
        assert!(rows.iter().all(|r| r.is_fully_observed()));
        let none = PatternDistribution::univariate(0.0).unwrap();
        let rows = sample_mcar(&std_normal(), &none, 5, 1).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.is_fully_missing()));
        let pi = PatternDistribution::univariate(0.3).unwrap();
        let rows = sample_mcar(&std_normal(), &pi, 100_000, 2).unwrap();
        let frac = rows.iter().filter(|r| r.is_fully_observed()).count() as f64 / 1e5;
        assert!((frac - 0.3).abs() < 0.01, "{frac}");
    }

    #[test]
    fn mcar_is_deterministic() {
        let pi = PatternDistribution::independent(&[0.5, 0.7]).unwrap();
        let base = BaseDistribution::standard_gaussian(vec![0.0, 1.0]).unwrap();
        assert_eq!(
            sample_mcar(&base, &pi, 50, 9).unwrap(),
            sample_mcar(&base, &pi, 50, 9).unwrap()
        );
    }

    #[test]
    fn realisable_constant_mechanisms() {
        let (eps, q, n) = (0.3, 0.6, 100_000);
        let z =
            sample_realisable(&std_normal(), eps, q, &MnarMechanism::Constant(0.0), n, 3).unwrap();
        assert!((observed_fraction(&z) - q * (1.0 - eps)).abs() < 0.01);
        let z =
            sample_realisable(&std_normal(), eps, q, &MnarMechanism::Constant(1.0), n, 3).unwrap();
        assert!((observed_fraction(&z) - (q * (1.0 - eps) + eps)).abs() < 0.01);
    }

    #[test]
    fn realisable_at_zero_epsilon_is_mcar() {
        let mech = MnarMechanism::ThresholdAbove(0.0);
        let z = sample_realisable(&std_normal(), 0.0, 0.4, &mech, 1000, 5).unwrap();
        let pi = PatternDistribution::univariate(0.4).unwrap();
        let w: Vec<ExtendedValue> = sample_mcar(&std_normal(), &pi, 1000, 5)
            .unwrap()
            .into_iter()
            .map(|r| r.get(0))
            .collect();
        assert_eq!(z, w);
    }

    #[test]
    fn realisable_rejects_bad_parameters() {
        let m = MnarMechanism::Constant(2.0);
        assert!(sample_realisable(&std_normal(), 0.1, 0.5, &m, 10, 1).is_err());
        let m = MnarMechanism::Constant(0.5);
        assert!(sample_realisable(&std_normal(), 1.0, 0.5, &m, 10, 1).is_err());
        assert!(sample_realisable(&std_normal(), 0.1, 0.0, &m, 10, 1).is_err());
    }

    #[test]
    fn arbitrary_hidden_contaminant() {
        let base = BaseDistribution::standard_gaussian(vec![0.0, 0.0]).unwrap();
        let pi = PatternDistribution::independent(&[0.4, 0.9]).unwrap();
        let q = Contaminant::point_mass(ExtendedVector::missing(2));
        let rows = sample_arbitrary(&base, 0.5, &pi, &q, 100_000, 6).unwrap();
        for (j, qj) in [0.4, 0.9].into_iter().enumerate() {
            let f = rows.iter().filter(|r| !r.get(j).is_missing()).count() as f64 / 1e5;
            assert!((f - qj * 0.5).abs() < 0.01, "coordinate {j}: {f}");
        }
    }

    #[test]
    fn arbitrary_outlier_frequency() {
        let pi = PatternDistribution::univariate(1.0).unwrap();
        let q = Contaminant::point_mass(ExtendedVector::from_reals(&[1e6]).unwrap());
        let rows = sample_arbitrary(&std_normal(), 0.1, &pi, &q, 100_000, 7).unwrap();
        let f = rows
            .iter()
            .filter(|r| r.get(0).value() == Some(1e6))
            .count() as f64
            / 1e5;
        assert!((f - 0.1).abs() < 0.005);
    }

    #[test]
    fn arbitrary_at_zero_epsilon_is_mcar() {
        let pi = PatternDistribution::univariate(0.7).unwrap();
        let q = Contaminant::point_mass(ExtendedVector::from_reals(&[5.0]).unwrap());
        assert_eq!(
            sample_arbitrary(&std_normal(), 0.0, &pi, &q, 500, 8).unwrap(),
            sample_mcar(&std_normal(), &pi, 500, 8).unwrap()
        );
    }

    #[test]
    fn arbitrary_at_full_epsilon_ignores_base() {
        let pi = PatternDistribution::univariate(0.7).unwrap();
        let q = Contaminant::Mcar {
            base: BaseDistribution::bounded_uniform(0.0, 1.0).unwrap(),
            pattern: PatternDistribution::univariate(0.5).unwrap(),
        };
        let other = BaseDistribution::normal(100.0, 3.0).unwrap();
        assert_eq!(
            sample_arbitrary(&std_normal(), 1.0, &pi, &q, 500, 8).unwrap(),
            sample_arbitrary(&other, 1.0, &pi, &q, 500, 8).unwrap()
        );
    }

    #[test]
    fn projected_realisable_is_all_or_nothing() {
        let base = BaseDistribution::standard_gaussian(vec![0.0; 3]).unwrap();
        let rows = sample_realisable_projected(
            &base,
            &[0.0, 1.0, 0.0],
            0.5,
            0.5,
            &MnarMechanism::ThresholdAbove(0.0),
            2000,
            1,
        )
        .unwrap();
        assert!(rows
            .iter()
            .all(|r| r.is_fully_observed() || r.is_fully_missing()));
    }

    #[test]
    fn sampler_serde_round_trip() {
        let spec = ContaminationSpec::Realisable {
            base: std_normal(),
            epsilon: 0.2,
            q: 0.5,
            mechanism: MnarMechanism::TailsOnly(1.0),
            direction: None,
        };
        let json = serde_json::to_string(&spec).unwrap();
        let back: ContaminationSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        assert_eq!(back.sample(20, 3).unwrap(), spec.sample(20, 3).unwrap());
    }
}
