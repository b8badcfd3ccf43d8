use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{PspError, Result};
use crate::models::ScoreFunction;
use crate::types::{ClassLabel, LabeledSample};

/// A Gaussian mixture with identity covariance in every component.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmSpec {
    priors: Vec<f64>,
    means: Vec<Vec<f64>>,
}

impl GmmSpec {
    pub fn new(priors: Vec<f64>, means: Vec<Vec<f64>>) -> Result<Self> {
        let k = priors.len();
        if k < 2 {
            return Err(PspError::TooFewClasses(k));
        }
        if means.len() != k {
            return Err(PspError::LengthMismatch {
                what: "mixture means",
                expected: k,
                actual: means.len(),
            });
        }
        if priors.iter().any(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(PspError::InvalidSpec("priors must be positive".into()));
        }
        let total: f64 = priors.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(PspError::InvalidSpec(format!("priors sum to {total}")));
        }
        let d = means[0].len();
        if d == 0 {
            return Err(PspError::InvalidSpec("zero-dimensional means".into()));
        }
        for m in &means {
            if m.len() != d {
                return Err(PspError::LengthMismatch {
                    what: "mean vector",
                    expected: d,
                    actual: m.len(),
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(PspError::InvalidSpec("non-finite mean".into()));
            }
        }
        Ok(GmmSpec { priors, means })
    }

    pub fn num_classes(&self) -> usize {
        self.priors.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// Draws `n` labelled samples: `Y ~ priors`, `X | Y=k ~ N(m_k, I)`.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<LabeledSample> {
        (0..n).map(|_| self.sample_one(rng)).collect()
    }

    fn sample_one<R: Rng + ?Sized>(&self, rng: &mut R) -> LabeledSample {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut class = self.priors.len() - 1;
        for (c, p) in self.priors.iter().enumerate() {
            acc += p;
            if u < acc {
                class = c;
                break;
            }
        }
        let x = self.means[class]
            .iter()
            .map(|m| m + rng.sample::<f64, _>(StandardNormal))
            .collect();
        LabeledSample {
            x,
            y: ClassLabel::from_index(class),
        }
    }
}

/// Exact class posterior `P(Y = k | X = x)` of a [`GmmSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GmmPosterior {
    log_priors: Vec<f64>,
    means: Vec<Vec<f64>>,
}

pub fn gmm_posterior(spec: &GmmSpec) -> GmmPosterior {
    GmmPosterior {
        log_priors: spec.priors.iter().map(|p| p.ln()).collect(),
        means: spec.means.clone(),
    }
}

impl ScoreFunction for GmmPosterior {
    fn num_classes(&self) -> usize {
        self.log_priors.len()
    }

    fn scores_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, lp), m) in out.iter_mut().zip(&self.log_priors).zip(&self.means) {
            let sq: f64 = x.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum();
            *o = lp - 0.5 * sq;
        }
        let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for o in out.iter_mut() {
            *o = (*o - max).exp();
            sum += *o;
        }
        for o in out.iter_mut() {
            *o /= sum;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_class(m1: Vec<f64>, m2: Vec<f64>) -> GmmPosterior {
        gmm_posterior(&GmmSpec::new(vec![0.5, 0.5], vec![m1, m2]).unwrap())
    }

    #[test]
    fn symmetric_means_at_origin() {
        let post = two_class(vec![1.0, -2.0], vec![-1.0, 2.0]);
        assert_eq!(post.scores(&[0.0, 0.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn midpoint_is_even() {
        let post = two_class(vec![0.0], vec![2.0]);
        assert_eq!(post.scores(&[1.0]), vec![0.5, 0.5]);
    }

    #[test]
    fn likelihood_ratio_value() {
        let post = two_class(vec![0.0], vec![2.0]);
        // log-ratio at x = 0 is (4 - 0) / 2 = 2
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        let got = post.scores(&[0.0])[0];
        assert!((got - expected).abs() < 1e-15);
        assert!((got - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn far_points_stay_finite() {
        let post = two_class(vec![0.0; 3], vec![50.0; 3]);
        let p = post.scores(&[1e3, -1e3, 7e2]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(GmmSpec::new(vec![1.0], vec![vec![0.0]]).is_err());
        assert!(GmmSpec::new(vec![0.6, 0.6], vec![vec![0.0], vec![1.0]]).is_err());
        assert!(GmmSpec::new(vec![0.5, 0.5], vec![vec![0.0], vec![1.0, 2.0]]).is_err());
        assert!(GmmSpec::new(vec![0.0, 1.0], vec![vec![0.0], vec![1.0]]).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rows_sum_to_one_and_are_positive(
                raw in proptest::collection::vec(0.1f64..2.0, 2..7),
                shift in -4.0f64..4.0,
                x in proptest::collection::vec(-8.0f64..8.0, 3),
            ) {
                let total: f64 = raw.iter().sum();
                let priors: Vec<f64> = raw.iter().map(|z| z / total).collect();
                let means = (0..priors.len())
                    .map(|k| vec![k as f64 + shift, -(k as f64), 0.5 * k as f64])
                    .collect();
                let post = gmm_posterior(&GmmSpec::new(priors, means).unwrap());
                let p = post.scores(&x);
                prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                prop_assert!(p.iter().all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let spec = GmmSpec::new(vec![0.3, 0.7], vec![vec![0.0, 0.0], vec![3.0, 3.0]]).unwrap();
        let a = spec.sample(50, &mut ChaCha8Rng::seed_from_u64(1));
        let b = spec.sample(50, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(a, b);
    }
}
