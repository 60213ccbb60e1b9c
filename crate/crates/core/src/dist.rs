//! Parametric distribution families used by the simulation scenarios, with
//! analytic CDFs, densities, quantiles, and seeded samplers.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{normal_cdf, normal_pdf, normal_quantile, reg_inc_beta, reg_lower_gamma};

/// A marker distribution. The gamma is parameterized by shape and rate, the
/// log-normal by the mean and standard deviation of the log, the Weibull by
/// shape and scale, and the two-component normal mixture by its weight on the
/// first component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistSpec {
    Normal {
        mean: f64,
        sd: f64,
    },
    Gamma {
        shape: f64,
        rate: f64,
    },
    LogNormal {
        log_mean: f64,
        log_sd: f64,
    },
    Weibull {
        shape: f64,
        scale: f64,
    },
    Beta {
        alpha: f64,
        beta: f64,
    },
    NormalMixture {
        weight: f64,
        mean1: f64,
        sd1: f64,
        mean2: f64,
        sd2: f64,
    },
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidDistribution(msg));
        match *self {
            DistSpec::Normal { sd, .. } if sd <= 0.0 => bad(format!("normal sd {sd} <= 0")),
            DistSpec::Gamma { shape, rate } if shape <= 0.0 || rate <= 0.0 => {
                bad(format!("gamma shape {shape}, rate {rate} must be > 0"))
            }
            DistSpec::LogNormal { log_sd, .. } if log_sd <= 0.0 => {
                bad(format!("log-normal log_sd {log_sd} <= 0"))
            }
            DistSpec::Weibull { shape, scale } if shape <= 0.0 || scale <= 0.0 => {
                bad(format!("weibull shape {shape}, scale {scale} must be > 0"))
            }
            DistSpec::Beta { alpha, beta } if alpha <= 0.0 || beta <= 0.0 => {
                bad(format!("beta parameters {alpha}, {beta} must be > 0"))
            }
            DistSpec::NormalMixture {
                weight, sd1, sd2, ..
            } if !(0.0 < weight && weight < 1.0) || sd1 <= 0.0 || sd2 <= 0.0 => bad(format!(
                "mixture weight {weight} must be in (0,1) and sds {sd1}, {sd2} > 0"
            )),
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            DistSpec::Gamma { shape, rate } => reg_lower_gamma(shape, rate * x.max(0.0)),
            DistSpec::LogNormal { log_mean, log_sd } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - log_mean) / log_sd)
                }
            }
            DistSpec::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            DistSpec::Beta { alpha, beta } => reg_inc_beta(alpha, beta, x.clamp(0.0, 1.0)),
            DistSpec::NormalMixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => {
                weight * normal_cdf((x - mean1) / sd1)
                    + (1.0 - weight) * normal_cdf((x - mean2) / sd2)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            DistSpec::Normal { mean, sd } => normal_pdf((x - mean) / sd) / sd,
            DistSpec::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (shape * rate.ln() + (shape - 1.0) * x.ln()
                        - rate * x
                        - crate::special::ln_gamma(shape))
                    .exp()
                }
            }
            DistSpec::LogNormal { log_mean, log_sd } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_pdf((x.ln() - log_mean) / log_sd) / (x * log_sd)
                }
            }
            DistSpec::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = x / scale;
                    shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
                }
            }
            DistSpec::Beta { alpha, beta } => {
                if !(0.0..=1.0).contains(&x) {
                    0.0
                } else {
                    let ln_b = crate::special::ln_gamma(alpha) + crate::special::ln_gamma(beta)
                        - crate::special::ln_gamma(alpha + beta);
                    ((alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - ln_b).exp()
                }
            }
            DistSpec::NormalMixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => {
                weight * normal_pdf((x - mean1) / sd1) / sd1
                    + (1.0 - weight) * normal_pdf((x - mean2) / sd2) / sd2
            }
        }
    }

    /// Inverse CDF. Closed forms where available, otherwise monotone
    /// bisection refined to ~1e-12.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0 < p && p < 1.0) {
            return Err(Error::InvalidProbability {
                name: "p",
                value: p,
                range: "(0, 1)",
            });
        }
        match *self {
            DistSpec::Normal { mean, sd } => Ok(mean + sd * normal_quantile(p)?),
            DistSpec::LogNormal { log_mean, log_sd } => {
                Ok((log_mean + log_sd * normal_quantile(p)?).exp())
            }
            DistSpec::Weibull { shape, scale } => Ok(scale * (-(1.0 - p).ln()).powf(1.0 / shape)),
            _ => Ok(self.quantile_by_bisection(p)),
        }
    }

    fn quantile_by_bisection(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = self.initial_bracket();
        while self.cdf(hi) < p {
            hi = hi * 2.0 + 1.0;
        }
        while self.cdf(lo) > p {
            lo = lo * 2.0 - 1.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-13 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn initial_bracket(&self) -> (f64, f64) {
        match *self {
            DistSpec::Gamma { shape, rate } => (0.0, (shape + 10.0 * shape.sqrt()) / rate),
            DistSpec::Beta { .. } => (0.0, 1.0),
            DistSpec::NormalMixture {
                mean1,
                sd1,
                mean2,
                sd2,
                ..
            } => (
                mean1.min(mean2) - 10.0 * sd1.max(sd2),
                mean1.max(mean2) + 10.0 * sd1.max(sd2),
            ),
            _ => (-1.0, 1.0),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            DistSpec::Normal { mean, .. } => mean,
            DistSpec::Gamma { shape, rate } => shape / rate,
            DistSpec::LogNormal { log_mean, log_sd } => (log_mean + 0.5 * log_sd * log_sd).exp(),
            DistSpec::Weibull { shape, scale } => {
                scale * crate::special::ln_gamma(1.0 + 1.0 / shape).exp()
            }
            DistSpec::Beta { alpha, beta } => alpha / (alpha + beta),
            DistSpec::NormalMixture {
                weight,
                mean1,
                mean2,
                ..
            } => weight * mean1 + (1.0 - weight) * mean2,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::Normal { mean, sd } => rand_distr::Normal::new(mean, sd).unwrap().sample(rng),
            DistSpec::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
                .unwrap()
                .sample(rng),
            DistSpec::LogNormal { log_mean, log_sd } => {
                rand_distr::LogNormal::new(log_mean, log_sd)
                    .unwrap()
                    .sample(rng)
            }
            DistSpec::Weibull { shape, scale } => {
                rand_distr::Weibull::new(scale, shape).unwrap().sample(rng)
            }
            DistSpec::Beta { alpha, beta } => {
                rand_distr::Beta::new(alpha, beta).unwrap().sample(rng)
            }
            DistSpec::NormalMixture {
                weight,
                mean1,
                sd1,
                mean2,
                sd2,
            } => {
                let (mean, sd) = if rng.random::<f64>() < weight {
                    (mean1, sd1)
                } else {
                    (mean2, sd2)
                };
                rand_distr::Normal::new(mean, sd).unwrap().sample(rng)
            }
        }
    }

    /// Smallest interval carrying all but ~1e-12 of the mass, for quadrature.
    pub fn effective_support(&self) -> (f64, f64) {
        match *self {
            DistSpec::Beta { .. } => (0.0, 1.0),
            _ => {
                let lo = self.quantile(1e-13).unwrap_or(f64::NEG_INFINITY);
                let hi = self.quantile(1.0 - 1e-13).unwrap_or(f64::INFINITY);
                (lo, hi)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn cdf_matches_known_quantiles() {
        let n = DistSpec::Normal { mean: 0.0, sd: 1.0 };
        assert!((n.cdf(0.841_621_233_572_914_3) - 0.8).abs() < 1e-12);

        let w = DistSpec::Weibull {
            shape: 4.0,
            scale: 6.6,
        };
        let q = w.quantile(0.2).unwrap();
        assert!((w.cdf(q) - 0.2).abs() < 1e-12);
        assert!((q - 4.536_170_4).abs() < 1e-4, "got {q}");

        let b = DistSpec::Beta {
            alpha: 1.0,
            beta: 6.0,
        };
        assert!((b.cdf(0.235) - (1.0 - 0.765f64.powi(6))).abs() < 1e-12);
    }

    #[test]
    fn quantile_round_trips() {
        let specs = [
            DistSpec::Gamma {
                shape: 6.0,
                rate: 12.0,
            },
            DistSpec::LogNormal {
                log_mean: 1.5,
                log_sd: 0.5,
            },
            DistSpec::Beta {
                alpha: 9.6,
                beta: 6.0,
            },
            DistSpec::NormalMixture {
                weight: 0.5,
                mean1: -1.0,
                sd1: 1.0,
                mean2: 2.0,
                sd2: 1.0,
            },
        ];
        for spec in specs {
            for &p in &[0.01, 0.2, 0.5, 0.8, 0.99] {
                let q = spec.quantile(p).unwrap();
                assert!((spec.cdf(q) - p).abs() < 1e-10, "{spec:?} p={p}");
            }
        }
    }

    #[test]
    fn pdf_integrates_cdf_locally() {
        // central difference of the CDF approximates the density
        let specs = [
            DistSpec::Normal { mean: 2.5, sd: 1.1 },
            DistSpec::Gamma {
                shape: 6.0,
                rate: 12.0,
            },
            DistSpec::Weibull {
                shape: 4.0,
                scale: 10.0,
            },
            DistSpec::LogNormal {
                log_mean: 1.5,
                log_sd: 0.5,
            },
            DistSpec::Beta {
                alpha: 6.0,
                beta: 6.0,
            },
            DistSpec::NormalMixture {
                weight: 0.5,
                mean1: 3.0,
                sd1: 1.2,
                mean2: 6.0,
                sd2: 1.0,
            },
        ];
        for spec in specs {
            let x = spec.quantile(0.37).unwrap();
            let h = 1e-5;
            let numeric = (spec.cdf(x + h) - spec.cdf(x - h)) / (2.0 * h);
            assert!(
                (numeric - spec.pdf(x)).abs() < 1e-5 * (1.0 + spec.pdf(x)),
                "{spec:?}"
            );
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_support() {
        let spec = DistSpec::Beta {
            alpha: 6.0,
            beta: 6.0,
        };
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let x = spec.sample(&mut a);
            assert_eq!(x, spec.sample(&mut b));
            assert!((0.0..1.0).contains(&x));
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(DistSpec::Normal { mean: 0.0, sd: 0.0 }.validate().is_err());
        assert!(DistSpec::Gamma {
            shape: -1.0,
            rate: 2.0
        }
        .validate()
        .is_err());
        assert!(DistSpec::NormalMixture {
            weight: 1.0,
            mean1: 0.0,
            sd1: 1.0,
            mean2: 1.0,
            sd2: 1.0
        }
        .validate()
        .is_err());
    }
}
