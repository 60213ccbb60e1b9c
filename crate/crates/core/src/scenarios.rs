//! Built-in simulation scenarios with their ground truth, plus the
//! independent truth oracle that recomputes every stored value from the
//! distribution definitions.

// frozen truth constants carry the oracle's full output precision
#![allow(clippy::excessive_precision)]
//!
//! Stored truth values are high-precision constants derived once from the
//! family parameters: thresholds by analytic quantile inversion, the middle
//! class fraction from the CDFs, and the VUS by quadrature. The oracle in
//! `scenario_truth` re-derives them at runtime (Monte Carlo for the VUS) and
//! flags any disagreement, which would indicate a parameter-convention slip.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::RngSeed;
use crate::dist::DistSpec;
use crate::error::{Error, Result};
use crate::sample::{ClassSample, ThreeClassSample};

/// Ground truth for one scenario: the threshold pair, the three class
/// fractions at it, and the VUS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTruth {
    pub t1: f64,
    pub t2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
    pub gamma: f64,
}

/// One simulation scenario: three marker distributions and their truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u32,
    pub class1: DistSpec,
    pub class2: DistSpec,
    pub class3: DistSpec,
    pub truth: ScenarioTruth,
}

/// Tolerances for comparing a recomputed truth against the stored one.
pub const TRUTH_TOL_THETA: f64 = 0.005;
pub const TRUTH_TOL_T: f64 = 0.01;
pub const TRUTH_TOL_GAMMA: f64 = 0.005;

const SQRT_1_5: f64 = 1.224_744_871_391_589;

/// The ten built-in scenarios. Normal second parameters are standard
/// deviations (the mixture entries written as 1.5 are variances, hence
/// sqrt(1.5) here); the gamma is shape/rate; the log-normal takes log-scale
/// mean and sd; the Weibull is shape/scale.
pub fn builtin_scenarios() -> Vec<ScenarioSpec> {
    let normal = |mean: f64, sd: f64| DistSpec::Normal { mean, sd };
    let beta = |alpha: f64, b: f64| DistSpec::Beta { alpha, beta: b };
    let gamma_6_12 = DistSpec::Gamma {
        shape: 6.0,
        rate: 12.0,
    };
    let lognormal = DistSpec::LogNormal {
        log_mean: 1.5,
        log_sd: 0.5,
    };
    let weibull = |scale: f64| DistSpec::Weibull { shape: 4.0, scale };
    vec![
        ScenarioSpec {
            id: 1,
            class1: normal(0.0, 1.0),
            class2: normal(2.5, 1.1),
            class3: normal(3.69, 1.2),
            truth: ScenarioTruth {
                t1: 0.841_621_233_572_915,
                t2: 2.680_054_519_712_503,
                theta1: 0.8,
                theta2: 0.499_184_519_736_618,
                theta3: 0.8,
                gamma: 0.722_315_773_633_420,
            },
        },
        ScenarioSpec {
            id: 2,
            class1: normal(0.0, 1.0),
            class2: normal(3.5, 1.1),
            class3: normal(5.5, 1.2),
            truth: ScenarioTruth {
                t1: 0.841_621_233_572_915,
                t2: 4.490_054_519_712_502,
                theta1: 0.8,
                theta2: 0.808_122_274_141_907,
                theta3: 0.8,
                gamma: 0.881_125_291_378_371,
            },
        },
        ScenarioSpec {
            id: 3,
            class1: normal(0.0, 1.0),
            class2: normal(4.0, 1.2),
            class3: normal(8.189, 2.0),
            truth: ScenarioTruth {
                t1: 1.281_551_565_544_601,
                t2: 5.625_896_868_910_798,
                theta1: 0.9,
                theta2: 0.900_532_651_264_817,
                theta3: 0.9,
                gamma: 0.958_535_682_234_301,
            },
        },
        ScenarioSpec {
            id: 4,
            class1: gamma_6_12,
            class2: lognormal,
            class3: weibull(6.6),
            truth: ScenarioTruth {
                t1: 0.658_832_759_245_653,
                t2: 4.536_177_297_184_627,
                theta1: 0.8,
                theta2: 0.509_578_327_066_815,
                theta3: 0.8,
                gamma: 0.668_730_482_514_247,
            },
        },
        ScenarioSpec {
            id: 5,
            class1: gamma_6_12,
            class2: lognormal,
            class3: weibull(10.0),
            truth: ScenarioTruth {
                t1: 0.658_832_759_245_653,
                t2: 6.872_995_904_825_193,
                theta1: 0.8,
                theta2: 0.803_716_943_407_540,
                theta3: 0.8,
                gamma: 0.867_667_914_560_162,
            },
        },
        ScenarioSpec {
            id: 6,
            class1: gamma_6_12,
            class2: lognormal,
            class3: weibull(12.4),
            truth: ScenarioTruth {
                t1: 0.658_832_759_245_653,
                t2: 8.522_514_921_983_239,
                theta1: 0.8,
                theta2: 0.900_614_845_705_903,
                theta3: 0.8,
                gamma: 0.926_792_122_630_080,
            },
        },
        ScenarioSpec {
            id: 7,
            class1: beta(1.0, 6.0),
            class2: beta(6.0, 6.0),
            class3: beta(9.6, 6.0),
            truth: ScenarioTruth {
                t1: 0.235_275_508_668_281,
                t2: 0.512_857_251_098_296,
                theta1: 0.8,
                theta2: 0.509_000_559_499_474,
                theta3: 0.8,
                gamma: 0.697_882_162_695_163,
            },
        },
        ScenarioSpec {
            id: 8,
            class1: beta(1.0, 6.0),
            class2: beta(9.0, 6.0),
            class3: beta(20.4, 6.0),
            truth: ScenarioTruth {
                t1: 0.235_275_508_668_281,
                t2: 0.706_589_975_629_697,
                theta1: 0.8,
                theta2: 0.795_500_913_095_138,
                theta3: 0.8,
                gamma: 0.868_506_277_622_331,
            },
        },
        ScenarioSpec {
            id: 9,
            class1: beta(1.0, 6.0),
            class2: beta(6.0, 6.0),
            class3: beta(20.4, 6.0),
            truth: ScenarioTruth {
                t1: 0.235_275_508_668_281,
                t2: 0.706_589_975_629_697,
                theta1: 0.8,
                theta2: 0.903_236_996_995_155,
                theta3: 0.8,
                gamma: 0.917_037_504_687_918,
            },
        },
        ScenarioSpec {
            id: 10,
            class1: DistSpec::NormalMixture {
                weight: 0.5,
                mean1: -1.0,
                sd1: 1.0,
                mean2: 2.0,
                sd2: 1.0,
            },
            class2: DistSpec::NormalMixture {
                weight: 0.5,
                mean1: 1.0,
                sd1: 1.0,
                mean2: 4.0,
                sd2: SQRT_1_5,
            },
            class3: DistSpec::NormalMixture {
                weight: 0.5,
                mean1: 3.0,
                sd1: SQRT_1_5,
                mean2: 6.0,
                sd2: 1.0,
            },
            truth: ScenarioTruth {
                t1: 0.5,
                t2: 4.5,
                theta1: 0.5,
                theta2: 0.673_775_385_314_543,
                theta3: 0.521_764_239_845_533,
                gamma: 0.543_751_205_008_066,
            },
        },
    ]
}

pub fn builtin_scenario(id: u32) -> Result<ScenarioSpec> {
    builtin_scenarios()
        .into_iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::InvalidPlan(format!("no built-in scenario with id {id}")))
}

/// User-facing scenario definition. Truth may be given in full, or anchored
/// by (theta1, theta3) or by (t1, t2); the remaining values are derived from
/// the distributions (theta2 from the class-2 CDF, the VUS by quadrature).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: u32,
    pub class1: DistSpec,
    pub class2: DistSpec,
    pub class3: DistSpec,
    #[serde(default)]
    pub truth: Option<ScenarioTruth>,
    #[serde(default)]
    pub theta_anchors: Option<[f64; 2]>,
    #[serde(default)]
    pub t_anchors: Option<[f64; 2]>,
}

impl ScenarioConfig {
    pub fn resolve(&self) -> Result<ScenarioSpec> {
        for d in [&self.class1, &self.class2, &self.class3] {
            d.validate()?;
        }
        let truth = if let Some(t) = self.truth {
            t
        } else {
            let (theta1, theta3, t1, t2) = match (self.theta_anchors, self.t_anchors) {
                (Some([theta1, theta3]), None) => {
                    let t1 = self.class1.quantile(theta1)?;
                    let t2 = self.class3.quantile(1.0 - theta3)?;
                    (theta1, theta3, t1, t2)
                }
                (None, Some([t1, t2])) => {
                    let theta1 = self.class1.cdf(t1);
                    let theta3 = 1.0 - self.class3.cdf(t2);
                    (theta1, theta3, t1, t2)
                }
                _ => {
                    return Err(Error::InvalidPlan(format!(
                        "scenario {}: give truth, theta_anchors, or t_anchors (exactly one)",
                        self.id
                    )))
                }
            };
            if t1 >= t2 {
                return Err(Error::InvalidPlan(format!(
                    "scenario {}: derived thresholds are not ordered (t1 = {t1}, t2 = {t2})",
                    self.id
                )));
            }
            ScenarioTruth {
                t1,
                t2,
                theta1,
                theta2: self.class2.cdf(t2) - self.class2.cdf(t1),
                theta3,
                gamma: vus_quadrature(&self.class1, &self.class2, &self.class3),
            }
        };
        Ok(ScenarioSpec {
            id: self.id,
            class1: self.class1,
            class2: self.class2,
            class3: self.class3,
            truth,
        })
    }
}

/// Parses a JSON array of scenario definitions (the exported builtin file
/// parses back unchanged because `truth` is present there).
pub fn scenarios_from_json(text: &str) -> Result<Vec<ScenarioSpec>> {
    let configs: Vec<ScenarioConfig> = serde_json::from_str(text)
        .map_err(|e| Error::InvalidPlan(format!("scenario config: {e}")))?;
    configs.iter().map(ScenarioConfig::resolve).collect()
}

/// Serializes scenario definitions as JSON.
pub fn scenarios_to_json(specs: &[ScenarioSpec]) -> String {
    serde_json::to_string_pretty(specs).expect("serializable scenario specs")
}

/// Independent draws from the three class distributions.
pub fn sample_scenario(
    spec: &ScenarioSpec,
    n1: usize,
    n2: usize,
    n3: usize,
    seed: RngSeed,
) -> ThreeClassSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    sample_scenario_with(spec, n1, n2, n3, &mut rng)
}

pub fn sample_scenario_with<R: Rng + ?Sized>(
    spec: &ScenarioSpec,
    n1: usize,
    n2: usize,
    n3: usize,
    rng: &mut R,
) -> ThreeClassSample {
    let draw = |d: &DistSpec, n: usize, rng: &mut R| -> ClassSample {
        ClassSample::new((0..n).map(|_| d.sample(rng)).collect())
            .expect("scenario draws are finite and nonempty")
    };
    let c1 = draw(&spec.class1, n1, rng);
    let c2 = draw(&spec.class2, n2, rng);
    let c3 = draw(&spec.class3, n3, rng);
    ThreeClassSample::new(c1, c2, c3)
}

/// VUS by one-dimensional quadrature: integral of F1(u) (1 - F3(u)) against
/// the class-2 density, composite Simpson over the effective support.
pub fn vus_quadrature(d1: &DistSpec, d2: &DistSpec, d3: &DistSpec) -> f64 {
    let (lo, hi) = d2.effective_support();
    let panels = 40_000usize;
    let h = (hi - lo) / panels as f64;
    let integrand = |u: f64| d1.cdf(u) * (1.0 - d3.cdf(u)) * d2.pdf(u);
    let mut acc = integrand(lo) + integrand(hi);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * integrand(lo + k as f64 * h);
    }
    acc * h / 3.0
}

/// VUS by Monte Carlo over independent triples, chunked across threads with
/// one RNG stream per chunk.
pub fn vus_monte_carlo(
    d1: &DistSpec,
    d2: &DistSpec,
    d3: &DistSpec,
    draws: usize,
    seed: RngSeed,
) -> f64 {
    let chunk = 1 << 16;
    let chunks = draws.div_ceil(chunk);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
            rng.set_stream(c as u64);
            let m = chunk.min(draws - c * chunk);
            let mut local = 0u64;
            for _ in 0..m {
                let y1 = d1.sample(&mut rng);
                let y2 = d2.sample(&mut rng);
                let y3 = d3.sample(&mut rng);
                if y1 < y2 && y2 < y3 {
                    local += 1;
                }
            }
            local
        })
        .sum();
    hits as f64 / draws as f64
}

/// Recomputes the scenario truth from the distribution definitions alone:
/// thresholds by quantile inversion at the stored theta1/theta3, theta2 from
/// the class-2 CDF, and the VUS by Monte Carlo with `precision_n` triples.
/// Errors when any value disagrees with the stored truth beyond tolerance.
pub fn scenario_truth(spec: &ScenarioSpec, precision_n: usize) -> Result<ScenarioTruth> {
    if precision_n < 1_000_000 {
        return Err(Error::InvalidPlan(format!(
            "truth oracle needs at least 1e6 Monte Carlo draws, got {precision_n}"
        )));
    }
    let stored = &spec.truth;
    let t1 = spec.class1.quantile(stored.theta1)?;
    let t2 = spec.class3.quantile(1.0 - stored.theta3)?;
    let theta2 = spec.class2.cdf(t2) - spec.class2.cdf(t1);
    let gamma = vus_monte_carlo(
        &spec.class1,
        &spec.class2,
        &spec.class3,
        precision_n,
        RngSeed(0x7455_0001 + spec.id as u64),
    );
    let recomputed = ScenarioTruth {
        t1,
        t2,
        theta1: stored.theta1,
        theta2,
        theta3: stored.theta3,
        gamma,
    };
    let checks: [(&'static str, f64, f64, f64); 4] = [
        ("t1", t1, stored.t1, TRUTH_TOL_T),
        ("t2", t2, stored.t2, TRUTH_TOL_T),
        ("theta2", theta2, stored.theta2, TRUTH_TOL_THETA),
        ("gamma", gamma, stored.gamma, TRUTH_TOL_GAMMA),
    ];
    for (field, got, want, tol) in checks {
        if (got - want).abs() > tol {
            return Err(Error::ConventionMismatch {
                scenario: spec.id,
                field,
                recomputed: got,
                stored: want,
                tolerance: tol,
            });
        }
    }
    Ok(recomputed)
}
