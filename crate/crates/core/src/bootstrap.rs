//! Bootstrap calibration of the pivot scales, plus the chi-square mixture
//! quantile used by the (TCF2, TCF3) region.
//!
//! All resampling respects the assumed ordering of the class means: draws
//! violating it are rejected and redrawn, up to a cap. Replicate b always
//! uses its own RNG stream derived from (seed, b), so replicates may run in
//! any order, or in parallel, without changing results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::ecdf::EcdfMode;
use crate::error::{Error, Result};
use crate::pivot::{binomial_deviance, tcf2_plugin_pivot, vus_pivot, PivotValue};
use crate::sample::{ClassSample, ThreeClassSample};
use crate::vus::{vus, vus_with_ties};

/// Median of the chi-square(1) distribution as used by the calibration,
/// (7/9)^3.
pub const CHI2_1_MEDIAN: f64 = 343.0 / 729.0;

/// Consecutive rejected draws after which ordered resampling gives up.
pub const ORDERING_REJECTION_CAP: usize = 1000;

/// Seed for all randomized procedures. Same seed, same inputs: identical
/// output, bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

/// Bootstrap-calibrated scale with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub w_hat: f64,
    pub b_requested: usize,
    pub b_accepted: usize,
    /// Total draws rejected by the mean-ordering filter.
    pub rejected_ordering: u64,
    /// Median of the bootstrap pivot values.
    pub median_value: f64,
}

fn resample_class<R: Rng + ?Sized>(s: &ClassSample, rng: &mut R) -> ClassSample {
    let values = s.values();
    let n = values.len();
    let drawn: Vec<f64> = (0..n).map(|_| values[rng.random_range(0..n)]).collect();
    ClassSample::new(drawn).expect("resample of a valid sample is valid")
}

/// One with-replacement resample of all three classes, redrawn until the
/// resample means satisfy mean1 < mean2 < mean3.
pub fn resample_ordered<R: Rng + ?Sized>(
    x: &ThreeClassSample,
    rng: &mut R,
) -> Result<ThreeClassSample> {
    resample_ordered_counted(x, rng).map(|(s, _)| s)
}

fn resample_ordered_counted<R: Rng + ?Sized>(
    x: &ThreeClassSample,
    rng: &mut R,
) -> Result<(ThreeClassSample, u64)> {
    let mut rejected = 0u64;
    loop {
        let candidate = ThreeClassSample::new(
            resample_class(&x.class1, rng),
            resample_class(&x.class2, rng),
            resample_class(&x.class3, rng),
        );
        if candidate.means_ordered() {
            return Ok((candidate, rejected));
        }
        rejected += 1;
        if rejected as usize >= ORDERING_REJECTION_CAP {
            return Err(Error::OrderingInfeasible {
                attempts: ORDERING_REJECTION_CAP,
            });
        }
    }
}

/// As `resample_ordered`, for the first two classes only (mean1 < mean2).
fn resample_two_ordered_counted<R: Rng + ?Sized>(
    class1: &ClassSample,
    class2: &ClassSample,
    rng: &mut R,
) -> Result<(ClassSample, ClassSample, u64)> {
    let mut rejected = 0u64;
    loop {
        let c1 = resample_class(class1, rng);
        let c2 = resample_class(class2, rng);
        if c1.mean() < c2.mean() {
            return Ok((c1, c2, rejected));
        }
        rejected += 1;
        if rejected as usize >= ORDERING_REJECTION_CAP {
            return Err(Error::OrderingInfeasible {
                attempts: ORDERING_REJECTION_CAP,
            });
        }
    }
}

fn replicate_rng(seed: RngSeed, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    rng.set_stream(b as u64);
    rng
}

/// Median with +infinity sorting last; the mean of the two central order
/// statistics when the count is even.
fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn scale_from_pivots(
    mut pivots: Vec<f64>,
    b_requested: usize,
    rejected: u64,
    inverted: bool,
) -> Result<ScaleEstimate> {
    let med = median(&mut pivots);
    if med == 0.0 || !med.is_finite() {
        return Err(Error::DegenerateScale { median: med });
    }
    let w_hat = if inverted {
        med / CHI2_1_MEDIAN
    } else {
        CHI2_1_MEDIAN / med
    };
    Ok(ScaleEstimate {
        w_hat,
        b_requested,
        b_accepted: b_requested,
        rejected_ordering: rejected,
        median_value: med,
    })
}

fn validate_b(b: usize) -> Result<()> {
    if b < 2 {
        return Err(Error::InvalidPlan(format!(
            "bootstrap size B = {b} must be at least 2"
        )));
    }
    Ok(())
}

/// Scale for the plug-in TCF2 pivot: w_hat = (7/9)^3 / median of the
/// bootstrap pivots, each evaluated with the continuous ECDFs at the window
/// fraction estimated from the original data.
pub fn estimate_scale_tcf2(
    x: &ThreeClassSample,
    theta1: f64,
    theta3: f64,
    b: usize,
    seed: RngSeed,
) -> Result<ScaleEstimate> {
    validate_b(b)?;
    let parts = crate::pivot::tcf2_pivot_parts(x, theta1, theta3, EcdfMode::Step)?;
    if parts.degenerate {
        return Err(Error::DegenerateThresholds {
            t1_hat: parts.t1_hat,
            t2: parts.t2_hat,
        });
    }
    if parts.bracket_failed {
        return Err(Error::DomainCondition(crate::error::Bracket::Class2));
    }
    let theta2_hat = parts.theta2_hat;
    let mut rejected = 0u64;
    let mut pivots = Vec::with_capacity(b);
    for rep in 0..b {
        let mut rng = replicate_rng(seed, rep);
        let (resample, rej) = resample_ordered_counted(x, &mut rng)?;
        rejected += rej;
        let p = tcf2_plugin_pivot(&resample, theta1, theta2_hat, theta3, EcdfMode::Smoothed)?;
        pivots.push(p.value());
    }
    scale_from_pivots(pivots, b, rejected, false)
}

/// Scale for the VUS pivot: the bootstrap re-estimates the VUS and evaluates
/// the likelihood-ratio pivot against the original estimate.
pub fn estimate_scale_vus(
    x: &ThreeClassSample,
    b: usize,
    seed: RngSeed,
    ties: bool,
) -> Result<ScaleEstimate> {
    validate_b(b)?;
    let estimator = if ties { vus_with_ties } else { vus };
    let gamma_hat = estimator(x);
    if gamma_hat <= 0.0 || gamma_hat >= 1.0 {
        return Err(Error::BoundaryEstimate {
            estimate: gamma_hat,
        });
    }
    let n = x.total_n();
    let mut rejected = 0u64;
    let mut pivots = Vec::with_capacity(b);
    for rep in 0..b {
        let mut rng = replicate_rng(seed, rep);
        let (resample, rej) = resample_ordered_counted(x, &mut rng)?;
        rejected += rej;
        // pivot of the resampled estimate against the original one; boundary
        // resamples give +infinity, which the median absorbs
        let gamma_b = estimator(&resample);
        let p = vus_pivot(gamma_b, n, gamma_hat)?;
        pivots.push(p.value());
    }
    scale_from_pivots(pivots, b, rejected, false)
}

/// Scale for the (TCF2, TCF3) region pivot. Only classes 1 and 2 are
/// resampled (mean1 < mean2 filter); the bootstrap pivot is the class-2
/// deviance alone, with the continuous ECDF, and the calibration ratio is
/// inverted: w_hat = median / (7/9)^3.
pub fn estimate_scale_pair(
    x: &ThreeClassSample,
    theta1: f64,
    t2: f64,
    b: usize,
    seed: RngSeed,
) -> Result<ScaleEstimate> {
    validate_b(b)?;
    if !(theta1 > 0.0 && theta1 < 1.0) {
        return Err(Error::InvalidProbability {
            name: "theta1",
            value: theta1,
            range: "(0, 1)",
        });
    }
    let t1_hat = x.class1.quantile(theta1)?;
    if t1_hat >= t2 {
        return Err(Error::DegenerateThresholds { t1_hat, t2 });
    }
    let n2 = x.class2.n();
    // reference window fraction in the same continuous-ECDF convention the
    // bootstrap pivots use, so their median is free of the step-vs-linear
    // offset
    let t1_smooth = x.class1.quantile_smoothed(theta1)?;
    let theta2_hat =
        (x.class2.ecdf_smoothed(t2) - x.class2.ecdf_smoothed(t1_smooth)).clamp(0.0, 1.0);
    let mut rejected = 0u64;
    let mut pivots = Vec::with_capacity(b);
    for rep in 0..b {
        let mut rng = replicate_rng(seed, rep);
        let (c1b, c2b, rej) = resample_two_ordered_counted(&x.class1, &x.class2, &mut rng)?;
        rejected += rej;
        let t1_b = c1b.quantile_smoothed(theta1)?;
        let p = if t1_b >= t2 {
            PivotValue::INFINITE
        } else {
            let window = (c2b.ecdf_smoothed(t2) - c2b.ecdf_smoothed(t1_b)).clamp(0.0, 1.0);
            binomial_deviance(n2, window, theta2_hat)
        };
        pivots.push(p.value());
    }
    scale_from_pivots(pivots, b, rejected, true)
}

/// Empirical (1 - alpha) quantile of w_hat * U1 + U2, with U1 and U2
/// independent chi-square(1) variables drawn as squared standard normals.
pub fn chi2_mixture_quantile(w_hat: f64, alpha: f64, m: usize, seed: RngSeed) -> Result<f64> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidProbability {
            name: "alpha",
            value: alpha,
            range: "(0, 1)",
        });
    }
    if m < 100 {
        return Err(Error::InvalidPlan(format!(
            "mixture sample size M = {m} must be at least 100"
        )));
    }
    if w_hat < 0.0 || !w_hat.is_finite() {
        return Err(Error::InvalidPlan(format!(
            "mixture scale w_hat = {w_hat} must be finite and nonnegative"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut draws: Vec<f64> = (0..m)
        .map(|_| {
            let z1: f64 = StandardNormal.sample(&mut rng);
            let z2: f64 = StandardNormal.sample(&mut rng);
            w_hat * z1 * z1 + z2 * z2
        })
        .collect();
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // type-1 empirical quantile at 1 - alpha
    let mf = m as f64;
    let p = 1.0 - alpha;
    let mut lo = 1usize;
    let mut hi = m;
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if mid as f64 / mf >= p {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(draws[lo - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x3(c1: &[f64], c2: &[f64], c3: &[f64]) -> ThreeClassSample {
        ThreeClassSample::from_vecs(c1.to_vec(), c2.to_vec(), c3.to_vec()).unwrap()
    }

    #[test]
    fn well_separated_classes_accept_immediately() {
        let x = x3(&[0.0, 0.0], &[10.0, 10.0], &[20.0, 20.0]);
        let mut rng = replicate_rng(RngSeed(1), 0);
        let (s, rejected) = resample_ordered_counted(&x, &mut rng).unwrap();
        assert_eq!(rejected, 0);
        assert!(s.means_ordered());
    }

    #[test]
    fn identical_classes_hit_the_rejection_cap() {
        let x = x3(&[1.0], &[1.0], &[1.0]);
        let mut rng = replicate_rng(RngSeed(1), 0);
        assert!(matches!(
            resample_ordered_counted(&x, &mut rng),
            Err(Error::OrderingInfeasible { .. })
        ));
    }

    #[test]
    fn heavily_overlapping_mixture_data_still_accepts_sometimes() {
        // the mixture scenario has the strongest class overlap of the
        // built-ins; ordered resampling must still accept within the cap
        let spec = crate::scenarios::builtin_scenario(10).unwrap();
        let x = crate::scenarios::sample_scenario(&spec, 15, 15, 15, RngSeed(6));
        let mut accepted = 0;
        for rep in 0..1000 {
            let mut rng = replicate_rng(RngSeed(77), rep);
            if resample_ordered_counted(&x, &mut rng).is_ok() {
                accepted += 1;
            }
        }
        assert!(accepted >= 1);
    }

    #[test]
    fn scale_formula_from_fixed_pivots() {
        // (7/9)^3 / median
        let s = scale_from_pivots(vec![0.2, 0.4, 0.8], 3, 0, false).unwrap();
        assert!((s.w_hat - CHI2_1_MEDIAN / 0.4).abs() < 1e-15);
        assert!((s.w_hat - 1.176_268_861_454_047_5).abs() < 1e-12);
        assert_eq!(s.median_value, 0.4);

        let s = scale_from_pivots(vec![0.1, 0.3, 0.9], 3, 0, false).unwrap();
        assert!((s.w_hat - 1.568_358_481_938_73).abs() < 1e-12);

        // inverted ratio for the pair procedure
        let s = scale_from_pivots(vec![0.2, 0.4, 0.8], 3, 0, true).unwrap();
        assert!((s.w_hat - 0.4 / CHI2_1_MEDIAN).abs() < 1e-15);
        assert!((s.w_hat - 0.850_145_772_594_752_2).abs() < 1e-12);

        // all pivot values at the reference median give w_hat = 1
        let s = scale_from_pivots(vec![CHI2_1_MEDIAN; 5], 5, 0, false).unwrap();
        assert_eq!(s.w_hat, 1.0);
        let s = scale_from_pivots(vec![CHI2_1_MEDIAN; 5], 5, 0, true).unwrap();
        assert_eq!(s.w_hat, 1.0);
    }

    #[test]
    fn median_handles_infinities_and_even_counts() {
        let mut v = vec![1.0, f64::INFINITY, 0.5, 2.0, 3.0];
        assert_eq!(median(&mut v), 2.0);
        let mut v = vec![1.0, 3.0, 2.0, 10.0];
        assert_eq!(median(&mut v), 2.5);
        // a majority of infinities makes the scale degenerate
        let r = scale_from_pivots(vec![1.0, f64::INFINITY, f64::INFINITY], 3, 0, false);
        assert!(matches!(r, Err(Error::DegenerateScale { .. })));
    }

    #[test]
    fn zero_median_is_degenerate() {
        // crafted so every threshold hits an atom shared by all classes and
        // an identity "resample" reproduces a zero pivot
        let r = scale_from_pivots(vec![0.0, 0.0, 0.0], 3, 0, false);
        assert!(matches!(r, Err(Error::DegenerateScale { .. })));
    }

    #[test]
    fn identity_resample_gives_zero_median_for_vus_scale() {
        // stub the resampler by evaluating the pivot path directly: the
        // original sample reproduces gamma_hat, so every pivot is zero
        let x = x3(&[1.0, 3.0], &[2.0, 4.0], &[3.0, 5.0]);
        let gamma_hat = vus(&x);
        assert_eq!(gamma_hat, 0.5);
        let p = vus_pivot(gamma_hat, x.total_n(), gamma_hat).unwrap();
        assert_eq!(p.value(), 0.0);
        let r = scale_from_pivots(vec![p.value(); 4], 4, 0, false);
        assert!(matches!(r, Err(Error::DegenerateScale { .. })));
    }

    #[test]
    fn scale_estimates_are_deterministic() {
        let x = x3(
            &[0.1, 0.5, 0.9, 1.3, 1.8, 2.2, 2.9, 3.3],
            &[1.9, 2.4, 3.1, 3.8, 4.2, 4.9, 5.5, 6.0],
            &[4.1, 4.8, 5.6, 6.3, 7.0, 7.7, 8.2, 9.0],
        );
        // theta3 = 0.7 keeps t2_hat inside the class-2 range
        let a = estimate_scale_tcf2(&x, 0.5, 0.7, 50, RngSeed(9)).unwrap();
        let b = estimate_scale_tcf2(&x, 0.5, 0.7, 50, RngSeed(9)).unwrap();
        assert_eq!(a, b);
        let a = estimate_scale_vus(&x, 50, RngSeed(9), false).unwrap();
        let b = estimate_scale_vus(&x, 50, RngSeed(9), false).unwrap();
        assert_eq!(a, b);
        let a = estimate_scale_pair(&x, 0.5, 5.0, 50, RngSeed(9)).unwrap();
        let b = estimate_scale_pair(&x, 0.5, 5.0, 50, RngSeed(9)).unwrap();
        assert_eq!(a, b);
        assert!(a.w_hat > 0.0 && a.w_hat.is_finite());
    }

    #[test]
    fn rejection_counts_invariant_under_dyadic_rescale() {
        // scaling by a power of two is exact, so the ordering filter sees
        // identical comparisons and the same draws are rejected
        let x = x3(
            &[0.5, 1.25, -0.75, 2.0, 0.25],
            &[1.0, 0.5, 2.5, 1.75, 0.0],
            &[1.5, 2.25, 0.75, 3.0, 2.0],
        );
        let scale = 4.0;
        let y = ThreeClassSample::from_vecs(
            x.class1.values().iter().map(|v| v * scale).collect(),
            x.class2.values().iter().map(|v| v * scale).collect(),
            x.class3.values().iter().map(|v| v * scale).collect(),
        )
        .unwrap();
        for rep in 0..20 {
            let mut ra = replicate_rng(RngSeed(3), rep);
            let mut rb = replicate_rng(RngSeed(3), rep);
            let a = resample_ordered_counted(&x, &mut ra);
            let b = resample_ordered_counted(&y, &mut rb);
            match (a, b) {
                (Ok((_, na)), Ok((_, nb))) => assert_eq!(na, nb),
                (Err(_), Err(_)) => {}
                _ => panic!("rescale changed the rejection pattern"),
            }
        }
    }

    #[test]
    fn boundary_vus_estimate_is_rejected() {
        let x = x3(&[1.0, 2.0], &[3.0, 4.0], &[5.0, 6.0]);
        assert!(matches!(
            estimate_scale_vus(&x, 10, RngSeed(0), false),
            Err(Error::BoundaryEstimate { .. })
        ));
    }

    #[test]
    fn mixture_quantile_reference_points() {
        // w = 0 degenerates to chi-square(1); dial M up so the Monte Carlo
        // error sits well inside the tolerance
        let q = chi2_mixture_quantile(0.0, 0.05, 20_000, RngSeed(21)).unwrap();
        assert!((q - 3.841).abs() < 0.12, "got {q}");
        // w = 1 is chi-square(2)
        let q = chi2_mixture_quantile(1.0, 0.05, 20_000, RngSeed(21)).unwrap();
        assert!((q - 5.991).abs() < 0.15, "got {q}");
        // convergence at large M
        let q = chi2_mixture_quantile(1.0, 0.05, 1_000_000, RngSeed(21)).unwrap();
        assert!((q - 5.991).abs() < 0.02, "got {q}");
    }

    #[test]
    fn mixture_quantile_monotone_in_scale() {
        let seed = RngSeed(4);
        let mut prev = 0.0;
        for k in 0..=8 {
            let w = k as f64 / 4.0;
            let q = chi2_mixture_quantile(w, 0.05, 2000, seed).unwrap();
            assert!(q >= prev, "w={w}");
            prev = q;
        }
    }
}
