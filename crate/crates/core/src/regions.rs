//! Confidence intervals and regions assembled from the pivots and their
//! calibrations: the chi-square(3) region for TCF triples, scaled
//! chi-square(1) intervals for TCF2 and the VUS, and the chi-square mixture
//! region for (TCF2, TCF3).

use serde::{Deserialize, Serialize};

use crate::bootstrap::{
    chi2_mixture_quantile, estimate_scale_pair, estimate_scale_tcf2, estimate_scale_vus, RngSeed,
    ScaleEstimate,
};
use crate::ecdf::EcdfMode;
use crate::error::{Error, Result};
use crate::pivot::{
    binomial_deviance, check_brackets, tcf23_pivot_parts, tcf2_pivot_parts, Tcf23PivotParts,
};
use crate::sample::{TcfTriple, ThreeClassSample, ThresholdPair};
use crate::special::chi2_quantile;
use crate::vus::{vus, vus_with_ties};

/// Default grid resolution for the 3D region.
pub const DEFAULT_GRID_3D: usize = 99;
/// Default grid resolution for the 2D region.
pub const DEFAULT_GRID_2D: usize = 199;

const BISECT_EPS: f64 = 1e-9;

/// A solved two-sided interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub method: String,
    pub w_hat: f64,
    pub point_estimate: f64,
}

/// Why a TCF2 interval came back empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyIntervalReason {
    /// The scaled threshold-constant part already exceeds the cutoff: the
    /// fixed (theta1, theta3) pair is incompatible with the data at this
    /// level.
    ConstantExceedsCutoff,
    /// The plug-in thresholds collapsed (t1_hat >= t2_hat).
    DegenerateThresholds,
    /// Neither plug-in threshold fell inside the class-2 sample range.
    BracketFailed,
}

/// Outcome of the TCF2 interval: a real interval or a flagged empty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum IntervalOutcome {
    Interval(ConfidenceInterval),
    Empty {
        reason: EmptyIntervalReason,
        level: f64,
        w_hat: f64,
    },
}

/// TCF2 interval with the full calibration evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tcf2IntervalResult {
    pub outcome: IntervalOutcome,
    pub scale: Option<ScaleEstimate>,
    pub t1_hat: f64,
    pub t2_hat: f64,
    /// Class-1 plus class-3 deviances at the plug-in thresholds; infinite
    /// when the pivot is degenerate.
    pub c0: f64,
    pub cutoff: f64,
    pub theta1: f64,
    pub theta3: f64,
    pub seed: RngSeed,
}

/// VUS interval with its calibration evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VusIntervalResult {
    pub interval: ConfidenceInterval,
    pub scale: ScaleEstimate,
    pub cutoff: f64,
    pub ties: bool,
    pub seed: RngSeed,
}

/// Membership mask for the TCF-triple region on an interior lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region3D {
    pub theta1_grid: Vec<f64>,
    pub theta2_grid: Vec<f64>,
    pub theta3_grid: Vec<f64>,
    /// Flattened mask indexed (i * g + j) * g + k for (theta1, theta2, theta3).
    pub membership: Vec<bool>,
    pub threshold_used: f64,
    pub t1: f64,
    pub t2: f64,
    pub level: f64,
    pub point_estimate: TcfTriple,
}

impl Region3D {
    pub fn grid_n(&self) -> usize {
        self.theta1_grid.len()
    }

    pub fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        let g = self.grid_n();
        self.membership[(i * g + j) * g + k]
    }

    pub fn member_count(&self) -> usize {
        self.membership.iter().filter(|m| **m).count()
    }

    /// Long-format CSV of the mask: `theta1,theta2,theta3,member`. Floats
    /// print in shortest-round-trip form, so the file re-parses exactly.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let g = self.grid_n();
        let mut out = String::with_capacity(g * g * g * 20);
        out.push_str("theta1,theta2,theta3,member\n");
        for (i, t1) in self.theta1_grid.iter().enumerate() {
            for (j, t2) in self.theta2_grid.iter().enumerate() {
                for (k, t3) in self.theta3_grid.iter().enumerate() {
                    let m = u8::from(self.contains(i, j, k));
                    writeln!(out, "{t1:?},{t2:?},{t3:?},{m}").expect("string write");
                }
            }
        }
        out
    }

    /// Parses the CSV from `to_csv` back into (grids, membership).
    #[allow(clippy::type_complexity)]
    pub fn mask_from_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<bool>)> {
        let rows = parse_mask_rows(text, "theta1,theta2,theta3,member", 4)?;
        let g = (rows.len() as f64).cbrt().round() as usize;
        if g * g * g != rows.len() {
            return Err(Error::InvalidPlan(format!(
                "region3d CSV has {} rows, not a cube",
                rows.len()
            )));
        }
        let theta1 = rows.iter().step_by(g * g).map(|r| r.0[0]).collect();
        let theta2 = rows[..g * g].iter().step_by(g).map(|r| r.0[1]).collect();
        let theta3 = rows[..g].iter().map(|r| r.0[2]).collect();
        let mask = rows.iter().map(|r| r.1).collect();
        Ok((theta1, theta2, theta3, mask))
    }
}

/// Membership mask for the (TCF2, TCF3) region at fixed theta1 and t2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region2D {
    pub theta2_grid: Vec<f64>,
    pub theta3_grid: Vec<f64>,
    /// Flattened mask indexed j * grid_n + k for (theta2, theta3).
    pub membership: Vec<bool>,
    pub c_alpha_hat: f64,
    pub w_hat: f64,
    pub theta1_fixed: f64,
    pub t2_fixed: f64,
    pub level: f64,
    pub point_estimate: (f64, f64),
    pub scale: ScaleEstimate,
    pub seed: RngSeed,
}

impl Region2D {
    pub fn grid_n(&self) -> usize {
        self.theta2_grid.len()
    }

    pub fn contains(&self, j: usize, k: usize) -> bool {
        self.membership[j * self.grid_n() + k]
    }

    pub fn member_count(&self) -> usize {
        self.membership.iter().filter(|m| **m).count()
    }

    /// Long-format CSV of the mask: `theta2,theta3,member`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let g = self.grid_n();
        let mut out = String::with_capacity(g * g * 16);
        out.push_str("theta2,theta3,member\n");
        for (j, t2) in self.theta2_grid.iter().enumerate() {
            for (k, t3) in self.theta3_grid.iter().enumerate() {
                let m = u8::from(self.contains(j, k));
                writeln!(out, "{t2:?},{t3:?},{m}").expect("string write");
            }
        }
        out
    }

    /// Parses the CSV from `to_csv` back into (grids, membership).
    pub fn mask_from_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<bool>)> {
        let rows = parse_mask_rows(text, "theta2,theta3,member", 3)?;
        let g = (rows.len() as f64).sqrt().round() as usize;
        if g * g != rows.len() {
            return Err(Error::InvalidPlan(format!(
                "region2d CSV has {} rows, not a square",
                rows.len()
            )));
        }
        let theta2 = rows.iter().step_by(g).map(|r| r.0[0]).collect();
        let theta3 = rows[..g].iter().map(|r| r.0[1]).collect();
        let mask = rows.iter().map(|r| r.1).collect();
        Ok((theta2, theta3, mask))
    }
}

/// Shared row parser for the region CSV formats: fixed header, fixed field
/// count, trailing `member` flag in {0, 1}.
fn parse_mask_rows(
    text: &str,
    expected_header: &str,
    fields: usize,
) -> Result<Vec<(Vec<f64>, bool)>> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != expected_header {
        return Err(Error::InvalidPlan(format!(
            "unrecognized region CSV header {header:?}"
        )));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != fields {
            return Err(Error::InvalidPlan(format!(
                "region CSV line {}: expected {fields} fields, got {}",
                idx + 2,
                parts.len()
            )));
        }
        let mut coords = Vec::with_capacity(fields - 1);
        for p in &parts[..fields - 1] {
            coords.push(p.parse::<f64>().map_err(|_| {
                Error::InvalidPlan(format!("region CSV line {}: bad float {p:?}", idx + 2))
            })?);
        }
        let member = match parts[fields - 1] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::InvalidPlan(format!(
                    "region CSV line {}: member flag {other:?} not 0/1",
                    idx + 2
                )))
            }
        };
        rows.push((coords, member));
    }
    Ok(rows)
}

fn interior_grid(grid_n: usize) -> Vec<f64> {
    (1..=grid_n)
        .map(|i| i as f64 / (grid_n + 1) as f64)
        .collect()
}

fn validate_alpha(alpha: f64) -> Result<()> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(Error::InvalidProbability {
            name: "alpha",
            value: alpha,
            range: "(0, 1)",
        });
    }
    Ok(())
}

fn validate_grid(grid_n: usize) -> Result<()> {
    if grid_n < 11 {
        return Err(Error::InvalidPlan(format!(
            "grid_n = {grid_n} must be at least 11"
        )));
    }
    Ok(())
}

/// Chi-square(3) region over an interior lattice of hypothesized triples.
/// The pivot separates additively over the three axes, so membership is
/// computed from three one-dimensional deviance vectors; this equals
/// pointwise pivot evaluation exactly. `mode` picks the step or continuous
/// ECDFs for the empirical fractions.
pub fn tcf_region3d(
    x: &ThreeClassSample,
    t: &ThresholdPair,
    alpha: f64,
    grid_n: usize,
    mode: EcdfMode,
) -> Result<Region3D> {
    validate_alpha(alpha)?;
    validate_grid(grid_n)?;
    check_brackets(x, t)?;
    let threshold = chi2_quantile(3, 1.0 - alpha)?;
    let f1 = x.class1.ecdf_with(t.t1(), mode);
    let phat = x.class2.mass_between(t, mode);
    let f3 = x.class3.ecdf_with(t.t2(), mode);
    let grid = interior_grid(grid_n);
    let dev1: Vec<f64> = grid
        .iter()
        .map(|&v| binomial_deviance(x.class1.n(), f1, v).value())
        .collect();
    // under the step ECDF an empty window makes the whole middle axis
    // infinite (interior hypotheses are infeasible for the weights)
    let dev2: Vec<f64> = grid
        .iter()
        .map(|&v| {
            if mode == EcdfMode::Step && phat == 0.0 {
                f64::INFINITY
            } else {
                binomial_deviance(x.class2.n(), phat, v).value()
            }
        })
        .collect();
    let dev3: Vec<f64> = grid
        .iter()
        .map(|&v| binomial_deviance(x.class3.n(), f3, 1.0 - v).value())
        .collect();
    let g = grid_n;
    let mut membership = vec![false; g * g * g];
    for (i, d1) in dev1.iter().enumerate() {
        if *d1 > threshold {
            continue;
        }
        for (j, d2) in dev2.iter().enumerate() {
            let d12 = d1 + d2;
            if d12 > threshold {
                continue;
            }
            let row = (i * g + j) * g;
            for (k, d3) in dev3.iter().enumerate() {
                membership[row + k] = d12 + d3 <= threshold;
            }
        }
    }
    Ok(Region3D {
        theta1_grid: grid.clone(),
        theta2_grid: grid.clone(),
        theta3_grid: grid,
        membership,
        threshold_used: threshold,
        t1: t.t1(),
        t2: t.t2(),
        level: 1.0 - alpha,
        point_estimate: TcfTriple {
            theta1: f1,
            theta2: phat,
            theta3: 1.0 - f3,
        },
    })
}

/// Solves deviance(theta) = target for theta by bisection on one side of the
/// empirical value `phat`, where the deviance is monotone. `left` selects
/// the branch below `phat`. Returns the endpoint on the inside of the set,
/// so solved intervals always cover the estimate.
fn bisect_deviance(n: usize, phat: f64, target: f64, left: bool) -> f64 {
    debug_assert!(target >= 0.0);
    let (mut lo, mut hi) = if left {
        (BISECT_EPS, phat)
    } else {
        (phat, 1.0 - BISECT_EPS)
    };
    if left && binomial_deviance(n, phat, lo).value() <= target {
        return lo;
    }
    if !left && binomial_deviance(n, phat, hi).value() <= target {
        return hi;
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        let inside = binomial_deviance(n, phat, mid).value() <= target;
        if inside == left {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    if left {
        hi
    } else {
        lo
    }
}

/// Bootstrap-calibrated interval for TCF2 at fixed theta1 and theta3: the
/// set of theta2 values whose scaled pivot stays at or below the
/// chi-square(1) quantile.
pub fn tcf2_interval(
    x: &ThreeClassSample,
    theta1: f64,
    theta3: f64,
    alpha: f64,
    b: usize,
    seed: RngSeed,
) -> Result<Tcf2IntervalResult> {
    validate_alpha(alpha)?;
    let level = 1.0 - alpha;
    let cutoff = chi2_quantile(1, level)?;
    let parts = tcf2_pivot_parts(x, theta1, theta3, EcdfMode::Step)?;
    if !parts.finite() {
        // the pivot is +infinity for every theta2 and there is no scale to
        // calibrate; report the empty set with the degeneracy evidence
        let reason = if parts.degenerate {
            EmptyIntervalReason::DegenerateThresholds
        } else {
            EmptyIntervalReason::BracketFailed
        };
        return Ok(Tcf2IntervalResult {
            outcome: IntervalOutcome::Empty {
                reason,
                level,
                w_hat: f64::NAN,
            },
            scale: None,
            t1_hat: parts.t1_hat,
            t2_hat: parts.t2_hat,
            c0: f64::INFINITY,
            cutoff,
            theta1,
            theta3,
            seed,
        });
    }
    let scale = estimate_scale_tcf2(x, theta1, theta3, b, seed)?;
    let w = scale.w_hat;
    let phat = parts.theta2_hat;
    let budget = cutoff / w - parts.c0;
    let outcome = if budget < 0.0 {
        IntervalOutcome::Empty {
            reason: EmptyIntervalReason::ConstantExceedsCutoff,
            level,
            w_hat: w,
        }
    } else {
        let n2 = x.class2.n();
        let (lower, upper) = if phat == 0.0 {
            // interior hypotheses are infeasible under the step ECDF; only
            // the boundary point itself survives
            (0.0, 0.0)
        } else if phat == 1.0 {
            (bisect_deviance(n2, phat, budget, true), 1.0)
        } else {
            (
                bisect_deviance(n2, phat, budget, true),
                bisect_deviance(n2, phat, budget, false),
            )
        };
        IntervalOutcome::Interval(ConfidenceInterval {
            lower,
            upper,
            level,
            method: "elqb-tcf2".to_string(),
            w_hat: w,
            point_estimate: phat,
        })
    };
    Ok(Tcf2IntervalResult {
        outcome,
        scale: Some(scale),
        t1_hat: parts.t1_hat,
        t2_hat: parts.t2_hat,
        c0: parts.c0,
        cutoff,
        theta1,
        theta3,
        seed,
    })
}

/// Bootstrap-calibrated interval for the VUS. The pivot is strictly convex
/// with minimum zero at the estimate, so exactly two roots bracket it.
pub fn vus_interval(
    x: &ThreeClassSample,
    alpha: f64,
    b: usize,
    seed: RngSeed,
    ties: bool,
) -> Result<VusIntervalResult> {
    validate_alpha(alpha)?;
    let level = 1.0 - alpha;
    let cutoff = chi2_quantile(1, level)?;
    let gamma_hat = if ties { vus_with_ties(x) } else { vus(x) };
    if gamma_hat <= 0.0 || gamma_hat >= 1.0 {
        return Err(Error::BoundaryEstimate {
            estimate: gamma_hat,
        });
    }
    let scale = estimate_scale_vus(x, b, seed, ties)?;
    let w = scale.w_hat;
    let n = x.total_n();
    let budget = cutoff / w;
    let lower = bisect_deviance(n, gamma_hat, budget, true);
    let upper = bisect_deviance(n, gamma_hat, budget, false);
    Ok(VusIntervalResult {
        interval: ConfidenceInterval {
            lower,
            upper,
            level,
            method: "elqb-vus".to_string(),
            w_hat: w,
            point_estimate: gamma_hat,
        },
        scale,
        cutoff,
        ties,
        seed,
    })
}

/// Mixture-calibrated region for (TCF2, TCF3) at fixed theta1 and t2. The
/// cutoff is the empirical (1 - alpha) quantile of w_hat U1 + U2 over 1000
/// Monte Carlo draws.
pub fn tcf23_region2d(
    x: &ThreeClassSample,
    theta1: f64,
    t2: f64,
    alpha: f64,
    b: usize,
    grid_n: usize,
    seed: RngSeed,
) -> Result<Region2D> {
    validate_alpha(alpha)?;
    validate_grid(grid_n)?;
    let parts = tcf23_pivot_parts(x, theta1, t2)?;
    let (theta2_hat, f3, c1) = match parts {
        Tcf23PivotParts::Infinite { t1_hat } => {
            if t1_hat >= t2 {
                return Err(Error::DegenerateThresholds { t1_hat, t2 });
            }
            let pair = ThresholdPair::new(t1_hat, t2).expect("t1_hat < t2");
            check_brackets_pair(x, &pair)?;
            unreachable!("infinite parts imply a degenerate threshold or failed bracket");
        }
        Tcf23PivotParts::Finite {
            theta2_hat, f3, c1, ..
        } => (theta2_hat, f3, c1),
    };
    let scale = estimate_scale_pair(x, theta1, t2, b, seed)?;
    let c_alpha = chi2_mixture_quantile(scale.w_hat, alpha, 1000, mixture_seed(seed))?;
    let grid = interior_grid(grid_n);
    let n2 = x.class2.n();
    let n3 = x.class3.n();
    let dev2: Vec<f64> = grid
        .iter()
        .map(|&v| {
            if theta2_hat == 0.0 {
                f64::INFINITY
            } else {
                binomial_deviance(n2, theta2_hat, v).value()
            }
        })
        .collect();
    let dev3: Vec<f64> = grid
        .iter()
        .map(|&v| binomial_deviance(n3, f3, 1.0 - v).value())
        .collect();
    let g = grid_n;
    let mut membership = vec![false; g * g];
    for (j, d2) in dev2.iter().enumerate() {
        let base = c1 + d2;
        if base > c_alpha {
            continue;
        }
        for (k, d3) in dev3.iter().enumerate() {
            membership[j * g + k] = base + d3 <= c_alpha;
        }
    }
    Ok(Region2D {
        theta2_grid: grid.clone(),
        theta3_grid: grid,
        membership,
        c_alpha_hat: c_alpha,
        w_hat: scale.w_hat,
        theta1_fixed: theta1,
        t2_fixed: t2,
        level: 1.0 - alpha,
        point_estimate: (theta2_hat, 1.0 - f3),
        scale,
        seed,
    })
}

/// Per-procedure sub-stream (splitmix64 step) so the mixture draw is
/// independent of the bootstrap replicates under the same user seed.
fn mixture_seed(seed: RngSeed) -> RngSeed {
    let mut z = seed.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    RngSeed(z ^ (z >> 31))
}

fn check_brackets_pair(x: &ThreeClassSample, t: &ThresholdPair) -> Result<()> {
    let in_range = |v: f64, s: &crate::sample::ClassSample| v >= s.min() && v < s.max();
    if !(in_range(t.t1(), &x.class2) || in_range(t.t2(), &x.class2)) {
        return Err(Error::DomainCondition(crate::error::Bracket::Class2));
    }
    if !in_range(t.t2(), &x.class3) {
        return Err(Error::DomainCondition(crate::error::Bracket::Class3));
    }
    Ok(())
}
