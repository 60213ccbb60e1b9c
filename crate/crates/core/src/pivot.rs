//! Empirical log-likelihood ratio statistics for three-class ROC inference.
//!
//! Each statistic is a sum of binomial deviances built from empirical class
//! fractions, with explicit range conditions on the thresholds; outside those
//! conditions the statistic is +infinity.

use crate::ecdf::EcdfMode;
use crate::error::{Bracket, Error, Result};
use crate::sample::{ClassSample, TcfTriple, ThreeClassSample, ThresholdPair};

/// Tolerance for clamping negative rounding residue in deviances.
const NEG_CLAMP: f64 = 1e-12;

/// Nonnegative extended real returned by every pivot.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PivotValue(f64);

impl PivotValue {
    pub const INFINITE: PivotValue = PivotValue(f64::INFINITY);

    /// Wraps a raw statistic, clamping tiny negative rounding residue to 0.
    pub fn new(raw: f64) -> Self {
        debug_assert!(!raw.is_nan());
        debug_assert!(raw > -NEG_CLAMP);
        if raw < 0.0 && raw > -NEG_CLAMP {
            PivotValue(0.0)
        } else {
            PivotValue(raw)
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }
}

impl std::fmt::Display for PivotValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn xlogx_ratio(p: f64, q: f64) -> f64 {
    // p * ln(p / q) with the 0 * log 0 = 0 convention
    if p == 0.0 {
        0.0
    } else {
        p * (p / q).ln()
    }
}

/// Binomial empirical-likelihood deviance
/// 2n [ phat ln(phat/theta) + (1-phat) ln((1-phat)/(1-theta)) ].
///
/// Boundary hypotheses theta in {0, 1} give 0 when phat agrees exactly and
/// +infinity otherwise.
pub fn binomial_deviance(n: usize, phat: f64, theta: f64) -> PivotValue {
    debug_assert!(n >= 1);
    debug_assert!((0.0..=1.0).contains(&phat));
    debug_assert!((0.0..=1.0).contains(&theta));
    if theta == 0.0 || theta == 1.0 {
        return if phat == theta {
            PivotValue(0.0)
        } else {
            PivotValue::INFINITE
        };
    }
    let raw = 2.0 * n as f64 * (xlogx_ratio(phat, theta) + xlogx_ratio(1.0 - phat, 1.0 - theta));
    PivotValue::new(raw)
}

fn in_half_open(t: f64, s: &ClassSample) -> bool {
    t >= s.min() && t < s.max()
}

fn class2_bracket_ok(t1: f64, t2: f64, class2: &ClassSample) -> bool {
    in_half_open(t1, class2) || in_half_open(t2, class2)
}

/// Shared three-deviance core. `phat_mid` is the class-2 window fraction.
/// Under step ECDFs a zero window fraction makes interior theta2 hypotheses
/// infeasible for the multinomial weights, hence +infinity.
fn three_part_sum(
    x: &ThreeClassSample,
    f1: f64,
    phat_mid: f64,
    f3: f64,
    theta: &TcfTriple,
    mode: EcdfMode,
) -> PivotValue {
    if mode == EcdfMode::Step && phat_mid == 0.0 && theta.theta2 > 0.0 && theta.theta2 < 1.0 {
        return PivotValue::INFINITE;
    }
    let d1 = binomial_deviance(x.class1.n(), f1, theta.theta1);
    let d2 = binomial_deviance(x.class2.n(), phat_mid, theta.theta2);
    let d3 = binomial_deviance(x.class3.n(), f3, 1.0 - theta.theta3);
    PivotValue::new(d1.value() + d2.value() + d3.value())
}

/// Empirical log-likelihood ratio for a (TCF1, TCF2, TCF3) triple at a fixed
/// threshold pair. Range conditions: t1 in [min1, max1), t1 or t2 in
/// [min2, max2), t2 in [min3, max3); otherwise +infinity.
pub fn tcf_triple_pivot(
    x: &ThreeClassSample,
    t: &ThresholdPair,
    theta: &TcfTriple,
    mode: EcdfMode,
) -> PivotValue {
    let (t1, t2) = (t.t1(), t.t2());
    if !in_half_open(t1, &x.class1)
        || !class2_bracket_ok(t1, t2, &x.class2)
        || !in_half_open(t2, &x.class3)
    {
        return PivotValue::INFINITE;
    }
    let f1 = x.class1.ecdf_with(t1, mode);
    let phat = x.class2.mass_between(t, mode);
    let f3 = x.class3.ecdf_with(t2, mode);
    three_part_sum(x, f1, phat, f3, theta, mode)
}

/// Reports which range condition a threshold pair violates, if any.
pub fn check_brackets(x: &ThreeClassSample, t: &ThresholdPair) -> Result<()> {
    if !in_half_open(t.t1(), &x.class1) {
        return Err(Error::DomainCondition(Bracket::Class1));
    }
    if !class2_bracket_ok(t.t1(), t.t2(), &x.class2) {
        return Err(Error::DomainCondition(Bracket::Class2));
    }
    if !in_half_open(t.t2(), &x.class3) {
        return Err(Error::DomainCondition(Bracket::Class3));
    }
    Ok(())
}

fn validate_interior(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(Error::InvalidProbability {
            name,
            value: v,
            range: "(0, 1)",
        });
    }
    Ok(())
}

fn validate_closed(name: &'static str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidProbability {
            name,
            value: v,
            range: "[0, 1]",
        });
    }
    Ok(())
}

/// Decomposition of the plug-in TCF2 statistic: the statistic as a function
/// of theta2 equals `c0 + binomial_deviance(n2, theta2_hat, theta2)` unless
/// the thresholds degenerate or the class-2 range condition fails, in which
/// case it is +infinity for every theta2.
#[derive(Debug, Clone, Copy)]
pub struct Tcf2PivotParts {
    pub t1_hat: f64,
    pub t2_hat: f64,
    /// Empirical class-2 window fraction at the plug-in thresholds.
    pub theta2_hat: f64,
    /// Class-1 plus class-3 deviances, constant in theta2.
    pub c0: f64,
    /// Plug-in thresholds collapsed (t1_hat >= t2_hat).
    pub degenerate: bool,
    /// Neither plug-in threshold fell in the class-2 half-open range.
    pub bracket_failed: bool,
}

impl Tcf2PivotParts {
    pub fn finite(&self) -> bool {
        !self.degenerate && !self.bracket_failed
    }
}

/// Computes the theta2-independent pieces of the plug-in TCF2 statistic for
/// fixed theta1 and theta3. Thresholds are estimated by the ECDF inverse of
/// class 1 and class 3 in the selected mode: the type-1 quantile under the
/// step ECDF, the piecewise-linear inverse under the continuous one (which
/// makes the class-1 and class-3 deviances vanish, as they do asymptotically
/// for the data-level statistic).
pub fn tcf2_pivot_parts(
    x: &ThreeClassSample,
    theta1: f64,
    theta3: f64,
    mode: EcdfMode,
) -> Result<Tcf2PivotParts> {
    validate_interior("theta1", theta1)?;
    validate_interior("theta3", theta3)?;
    let t1_hat = x.class1.quantile_with(theta1, mode)?;
    let t2_hat = x.class3.quantile_with(1.0 - theta3, mode)?;
    if t1_hat >= t2_hat {
        return Ok(Tcf2PivotParts {
            t1_hat,
            t2_hat,
            theta2_hat: f64::NAN,
            c0: f64::INFINITY,
            degenerate: true,
            bracket_failed: false,
        });
    }
    if !class2_bracket_ok(t1_hat, t2_hat, &x.class2) {
        return Ok(Tcf2PivotParts {
            t1_hat,
            t2_hat,
            theta2_hat: f64::NAN,
            c0: f64::INFINITY,
            degenerate: false,
            bracket_failed: true,
        });
    }
    let pair = ThresholdPair::new(t1_hat, t2_hat).expect("checked t1_hat < t2_hat");
    let f1 = x.class1.ecdf_with(t1_hat, mode);
    let f3 = x.class3.ecdf_with(t2_hat, mode);
    let theta2_hat = x.class2.mass_between(&pair, mode);
    let c0 = binomial_deviance(x.class1.n(), f1, theta1).value()
        + binomial_deviance(x.class3.n(), f3, 1.0 - theta3).value();
    Ok(Tcf2PivotParts {
        t1_hat,
        t2_hat,
        theta2_hat,
        c0,
        degenerate: false,
        bracket_failed: false,
    })
}

/// Plug-in statistic for TCF2 at fixed theta1 and theta3: thresholds are
/// estimated from classes 1 and 3, then the three-deviance form is evaluated
/// at them.
pub fn tcf2_plugin_pivot(
    x: &ThreeClassSample,
    theta1: f64,
    theta2: f64,
    theta3: f64,
    mode: EcdfMode,
) -> Result<PivotValue> {
    validate_closed("theta2", theta2)?;
    let parts = tcf2_pivot_parts(x, theta1, theta3, mode)?;
    if !parts.finite() {
        return Ok(PivotValue::INFINITE);
    }
    if mode == EcdfMode::Step && parts.theta2_hat == 0.0 && theta2 > 0.0 && theta2 < 1.0 {
        return Ok(PivotValue::INFINITE);
    }
    let d2 = binomial_deviance(x.class2.n(), parts.theta2_hat, theta2);
    Ok(PivotValue::new(parts.c0 + d2.value()))
}

/// Likelihood-ratio pivot for the VUS: 2n KL divergence between the estimate
/// and the hypothesized value. Undefined estimates on the boundary yield
/// +infinity for every interior hypothesis.
pub fn vus_pivot(gamma_hat: f64, n: usize, gamma: f64) -> Result<PivotValue> {
    validate_interior("gamma", gamma)?;
    validate_closed("gamma_hat", gamma_hat)?;
    if gamma_hat == 0.0 || gamma_hat == 1.0 {
        return Ok(PivotValue::INFINITE);
    }
    let raw = 2.0
        * n as f64
        * (xlogx_ratio(gamma_hat, gamma) + xlogx_ratio(1.0 - gamma_hat, 1.0 - gamma));
    Ok(PivotValue::new(raw))
}

/// Plug-in statistic for the pair (TCF2, TCF3) at fixed theta1 and a fixed
/// second threshold t2. Only t1 is estimated, from class 1. Range conditions:
/// t1_hat or t2 in [min2, max2) and t2 in [min3, max3).
pub fn tcf23_plugin_pivot(
    x: &ThreeClassSample,
    theta1: f64,
    theta2: f64,
    theta3: f64,
    t2: f64,
) -> Result<PivotValue> {
    let parts = tcf23_pivot_parts(x, theta1, t2)?;
    validate_closed("theta2", theta2)?;
    validate_closed("theta3", theta3)?;
    let theta = TcfTriple {
        theta1,
        theta2,
        theta3,
    };
    match parts {
        Tcf23PivotParts::Infinite { .. } => Ok(PivotValue::INFINITE),
        Tcf23PivotParts::Finite {
            f1, theta2_hat, f3, ..
        } => Ok(three_part_sum(
            x,
            f1,
            theta2_hat,
            f3,
            &theta,
            EcdfMode::Step,
        )),
    }
}

/// Pieces of the (TCF2, TCF3) plug-in statistic that do not depend on the
/// hypothesized pair.
#[derive(Debug, Clone, Copy)]
pub enum Tcf23PivotParts {
    /// The statistic is +infinity everywhere (degenerate threshold or a
    /// failed range condition).
    Infinite { t1_hat: f64 },
    Finite {
        t1_hat: f64,
        f1: f64,
        /// Class-2 window fraction on (t1_hat, t2].
        theta2_hat: f64,
        /// Class-3 ECDF at t2; the empirical TCF3 is 1 - f3.
        f3: f64,
        /// Class-1 deviance at theta1, constant over the grid.
        c1: f64,
    },
}

pub fn tcf23_pivot_parts(x: &ThreeClassSample, theta1: f64, t2: f64) -> Result<Tcf23PivotParts> {
    validate_interior("theta1", theta1)?;
    if !t2.is_finite() {
        return Err(Error::InvalidThresholds { t1: f64::NAN, t2 });
    }
    let t1_hat = x.class1.quantile(theta1)?;
    if t1_hat >= t2 || !class2_bracket_ok(t1_hat, t2, &x.class2) || !in_half_open(t2, &x.class3) {
        return Ok(Tcf23PivotParts::Infinite { t1_hat });
    }
    let pair = ThresholdPair::new(t1_hat, t2).expect("checked t1_hat < t2");
    let f1 = x.class1.ecdf(t1_hat);
    let theta2_hat = x.class2.mass_between(&pair, EcdfMode::Step);
    let f3 = x.class3.ecdf(t2);
    let c1 = binomial_deviance(x.class1.n(), f1, theta1).value();
    Ok(Tcf23PivotParts::Finite {
        t1_hat,
        f1,
        theta2_hat,
        f3,
        c1,
    })
}

/// Pivot at the symmetric point, where all three class fractions share one
/// hypothesized value.
pub fn symmetric_point_pivot(
    x: &ThreeClassSample,
    theta: f64,
    t: &ThresholdPair,
) -> Result<PivotValue> {
    validate_interior("theta", theta)?;
    let triple = TcfTriple::new(theta, theta, theta)?;
    Ok(tcf_triple_pivot(x, t, &triple, EcdfMode::Step))
}
