//! Nonparametric estimators of the volume under the ROC surface and its
//! M-class generalization. Counting is done in exact integer arithmetic over
//! sorted samples, so the fast paths agree with the defining sums exactly.

use crate::error::{Error, Result};
use crate::sample::{ClassSample, ThreeClassSample};

fn count_lt(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v < t)
}

fn count_le(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&v| v <= t)
}

/// Fraction of (y1, y2, y3) triples in strictly increasing order.
pub fn vus(x: &ThreeClassSample) -> f64 {
    let c1 = x.class1.values();
    let c3 = x.class3.values();
    let n3 = x.class3.n();
    let mut ordered: u64 = 0;
    for &y2 in x.class2.values() {
        let below = count_lt(c1, y2) as u64;
        let above = (n3 - count_le(c3, y2)) as u64;
        ordered += below * above;
    }
    let total = (x.class1.n() * x.class2.n() * n3) as f64;
    ordered as f64 / total
}

/// Tie-aware variant: single ties weigh 1/2 and triple ties 1/6. Equals
/// `vus` exactly when no value is shared across classes.
pub fn vus_with_ties(x: &ThreeClassSample) -> f64 {
    let c1 = x.class1.values();
    let c3 = x.class3.values();
    let n3 = x.class3.n();
    // accumulate six times the weighted count so everything stays integral
    let mut six_fold: u64 = 0;
    for &y2 in x.class2.values() {
        let a_lt = count_lt(c1, y2) as u64;
        let a_eq = (count_le(c1, y2) - count_lt(c1, y2)) as u64;
        let c_le = count_le(c3, y2);
        let c_eq = (c_le - count_lt(c3, y2)) as u64;
        let c_gt = (n3 - c_le) as u64;
        six_fold += 6 * a_lt * c_gt + 3 * a_eq * c_gt + 3 * a_lt * c_eq + a_eq * c_eq;
    }
    let total = 6.0 * (x.class1.n() * x.class2.n() * n3) as f64;
    six_fold as f64 / total
}

/// Fraction of M-tuples (one value per class) in strictly increasing order.
/// Reduces to `vus` at M = 3 and to the Mann-Whitney statistic at M = 2.
pub fn hum(classes: &[ClassSample]) -> Result<f64> {
    if classes.len() < 2 {
        return Err(Error::TooFewClasses(classes.len()));
    }
    // chains ending at each element, class by class, via prefix sums
    let mut chains: Vec<u128> = vec![1; classes[0].n()];
    for pair in classes.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        let mut prefix: Vec<u128> = Vec::with_capacity(prev.n() + 1);
        prefix.push(0);
        for (i, c) in chains.iter().enumerate() {
            let last = prefix[i];
            prefix.push(last + c);
        }
        chains = cur
            .values()
            .iter()
            .map(|&y| prefix[count_lt(prev.values(), y)])
            .collect();
    }
    let ordered: u128 = chains.iter().sum();
    let total: u128 = classes.iter().map(|c| c.n() as u128).product();
    Ok(ordered as f64 / total as f64)
}
