//! Empirical distribution functions: the right-continuous step version, a
//! piecewise-linear continuous version, and the type-1 quantile.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::{ClassSample, ThresholdPair};

/// Selects the step ECDF or its piecewise-linear continuous version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EcdfMode {
    #[default]
    Step,
    Smoothed,
}

impl ClassSample {
    /// Step ECDF: proportion of values <= t.
    pub fn ecdf(&self, t: f64) -> f64 {
        let count = self.values().partition_point(|&v| v <= t);
        count as f64 / self.n() as f64
    }

    /// Continuous ECDF: linear interpolation through the points
    /// (distinct order statistic, cumulative fraction). Zero below the
    /// minimum, one at and above the maximum, and it agrees with the step
    /// ECDF at every order statistic. Duplicated values collapse to a single
    /// knot at the larger cumulative fraction.
    pub fn ecdf_smoothed(&self, t: f64) -> f64 {
        let values = self.values();
        let n = self.n() as f64;
        if t < values[0] {
            return 0.0;
        }
        if t >= *values.last().unwrap() {
            return 1.0;
        }
        // index of the first value strictly above t
        let hi = values.partition_point(|&v| v <= t);
        // hi >= 1 here because t >= values[0]
        let v_lo = values[hi - 1];
        let v_hi = values[hi];
        let f_lo = hi as f64 / n;
        if t == v_lo {
            return f_lo;
        }
        // cumulative fraction at the collapsed knot for v_hi
        let hi_end = values.partition_point(|&v| v <= v_hi);
        let f_hi = hi_end as f64 / n;
        f_lo + (f_hi - f_lo) * (t - v_lo) / (v_hi - v_lo)
    }

    pub fn ecdf_with(&self, t: f64, mode: EcdfMode) -> f64 {
        match mode {
            EcdfMode::Step => self.ecdf(t),
            EcdfMode::Smoothed => self.ecdf_smoothed(t),
        }
    }

    /// Type-1 empirical quantile: the smallest order statistic y_(i) with
    /// i/n >= p. Defined for p in (0, 1].
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability {
                name: "p",
                value: p,
                range: "(0, 1]",
            });
        }
        let n = self.n();
        // smallest i in 1..=n with i/n >= p, compared in f64 so that the
        // quantile is the exact inverse of ecdf() values
        let nf = n as f64;
        let mut lo = 1usize;
        let mut hi = n;
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if mid as f64 / nf >= p {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        Ok(self.values()[lo - 1])
    }

    /// Inverse of the continuous ECDF: the smallest t with a continuous
    /// cumulative fraction of at least p. Linear between knots; every p at
    /// or below the first knot fraction maps to the minimum.
    pub fn quantile_smoothed(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidProbability {
                name: "p",
                value: p,
                range: "(0, 1]",
            });
        }
        let values = self.values();
        let n = self.n() as f64;
        // walk distinct knots (v_j, count_j / n)
        let mut prev_v = values[0];
        let mut prev_f = values.partition_point(|&v| v <= prev_v) as f64 / n;
        if p <= prev_f {
            return Ok(prev_v);
        }
        let mut idx = values.partition_point(|&v| v <= prev_v);
        while idx < values.len() {
            let v = values[idx];
            let end = values.partition_point(|&x| x <= v);
            let f = end as f64 / n;
            if p <= f {
                return Ok(prev_v + (v - prev_v) * (p - prev_f) / (f - prev_f));
            }
            prev_v = v;
            prev_f = f;
            idx = end;
        }
        Ok(*values.last().unwrap())
    }

    pub fn quantile_with(&self, p: f64, mode: EcdfMode) -> Result<f64> {
        match mode {
            EcdfMode::Step => self.quantile(p),
            EcdfMode::Smoothed => self.quantile_smoothed(p),
        }
    }

    /// Proportion of this sample falling in the window (t1, t2].
    pub fn mass_between(&self, t: &ThresholdPair, mode: EcdfMode) -> f64 {
        self.ecdf_with(t.t2(), mode) - self.ecdf_with(t.t1(), mode)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(values: &[f64]) -> ClassSample {
        ClassSample::new(values.to_vec()).unwrap()
    }

    #[test]
    fn step_ecdf_counts() {
        let x = s(&[1.0, 2.0, 3.0]);
        assert_eq!(x.ecdf(2.0), 2.0 / 3.0);
        assert_eq!(x.ecdf(0.5), 0.0);
        assert_eq!(x.ecdf(3.0), 1.0);
        assert_eq!(x.ecdf(10.0), 1.0);
    }

    #[test]
    fn smoothed_ecdf_interpolates() {
        let x = s(&[0.0, 1.0]);
        assert_eq!(x.ecdf_smoothed(0.5), 0.75);
        assert_eq!(x.ecdf_smoothed(1.0), 1.0);
        assert_eq!(x.ecdf_smoothed(-0.1), 0.0);
        let y = s(&[1.0, 2.0, 3.0]);
        assert_eq!(y.ecdf_smoothed(1.5), 0.5);
    }

    #[test]
    fn smoothed_collapses_duplicate_knots() {
        // duplicates at 1.0 collapse to a knot at 2/3
        let x = s(&[1.0, 1.0, 2.0]);
        assert_eq!(x.ecdf_smoothed(1.0), 2.0 / 3.0);
        assert_eq!(x.ecdf_smoothed(1.5), 2.0 / 3.0 + (1.0 / 3.0) * 0.5);
        assert_eq!(x.ecdf_smoothed(2.0), 1.0);
    }

    #[test]
    fn quantile_type1() {
        let x = s(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(x.quantile(0.5).unwrap(), 2.0);
        assert_eq!(x.quantile(1.0).unwrap(), 4.0);
        assert_eq!(x.quantile(0.51).unwrap(), 3.0);
        assert_eq!(x.quantile(0.25).unwrap(), 1.0);
        assert!(x.quantile(0.0).is_err());
        assert!(x.quantile(1.5).is_err());
    }

    #[test]
    fn quantile_avoids_float_ceiling_artifacts() {
        // 30 * 0.2 rounds above 6 in f64; the i/n >= p formulation must
        // still return the 6th order statistic
        let x = ClassSample::new((1..=30).map(f64::from).collect()).unwrap();
        assert_eq!(x.quantile(0.2).unwrap(), 6.0);
    }

    #[test]
    fn window_mass() {
        let x = s(&[1.0, 2.0, 3.0]);
        let t = ThresholdPair::new(1.0, 3.0).unwrap();
        assert!((x.mass_between(&t, EcdfMode::Step) - 2.0 / 3.0).abs() < 1e-15);
        let empty = ThresholdPair::new(5.0, 6.0).unwrap();
        assert_eq!(x.mass_between(&empty, EcdfMode::Step), 0.0);
        let y = s(&[0.5, 1.5, 2.5, 3.5]);
        let t = ThresholdPair::new(1.0, 3.0).unwrap();
        assert_eq!(y.mass_between(&t, EcdfMode::Step), 0.5);
    }

    #[test]
    fn large_sample_ecdf_near_normal_cdf() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let x = ClassSample::new(draws).unwrap();
        assert!((x.ecdf(0.0) - 0.5).abs() < 0.05);
    }

    proptest! {
        #[test]
        fn ecdf_monotone_and_consistent(mut vals in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            vals.iter_mut().for_each(|v| *v = (*v * 8.0).round() / 8.0);
            let x = ClassSample::new(vals).unwrap();
            let mut prev_step = 0.0;
            let mut prev_smooth = 0.0;
            let mut t = x.min() - 1.0;
            while t <= x.max() + 1.0 {
                let fs = x.ecdf(t);
                let fc = x.ecdf_smoothed(t);
                prop_assert!(fs + 1e-12 >= prev_step);
                prop_assert!(fc + 1e-12 >= prev_smooth);
                prop_assert!((0.0..=1.0).contains(&fs));
                prop_assert!((0.0..=1.0).contains(&fc));
                // step values live on the k/n lattice
                let k = (fs * x.n() as f64).round();
                prop_assert!((fs - k / x.n() as f64).abs() < 1e-12);
                prev_step = fs;
                prev_smooth = fc;
                t += 0.37;
            }
            // both versions agree at every order statistic
            for &v in x.values() {
                prop_assert_eq!(x.ecdf(v), x.ecdf_smoothed(v));
            }
        }

        #[test]
        fn smoothed_quantile_inverts_smoothed_ecdf(mut vals in proptest::collection::vec(-50.0f64..50.0, 1..40)) {
            vals.iter_mut().for_each(|v| *v = (*v * 4.0).round() / 4.0);
            let x = ClassSample::new(vals).unwrap();
            let f_min = x.ecdf(x.min());
            for i in 1..=40 {
                let p = i as f64 / 40.0;
                let q = x.quantile_smoothed(p).unwrap();
                if p >= f_min {
                    prop_assert!((x.ecdf_smoothed(q) - p).abs() < 1e-9, "p={p} q={q}");
                } else {
                    prop_assert_eq!(q, x.min());
                }
            }
        }

        #[test]
        fn quantile_round_trip_on_distinct_values(k in 1usize..30) {
            let vals: Vec<f64> = (0..k).map(|i| i as f64 * 1.5 - 3.0).collect();
            let x = ClassSample::new(vals).unwrap();
            for &v in x.values() {
                let p = x.ecdf(v);
                prop_assert_eq!(x.quantile(p).unwrap(), v);
            }
        }
    }
}
