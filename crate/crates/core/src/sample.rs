//! Sample containers and the small value types shared across the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Test results for one class, sorted ascending on construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSample {
    values: Vec<f64>,
}

impl ClassSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if let Some(&bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(bad));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(Self { values })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Sorted view of the sample.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values[0]
    }

    pub fn max(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// The three observed class samples every procedure operates on.
///
/// Mean ordering across classes is deliberately not an invariant here; the
/// bootstrap applies it as a resampling filter instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreeClassSample {
    pub class1: ClassSample,
    pub class2: ClassSample,
    pub class3: ClassSample,
}

impl ThreeClassSample {
    pub fn new(class1: ClassSample, class2: ClassSample, class3: ClassSample) -> Self {
        Self {
            class1,
            class2,
            class3,
        }
    }

    pub fn from_vecs(c1: Vec<f64>, c2: Vec<f64>, c3: Vec<f64>) -> Result<Self> {
        Ok(Self::new(
            ClassSample::new(c1)?,
            ClassSample::new(c2)?,
            ClassSample::new(c3)?,
        ))
    }

    /// Total sample size n1 + n2 + n3.
    pub fn total_n(&self) -> usize {
        self.class1.n() + self.class2.n() + self.class3.n()
    }

    /// True when the class sample means are strictly increasing.
    pub fn means_ordered(&self) -> bool {
        let (m1, m2, m3) = (self.class1.mean(), self.class2.mean(), self.class3.mean());
        m1 < m2 && m2 < m3
    }
}

/// A hypothesized (TCF1, TCF2, TCF3) point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TcfTriple {
    pub theta1: f64,
    pub theta2: f64,
    pub theta3: f64,
}

impl TcfTriple {
    pub fn new(theta1: f64, theta2: f64, theta3: f64) -> Result<Self> {
        for (name, v) in [("theta1", theta1), ("theta2", theta2), ("theta3", theta3)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidProbability {
                    name,
                    value: v,
                    range: "[0, 1]",
                });
            }
        }
        Ok(Self {
            theta1,
            theta2,
            theta3,
        })
    }
}

/// An ordered threshold pair t1 < t2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPair {
    t1: f64,
    t2: f64,
}

impl ThresholdPair {
    pub fn new(t1: f64, t2: f64) -> Result<Self> {
        if !(t1.is_finite() && t2.is_finite()) || t1 >= t2 {
            return Err(Error::InvalidThresholds { t1, t2 });
        }
        Ok(Self { t1, t2 })
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }
}
