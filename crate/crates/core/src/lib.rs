//! Empirical-likelihood interval and region estimation for three-class ROC
//! analysis: confidence regions for (TCF1, TCF2, TCF3) triplets, intervals
//! for TCF2 and the volume under the ROC surface, regions for (TCF2, TCF3),
//! and a Monte Carlo harness for coverage experiments.

pub mod bootstrap;
pub mod dist;
pub mod ecdf;
pub mod error;
pub mod harness;
pub mod pivot;
pub mod regions;
pub mod sample;
pub mod scenarios;
pub mod special;
pub mod vus;

pub use ecdf::EcdfMode;
pub use error::{Bracket, Error, Result};
pub use pivot::{binomial_deviance, PivotValue};
pub use sample::{ClassSample, TcfTriple, ThreeClassSample, ThresholdPair};
pub use special::chi2_quantile;
