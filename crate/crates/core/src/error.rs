use thiserror::Error;

/// Which sample-range condition a threshold pair violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bracket {
    /// `t1` must lie in `[min(class1), max(class1))`.
    Class1,
    /// `t1` or `t2` must lie in `[min(class2), max(class2))`.
    Class2,
    /// `t2` must lie in `[min(class3), max(class3))`.
    Class3,
}

impl std::fmt::Display for Bracket {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Bracket::Class1 => write!(f, "class-1 range condition on t1"),
            Bracket::Class2 => write!(f, "class-2 range condition on t1 or t2"),
            Bracket::Class3 => write!(f, "class-3 range condition on t2"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("class sample must contain at least one value")]
    EmptySample,

    #[error("class sample contains a non-finite value: {0}")]
    NonFiniteValue(f64),

    #[error("{name} = {value} outside its valid range {range}")]
    InvalidProbability {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("thresholds must satisfy t1 < t2, got t1 = {t1}, t2 = {t2}")]
    InvalidThresholds { t1: f64, t2: f64 },

    #[error("threshold pair violates the {0}")]
    DomainCondition(Bracket),

    #[error("plug-in thresholds degenerate: t1_hat = {t1_hat} >= t2 = {t2}")]
    DegenerateThresholds { t1_hat: f64, t2: f64 },

    #[error("hypervolume estimator needs at least two classes, got {0}")]
    TooFewClasses(usize),

    #[error(
        "ordered resampling infeasible: {attempts} consecutive draws violated the mean ordering"
    )]
    OrderingInfeasible { attempts: usize },

    #[error("degenerate bootstrap scale: median pivot value {median} cannot calibrate w")]
    DegenerateScale { median: f64 },

    #[error("point estimate {estimate} sits on the boundary; the pivot is undefined there")]
    BoundaryEstimate { estimate: f64 },

    #[error("distribution parameters invalid: {0}")]
    InvalidDistribution(String),

    #[error(
        "scenario {scenario}: recomputed {field} = {recomputed} disagrees with stored {stored} \
         beyond tolerance {tolerance}"
    )]
    ConventionMismatch {
        scenario: u32,
        field: &'static str,
        recomputed: f64,
        stored: f64,
        tolerance: f64,
    },

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
