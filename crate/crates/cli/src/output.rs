//! Result envelopes and the structured error channel.
//!
//! Every numeric value is printed in shortest-round-trip form, so emitted
//! files are byte-stable across runs and re-parse to identical values.

use roc3el::error::Error;
use serde::Serialize;

/// Machine-readable error category; doubles as the process exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Input,
    Validation,
    DomainCondition,
    DegenerateBootstrap,
    EmptyInterval,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Input => 2,
            ErrorCategory::Validation => 3,
            ErrorCategory::DomainCondition => 4,
            ErrorCategory::DegenerateBootstrap => 5,
            ErrorCategory::EmptyInterval => 6,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CliError {
    pub category: ErrorCategory,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub context: Option<serde_json::Value>,
}

impl CliError {
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            category: ErrorCategory::Validation,
            message: message.into(),
            context: None,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let category = match &e {
            Error::EmptySample | Error::NonFiniteValue(_) => ErrorCategory::Input,
            Error::InvalidProbability { .. }
            | Error::InvalidThresholds { .. }
            | Error::TooFewClasses(_)
            | Error::InvalidDistribution(_)
            | Error::ConventionMismatch { .. }
            | Error::InvalidPlan(_) => ErrorCategory::Validation,
            Error::DomainCondition(_) | Error::DegenerateThresholds { .. } => {
                ErrorCategory::DomainCondition
            }
            Error::OrderingInfeasible { .. }
            | Error::DegenerateScale { .. }
            | Error::BoundaryEstimate { .. } => ErrorCategory::DegenerateBootstrap,
        };
        CliError {
            category,
            message: e.to_string(),
            context: None,
        }
    }
}

/// stderr line for failures: {"error": {...}}.
pub fn render_error(e: &CliError) -> String {
    #[derive(Serialize)]
    struct Wrapper<'a> {
        error: &'a CliError,
    }
    serde_json::to_string(&Wrapper { error: e }).expect("serializable error")
}

/// stdout envelope for successes: command echo, effective config, dataset
/// summary when applicable, and the result.
pub fn envelope<C: Serialize, R: Serialize>(
    command: &str,
    config: &C,
    dataset: Option<&crate::dataset::DatasetSummary>,
    result: &R,
) -> String {
    #[derive(Serialize)]
    struct Envelope<'a, C, R> {
        command: &'a str,
        config: &'a C,
        #[serde(skip_serializing_if = "Option::is_none")]
        dataset: Option<&'a crate::dataset::DatasetSummary>,
        result: &'a R,
    }
    let mut s = serde_json::to_string_pretty(&Envelope {
        command,
        config,
        dataset,
        result,
    })
    .expect("serializable envelope");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use roc3el::error::Error;

    #[test]
    fn error_categories_map_to_exit_codes() {
        assert_eq!(ErrorCategory::Input.exit_code(), 2);
        assert_eq!(ErrorCategory::EmptyInterval.exit_code(), 6);
        let e: CliError = Error::OrderingInfeasible { attempts: 1000 }.into();
        assert_eq!(e.category, ErrorCategory::DegenerateBootstrap);
        let e: CliError = Error::DomainCondition(roc3el::Bracket::Class2).into();
        assert_eq!(e.category, ErrorCategory::DomainCondition);
        let rendered = render_error(&e);
        assert!(rendered.contains("\"category\":\"domain_condition\""));
    }
}
