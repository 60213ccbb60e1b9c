//! Long-format CSV ingestion: one row per subject, `class,value`, with the
//! class label in {1, 2, 3}.

use std::fs;
use std::path::Path;

use roc3el::{ClassSample, ThreeClassSample};
use serde::Serialize;

use crate::output::{CliError, ErrorCategory};

/// Per-class counts and the mean-ordering check, echoed into every output.
#[derive(Debug, Clone, Serialize)]
pub struct DatasetSummary {
    pub n: [usize; 3],
    pub means_ordered: bool,
}

pub fn load_dataset(path: &Path) -> Result<(ThreeClassSample, DatasetSummary), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError {
        category: ErrorCategory::Input,
        message: format!("cannot read {}: {e}", path.display()),
        context: None,
    })?;
    parse_dataset(&text).map_err(|mut e| {
        e.message = format!("{}: {}", path.display(), e.message);
        e
    })
}

pub fn parse_dataset(text: &str) -> Result<(ThreeClassSample, DatasetSummary), CliError> {
    let mut classes: [Vec<f64>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let bad_row = |line_no: usize, what: String| CliError {
        category: ErrorCategory::Input,
        message: format!("line {line_no}: {what}"),
        context: None,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 && line.eq_ignore_ascii_case("class,value") {
            continue;
        }
        let (label, value) = line
            .split_once(',')
            .ok_or_else(|| bad_row(line_no, format!("expected 'class,value', got {line:?}")))?;
        let label: u8 = label
            .trim()
            .parse()
            .map_err(|_| bad_row(line_no, format!("unparseable class label {label:?}")))?;
        if !(1..=3).contains(&label) {
            return Err(bad_row(
                line_no,
                format!("class label {label} outside {{1, 2, 3}}"),
            ));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| bad_row(line_no, format!("unparseable value {value:?}")))?;
        if !value.is_finite() {
            return Err(bad_row(line_no, format!("non-finite value {value}")));
        }
        classes[(label - 1) as usize].push(value);
    }
    for (i, c) in classes.iter().enumerate() {
        if c.is_empty() {
            return Err(CliError {
                category: ErrorCategory::Input,
                message: format!("no rows for class {}", i + 1),
                context: None,
            });
        }
    }
    let [c1, c2, c3] = classes;
    let sample = ThreeClassSample::new(
        ClassSample::new(c1).expect("validated rows"),
        ClassSample::new(c2).expect("validated rows"),
        ClassSample::new(c3).expect("validated rows"),
    );
    let summary = DatasetSummary {
        n: [sample.class1.n(), sample.class2.n(), sample.class3.n()],
        means_ordered: sample.means_ordered(),
    };
    Ok((sample, summary))
}
