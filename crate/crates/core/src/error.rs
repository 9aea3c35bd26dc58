use thiserror::Error;

/// Errors raised anywhere in the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("numeric degeneracy: {0}")]
    NumericDegeneracy(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unsupported construct `{construct}` at line {line}")]
    UnsupportedConstruct { line: usize, construct: String },

    #[error("circuit validation failed: {}", format_issues(.0))]
    Validation(Vec<crate::circuit::ValidationIssue>),

    #[error("run {run_index} failed: {source}")]
    RunFailed {
        run_index: u64,
        #[source]
        source: Box<Error>,
    },
}

fn format_issues(issues: &[crate::circuit::ValidationIssue]) -> String {
    issues
        .iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
