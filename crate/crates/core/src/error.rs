use thiserror::Error;

use crate::netlist::Issue;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("netlist is not well formed: {}", format_issues(.0))]
    Invalid(Vec<Issue>),

    #[error("combinational cycle through gate `{gate}`")]
    Cycle { gate: String },

    #[error("cannot instantiate: {0}")]
    Instantiate(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("stimulus is missing primary input `{0}`")]
    MissingInput(String),

    #[error("unknown net `{0}`")]
    UnknownNet(String),

    #[error(
        "{count} primary inputs exceed the exhaustive enumeration limit of {limit}; \
         use sampled evaluation instead"
    )]
    TooManyInputs { count: usize, limit: usize },

    #[error("structural check failed: {0}")]
    Structure(String),

    #[error("fixture error: {0}")]
    Fixture(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn format_issues(issues: &[Issue]) -> String {
    issues
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
