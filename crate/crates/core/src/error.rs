use thiserror::Error;

use crate::market_model::{Timestep, ValidationReport};

#[derive(Debug, Error)]
pub enum ArbError {
    /// Argument outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid loss fraction {0}: link would consume all power")]
    InvalidLoss(f64),

    /// A value violated a type invariant at construction.
    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("network validation failed:\n{0}")]
    Validation(ValidationReport),

    #[error("horizon mismatch for {entity}: missing timesteps {missing:?}")]
    Alignment {
        entity: String,
        missing: Vec<Timestep>,
    },

    #[error("capacity exceeded on link {link}: {requested} MW > {capacity} MW")]
    Capacity {
        link: String,
        requested: f64,
        capacity: f64,
    },

    #[error("unresolved reference: {0}")]
    Resolution(String),

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate row for timestep {timestep}, key '{key}'")]
    Duplicate {
        line: u64,
        timestep: Timestep,
        key: String,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("link {link}: {source}")]
    Link {
        link: String,
        #[source]
        source: Box<ArbError>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ArbError {
    pub(crate) fn for_link(self, link: &str) -> Self {
        ArbError::Link {
            link: link.to_owned(),
            source: Box::new(self),
        }
    }

    /// Innermost error, looking through link annotations.
    pub fn root(&self) -> &ArbError {
        match self {
            ArbError::Link { source, .. } => source.root(),
            e => e,
        }
    }
}
