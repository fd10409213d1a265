use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("unknown tuple label `{0}`")]
    UnknownLabel(String),

    #[error("invalid secret edge ({0}, {1}): {2}")]
    InvalidEdge(String, String, &'static str),

    #[error("invalid database: {0}")]
    InvalidDatabase(String),

    #[error("malformed document: {0}")]
    Malformed(String),

    #[error("size limit exceeded: {what} has {size} elements but the cap is {cap}")]
    SizeLimit {
        what: String,
        size: String,
        cap: u128,
    },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("automorphism lifting requires an unconstrained permissible set")]
    UnsupportedLift,

    #[error("database {0} is not in the permissible set")]
    NotPermissible(String),
}

impl Error {
    /// True for errors caused by a configured resource cap.
    pub fn is_size_limit(&self) -> bool {
        matches!(self, Error::SizeLimit { .. })
    }

    pub(crate) fn size_limit(what: impl Into<String>, size: impl ToString, cap: u128) -> Self {
        Error::SizeLimit {
            what: what.into(),
            size: size.to_string(),
            cap,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
