//! Error types shared across the crate.

use thiserror::Error;

/// Rejection produced while constructing or mutating a network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid identifier `{0}`: identifiers start with a letter or underscore and contain only ASCII letters, digits, `_` or `-`")]
    InvalidId(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("duplicate support edge {src} -> {dst}")]
    DuplicateEdge { src: String, dst: String },
    #[error("self endorsement on `{0}`")]
    SelfEndorsement(String),
    #[error("unknown support edge {src} -> {dst}")]
    UnknownEdge { src: String, dst: String },
    #[error("duplicate meta endorsement by `{endorser}` on {src} -> {dst}")]
    DuplicateMeta {
        endorser: String,
        src: String,
        dst: String,
    },
    #[error("meta endorser `{endorser}` may not be an endpoint of {src} -> {dst}")]
    MetaEndorserIsEndpoint {
        endorser: String,
        src: String,
        dst: String,
    },
    #[error("{what} must be within [{min}, {max}], got {value}")]
    OutOfRange {
        what: &'static str,
        min: f64,
        max: f64,
        value: f64,
    },
    #[error("support strength must be nonzero and within [-1, 1], got {value}")]
    ZeroStrength { value: f64 },
    #[error("exclusion cluster for `{target}` needs at least two members")]
    ClusterTooSmall { target: String },
    #[error("cluster member `{member}` has no support edge to `{target}`")]
    MemberNotEndorser { member: String, target: String },
}

/// Failure raised while evaluating a network.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    /// An endorser or meta endorser has neither a computed value nor an intuition.
    #[error("no belief available for node `{0}`")]
    MissingValue(String),
    /// A node has no usable evidence and no intuition to fall back on.
    #[error("belief of node `{0}` is undefined: no usable endorsements and no intuition")]
    Undefined(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    /// An incremental pass was given a previous state that does not cover the network.
    #[error("previous state is stale; missing nodes: {}", .0.join(", "))]
    StaleState(Vec<String>),
}
