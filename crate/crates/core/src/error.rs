use thiserror::Error;

use crate::graph::{EdgeId, VertexId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
    #[error("unknown edge id {0}")]
    UnknownEdge(EdgeId),
    #[error("point off graph: {0}")]
    OffGraph(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("path enumeration exceeded cap of {0}")]
    CapExceeded(usize),
    #[error("not a TLG*: {0}")]
    NotStar(String),
    #[error("tower replay failed: {0}")]
    Replay(String),
    #[error("inconsistent family: {0}")]
    Inconsistent(String),
    #[error("singular covariance: {0}")]
    Singular(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
