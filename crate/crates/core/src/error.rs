use thiserror::Error;

use crate::sim::Timeline;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Invalid code construction parameters (e.g. a non power-of-2 worker count).
    #[error("construction error: {0}")]
    Construction(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The available outputs do not determine the data.
    #[error("pattern is not decodable: {0}")]
    NotDecodable(String),

    #[error("sub-code {index} failed: {source}")]
    Subcode {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    /// Numerically singular linear system in the real-valued MDS decoder.
    #[error("ill-conditioned system: {0}")]
    Conditioning(String),

    #[error("block fetch failed: {0}")]
    Fetch(String),

    #[error("gradient descent diverged: {0}")]
    Divergence(String),

    /// The run ended without ever reaching a decodable set. Carries whatever
    /// timeline was recorded up to that point.
    #[error("run never became decodable ({collected} of {n_workers} outputs collected)")]
    Timeout {
        collected: usize,
        n_workers: usize,
        timeline: Box<Timeline>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad caller input rather than by a failed run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Construction(_) | Error::Validation(_) | Error::Shape(_) | Error::Json(_)
        )
    }
}
