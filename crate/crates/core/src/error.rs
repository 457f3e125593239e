use thiserror::Error;

use crate::state::{PhotonId, QubusId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("registry mismatch: {0}")]
    RegistryMismatch(String),

    #[error("unknown photon {0}")]
    UnknownPhoton(PhotonId),

    #[error("duplicate photon id {0}")]
    DuplicatePhoton(PhotonId),

    #[error("path `{path}` is not registered for photon {photon}")]
    UnregisteredPath { photon: PhotonId, path: String },

    #[error("path `{path}` already belongs to photon {owner}")]
    PathCollision { path: String, owner: PhotonId },

    #[error("unknown qubus mode {0}")]
    UnknownQubus(QubusId),

    #[error("duplicate qubus mode {0}")]
    DuplicateQubus(QubusId),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("impossible outcome (probability {0:e})")]
    ImpossibleOutcome(f64),

    #[error("Fock cutoff {cutoff} too small: tail mass {tail:e}")]
    CutoffTooSmall { cutoff: usize, tail: f64 },

    #[error("ambiguous readout: photon number {0} falls outside all bins")]
    AmbiguousReadout(usize),

    #[error("photon {0} occupies more than one path")]
    MultiPath(PhotonId),

    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not a product state: {0}")]
    NotProduct(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("sweep point {index} ({coords}) failed: {source}")]
    SweepPoint {
        index: usize,
        coords: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
