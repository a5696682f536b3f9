use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("non-finite field value at t = {t} (last good time {last_good_t})")]
    NonFinite { t: f64, last_good_t: f64 },

    #[error("sup norm {sup} exceeded ceiling {ceiling} at t = {t} (last good time {last_good_t})")]
    Blowup {
        t: f64,
        last_good_t: f64,
        sup: f64,
        ceiling: f64,
    },

    #[error("need at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("trajectory has no records")]
    EmptyTrajectory,

    #[error("missing diagnostic column `{0}`")]
    MissingColumn(String),

    #[error("rescaled field is under-resolved: {0}")]
    UnderResolved(String),

    #[error("unsupported dimension {dim} for {what}")]
    UnsupportedDimension { dim: usize, what: &'static str },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
