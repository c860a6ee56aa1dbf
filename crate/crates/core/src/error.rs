use thiserror::Error;

use crate::model::LinkId;

/// Errors raised by instance handling, solvers and oracles.
#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range (space has {len} nodes)")]
    NodeOutOfRange { index: usize, len: usize },

    #[error("invalid metric space: {0}")]
    InvalidMetric(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("unknown link {0}")]
    UnknownLink(LinkId),

    #[error("link {0} is not in the active set")]
    NotActive(LinkId),

    #[error("link {0} has no threshold")]
    MissingThreshold(LinkId),

    #[error("link {0} has no power")]
    MissingPower(LinkId),

    #[error("link {0} has no utility function")]
    MissingUtility(LinkId),

    #[error("link {0} has no demand")]
    MissingDemand(LinkId),

    #[error("invalid utility: {0}")]
    InvalidUtility(String),

    #[error("objective unbounded: utility grows without limit under infinite power")]
    Unbounded,

    #[error("utility target must be positive, got {0}")]
    NonPositiveTarget(f64),

    #[error("no links to schedule")]
    NoLinks,

    #[error("brute force limited to {limit} links, got {n}")]
    TooManyLinks { n: usize, limit: usize },

    #[error("link set is not admissible under the given witness (link {0} misses its threshold)")]
    NotAdmissible(LinkId),

    #[error("witness power of link {0} is zero")]
    ZeroWitnessPower(LinkId),

    #[error("unschedulable demand on link {0}: positive demand but zero maximum utility")]
    UnschedulableDemand(LinkId),

    #[error("schedule exceeded the slot cap of {0}")]
    SlotCapExceeded(usize),

    #[error("no schedule makes progress on the remaining demands")]
    NoProgress,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("transmit probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
