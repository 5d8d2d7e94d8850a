use thiserror::Error;

use crate::network::BranchId;

/// Failures while reading a MATPOWER case or converting it to a [`crate::Network`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("missing block mpc.{0}")]
    MissingBlock(String),
    #[error("malformed row in mpc.{block} at line {line}: {reason}")]
    MalformedRow { block: String, line: usize, reason: String },
    #[error("non-numeric token {token:?} at line {line}")]
    NonNumeric { token: String, line: usize },
    #[error("baseMVA must be positive, got {0}")]
    BaseMva(f64),
    #[error("generator {generator} has a quadratic cost term {c2}; enable linearization to drop it")]
    QuadraticCostUnsupported { generator: usize, c2: f64 },
    #[error("generator {generator} uses unsupported cost model {model}")]
    UnsupportedCostModel { generator: usize, model: f64 },
    #[error("branch {0} has zero reactance")]
    ZeroReactance(usize),
    #[error("bus {0} has no branch and no generator")]
    IslandedBus(i64),
    #[error("branch {branch} references an unknown bus")]
    UnknownBus { branch: usize },
    #[error("generator {generator} references an unknown bus")]
    UnknownGeneratorBus { generator: usize },
    #[error("duplicate bus number {0}")]
    DuplicateBus(i64),
    #[error("{0} has zero susceptance")]
    ZeroSusceptance(BranchId),
    #[error("{0} has non-positive capacity")]
    NonPositiveCapacity(BranchId),
    #[error("generator {generator} has p_min > p_max")]
    GeneratorLimits { generator: usize },
    #[error("angle bounds must satisfy theta_min < theta_max, got [{theta_min}, {theta_max}]")]
    AngleBounds { theta_min: f64, theta_max: f64 },
    #[error("invalid network json: {0}")]
    Json(String),
}
