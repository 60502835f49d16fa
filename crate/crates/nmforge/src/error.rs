//! Crate-wide error type. Every failure names the offending datum so that a
//! failing run can be replayed in isolation.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("negative weight {weight} at point '{point}'")]
    NegativeWeight { point: String, weight: String },

    #[error("duplicate point label '{0}'")]
    DuplicateLabel(String),

    #[error("all weights vanish; the space would be trivial as a measure space")]
    AllNull,

    #[error("unknown point '{0}'")]
    UnknownPoint(String),

    #[error("target measure is not absolutely continuous: point '{point}' is null but carries mass {mass}")]
    NotAbsolutelyContinuous { point: String, mass: String },

    #[error("chain level {level} out of range; chain has {len} levels")]
    LevelOutOfRange { level: usize, len: usize },

    #[error("chain does not refine to the point level: cell {cell:?} holds more than one positive-mass point")]
    ChainNotRefining { cell: Vec<String> },

    #[error(
        "negative input {value} at point '{point}'; p-power representatives need nonnegative data"
    )]
    NegativeInput { point: String, value: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("polyhedral norms are supported up to dimension 6, got {0}")]
    UnsupportedDimension(usize),

    #[error(
        "functional family does not span the space; the gauge would vanish on a nonzero vector"
    )]
    DegenerateNorm,

    #[error("nonpositive weight {weight} in weighted norm at coordinate {index}")]
    BadNormWeight { index: usize, weight: String },

    #[error("cells do not partition the carrier: {reason}")]
    NotAPartition { reason: String },

    #[error("map does not push the source measure onto the target measure: at '{point}' fiber mass {pushed} differs from target mass {expected}")]
    MapNotMeasurePreserving {
        point: String,
        pushed: String,
        expected: String,
    },

    #[error("domination fails at point '{point}': |T(v)| = {lhs} exceeds bound {rhs} on the witness section '{witness}'")]
    DominationFails {
        point: String,
        lhs: String,
        rhs: String,
        witness: String,
    },

    #[error("operator is not localized-linear: value at '{point}' disagrees with its tabulation on the probe '{witness}'")]
    NotLinear { point: String, witness: String },

    #[error("exponents are not conjugate or lie outside (1, infinity): {0}")]
    BadExponents(String),

    #[error("fiber mismatch between '{left}' and '{right}': {reason}")]
    FiberMismatch {
        left: String,
        right: String,
        reason: String,
    },

    #[error("retraction is invalid: {0}")]
    BadRetraction(String),

    #[error("liftings are not compatible along the map: witnessed by the set {witness:?}")]
    LiftingsNotCompatible { witness: Vec<String> },

    #[error("unknown suite '{0}'")]
    UnknownSuite(String),

    #[error("operator norm for this fiber pair needs a diagonal matrix; got a full matrix between l^2 fibers")]
    OpNormUnsupported,

    #[error("scenario is malformed: {0}")]
    BadScenario(String),
}
