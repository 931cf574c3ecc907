use thiserror::Error;

/// Errors produced anywhere in the simulator.
///
/// Variant names double as the machine-readable identifiers printed by the
/// command-line front end, so they are stable.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is rank deficient (smallest singular value {smallest:e})")]
    RankDeficient { smallest: f64 },

    #[error("expected a square matrix, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (residual {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("matrix is not antisymmetric (residual {residual:e})")]
    NotAntisymmetric { residual: f64 },

    #[error("matrix is not unitary (residual {residual:e})")]
    NotUnitary { residual: f64 },

    #[error("Pfaffian requires an even dimension, got {0}")]
    OddDimension(usize),

    #[error("bad dimensions: {0}")]
    BadDimensions(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector is zero")]
    ZeroVector,

    #[error("vector is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("orbital does not lie in the filled span (residual {residual:e})")]
    NotInSpan { residual: f64 },

    #[error("outcome {outcome} is impossible (probability {probability:e})")]
    ImpossibleOutcome { outcome: String, probability: f64 },

    #[error("invalid outcome label {0:?}")]
    InvalidOutcome(String),

    #[error("bad occupation index set: {0}")]
    BadIndexSet(String),

    #[error("measured modes are not orthogonal (overlap {overlap:e})")]
    ModesNotOrthogonal { overlap: f64 },

    #[error("term count {count} exceeds the cap of {cap}")]
    TermCapExceeded { count: usize, cap: usize },

    #[error("mode context overlaps the annihilated modes (overlap {overlap:e})")]
    BadContext { overlap: f64 },

    #[error("expected {expected} electrons, got {found}")]
    WrongParticleNumber { expected: usize, found: usize },

    #[error("{modes} modes exceed the oracle limit of {limit}")]
    TooManyModes { modes: usize, limit: usize },

    #[error("the no-go theorem does not apply to the parity measurement 02/1 (step {step})")]
    ParityGroupingUnsupported { step: usize },

    #[error("no admissible single-determinant branch at step {step} (p0 = {p0:e}, p2 = {p2:e})")]
    NoAdmissibleBranch { step: usize, p0: f64, p2: f64 },

    #[error("bad lattice configuration: {0}")]
    BadConfig(String),

    #[error("index {index} out of range {range}")]
    IndexOutOfRange { index: i64, range: String },
}

impl Error {
    /// Stable identifier for the variant, e.g. `"TermCapExceeded"`.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NonSquare { .. } => "NonSquare",
            Error::NotHermitian { .. } => "NotHermitian",
            Error::NotAntisymmetric { .. } => "NotAntisymmetric",
            Error::NotUnitary { .. } => "NotUnitary",
            Error::OddDimension(_) => "OddDimension",
            Error::BadDimensions(_) => "BadDimensions",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::ZeroVector => "ZeroVector",
            Error::NotNormalized { .. } => "NotNormalized",
            Error::NotInSpan { .. } => "NotInSpan",
            Error::ImpossibleOutcome { .. } => "ImpossibleOutcome",
            Error::InvalidOutcome(_) => "InvalidOutcome",
            Error::BadIndexSet(_) => "BadIndexSet",
            Error::ModesNotOrthogonal { .. } => "ModesNotOrthogonal",
            Error::TermCapExceeded { .. } => "TermCapExceeded",
            Error::BadContext { .. } => "BadContext",
            Error::WrongParticleNumber { .. } => "WrongParticleNumber",
            Error::TooManyModes { .. } => "TooManyModes",
            Error::ParityGroupingUnsupported { .. } => "ParityGroupingUnsupported",
            Error::NoAdmissibleBranch { .. } => "NoAdmissibleBranch",
            Error::BadConfig(_) => "BadConfig",
            Error::IndexOutOfRange { .. } => "IndexOutOfRange",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
