use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Cancellation consumed every significant digit. `absolute` is the
    /// absolute precision at which the result is known to vanish.
    #[error("precision exhausted: result vanishes modulo p^{absolute}")]
    PrecisionExhausted { absolute: i64 },

    #[error("division by zero")]
    DivisionByZero,

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("matrix rank {rank} is below the required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid precision {0}: at least 2 digits are required")]
    InvalidPrecision(u32),

    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },

    #[error("unknown variable `{name}` at position {pos}")]
    UnknownVariable { name: String, pos: usize },

    #[error("coefficient has negative valuation")]
    NegativeValuationCoefficient,

    #[error("polynomial system is not homogeneous")]
    NotHomogeneous,

    #[error("point is singular on the variety")]
    SingularPoint,

    #[error("point does not lie on the variety")]
    NotOnVariety,

    #[error("root could not be separated within the refinement depth")]
    DegenerateRoot,

    #[error("slice intersection is degenerate")]
    DegenerateSlice,

    #[error("rejection bound violated: fbar = {fbar} exceeds M = {bound}")]
    BoundViolation { fbar: f64, bound: f64 },

    #[error("residue enumeration over {0} classes is beyond desk scale")]
    ResidueSpaceTooLarge(u128),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid variety: {0}")]
    InvalidVariety(String),

    #[error("invalid density: {0}")]
    InvalidDensity(String),

    #[error("too many consecutive degenerate slices ({0}); check the variety and density")]
    ResampleLimit(u64),

    #[error("invalid encoding: {0}")]
    Encoding(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Errors that mark a slice as a measure-zero event to be redrawn.
    pub fn is_resample_event(&self) -> bool {
        matches!(
            self,
            Error::PrecisionExhausted { .. }
                | Error::RankDeficient { .. }
                | Error::DegenerateRoot
                | Error::DegenerateSlice
                | Error::SingularPoint
                | Error::NotOnVariety
                | Error::ZeroVector
                | Error::DivisionByZero
        )
    }
}
