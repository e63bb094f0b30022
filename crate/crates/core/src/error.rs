use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("coin state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("coin operator is not unitary (max deviation {0:e})")]
    NotUnitary(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("step {step} is outside the schedule range 1..={steps}")]
    StepOutOfRange { step: u32, steps: u32 },

    #[error("unknown coin `{0}`")]
    UnknownCoin(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),

    #[error("probability table is not normalized (total {0})")]
    NotNormalizedTable(f64),

    #[error("position {0} is not occupied")]
    Unoccupied(i64),

    #[error("missing measurement basis {0}")]
    MissingBasis(crate::analysis::Basis),

    #[error("empty step range")]
    EmptyRange,

    #[error("timing overlap: step {step} needs (step+1)*tau_pos < tau_rt")]
    TimingOverlap { step: u32 },

    #[error("schedule parse error: {0}")]
    Parse(#[from] ParseError),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

/// A schedule text error with a 1-based line and column.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedToken {
        expected: &'static str,
        found: String,
    },
    UnexpectedEnd {
        expected: &'static str,
    },
    InvalidNumber(String),
    UnknownCoin(String),
    MalformedRange(String),
    NonPositiveSteps,
    MissingSteps,
    DuplicateSteps,
    StepOutOfRange {
        step: u32,
        steps: u32,
    },
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnexpectedToken { expected, found } => {
                write!(f, "expected {expected}, found `{found}`")
            }
            Self::UnexpectedEnd { expected } => write!(f, "expected {expected}, found end of line"),
            Self::InvalidNumber(s) => write!(f, "invalid number `{s}`"),
            Self::UnknownCoin(s) => write!(f, "unknown coin `{s}`"),
            Self::MalformedRange(s) => write!(f, "malformed range `{s}`"),
            Self::NonPositiveSteps => f.write_str("step bound must be positive"),
            Self::MissingSteps => f.write_str("missing `steps` line"),
            Self::DuplicateSteps => f.write_str("`steps` given more than once"),
            Self::StepOutOfRange { step, steps } => {
                write!(f, "step {step} outside 1..={steps}")
            }
        }
    }
}
