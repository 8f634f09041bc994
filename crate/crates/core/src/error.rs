use alloc::string::String;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Signature with no degrees of freedom or a negative/non-finite ħ.
    InvalidSignature(String),
    /// A moment key whose number of degrees of freedom does not match the signature.
    DofMismatch {
        expected: usize,
        found: usize,
    },
    /// Malformed textual input; `position` is a byte offset.
    Parse {
        input: String,
        position: usize,
        message: String,
    },
    /// Requested order range is not a valid set of dynamical moments.
    InvalidOrderRange {
        min: u32,
        max: u32,
    },
    /// Truncation order below 2.
    InvalidTruncation(u32),
    /// A symbol without an assigned value during numeric evaluation.
    MissingSymbol(String),
    /// Oracle input exceeds the configured size guard.
    CostGuard(String),
    /// The oracle produced a coefficient with a surviving imaginary unit or odd power of ħ.
    ImaginaryResidue(String),
    InvalidConfig(String),
    /// Adaptive integration could not meet the tolerance above the minimum step.
    StepSizeUnderflow {
        time: f64,
        step: f64,
    },
    NonFinite {
        time: f64,
        index: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidSignature(msg) => write!(f, "invalid signature: {msg}"),
            Error::DofMismatch { expected, found } => {
                write!(f, "moment key has {found} degrees of freedom, signature has {expected}")
            }
            Error::Parse { input, position, message } => {
                write!(f, "parse error at position {position} in {input:?}: {message}")
            }
            Error::InvalidOrderRange { min, max } => {
                write!(f, "invalid order range {min}..={max}: orders start at 2 and must be increasing")
            }
            Error::InvalidTruncation(n) => write!(f, "truncation order {n} is below 2"),
            Error::MissingSymbol(s) => write!(f, "no value assigned to symbol {s}"),
            Error::CostGuard(msg) => write!(f, "input exceeds oracle size guard: {msg}"),
            Error::ImaginaryResidue(msg) => write!(f, "non-real oracle result: {msg}"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::StepSizeUnderflow { time, step } => {
                write!(f, "step size underflow at t = {time} (step {step})")
            }
            Error::NonFinite { time, index } => {
                write!(f, "non-finite value in state component {index} at t = {time}")
            }
        }
    }
}

impl core::error::Error for Error {}
