use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Structural problem with a point cloud (lengths, counts).
    InvalidCloud(String),
    LabelOutOfRange {
        index: usize,
        label: usize,
        classes: usize,
    },
    NonFinite {
        index: usize,
    },
    /// Fewer points than a scene or layer requires.
    TooFewPoints {
        n: usize,
        required: usize,
    },
    TargetOutOfRange {
        target: usize,
        n: usize,
    },
    NeighborhoodTooLarge {
        k: usize,
        n: usize,
    },
    UnknownPreset(String),
    InvalidConfig(String),
    Shape(String),
    /// Training produced a non-finite objective.
    Diverged {
        epoch: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidCloud(msg) => write!(f, "invalid point cloud: {msg}"),
            Error::LabelOutOfRange {
                index,
                label,
                classes,
            } => {
                write!(
                    f,
                    "label {label} of point {index} out of range for {classes} classes"
                )
            }
            Error::NonFinite { index } => write!(f, "non-finite value at point {index}"),
            Error::TooFewPoints { n, required } => {
                write!(f, "{n} points given, at least {required} required")
            }
            Error::TargetOutOfRange { target, n } => {
                write!(f, "sample target {target} outside 1..={n}")
            }
            Error::NeighborhoodTooLarge { k, n } => {
                write!(f, "neighbourhood size {k} exceeds point count {n}")
            }
            Error::UnknownPreset(name) => write!(f, "unknown margin preset `{name}`"),
            Error::InvalidConfig(msg) => write!(f, "invalid configuration: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Diverged { epoch } => write!(f, "objective became non-finite at epoch {epoch}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
