use thiserror::Error;

/// Coarse classification used by the CLI to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numerical,
    Resource,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("out of domain: {0}")]
    Domain(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("exact integer overflow at n = {n}")]
    Overflow { n: usize },

    #[error("evaluation at or near a pole: {0}")]
    Pole(String),

    #[error("contour passes within {distance:e} of a pole at {pole}")]
    PoleCollision { pole: String, distance: f64 },

    #[error("pole order mismatch: expected {expected}, found {found}")]
    PoleOrder { expected: u32, found: u32 },

    #[error("non-convergent: {0}")]
    NonConvergent(String),

    #[error("resolution: {panels} panels requested, at least {required} needed")]
    Resolution { panels: usize, required: usize },

    #[error("cutoff mismatch: {left} vs {right}")]
    CutoffMismatch { left: usize, right: usize },

    #[error("coefficient a({m}) is not real (imaginary part {imag:e})")]
    ComplexCoefficient { m: usize, imag: f64 },

    #[error("coefficient a({m}) = {value:e} violates the non-negativity claim")]
    Negative { m: usize, value: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("checksum mismatch: stored {stored:#018x}, computed {computed:#018x}")]
    Checksum { stored: u64, computed: u64 },

    #[error("version mismatch: {0}")]
    Version(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_)
            | Error::Domain(_)
            | Error::CutoffMismatch { .. }
            | Error::PoleOrder { .. }
            | Error::Resolution { .. } => ErrorClass::Validation,
            Error::Resource(_) | Error::Overflow { .. } => ErrorClass::Resource,
            Error::MalformedHeader(_)
            | Error::Checksum { .. }
            | Error::Version(_)
            | Error::Io(_) => ErrorClass::Io,
            Error::Pole(_)
            | Error::PoleCollision { .. }
            | Error::NonConvergent(_)
            | Error::ComplexCoefficient { .. }
            | Error::Negative { .. }
            | Error::DegenerateFit(_) => ErrorClass::Numerical,
        }
    }

    /// Short stable identifier for machine-parsable error lines.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid-input",
            Error::Domain(_) => "domain",
            Error::Resource(_) => "resource",
            Error::Overflow { .. } => "overflow",
            Error::Pole(_) => "pole",
            Error::PoleCollision { .. } => "pole-collision",
            Error::PoleOrder { .. } => "pole-order",
            Error::NonConvergent(_) => "non-convergent",
            Error::Resolution { .. } => "resolution",
            Error::CutoffMismatch { .. } => "cutoff-mismatch",
            Error::ComplexCoefficient { .. } => "complex-coefficient",
            Error::Negative { .. } => "negative-coefficient",
            Error::DegenerateFit(_) => "degenerate-fit",
            Error::MalformedHeader(_) => "malformed-header",
            Error::Checksum { .. } => "checksum",
            Error::Version(_) => "version",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
