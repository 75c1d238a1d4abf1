use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("incompatible grids: {0}")]
    IncompatibleGrid(String),

    /// The configuration produces a vanishing amplitude, trace or norm.
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// A dense two-photon computation would exceed the supported size.
    #[error("resource limit: {0}")]
    ResourceLimit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}

/// Non-fatal conditions reported alongside a computed value.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A function does not decay inside its grid; `captured` is the fraction
    /// of the analytic norm² present on the grid (or the edge-to-peak ratio
    /// when no analytic norm is known).
    Truncation { what: String, captured: f64 },
    /// |χ| is above the range where the first-order expansion is reliable.
    Perturbative { chi: f64 },
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Warning::Truncation { what, captured } => {
                write!(f, "{what} is truncated by its grid (measure {captured:.6})")
            }
            Warning::Perturbative { chi } => {
                write!(f, "|chi| = {chi} is outside the perturbative regime (> 0.1)")
            }
        }
    }
}

/// A value together with the warnings raised while computing it.
#[derive(Debug, Clone)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn new(value: T) -> Self {
        Checked { value, warnings: Vec::new() }
    }

    pub fn with_warnings(value: T, warnings: Vec<Warning>) -> Self {
        Checked { value, warnings }
    }

    pub fn into_value(self) -> T {
        self.value
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Checked<U> {
        Checked { value: f(self.value), warnings: self.warnings }
    }
}
