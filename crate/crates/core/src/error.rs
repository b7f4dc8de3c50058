use std::fmt;

use serde::Serialize;

/// Library module that raised an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Module {
    Potential,
    Classical,
    Quantum1d,
    TestFn,
    SpecDist,
    Invariants,
    Detector,
}

impl fmt::Display for Module {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Module::Potential => "potential",
            Module::Classical => "classical",
            Module::Quantum1d => "quantum1d",
            Module::TestFn => "testfn",
            Module::SpecDist => "specdist",
            Module::Invariants => "invariants",
            Module::Detector => "detector",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ErrorKind {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resolution rule violated: {0}")]
    Resolution(String),
    #[error("window mismatch: {0}")]
    WindowMismatch(String),
    #[error("singular time t = {t}: {detail}")]
    SingularTime { t: f64, detail: String },
    #[error("empty support: {0}")]
    EmptySupport(String),
    #[error("indefinite germ: {0}")]
    IndefiniteGerm(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("fit failed: {0}")]
    NoFit(String),
    #[error("{0}")]
    Pipeline(String),
}

/// Error carrying the module that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("[{module}] {kind}")]
pub struct Error {
    pub module: Module,
    pub kind: ErrorKind,
}

impl Error {
    pub fn new(module: Module, kind: ErrorKind) -> Self {
        Self { module, kind }
    }

    /// True for errors caused by bad inputs rather than numerical failure.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self.kind,
            ErrorKind::DimensionMismatch { .. }
                | ErrorKind::InvalidArgument(_)
                | ErrorKind::Domain(_)
                | ErrorKind::Resolution(_)
                | ErrorKind::IndefiniteGerm(_)
                | ErrorKind::EmptySupport(_)
                | ErrorKind::WindowMismatch(_)
                | ErrorKind::Precondition(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn err<T>(module: Module, kind: ErrorKind) -> Result<T> {
    Err(Error::new(module, kind))
}
