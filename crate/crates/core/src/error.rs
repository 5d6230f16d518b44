use thiserror::Error;

/// Errors produced while building inputs, assembling or solving systems.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("mesh needs at least one element, got {0}")]
    EmptyMesh(i64),

    #[error("invalid damaged region: {0}")]
    InvalidRegion(String),

    #[error("every element is damaged; at least one observed element is required")]
    AllDamaged,

    #[error("element {element} has no covering sample ({samples} samples for {elements} elements)")]
    Resolution {
        element: usize,
        samples: usize,
        elements: usize,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("length mismatch for {what}: expected {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("system is singular: {0}")]
    SingularSystem(String),

    #[error("zero pivot at row {row} (|pivot| = {pivot:e})")]
    ZeroPivot { row: usize, pivot: f64 },

    #[error("singular pivot block at block {block} (|det| = {det:e})")]
    SingularBlock { block: usize, det: f64 },

    #[error("no boundary datum for weak Dirichlet condition at the {0} end")]
    NoBoundaryDatum(&'static str),

    #[error("inner solve failed at outer iteration {iteration}: {source}")]
    InnerSolve {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            got,
        })
    }
}
