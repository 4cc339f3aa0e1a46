use alloc::string::String;

/// Everything that can go wrong in the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("inverse undefined: {0}")]
    InverseUndefined(&'static str),
    #[error("orbit escaped the horseshoe rectangle")]
    Escaped,
    #[error("points belong to different phase spaces")]
    FamilyMismatch,
    #[error("symbol window exhausted: index {index} outside the stored window")]
    WindowExhausted { index: i64 },
    #[error("bracket undefined: distance {distance} exceeds {limit}")]
    BracketTooFar { distance: f64, limit: f64 },
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("transition matrix is reducible: symbol {symbol} is stranded")]
    Reducible { symbol: usize },
    #[error("bracket endpoints lie on the same side of the threshold")]
    NoBracket,
    #[error("empty set: {0}")]
    Empty(&'static str),
    #[error("refinement level {level} exceeds the enumerator budget {budget}")]
    RefinementTooDeep { level: usize, budget: usize },
}

impl Error {
    pub(crate) fn param(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }

    /// True for errors caused by the caller's parameters rather than by the
    /// numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. } | Error::Unsupported(_) | Error::FamilyMismatch
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;
