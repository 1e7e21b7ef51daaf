use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A physical parameter is outside its allowed domain.
    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("degenerate ring: round-trip and through amplitudes are both 1")]
    DegenerateRing,

    #[error("infinite finesse: unloaded decay rate is zero")]
    InfiniteFinesse,

    #[error("flat trace: the resonance dip has zero depth")]
    FlatFit,

    #[error("underdetermined fit: {0}")]
    Underdetermined(String),

    #[error("no guided HE11 mode found: {0}")]
    NoGuidedMode(String),

    #[error("no multimode threshold crossing in (0, {max_length_m}] m")]
    NoThreshold { max_length_m: f64 },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
