use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("duplicate mode label '{0}'")]
    DuplicateLabel(String),

    #[error("negative {what}: {value}")]
    NegativeRate { what: String, value: f64 },

    #[error("unresolved mode label '{0}'")]
    UnresolvedLabel(String),

    #[error("invalid network: {0}")]
    Invalid(String),

    #[error("inconsistent frame: term {first} conflicts with term {second}")]
    InconsistentFrame { first: String, second: String },

    #[error("mode '{0}' not found")]
    ModeNotFound(String),

    #[error("mode '{0}' carries a signal port and cannot be eliminated")]
    AmbiguousPort(String),

    #[error("unstable system: max Re eigenvalue {max_re:.6e}")]
    Unstable { max_re: f64 },

    #[error("pole on the real axis at omega = {omega:.6e} rad/s")]
    PoleOnRealAxis { omega: f64 },

    #[error("grid too narrow: half maximum is not crossed within [{lo:.6e}, {hi:.6e}]")]
    GridTooNarrow { lo: f64, hi: f64 },

    #[error("no splitting regime for cooperativity {0} (needs C > 1)")]
    NoSplittingRegime(f64),

    #[error("step size {dt:.3e} exceeds limit {limit:.3e} set by the fastest frequency")]
    StepSize { dt: f64, limit: f64 },

    #[error("non-finite state at t = {t:.6e}")]
    BlowUp { t: f64 },

    #[error("mixed basis request: {0}")]
    MixedBasis(String),

    #[error("unknown channel '{0}'")]
    UnknownChannel(String),

    #[error("system dimension {0} exceeds the direct Lyapunov solver limit of 64")]
    TooLarge(usize),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// Failures caused by the numbers rather than the input document.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::Unstable { .. }
                | Error::PoleOnRealAxis { .. }
                | Error::GridTooNarrow { .. }
                | Error::NoSplittingRegime(_)
                | Error::BlowUp { .. }
                | Error::TooLarge(_)
                | Error::Numeric(_)
        )
    }
}
