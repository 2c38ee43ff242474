use thiserror::Error;

/// Errors raised by the numeric routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "precision too low for guard policy: {requested} digits requested, at least 10 required"
    )]
    PrecisionTooLow { requested: u32 },

    #[error("guard digits {guard} below policy minimum {minimum}")]
    GuardTooSmall { guard: u32, minimum: u32 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerically zero divisor")]
    ZeroDivisor,

    #[error("singular alpha configuration: denominator -1-mu+nu+2z(1+mu) is numerically zero (mu = {mu}, nu = {nu})")]
    SingularAlpha { mu: String, nu: String },

    #[error("singular configuration at r = {r}: {detail}")]
    SingularConfiguration { r: String, detail: String },

    #[error("series did not converge within {limit} terms")]
    NonConvergence { limit: usize },

    #[error("root selection failed for M_{n}({m}): best K-ratio mismatch is 10^{best_log10:.1}")]
    RootSelection { n: u32, m: String, best_log10: f64 },

    #[error("unsupported order nu = {0}: Gamma(1 - nu) is only available when 1 - nu is a positive integer")]
    UnsupportedOrder(String),

    #[error("invalid modulus pair: {0}")]
    InvalidModulus(String),

    #[error("oracle mismatch: {agreement:.1} digits of agreement, {required:.1} required")]
    OracleMismatch { agreement: f64, required: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
