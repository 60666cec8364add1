use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates a model invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("failed to parse configuration: {0}")]
    Parse(String),

    #[error("argument outside the function domain: {0}")]
    Domain(String),

    #[error("gamma function pole at x = {0}")]
    Pole(f64),

    /// |beta| is too small for `(1/beta) log2 E[2^(beta r)]` to be evaluated;
    /// the EC collapses to the ergodic rate there.
    #[error("degenerate QoS exponent beta = {0:e}; use the ergodic-rate limit instead")]
    DegenerateExponent(f64),

    #[error("moment E[x^(beta/2)] diverges for beta = {0} (requires beta > -4)")]
    DivergentMoment(f64),

    #[error("quadrature did not converge after {subdivisions} subdivisions (estimate {estimate:e}, error {error:e})")]
    Convergence {
        subdivisions: usize,
        estimate: f64,
        error: f64,
    },

    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
