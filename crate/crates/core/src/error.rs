use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain where the operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A pair file that does not match the schema.
    #[error("schema violation at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("antipodality violated at lambda = {lambda}: a(-lambda) != conj(a(lambda))")]
    Antipodality { lambda: f64 },

    #[error("{what} locations are not increasing at index {index} ({prev} then {next})")]
    Unsorted {
        what: &'static str,
        index: usize,
        prev: f64,
        next: f64,
    },

    #[error("quadrature did not reach tolerance: estimate {estimate_re}{estimate_im:+}i, error {error:e}")]
    Quadrature {
        estimate_re: f64,
        estimate_im: f64,
        error: f64,
    },

    #[error("ill-conditioned least-squares system (condition number {0:e})")]
    IllConditioned(f64),

    #[error("fit residual {residual:e} exceeds 10x the error estimate {estimate:e}")]
    ResidualFloor { residual: f64, estimate: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
