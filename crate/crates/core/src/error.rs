use thiserror::Error;

/// Errors raised by kernel evaluation, operator construction, simulation and
/// inference routines.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {constraint}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// Kernel columns are only defined for strictly positive times; the
    /// prefactor s^{-(H-1/2)} diverges at s = 0.
    #[error("kernel evaluation requires s > 0, got s = {0}")]
    NonpositiveColumn(f64),

    #[error("series truncation failed: bound still {bound:.3e} > tol {tol:.3e} after {max_terms} terms at (t, s) = ({t}, {s})")]
    SeriesTruncation {
        t: f64,
        s: f64,
        tol: f64,
        bound: f64,
        max_terms: usize,
    },

    #[error("Cholesky factorization failed for {n} nodes (H = {hurst}) even with diagonal jitter {jitter:.1e}")]
    FactorizationFailed { n: usize, hurst: f64, jitter: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("time {0} is not a node of the grid")]
    NotAGridNode(f64),

    #[error("resolvent iteration diverged: term norm grew for {0} consecutive iterations")]
    ResolventDiverged(usize),

    #[error("sample path is missing the field required here: {0}")]
    MissingPathData(&'static str),

    #[error("failed to parse input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
