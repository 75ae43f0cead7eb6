use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no equilibrium: {0}")]
    NoEquilibrium(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("root not bracketed: {0}")]
    Range(String),
    #[error("inadmissible height field: {0}")]
    Geometry(String),
    #[error("under-resolved: {0}")]
    Resolution(String),
    #[error("z = {0} lies on a branch cut")]
    Branch(Complex64),
    #[error("degenerate symbol: {0}")]
    Degenerate(String),
    #[error("function vanishes on contour near {at} (|f| = {modulus:e})")]
    ZeroOnContour { at: Complex64, modulus: f64 },
    #[error("not solvable: {0}")]
    Solvability(String),
    #[error("did not converge: {0}")]
    Convergence(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
