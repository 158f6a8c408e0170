use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(i128),
    #[error("matrix is not hyperbolic: eigenvalue {0} lies on the unit circle")]
    NotHyperbolic(f64),
    #[error("spectrum not supported: {0}")]
    UnsupportedSpectrum(String),
    #[error("matrix is outside the required class: {0}")]
    WrongClass(String),
    #[error("pseudo-orbit is empty")]
    EmptyOrbit,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("grid of {cells} cells exceeds the configured bound of {limit}")]
    ResolutionOverflow { cells: u64, limit: u64 },
    #[error("local manifold unavailable: {0}")]
    ManifoldUnavailable(String),
    #[error("basepoint cell is not in the set")]
    BasepointMissing,
    #[error("graph has {edges} edges, more than the bound {limit}")]
    GraphTooLarge { edges: u64, limit: u64 },
    #[error("chain is empty")]
    EmptyChain,
    #[error("bad bifurcation: {0}")]
    BadBifurcation(String),
    #[error("perturbation leaks outside its support at distance {0}")]
    SupportLeak(f64),
    #[error("direction field did not converge at {0:?}")]
    DirectionNotConverged([f64; 3]),
    #[error("leaf projection failed: {0}")]
    ProjectionFailed(String),
    #[error("tube calibration missing")]
    CalibrationMissing,
    #[error("no intersection in search range")]
    NoIntersectionInRange,
    #[error("chain point {0} lies outside the tube")]
    ChainLeftTube(usize),
    #[error("step bound violated at index {index}: {value:e} > {bound:e}")]
    StepBoundViolated { index: usize, value: f64, bound: f64 },
    #[error("symbolic set is empty")]
    EmptySet,
    #[error("hull meets the grid component at {0}")]
    Overlap(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
