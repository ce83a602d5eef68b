use thiserror::Error;

/// Everything that can go wrong in the library.
///
/// Payloads are plain `f64`/integers regardless of the scalar type in use.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gamma function pole at z = {re} + {im}i")]
    Pole { re: f64, im: f64 },

    #[error("phase step {step:.3} rad at sample {index} exceeds the pi/2 safety margin")]
    RefinementNeeded { index: usize, step: f64 },

    #[error("flux must lie strictly inside (0, 1), got {0}")]
    InvalidFlux(f64),

    #[error("matrix is not unitary (residual {0:.3e})")]
    NonUnitary(f64),

    #[error("pair is not admissible: ||CD* - DC*|| = {hermitian:.3e}, |det(CC* + DD*)| = {gram:.3e}")]
    NotAdmissible { hermitian: f64, gram: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate case: {0}")]
    DegenerateCase(String),

    #[error("expected a one-dimensional kernel of D, found dimension {0}")]
    KernelDimension(usize),

    #[error("channel m = {0} is not supported (only 0 and -1)")]
    UnsupportedChannel(i64),

    #[error("bracket D B^2 Phi^2 + L is singular at kappa = {0:e}")]
    SingularBracket(f64),

    #[error("found {found} bound states (with multiplicity) but CD* has {expected} negative eigenvalues")]
    CountMismatch { found: usize, expected: usize },

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("winding is {residual:.3e} away from an integer")]
    IntegerDrift { residual: f64 },

    #[error("no sign change of det G for -z in [{lo:e}, {hi:e}]")]
    BracketFailure { lo: f64, hi: f64 },

    #[error("plaquette ({i}, {j}) carries flux {flux:.3}; grid too coarse")]
    VortexOnPlaquette { i: usize, j: usize, flux: f64 },
}

/// Coarse error classes, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Degenerate,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Pole { .. }
            | Error::InvalidFlux(_)
            | Error::NonUnitary(_)
            | Error::NotAdmissible { .. }
            | Error::InvalidInput(_)
            | Error::UnsupportedChannel(_) => ErrorClass::Input,
            Error::DegenerateCase(_) | Error::KernelDimension(_) | Error::SingularBracket(_) => {
                ErrorClass::Degenerate
            }
            Error::RefinementNeeded { .. }
            | Error::CountMismatch { .. }
            | Error::NonConvergence(_)
            | Error::IntegerDrift { .. }
            | Error::BracketFailure { .. }
            | Error::VortexOnPlaquette { .. } => ErrorClass::Numerical,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
