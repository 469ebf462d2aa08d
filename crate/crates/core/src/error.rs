//! Error type shared across the crate.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Everything that can go wrong, from contract violations to solver failures.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A ReLU pre-activation is exactly zero at an evaluation point, so the
    /// requested input derivative does not exist there.
    KinkAtPoint { layer: usize, unit: usize },
    /// A gradient component came out NaN or infinite.
    NonFiniteGradient,
    /// A loss value came out NaN or infinite.
    NonFiniteLoss { iteration: usize },
    /// Loss or residual overflowed during evaluation.
    NonFinite,
    InvalidArchitecture(String),
    /// Networks cannot be combined (depth, dims or activation differ).
    IncompatibleNetworks(String),
    /// Operation requires a ReLU network.
    WrongActivation,
    /// Mesh size does not divide the domain extent.
    NonIntegralMesh(f64),
    /// Discretization left no interior nodes.
    MeshTooCoarse,
    /// Grid too small for the requested trimming.
    GridTooSmall,
    /// A stencil references a node outside the collocation set.
    StencilOutOfRange,
    DimensionMismatch(String),
    /// Ridge exponent outside {1, 2}.
    UnsupportedExponent(u8),
    /// Iterative linear solver failed to reach tolerance.
    NoConvergence { iterations: usize, residual: f64 },
    /// Nonlinear fixed-point iteration diverged at a time step.
    FixedPointDiverged { step: usize },
    /// Two projected abscissae coincide.
    DuplicateAbscissa,
    /// Direction sampling exhausted its retry budget (near-duplicate points).
    ExhaustedRetries,
    /// Interpolation system stayed ill-conditioned after all retries.
    IllConditioned { condition: f64 },
    /// The tent support ball contains a collocation point.
    BallIntersectsCollocation,
    /// Example hypotheses (a > 0, u0 >= 0, increasing positive points) violated.
    InvalidRegime(String),
    /// Reference field for a relative error is identically zero.
    ZeroReference,
    Config(String),
    Io(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::KinkAtPoint { layer, unit } => write!(
                f,
                "ReLU pre-activation exactly zero at layer {layer}, unit {unit}: \
                 derivative undefined at this point"
            ),
            Error::NonFiniteGradient => write!(f, "gradient contains NaN or Inf"),
            Error::NonFiniteLoss { iteration } => {
                write!(f, "loss became NaN or Inf at iteration {iteration}")
            }
            Error::NonFinite => write!(f, "non-finite value during evaluation"),
            Error::InvalidArchitecture(msg) => write!(f, "invalid architecture: {msg}"),
            Error::IncompatibleNetworks(msg) => write!(f, "incompatible networks: {msg}"),
            Error::WrongActivation => write!(f, "operation requires ReLU activation"),
            Error::NonIntegralMesh(h) => {
                write!(f, "mesh size {h} does not divide the domain extent")
            }
            Error::MeshTooCoarse => write!(f, "mesh too coarse: no interior nodes"),
            Error::GridTooSmall => write!(f, "grid too small for the requested trimming"),
            Error::StencilOutOfRange => write!(f, "stencil references a missing node"),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::UnsupportedExponent(q) => write!(f, "unsupported ridge exponent q={q}"),
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "linear solver did not converge after {iterations} iterations \
                 (residual {residual:.3e})"
            ),
            Error::FixedPointDiverged { step } => {
                write!(f, "fixed-point iteration diverged at step {step}")
            }
            Error::DuplicateAbscissa => write!(f, "duplicate projected abscissa"),
            Error::ExhaustedRetries => {
                write!(f, "direction sampling exhausted retries; points nearly coincide")
            }
            Error::IllConditioned { condition } => {
                write!(f, "interpolation system ill-conditioned (cond ~ {condition:.3e})")
            }
            Error::BallIntersectsCollocation => {
                write!(f, "tent support ball contains a collocation point")
            }
            Error::InvalidRegime(msg) => write!(f, "hypotheses violated: {msg}"),
            Error::ZeroReference => write!(f, "reference field is zero"),
            Error::Config(msg) => write!(f, "config error: {msg}"),
            Error::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
