//! Small CPU stack for physics-informed neural networks in two flavors:
//! AD-PINNs, whose PDE residuals use exact input derivatives of the network,
//! and FD-PINNs, whose residuals apply finite-difference stencils to network
//! values on a grid.
//!
//! The crate contains
//!
//! - fully connected networks with the constructions the analysis needs
//!   (exact linear combination by parallel stacking, ReLU identity deepening,
//!   hard-constraint wrappers),
//! - forward second-order jets and reverse-mode parameter gradients, each
//!   checkable against a finite-difference oracle,
//! - the discrete loss functionals with separable PDE/boundary/data terms,
//! - three model problems: the slit-domain Poisson equation, the nonlinear
//!   Schrödinger equation, and an inverse Navier-Stokes identification task,
//!   together with their classical finite-difference reference solvers,
//! - witness-network constructions (ReLU tents and smooth ridge Hermite
//!   interpolants) that certify loss invariance, hence non-uniqueness of
//!   minimizers, numerically,
//! - a deterministic Adam training loop with best-iterate tracking.
//!
//! Everything runs in 64-bit floats with fixed summation orders, so a run is
//! reproducible bit for bit from its seed. See the `cli` module for the
//! experiment drivers behind the `pinnlab` binary.

pub mod activation;
pub mod autodiff;
pub mod cli;
pub mod collocation;
pub mod error;
pub mod linalg;
pub mod losses;
pub mod models;
pub mod network;
pub mod optimize;
pub mod witness;

pub use activation::Activation;
pub use autodiff::{eval_jet2, fd_gradient_oracle, parameter_gradient, Jet2, ParameterGradient};
pub use error::{Error, Result};
pub use network::{ConstrainedNetwork, Network};
