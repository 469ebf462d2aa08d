//! The three model problems and their reference solvers.

pub mod navier_stokes;
pub mod poisson;
pub mod schrodinger;
