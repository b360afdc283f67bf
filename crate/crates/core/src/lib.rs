//! Structure-preserving discretisation of the one-dimensional homogeneous
//! and kinetic Lévy–Fokker–Planck equations.
//!
//! The velocity operator combines a quadrature discretisation of the
//! fractional Laplacian with drift fluxes built from the discrete
//! equilibrium, so that sampled stable densities are exact steady states.
//! On a truncated velocity domain the far field is modelled by algebraic
//! decay, and an exterior-mass parameter keeps a corrected total mass
//! conserved.

pub mod discrete_analysis;
pub mod error;
pub mod fractional_weights;
pub mod harness;
pub mod integrators;
pub mod lfp_operator;
pub mod quadrature;
pub mod reference;
pub mod stable_density;

pub use error::{LfpError, Result};
