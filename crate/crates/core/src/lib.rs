//! Uniform multiplicative Diophantine approximation toolkit: the Dani
//! correspondence between approximation functions and cusp-excursion radii,
//! Dirichlet-type solvability tests, a constructive transference step
//! between cone families, sup-norm shortest vectors of diagonally flowed
//! lattices, and seeded experiments around the critical-exponent dichotomy.

pub mod cartan;
pub mod dani;
pub mod dims;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod probe;
pub mod report;
pub mod transfer;

pub use dims::Dims;
pub use error::{Error, Result};
