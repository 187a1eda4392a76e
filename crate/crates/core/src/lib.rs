//! Numerical toolkit for fractional Korn inequalities: Poisson and
//! Poisson-type kernels, symbol calculus on periodic grids, fractional
//! semi-norm estimators, verification checks, and a variational solver
//! for the strongly coupled nonlocal p-Laplacian system.

pub mod error;
pub mod fields;
pub mod kernels;
pub mod nonlocal;
pub mod quad;
pub mod reduce;
pub mod seminorms;
pub mod spectral_ops;
pub mod verification;

pub use error::{Error, Result};
