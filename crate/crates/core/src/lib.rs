//! Triangular complex spherical t-designs on `Ω^d ⊂ C^d`, computed as real
//! spherical t-designs on `S^{2d−1}` through a zonal variational objective.

pub mod bridge;
pub mod cli;
pub mod criteria;
pub mod error;
mod lbfgs;
pub mod metrics;
pub mod optimizer;
pub mod ortho_poly;
mod polish;
pub mod qmc;
pub mod sdf;
pub mod sphere;
pub mod sum;

pub use error::{Error, Result};
