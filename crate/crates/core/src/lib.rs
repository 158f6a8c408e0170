//! Computational toolkit for hyperbolic toral dynamics and its perturbations.

pub mod error;
pub mod linalg;
pub mod torus;

pub use error::{Error, Result};
pub use torus::ToralAutomorphism;
pub mod dynamics;
pub mod shadowing;
pub mod grid;
pub mod lattice;
pub mod da;
pub mod invariant;
pub mod product;
pub mod exact;
pub mod semiconj;
pub mod foliation;
pub mod symbolic;
