//! Critical rank-1 inhomogeneous random graphs with power-law weights
//! (tail exponent `tau` in (3, 4)), their exploration walks, the thinned
//! Levy scaling limit and the multiplicative coalescent.
//!
//! Vertex indices are 0-based in the API and 1-based in exported files.

pub mod branching;
pub mod coalescent;
pub mod error;
pub mod exploration;
pub mod graph;
pub mod harness;
pub mod levy;
pub mod model;
pub mod numerics;
pub mod rng;

pub use error::{Error, Result};
