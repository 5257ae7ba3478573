//! Quench dynamics of long-range transverse-field Ising chains.

pub mod coupling;
pub mod error;
pub mod exact;
pub mod lattice;
pub mod linalg;
pub mod spinwave;
pub mod stochastic;
pub mod units;

pub use error::{Error, Result};
