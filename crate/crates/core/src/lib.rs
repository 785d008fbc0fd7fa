pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod linalg;
pub mod propagator;
pub mod spin;

pub use error::{Error, Result};
