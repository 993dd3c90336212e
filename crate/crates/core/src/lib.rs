//! Exact lattice computations for elliptic K3 surfaces and their finite
//! symplectic automorphism groups.

pub mod bundle;
pub mod classify;
pub mod error;
pub mod fibration;
pub mod invariants;
pub mod isometry;
pub mod lattice;
pub mod linalg;

pub use error::{Error, Result};
