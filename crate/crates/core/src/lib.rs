//! Numerical kernels for simultaneous P&Q measurement (SPQM) on the
//! instrumental Weyl-Heisenberg group.
//!
//! * [`fock`]: truncated operators and the matrix exponential.
//! * [`group`]: Harish-Chandra and Cartan coordinates, transforms, Haar densities.
//! * [`paths`]: Wiener paths, SDE propagation, closed forms, Kraus products.
//! * [`moments`]: the modified-measure kernel, its determinant and moments.
//! * [`dists`]: reduced distributions and weighted Monte Carlo.
//! * [`povm`]: completeness and channel checks.
//! * [`verify`]: the acceptance suite shared by the CLI and the test target.
//!
//! With the `parallel` feature (default) Monte Carlo loops run on rayon.

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dists;
pub mod error;
pub mod fock;
pub mod group;
pub mod moments;
pub mod par;
pub mod paths;
pub mod povm;
pub mod quad;
pub mod verify;

pub use error::{Result, SpqmError};

/// Crate version, written into output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
