//! Minimal realizations and certified L2-gain brackets for discrete-time
//! linear switching systems whose mode sequences are walks in a labeled
//! directed graph.
//!
//! The crate is organised bottom-up:
//!
//! * [`system`]: rectangular switching systems, path enumeration and the
//!   lifted path operators `A_π, B_π, C_π, D_π`.
//! * [`realization`]: unobservable/reachable subspaces and reduction to a
//!   minimal rectangular realization.
//! * [`lmi`]: a feasibility oracle for linear matrix inequalities.
//! * [`stability`]: quadratic multinorm bounds on the constrained joint
//!   spectral radius.
//! * [`gain`]: lower/upper bounds on the L2 gain, max-of-quadratics storage
//!   functions and worst-case disturbances.
//! * [`io`], [`example`], [`levelset`]: JSON files, the delayed-control
//!   pendulum example and level-set output.
//!
//! Time indices along a path are 0-based (`σ_π(0)` is the label of the
//! first edge) while [`system::Path::subpath`] uses 1-based inclusive
//! bounds, so `π(1:|π|)` is the whole path.

// Links the system OpenBLAS used by the SDP backend.
use openblas_src as _;

pub mod error;
pub mod example;
pub mod exec;
pub mod gain;
pub mod io;
pub mod levelset;
pub mod linalg;
pub mod lmi;
pub mod random;
pub mod realization;
pub mod stability;
pub mod system;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use exec::ExecMode;
pub use system::{EdgeSpec, NodeSpec, Path, PathMatrices, SwitchingSystem};

/// Shorthand for the dense matrix type used throughout.
pub type Mat = nalgebra::DMatrix<f64>;
/// Shorthand for the dense vector type used throughout.
pub type Vector = nalgebra::DVector<f64>;
