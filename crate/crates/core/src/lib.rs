//! Integral action control for disturbed port-Hamiltonian systems.

// `!(x > tol)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod error;
pub mod iac;
pub mod linalg;
pub mod mech;
pub mod ph;
pub mod sim;
pub mod systems;
pub mod verify;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
