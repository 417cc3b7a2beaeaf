//! Pseudospectral construction of the inertial manifold of a modified 3D
//! complex Ginzburg–Landau equation on the torus `[-π, π]^3`.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::wrong_self_convention)]

pub mod averaging;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod manifold;
pub mod parallel;
pub mod sampling;
pub mod spectral;
pub mod truncation;

pub use error::{Error, Result};
