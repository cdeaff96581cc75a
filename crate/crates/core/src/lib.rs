#![no_std]
//! Adapted connections on foliated manifolds and on the tangent bundle of a
//! Finsler manifold, evaluated exactly with truncated Taylor expansions.

extern crate alloc;

pub mod adapted;
pub mod conn;
pub mod error;
pub mod expr;
pub mod finsler;
pub mod geom;
pub mod jet;
pub mod linalg;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use jet::{Jet, MultiIndex, ScalarField};
pub use tensor::Tensor;
