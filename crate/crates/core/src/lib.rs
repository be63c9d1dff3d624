//! Numerical core of the saddle-focus laboratory.
//!
//! The crate models a three-dimensional diffeomorphism that is linear near a
//! saddle-focus `p` (expanding complex pair `r e^{±iθ}`, contracting real
//! eigenvalue `λ`) and carries a quadratic homoclinic tangency realized by an
//! explicit polynomial transition map. On top of that model it builds pieces
//! of the unstable manifold as compositions of chart maps, traces their fold
//! curves, and turns the asymptotics of those folds into estimates of the
//! conjugacy moduli `λ`, `r`, `θ`.
//!
//! Everything here is pure computation: no IO, no threads, no `std`.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod atlas;
pub mod conjugacy;
mod error;
pub mod fold;
pub mod geometry;
pub mod jet;
mod linalg;
pub mod model;
pub mod moduli;
pub mod word;

pub use error::{LabError, Result};
pub use num_complex::Complex64;
