//! Numerical laboratory for nonconforming variational methods with smoothers.
//!
//! A method is the triple `(S, b, E)`: a discrete space `S` inside an extended Hilbert
//! space `V̂ = V + S`, a nondegenerate bilinear form `b` on `S`, and a smoother `E: S → V`
//! whose adjoint is the discrete load map. The crate builds such methods, solves their
//! discrete problems, and computes stability, quasi-optimality and consistency constants
//! through several independent formulas so that each can check the others.

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod method;
pub mod models;
pub mod spaces;

pub use error::{Error, Result};
