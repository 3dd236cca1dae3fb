//! Exact deformation calculus of coisotropic submanifolds in Jacobi manifolds,
//! on trivialized charts `T^k x R^m`.

pub mod bfv;
pub mod cli;
pub mod error;
pub mod geom;
pub mod graded;
pub mod linfty;
pub mod multider;
pub mod ring;
pub mod transversal;

pub use error::{Error, Result};
