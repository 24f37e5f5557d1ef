//! Classical simulation stack for projective and variational quantum
//! eigensolvers on molecular Hamiltonians.
//!
//! The crate is organized bottom-up:
//!
//! - [`pauli`]: Pauli-string algebra and sparse qubit operators.
//! - [`fermion`]: determinants, excitation operators, and their qubit
//!   encodings.
//! - [`state`]: a dense state-vector engine with exact excitation
//!   exponentials and product-formula evolution.

pub mod ansatz;
pub mod error;
pub mod experiment;
pub mod fci;
pub mod fermion;
pub mod molecule;
pub mod pauli;
pub mod bfgs;
pub mod pqe;
pub mod spqe;
pub mod vqe;
pub mod state;

pub use error::{Error, Result};
