//! Quantum process tomography in the Fano representation.
//!
//! States of `n` qubits are expanded over tensor products of Pauli matrices,
//! which turns every quantum operation into a real affine map acting on the
//! generalized Bloch vector. The crate simulates qubit noise channels,
//! reconstructs the process matrix `χ_F = [M | a]` by linear inversion from
//! exact or finite-shot polarization measurements, and interprets the
//! resulting matrix (sparsity, channel fits, dephasing discrimination).
//!
//! ```
//! use fano_qpt::channels::{phase_flip, Channel};
//! use fano_qpt::tomography::exact_tomography;
//!
//! let channel = Channel::from(phase_flip(0.25).unwrap());
//! let result = exact_tomography(&channel).unwrap();
//! assert!((result.process.m()[(0, 0)] - 0.5).abs() < 1e-12);
//! ```

// Tolerance checks are written `!(x < tol)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channels;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod linalg;
pub mod measurement;
pub mod pauli;
pub mod rng;
pub mod tomography;

pub use error::{QptError, Result};

/// Largest qubit count accepted anywhere in the crate unless a caller
/// passes its own limit. Superoperators grow as `16ⁿ`.
pub const DEFAULT_QUBIT_CAP: usize = 5;
