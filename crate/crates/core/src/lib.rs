// SPDX-License-Identifier: Apache-2.0

//! Time-periodic pure-dephasing dynamics of a bosonic resonator.
//!
//! The crate evolves a truncated resonator coupled to a commensurate
//! ("pendulum-wave") bath along two independent routes:
//!
//! - [`exact`]: the closed-form influence functional, elementwise on the
//!   density matrix;
//! - [`liouville`] + [`propagate`]: numerical propagation of the
//!   time-periodic Liouvillian superoperator, from which [`floquet`]
//!   extracts the monodromy spectrum, the Liouville–Jacobi determinant and
//!   the stroboscopic divisibility series.
//!
//! [`analysis`] builds phase-space and time-series observables on top, and
//! [`config`], [`export`] and [`commands`] form the command-line surface.

pub mod analysis;
pub mod bath;
pub mod commands;
pub mod config;
pub mod error;
pub mod exact;
pub mod export;
pub mod floquet;
pub mod fock;
pub mod linalg;
pub mod liouville;
pub mod propagate;
pub mod quadrature;

pub use error::{Error, Result};

pub use num_complex::Complex64 as C64;
