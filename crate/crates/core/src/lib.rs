//! A desk-scale laboratory for variational quantum eigensolver optimisation
//! under finite-shot sampling noise.
//!
//! The crate is layered bottom-up:
//!
//! - [`pauli`]: Pauli strings, Pauli-sum Hamiltonians, dense statevectors,
//!   exact diagonalisation.
//! - [`models`]: Ising and Fermi-Hubbard chains, Jordan-Wigner, molecular
//!   Hamiltonian files.
//! - [`ansatz`]: TwoLocal and truncated variational Hamiltonian ansatzes.
//! - [`estimator`]: exact, Gaussian-surrogate and shot-sampled energy
//!   estimates.
//! - [`optimizers`]: a budgeted minimisation interface and nine optimisers.
//! - [`analysis`]: winner's-curse bias, noise floors, tracking errors,
//!   high-shot reevaluation, Hessian diagnostics and landscape scans.
//! - [`harness`]: config-driven experiments, trace persistence and summaries.

pub mod error;
pub mod analysis;
pub mod ansatz;
pub mod exec;
pub mod harness;
pub mod estimator;
pub mod models;
pub mod optimizers;
pub mod pauli;
pub mod rng;

pub use error::{Error, Result};
pub use exec::Execution;
