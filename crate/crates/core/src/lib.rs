//! Periodically driven, number-conserving fermionic two-leg ladder.
//!
//! The crate builds the bare ladder Hamiltonian and every effective
//! Hamiltonian generated by pulsed or continuous inter-leg hopping, propagates
//! the exact drive, and extracts the signatures of Majorana zero modes that a
//! small exact-diagonalization study can resolve: charge gaps, entanglement
//! spectra with charge/leg-parity labels, and edge correlations.
//!
//! Layout:
//! - [`fockspace`]: bit-encoded Fock states, number-conserving sectors and
//!   sparse operators with Jordan-Wigner signs.
//! - [`models`]: term lists for the bare, conjugated and effective
//!   Hamiltonians.
//! - [`floquet`]: one-period propagators and trajectories with micromotion.
//! - [`observables`]: parity dynamics, Lanczos ground states, gaps,
//!   correlations and entanglement spectra.
//! - [`rgflow`]: bosonization couplings and the sine-Gordon flow.
//! - [`freefermion`]: exact BdG treatment of the Kitaev chain.
//! - [`cli`]: the experiment runner behind the `ladder` binary.

pub mod cli;
pub mod error;
pub mod floquet;
pub mod fockspace;
pub mod freefermion;
pub mod krylov;
pub mod linalg;
pub mod models;
pub mod observables;
pub mod rgflow;
pub mod special;
pub mod validation;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
