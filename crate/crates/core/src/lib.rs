//! Dirac-spinor entanglement generated by one-photon exchange between two
//! spin-1/2 charged particles, and its behaviour under Lorentz transforms.
//!
//! The pipeline runs bottom-up:
//!
//! - [`tensor`]: small dense complex linear algebra.
//! - [`dirac`]: chiral-basis gamma matrices and on-shell spinors `u(p, ξ)`.
//! - [`lorentz`]: boosts, rotations and their spinor representation `S(Λ)`.
//! - [`amplitude`]: tree-level two-fermion scattering with explicit spins.
//! - [`reduction`]: Coulomb and dipole-dipole potentials from the amplitude.
//! - [`dynamics`]: exchange evolution of two-particle spinor states.
//! - [`entanglement`]: Schmidt spectra, entropies and invariance scans.
//! - [`cli`]: the `spinor-epr` command-line front end.

pub mod error;
pub mod tensor;
pub mod dirac;
pub mod lorentz;
pub mod amplitude;
pub mod reduction;
pub mod dynamics;
pub mod entanglement;
pub mod cli;

pub use error::{Error, Result};
