//! Numerical stability analysis of two-temperature steady states of the free
//! lattice Fermi gas coupled to a finite-level system.
//!
//! The crate covers the single-particle dispersion and its energy shells, the
//! rescaling flow behind the positive-commutator functions `s1, s2, s3`, the
//! small system and its Liouvillean, the quasi-free steady state, finite
//! lattice dynamics, the level-shift operator `Γ(e)` with its kernel and gap,
//! and a validator for the model assumptions.

pub mod dispersion;
pub mod error;
pub mod jet;
pub mod lattice;
pub mod level_shift;
pub mod quadrature;
pub mod quasifree;
pub mod rescaling;
pub mod small_system;
pub mod validator;

pub use error::{NessError, Result};
