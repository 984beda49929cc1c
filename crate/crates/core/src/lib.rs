//! Finite tensor C*-categories, their module categories, and the spectral
//! *-algebras of the associated quantum homogeneous spaces.
//!
//! The crate is organised bottom-up:
//!
//! * [`numkit`] dense complex linear algebra,
//! * [`grouprep`] finite groups and unitary representations,
//! * [`tensorcat`] concrete presentations of rigid tensor categories,
//! * [`modcat`] module categories as bigraded tensor functors,
//! * [`reconstruct`] the spectral algebras and their morphisms,
//! * [`verify`] certificates and the orchestrating suite.

#![allow(clippy::needless_range_loop)]

pub mod grouprep;
pub mod modcat;
pub mod numkit;
pub mod reconstruct;
pub mod tensorcat;
pub mod verify;

pub use numkit::{ComplexMatrix, OrthonormalBasis, C64, DEFAULT_TOL};
pub use verify::{Certificate, Check};
