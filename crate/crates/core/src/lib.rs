//! Simulation and estimation toolkit for interaction-enhanced, loss-robust
//! microwave metrology with Rydberg spin waves.
//!
//! The crate is organised bottom-up:
//!
//! * [`fockspace`] is an exact dense linear-algebra engine on a truncated
//!   two-mode Fock space. Every analytic result elsewhere is checked against it.
//! * [`toy_model`] is the two-excitation error-prevention protocol.
//! * [`dipolar`] computes the excluded-volume integral and the
//!   interaction-induced decay rate from the dipolar pair potential.
//! * [`multiparticle`] gives photon-count statistics of bi-coherent spin waves
//!   under mutual interaction-induced decay.
//! * [`estimation`] simulates shots, runs maximum-likelihood estimation with
//!   bootstrap and converts angle precision into field sensitivity.

pub mod dipolar;
pub mod error;
pub mod estimation;
pub mod fockspace;
pub mod multiparticle;
pub mod quadrature;
pub mod toy_model;
pub mod units;

pub use error::{Error, Result};
