//! Single-shot optical qubit readout through a cavity.
//!
//! An emitter whose two ground states couple differently to a cavity mode
//! changes the cavity transmission depending on the spin state. This crate
//! integrates the open-system dynamics of such emitters, accumulates the
//! transmitted photon number for each initial spin state, and turns the
//! resulting Poisson means into an optimal threshold decision and its
//! success probability.
//!
//! Modules, bottom-up:
//! - [`operator`]: dense complex operators on the atom ⊗ cavity space.
//! - [`lindblad`]: master-equation integration with an in-state photon counter.
//! - [`models`]: three-level, four-level (Voigt) and spectral-diffusion models.
//! - [`stats`]: photon-counting decision theory.
//! - [`experiments`]: figure presets and parameter sweeps with CSV output.
//! - [`config`]: JSON scenario files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod lindblad;
pub mod models;
pub mod operator;
pub mod stats;

pub use error::{Error, Result};
