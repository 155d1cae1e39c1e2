//! Equilibration of crystalline defects in Bravais lattices with
//! infinite-range interatomic interactions.
//!
//! The crate is organised bottom-up: [`lattice`] builds reference
//! configurations, [`stencil`] measures displacements, [`potentials`]
//! provides site energies, [`predictor`] supplies far-field dislocation
//! fields, [`homogeneous`] linearises the perfect crystal, [`relax`]
//! minimises the energy difference, and [`analysis`] fits decay rates.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod homogeneous;
pub mod lattice;
pub mod numerics;
pub mod potentials;
pub mod predictor;
pub mod relax;
pub mod spatial;
pub mod stencil;
pub mod vec3;

pub use error::{Error, Result};
