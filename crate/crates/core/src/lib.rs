//! Simulator and constraint calculator for a coherence-selective latent gauge
//! interaction.
//!
//! The crate is organized bottom-up: [`states`] builds grids, wavepackets and
//! density kernels; [`coarse`] applies the coarse-graining channel and the
//! momentum filter; [`current`] computes coherence densities and currents;
//! [`dynamics`] evolves states; [`kernels`] evaluates the benchmark kernels;
//! [`signals`] and [`constraints`] turn them into observables and coupling
//! bounds; [`cli`] drives everything from flat config files.

pub mod cli;
pub mod coarse;
pub mod constants;
pub mod constraints;
pub mod current;
pub mod dynamics;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod signals;
pub mod states;

pub use error::{QlgError, Result};
