//! Transition times and capacities for diffusions in multiwell potentials,
//! including saddles with vanishing Hessian eigenvalues and the crossover
//! regimes around pitchfork and double-zero bifurcations.
//!
//! The crate is organised bottom-up:
//!
//! - [`quadrature`] adaptive Gauss-Kronrod integration used everywhere else
//! - [`special`] Gamma, normal CDF, Bessel functions and the crossover functions
//! - [`potentials`] potential models with exact or finite-difference derivatives
//! - [`landscape`] stationary points, saddle classification, grid gates
//! - [`kramers`] closed-form capacities and expected transition times
//! - [`capacity`] numerical capacity bounds on boxes around a saddle
//! - [`sde`] Euler-Maruyama first-hitting-time sampling

pub mod capacity;
pub mod error;
pub mod kramers;
pub mod landscape;
pub mod potentials;
pub mod quadrature;
pub mod sde;
pub mod special;

pub use error::{Error, Result};
