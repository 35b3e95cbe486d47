//! Particle-in-cell simulation of the two-dimensional Vlasov–Poisson system
//! with a strong external magnetic field.
//!
//! The crate is organized bottom-up:
//!
//! * [`fields`] – plane vectors, field samples and field providers
//!   (analytic test fields, uniform fields, grid-interpolated fields).
//! * [`pushers`] – semi-implicit asymptotic-preserving particle pushers of
//!   order 1 to 3, their guiding-center limit schemes and an explicit RK4
//!   reference integrator.
//! * [`shape`] – B-spline shape functions, charge deposition and field
//!   interpolation.
//! * [`poisson`] – uniform grids and the 5-point Poisson solvers
//!   (periodic box, Dirichlet disc).
//! * [`engine`] – the PIC loop and the given-field single-particle loop.
//! * [`diagnostics`] – energies, azimuthal mode amplitudes, order fits.
//! * [`config`] / [`cli`] – key-value run configuration and the experiment
//!   subcommands.

pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod engine;
pub mod error;
pub mod fields;
pub mod output;
pub mod poisson;
pub mod pushers;
pub mod shape;

pub mod par;

pub use error::{Error, Result};
pub use fields::{FieldProvider, FieldSample, Vec2};
pub use par::Workers;
pub use pushers::{ParticleState, PusherConfig, Scheme};
