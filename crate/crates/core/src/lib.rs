//! Numerical laboratory for free-boundary incompressible neo-Hookean
//! elastodynamics on a periodic slab `T^2 x [-1, f(x')]`.
//!
//! Layers, bottom-up: [`spectral`] (Fourier toolkit on the torus),
//! [`geometry`] (reference slab, harmonic coordinates), [`elliptic`]
//! (mapped boundary-value solves), [`dn`] (Dirichlet–Neumann operators and
//! their commutator representations), [`dynamics`] (state, pressure,
//! interface equations, time stepping), [`stability`] and [`energy`]
//! (diagnostics), [`config`] and [`harness`] (CLI plumbing).

pub mod config;
pub mod dn;
pub mod dynamics;
pub mod elliptic;
pub mod energy;
pub mod error;
mod fourier;
pub mod geometry;
pub mod harness;
pub mod krylov;
pub mod spectral;
pub mod stability;
pub mod vertical;

pub use error::{Error, Result};
pub use geometry::{BulkField, CoordinateMap, SlabGrid, VectorField};
pub use spectral::{Axis, InterfaceField};
