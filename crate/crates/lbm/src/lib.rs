//! D2Q9 lattice Boltzmann building blocks for two-dimensional transport
//! problems: advection-diffusion(-reaction) of a scalar and weakly
//! compressible flow of power-law (and Newtonian) fluids.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`], [`field`]: the velocity set and flat storage types.
//! * [`kernel`]: equilibria, BGK collision, reaction sources, streaming,
//!   and moment evaluation.
//! * [`rheology`]: strain-rate reconstruction from non-equilibrium moments
//!   and the power-law viscosity closure.
//! * [`bc`]: halfway bounce-back boundary rules (Dirichlet, zero-gradient,
//!   resting and moving walls) applied as a post-streaming pass.
//! * [`sim`]: time steppers that fuse the above into per-node loops.
//! * [`analysis`]: scalar diagnostics used by testers and validation.
//! * [`config`], [`task`]: the `key=value` tester configuration format and
//!   the built-in benchmark tasks with their markdown descriptions.
//! * [`vtk`], [`manifest`]: legacy-ASCII VTK snapshots and the checksummed
//!   output manifest.
//! * [`runner`]: runs a configured task end to end, producing snapshots,
//!   a metric series, and the manifest.
//!
//! All fields are stored in flat `Vec<f64>` row-major layouts with explicit
//! index helpers; distribution functions are stored as nine contiguous
//! planes so per-direction passes stay cache-friendly. Lattice units are
//! used throughout (dx = dt = 1).

pub mod analysis;
pub mod bc;
pub mod config;
pub mod error;
pub mod field;
pub mod kernel;
pub mod lattice;
pub mod manifest;
pub mod rheology;
pub mod runner;
pub mod sim;
pub mod task;
pub mod vtk;

pub use error::{Error, Result};
