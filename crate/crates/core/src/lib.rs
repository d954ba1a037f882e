//! Simulation and metric kernels for frame-by-frame localized (FFL)
//! nanoscopy point sets.
//!
//! The crate synthesizes localization sets from ground-truth emitters
//! ([`activation`], [`localization`]), evaluates the root mean square
//! minimum distance between point sets ([`metric`]), collapses per-emitter
//! blocks by averaging ([`averaging`]), and provides the closed-form
//! reference values the simulations are checked against ([`theory`],
//! [`lattice`]).

pub mod activation;
pub mod averaging;
pub mod error;
pub mod lattice;
pub mod localization;
pub mod metric;
pub mod point;
pub mod rng;
pub mod theory;

pub use error::{Error, Result};
pub use point::{Point, PointSet, Space};
