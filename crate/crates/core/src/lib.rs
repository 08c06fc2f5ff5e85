//! Numerical laboratory for regularized Helmholtz cloaking.
//!
//! The crate solves exterior sound-soft scattering problems for small balls
//! (modal series) and thin cylinders (method of fundamental solutions),
//! measures how visible the obstacle is in the observation annulus
//! `2 < |x| < 5`, builds the transformation-optics material tensors, and
//! audits the analytic claims that underpin those schemes.

pub mod analytic_ball;
pub mod cloak_transform;
pub mod error;
pub mod experiments;
pub mod selftest;
pub mod numkit;

pub use error::{Error, Result};
pub mod fields;
pub mod mfs_cylinder;
pub mod vector;

pub use fields::{Dim, FieldSample, PointSource, PointSourceSet, SourceProfile, Wavenumber};
pub use vector::Point;
