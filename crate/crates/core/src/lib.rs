//! Calibrated photometric stereo with a configurable multi-wing light panel.
//!
//! The pipeline runs from panel design ([`panel`]) and calibration
//! ([`geometry`]) through synthetic rendering ([`render`]), per-pixel normal
//! and albedo recovery ([`solver`]) and depth integration ([`integrate`]).
//! [`experiments`] sweeps the phase angle and ambient level on a synthetic
//! sphere.
//!
//! Image axes: `x` along columns, `y` down the rows, `z` toward the camera.
//! Intensities are on a 0 to 255 scale.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod image;
pub mod integrate;
pub mod io;
pub mod panel;
pub mod par;
pub mod render;
pub mod solver;

pub use error::{Error, Result};
pub use geometry::{Transform, TransformChain, UnitVector3};
pub use image::GrayImage;
pub use par::Execution;
pub use solver::{ImageStack, NormalAlbedoMap};
