//! Harmonic Beltrami signatures (HBS) of simply connected planar shapes.
//!
//! A binary shape is traced to a boundary polygon, conformally welded through
//! interior and exterior disk maps, harmonically extended to the unit disk,
//! and differentiated into a Beltrami coefficient field. After normalization
//! the field is a similarity-invariant signature of the shape; a linear
//! Beltrami solver maps it back to a shape. The crate also ships the transform
//! and loss formulas used when training alignment networks against these
//! signatures, plus a labeled-dataset generator.

pub mod conformal;
pub mod datagen;
pub mod error;
pub mod field;
pub mod geometry;
pub mod hbs;
pub mod image;
pub mod reconstruct;
pub mod shape;
pub mod transform;

pub use error::{HbsError, Result};
pub use field::ComplexField;
pub use geometry::{DiskMask, GridGeometry};
pub use image::GrayImage;
