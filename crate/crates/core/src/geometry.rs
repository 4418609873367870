//! Pixel grids and their embedding into the complex plane.
//!
//! Pixel (row, col) of a grid maps to the center of its cell, with the y axis
//! pointing up: z = ((col + 0.5 - cx) / ppu, (cy - (row + 0.5)) / ppu).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{HbsError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub width: u32,
    pub height: u32,
    /// Pixels per complex unit; the unit disk has radius `pixels_per_unit` pixels.
    pub pixels_per_unit: f64,
    /// Grid center in pixel coordinates (cx along columns, cy along rows).
    pub center: (f64, f64),
}

impl GridGeometry {
    pub fn new(width: u32, height: u32, pixels_per_unit: f64, center: (f64, f64)) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(HbsError::InvalidGeometry(format!(
                "zero-sized grid {width}x{height}"
            )));
        }
        if !pixels_per_unit.is_finite() || pixels_per_unit <= 0.0 {
            return Err(HbsError::InvalidGeometry(format!(
                "pixels_per_unit must be positive, got {pixels_per_unit}"
            )));
        }
        if !center.0.is_finite() || !center.1.is_finite() {
            return Err(HbsError::InvalidGeometry("non-finite center".into()));
        }
        Ok(GridGeometry {
            width,
            height,
            pixels_per_unit,
            center,
        })
    }

    /// Square grid with the default scale (50 px per unit) centered geometrically.
    pub fn with_defaults(width: u32, height: u32) -> Result<Self> {
        GridGeometry::new(
            width,
            height,
            50.0,
            (width as f64 / 2.0, height as f64 / 2.0),
        )
    }

    /// 128x128 signature grid; the unit disk spans radius 50 px around (64, 64).
    pub fn signature_default() -> Self {
        GridGeometry::with_defaults(128, 128).expect("static geometry")
    }

    /// 256x256 shape-image grid.
    pub fn image_default() -> Self {
        GridGeometry::with_defaults(256, 256).expect("static geometry")
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, row: u32, col: u32) -> usize {
        row as usize * self.width as usize + col as usize
    }

    /// Grid spacing in complex units.
    #[inline]
    pub fn pixel_spacing(&self) -> f64 {
        1.0 / self.pixels_per_unit
    }

    /// Complex coordinate of the pixel center.
    pub fn pixel_to_complex(&self, row: u32, col: u32) -> Result<Complex64> {
        if row >= self.height || col >= self.width {
            return Err(HbsError::PixelOutOfRange {
                row,
                col,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.pixel_to_complex_unchecked(row, col))
    }

    #[inline]
    pub(crate) fn pixel_to_complex_unchecked(&self, row: u32, col: u32) -> Complex64 {
        let x = (col as f64 + 0.5 - self.center.0) / self.pixels_per_unit;
        let y = (self.center.1 - (row as f64 + 0.5)) / self.pixels_per_unit;
        Complex64::new(x, y)
    }

    /// Fractional (row, col) of a complex point; exact inverse of `pixel_to_complex`
    /// at pixel centers.
    #[inline]
    pub fn complex_to_pixel(&self, z: Complex64) -> (f64, f64) {
        let col = z.re * self.pixels_per_unit + self.center.0 - 0.5;
        let row = self.center.1 - z.im * self.pixels_per_unit - 0.5;
        (row, col)
    }

    /// Nearest pixel to a complex point, or None when it falls off the grid.
    pub fn nearest_pixel(&self, z: Complex64) -> Option<(u32, u32)> {
        let (row, col) = self.complex_to_pixel(z);
        let (r, c) = (row.round(), col.round());
        if r < 0.0 || c < 0.0 || r >= self.height as f64 || c >= self.width as f64 {
            return None;
        }
        Some((r as u32, c as u32))
    }

    /// Extent of the pixel-edge bounding box in complex units: (x_min, x_max, y_min, y_max).
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        let x0 = (0.0 - self.center.0) / self.pixels_per_unit;
        let x1 = (self.width as f64 - self.center.0) / self.pixels_per_unit;
        let y0 = (self.center.1 - self.height as f64) / self.pixels_per_unit;
        let y1 = (self.center.1 - 0.0) / self.pixels_per_unit;
        (x0, x1, y0, y1)
    }
}

/// Unit-disk membership of every pixel center, |z| < 1 strictly.
#[derive(Debug, Clone)]
pub struct DiskMask {
    pub geometry: GridGeometry,
    inside: Vec<bool>,
    inside_count: usize,
}

impl DiskMask {
    #[inline]
    pub fn inside(&self, row: u32, col: u32) -> bool {
        self.inside[self.geometry.index(row, col)]
    }

    #[inline]
    pub fn inside_at(&self, idx: usize) -> bool {
        self.inside[idx]
    }

    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.inside
    }
}

pub fn make_disk_mask(geometry: &GridGeometry) -> DiskMask {
    let mut inside = vec![false; geometry.len()];
    let mut count = 0usize;
    for row in 0..geometry.height {
        for col in 0..geometry.width {
            let z = geometry.pixel_to_complex_unchecked(row, col);
            let is_in = z.norm_sqr() < 1.0;
            if is_in {
                count += 1;
            }
            inside[geometry.index(row, col)] = is_in;
        }
    }
    DiskMask {
        geometry: *geometry,
        inside,
        inside_count: count,
    }
}
