//! Complex-valued fields on the unit disk and the `.hbs` container format.
//!
//! Layout of a `.hbs` file, all little-endian: magic "HBS1", u32 width,
//! u32 height, f64 pixels-per-unit, f64 center_x, f64 center_y, the real
//! plane row-major as f64, then the imaginary plane.

use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{HbsError, Result};
use crate::geometry::{make_disk_mask, DiskMask, GridGeometry};

const MAGIC: &[u8; 4] = b"HBS1";

/// Complex samples at pixel centers; exactly zero outside the unit-disk mask.
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub geometry: GridGeometry,
    values: Vec<Complex64>,
    mask: DiskMask,
}

impl ComplexField {
    /// Builds a field, forcing zeros outside the disk mask.
    pub fn new(geometry: GridGeometry, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(HbsError::GeometryMismatch(format!(
                "expected {} samples, got {}",
                geometry.len(),
                values.len()
            )));
        }
        let mask = make_disk_mask(&geometry);
        for (idx, v) in values.iter_mut().enumerate() {
            if !mask.inside_at(idx) {
                *v = Complex64::new(0.0, 0.0);
            }
        }
        Ok(ComplexField {
            geometry,
            values,
            mask,
        })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        let mask = make_disk_mask(&geometry);
        ComplexField {
            geometry,
            values: vec![Complex64::new(0.0, 0.0); geometry.len()],
            mask,
        }
    }

    /// Fills masked pixels from a function of the pixel-center coordinate.
    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(Complex64) -> Complex64) -> Self {
        let mask = make_disk_mask(&geometry);
        let mut values = vec![Complex64::new(0.0, 0.0); geometry.len()];
        for row in 0..geometry.height {
            for col in 0..geometry.width {
                let idx = geometry.index(row, col);
                if mask.inside_at(idx) {
                    values[idx] = f(geometry.pixel_to_complex_unchecked(row, col));
                }
            }
        }
        ComplexField {
            geometry,
            values,
            mask,
        }
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> Complex64 {
        self.values[self.geometry.index(row, col)]
    }

    /// Sets a masked pixel; writes outside the mask are dropped.
    #[inline]
    pub fn set(&mut self, row: u32, col: u32, v: Complex64) {
        let idx = self.geometry.index(row, col);
        if self.mask.inside_at(idx) {
            self.values[idx] = v;
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn mask(&self) -> &DiskMask {
        &self.mask
    }

    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    /// Mean modulus over masked pixels.
    pub fn mean_norm(&self) -> f64 {
        let n = self.mask.inside_count();
        if n == 0 {
            return 0.0;
        }
        let sum: f64 = self
            .values
            .iter()
            .enumerate()
            .filter(|(i, _)| self.mask.inside_at(*i))
            .map(|(_, v)| v.norm())
            .sum();
        sum / n as f64
    }

    /// Masked pixel sum of `value * pixel_area`, a discrete area integral.
    pub fn integral(&self) -> Complex64 {
        let area = self.geometry.pixel_spacing() * self.geometry.pixel_spacing();
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, v) in self.values.iter().enumerate() {
            if self.mask.inside_at(idx) {
                acc += v;
            }
        }
        acc * area
    }

    /// Masked pixel sum of `value / z * pixel_area`.
    pub fn integral_over_z(&self) -> Complex64 {
        let area = self.geometry.pixel_spacing() * self.geometry.pixel_spacing();
        let mut acc = Complex64::new(0.0, 0.0);
        for row in 0..self.geometry.height {
            for col in 0..self.geometry.width {
                let idx = self.geometry.index(row, col);
                if self.mask.inside_at(idx) {
                    let z = self.geometry.pixel_to_complex_unchecked(row, col);
                    acc += self.values[idx] / z;
                }
            }
        }
        acc * area
    }

    /// Bilinear sample of both planes at a complex point; zero outside the grid.
    pub fn sample_bilinear(&self, z: Complex64) -> Complex64 {
        let (row, col) = self.geometry.complex_to_pixel(z);
        let h = self.geometry.height as i64;
        let w = self.geometry.width as i64;
        let r0 = row.floor();
        let c0 = col.floor();
        let fr = row - r0;
        let fc = col - c0;
        let mut acc = Complex64::new(0.0, 0.0);
        for (dr, wr) in [(0i64, 1.0 - fr), (1, fr)] {
            for (dc, wc) in [(0i64, 1.0 - fc), (1, fc)] {
                let weight = wr * wc;
                if weight == 0.0 {
                    continue;
                }
                let rr = r0 as i64 + dr;
                let cc = c0 as i64 + dc;
                if rr >= 0 && rr < h && cc >= 0 && cc < w {
                    acc += weight * self.get(rr as u32, cc as u32);
                }
            }
        }
        acc
    }

    /// Bilinear sample over in-mask neighbors only, renormalized by the weight
    /// actually used. Avoids dragging rim values toward the exterior zeros;
    /// zero when no masked neighbor contributes.
    pub fn sample_bilinear_masked(&self, z: Complex64) -> Complex64 {
        let (row, col) = self.geometry.complex_to_pixel(z);
        let h = self.geometry.height as i64;
        let w = self.geometry.width as i64;
        let r0 = row.floor();
        let c0 = col.floor();
        let fr = row - r0;
        let fc = col - c0;
        let mut acc = Complex64::new(0.0, 0.0);
        let mut used = 0.0;
        for (dr, wr) in [(0i64, 1.0 - fr), (1, fr)] {
            for (dc, wc) in [(0i64, 1.0 - fc), (1, fc)] {
                let weight = wr * wc;
                if weight == 0.0 {
                    continue;
                }
                let rr = r0 as i64 + dr;
                let cc = c0 as i64 + dc;
                if rr >= 0 && rr < h && cc >= 0 && cc < w {
                    let idx = self.geometry.index(rr as u32, cc as u32);
                    if self.mask.inside_at(idx) {
                        acc += weight * self.values[idx];
                        used += weight;
                    }
                }
            }
        }
        if used > 0.0 {
            acc / used
        } else {
            Complex64::new(0.0, 0.0)
        }
    }
}

/// Write a field to the binary `.hbs` container. NaN inside the mask is rejected.
pub fn write_field(field: &ComplexField, path: &Path) -> Result<()> {
    for (idx, v) in field.values().iter().enumerate() {
        if field.mask().inside_at(idx) && (!v.re.is_finite() || !v.im.is_finite()) {
            return Err(HbsError::FieldFormat {
                path: path.display().to_string(),
                reason: format!("non-finite value at masked pixel {idx}"),
            });
        }
    }
    let g = &field.geometry;
    let mut out = Vec::with_capacity(32 + g.len() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&g.width.to_le_bytes());
    out.extend_from_slice(&g.height.to_le_bytes());
    out.extend_from_slice(&g.pixels_per_unit.to_le_bytes());
    out.extend_from_slice(&g.center.0.to_le_bytes());
    out.extend_from_slice(&g.center.1.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
    }
    for v in field.values() {
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(path, out).map_err(|e| HbsError::io(path, e))
}

/// Read a `.hbs` field; bad magic, dimension mismatch, or NaN payload are errors.
pub fn read_field(path: &Path) -> Result<ComplexField> {
    let data = fs::read(path).map_err(|e| HbsError::io(path, e))?;
    let bad = |reason: String| HbsError::FieldFormat {
        path: path.display().to_string(),
        reason,
    };
    if data.len() < 36 {
        return Err(bad("file shorter than header".into()));
    }
    if &data[0..4] != MAGIC {
        return Err(bad("bad magic".into()));
    }
    let width = u32::from_le_bytes(data[4..8].try_into().unwrap());
    let height = u32::from_le_bytes(data[8..12].try_into().unwrap());
    let ppu = f64::from_le_bytes(data[12..20].try_into().unwrap());
    let cx = f64::from_le_bytes(data[20..28].try_into().unwrap());
    let cy = f64::from_le_bytes(data[28..36].try_into().unwrap());
    let geometry = GridGeometry::new(width, height, ppu, (cx, cy))
        .map_err(|e| bad(format!("bad geometry: {e}")))?;
    let n = geometry.len();
    let need = 36 + 16 * n;
    if data.len() != need {
        return Err(bad(format!(
            "dimension mismatch: {}x{} needs {} bytes, file has {}",
            width,
            height,
            need,
            data.len()
        )));
    }
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let re = f64::from_le_bytes(data[36 + 8 * i..44 + 8 * i].try_into().unwrap());
        let im =
            f64::from_le_bytes(data[36 + 8 * (n + i)..44 + 8 * (n + i)].try_into().unwrap());
        if re.is_nan() || im.is_nan() {
            return Err(bad(format!("NaN payload at sample {i}")));
        }
        values.push(Complex64::new(re, im));
    }
    ComplexField::new(geometry, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> ComplexField {
        ComplexField::from_fn(GridGeometry::signature_default(), |z| {
            Complex64::new(0.3 * z.re - 0.1 * z.im, 0.2 * z.im * z.re)
        })
    }

    #[test]
    fn zero_outside_mask_is_enforced() {
        let g = GridGeometry::signature_default();
        let values = vec![Complex64::new(7.0, -3.0); g.len()];
        let f = ComplexField::new(g, values).unwrap();
        assert_eq!(f.get(0, 0), Complex64::new(0.0, 0.0));
        assert_eq!(f.get(63, 63), Complex64::new(7.0, -3.0));
        let mut f2 = ComplexField::zeros(g);
        f2.set(0, 0, Complex64::new(1.0, 1.0));
        assert_eq!(f2.get(0, 0), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn hbs_round_trip_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.hbs");
        let f = sample_field();
        write_field(&f, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.geometry, f.geometry);
        for (a, b) in f.values().iter().zip(back.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        let bytes1 = fs::read(&path).unwrap();
        write_field(&back, &path).unwrap();
        let bytes2 = fs::read(&path).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn read_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.hbs");
        let f = sample_field();
        write_field(&f, &path).unwrap();
        let good = fs::read(&path).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        fs::write(&path, &bad_magic).unwrap();
        assert!(matches!(
            read_field(&path),
            Err(HbsError::FieldFormat { .. })
        ));

        let truncated = &good[..good.len() - 8];
        fs::write(&path, truncated).unwrap();
        assert!(read_field(&path).is_err());

        let mut nan = good.clone();
        // poison a masked pixel: row 64, col 64 is well inside the disk
        let idx = 64 * 128 + 64;
        nan[36 + 8 * idx..44 + 8 * idx].copy_from_slice(&f64::NAN.to_le_bytes());
        fs::write(&path, &nan).unwrap();
        assert!(read_field(&path).is_err());
    }

    #[test]
    fn write_rejects_nan_inside_mask() {
        let dir = tempfile::tempdir().unwrap();
        let g = GridGeometry::signature_default();
        let mut f = ComplexField::zeros(g);
        f.set(64, 64, Complex64::new(f64::NAN, 0.0));
        assert!(write_field(&f, &dir.path().join("bad.hbs")).is_err());
    }

    #[test]
    fn integrals_match_hand_sums() {
        let f = sample_field();
        let area = f.geometry.pixel_spacing().powi(2);
        let mut s = Complex64::new(0.0, 0.0);
        for row in 0..128 {
            for col in 0..128 {
                s += f.get(row, col);
            }
        }
        let i1 = f.integral();
        assert!((i1 - s * area).norm() < 1e-12);
    }
}
