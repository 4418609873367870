//! Grayscale images and file formats (binary PGM, grayscale PNG).

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{HbsError, Result};
use crate::geometry::GridGeometry;

/// Row-major grayscale image with values in [0, 1]. Foreground is value >= 0.5.
#[derive(Debug, Clone)]
pub struct GrayImage {
    pub geometry: GridGeometry,
    values: Vec<f64>,
}

impl GrayImage {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(HbsError::GeometryMismatch(format!(
                "expected {} samples, got {}",
                geometry.len(),
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 1.0) {
            return Err(HbsError::InvalidParam(format!(
                "image value {v} outside [0, 1]"
            )));
        }
        Ok(GrayImage { geometry, values })
    }

    pub fn zeros(geometry: GridGeometry) -> Self {
        let values = vec![0.0; geometry.len()];
        GrayImage { geometry, values }
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> f64 {
        self.values[self.geometry.index(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, v: f64) {
        let idx = self.geometry.index(row, col);
        self.values[idx] = v.clamp(0.0, 1.0);
    }

    #[inline]
    pub fn is_foreground(&self, row: u32, col: u32) -> bool {
        self.get(row, col) >= 0.5
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn foreground_count(&self) -> usize {
        self.values.iter().filter(|v| **v >= 0.5).count()
    }

    /// Bilinear sample at fractional (row, col); zero outside the grid.
    pub fn sample_bilinear(&self, row: f64, col: f64) -> f64 {
        let h = self.geometry.height as i64;
        let w = self.geometry.width as i64;
        let r0 = row.floor();
        let c0 = col.floor();
        let fr = row - r0;
        let fc = col - c0;
        let mut acc = 0.0;
        for (dr, wr) in [(0i64, 1.0 - fr), (1, fr)] {
            for (dc, wc) in [(0i64, 1.0 - fc), (1, fc)] {
                let rr = r0 as i64 + dr;
                let cc = c0 as i64 + dc;
                let weight = wr * wc;
                if weight == 0.0 {
                    continue;
                }
                if rr >= 0 && rr < h && cc >= 0 && cc < w {
                    acc += weight * self.get(rr as u32, cc as u32);
                }
            }
        }
        acc
    }
}

/// Read a grayscale image from a PGM (P5) or PNG file; values scale to [0, 1].
pub fn read_image(path: &Path) -> Result<GrayImage> {
    match extension(path) {
        Ext::Pgm => read_pgm(path),
        Ext::Png => read_png(path),
    }
}

/// Write a 16-bit grayscale image as PGM (P5) or PNG, by extension.
pub fn write_image(image: &GrayImage, path: &Path) -> Result<()> {
    match extension(path) {
        Ext::Pgm => write_pgm(image, path),
        Ext::Png => write_png(image, path),
    }
}

enum Ext {
    Pgm,
    Png,
}

fn extension(path: &Path) -> Ext {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ext::Png,
        _ => Ext::Pgm,
    }
}

fn read_pgm(path: &Path) -> Result<GrayImage> {
    let data = fs::read(path).map_err(|e| HbsError::io(path, e))?;
    let bad = |reason: &str| HbsError::ImageFormat {
        path: path.display().to_string(),
        reason: reason.to_string(),
    };
    if data.len() < 2 || &data[0..2] != b"P5" {
        return Err(bad("missing P5 magic"));
    }
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // skip whitespace and comments
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        *field = std::str::from_utf8(&data[start..pos])
            .unwrap()
            .parse()
            .map_err(|_| bad("bad header number"))?;
    }
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(bad("missing header terminator"));
    }
    pos += 1;
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if w == 0 || h == 0 {
        return Err(bad("zero dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(bad("unsupported maxval"));
    }
    let two_byte = maxval > 255;
    let need = w * h * if two_byte { 2 } else { 1 };
    if data.len() - pos < need {
        return Err(bad("truncated pixel data"));
    }
    let geometry = GridGeometry::with_defaults(w as u32, h as u32)?;
    let mut values = Vec::with_capacity(w * h);
    let raw = &data[pos..pos + need];
    if two_byte {
        for px in raw.chunks_exact(2) {
            let v = u16::from_be_bytes([px[0], px[1]]) as f64;
            values.push((v / maxval as f64).min(1.0));
        }
    } else {
        for &px in raw {
            values.push(px as f64 / maxval as f64);
        }
    }
    GrayImage::new(geometry, values)
}

fn write_pgm(image: &GrayImage, path: &Path) -> Result<()> {
    let g = &image.geometry;
    let mut out = Vec::with_capacity(g.len() * 2 + 32);
    write!(out, "P5\n{} {}\n65535\n", g.width, g.height).unwrap();
    for v in image.values() {
        let q = (v * 65535.0).round() as u16;
        out.extend_from_slice(&q.to_be_bytes());
    }
    fs::write(path, out).map_err(|e| HbsError::io(path, e))
}

fn read_png(path: &Path) -> Result<GrayImage> {
    let img = image::open(path).map_err(|e| HbsError::ImageFormat {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let gray = img.into_luma16();
    let (w, h) = (gray.width(), gray.height());
    if w == 0 || h == 0 {
        return Err(HbsError::ImageFormat {
            path: path.display().to_string(),
            reason: "zero dimension".into(),
        });
    }
    let geometry = GridGeometry::with_defaults(w, h)?;
    let values = gray.pixels().map(|p| p.0[0] as f64 / 65535.0).collect();
    GrayImage::new(geometry, values)
}

fn write_png(image: &GrayImage, path: &Path) -> Result<()> {
    let g = &image.geometry;
    let mut buf = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(g.width, g.height);
    for (row, col, px) in buf.enumerate_pixels_mut() {
        // enumerate_pixels yields (x, y)
        let v = image.get(col, row);
        px.0[0] = (v * 65535.0).round() as u16;
    }
    buf.save(path).map_err(|e| HbsError::ImageFormat {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}
