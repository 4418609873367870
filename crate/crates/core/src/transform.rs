//! Grid-sampling transforms and the loss formulas, as deterministic pure
//! functions. These double as forward oracles for learned replacements.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{HbsError, Result};
use crate::field::ComplexField;
use crate::hbs::{align_rotation, compute_hbs, hbs_distance, normalize_rotation, HbsConfig};
use crate::image::GrayImage;
use crate::shape::require_simply_connected;

/// Similarity pose: translation in centered y-up pixel units of the target
/// grid, positive scale, rotation in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityParams {
    pub dx: f64,
    pub dy: f64,
    pub scale: f64,
    pub theta: f64,
}

impl SimilarityParams {
    pub const IDENTITY: SimilarityParams = SimilarityParams {
        dx: 0.0,
        dy: 0.0,
        scale: 1.0,
        theta: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = self.dx.is_finite()
            && self.dy.is_finite()
            && self.theta.is_finite()
            && self.scale.is_finite()
            && self.scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(HbsError::InvalidParam(format!(
                "similarity scale must be finite and positive, got {:?}",
                self
            )))
        }
    }

    /// Row-major 2x3 source-from-target matrix.
    pub fn matrix(&self) -> AffineParams {
        let (s, c) = self.theta.sin_cos();
        AffineParams {
            m: [
                self.scale * c,
                self.scale * s,
                self.dx,
                -self.scale * s,
                self.scale * c,
                self.dy,
            ],
        }
    }
}

/// Six-parameter affine map in source-from-target convention:
/// x_s = m0 x_t + m1 y_t + m2, y_s = m3 x_t + m4 y_t + m5,
/// with (x, y) centered y-up pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineParams {
    pub m: [f64; 6],
}

impl AffineParams {
    pub const IDENTITY: AffineParams = AffineParams {
        m: [1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    };

    /// Determinant of the 2x2 linear block; nonpositive values mean the map
    /// folds or collapses orientation.
    pub fn det(&self) -> f64 {
        self.m[0] * self.m[4] - self.m[1] * self.m[3]
    }

    /// Matrix such that sampling with `self` and then `next` equals a single
    /// sampling pass with the result.
    pub fn and_then(&self, next: &AffineParams) -> AffineParams {
        let a = &self.m;
        let b = &next.m;
        AffineParams {
            m: [
                a[0] * b[0] + a[1] * b[3],
                a[0] * b[1] + a[1] * b[4],
                a[0] * b[2] + a[1] * b[5] + a[2],
                a[3] * b[0] + a[4] * b[3],
                a[3] * b[1] + a[4] * b[4],
                a[3] * b[2] + a[4] * b[5] + a[5],
            ],
        }
    }

    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        (
            self.m[0] * x + self.m[1] * y + self.m[2],
            self.m[3] * x + self.m[4] * y + self.m[5],
        )
    }
}

fn source_pixel(geometry: &crate::geometry::GridGeometry, p: &AffineParams, row: u32, col: u32) -> (f64, f64) {
    let xt = col as f64 + 0.5 - geometry.center.0;
    let yt = geometry.center.1 - (row as f64 + 0.5);
    let (xs, ys) = p.apply(xt, yt);
    // back to fractional (row, col)
    (geometry.center.1 - ys - 0.5, xs + geometry.center.0 - 0.5)
}

/// Bilinear resampling of an image under an affine source-from-target map,
/// zero-padded outside the grid.
pub fn affine_sample_image(src: &GrayImage, p: &AffineParams) -> GrayImage {
    let g = src.geometry;
    let mut out = GrayImage::zeros(g);
    for row in 0..g.height {
        for col in 0..g.width {
            let (r, c) = source_pixel(&g, p, row, col);
            out.set(row, col, src.sample_bilinear(r, c));
        }
    }
    out
}

/// Field counterpart of [`affine_sample_image`]; the two real planes are
/// resampled independently and the disk mask is re-applied.
pub fn affine_sample_field(src: &ComplexField, p: &AffineParams) -> ComplexField {
    let g = src.geometry;
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    for row in 0..g.height {
        for col in 0..g.width {
            let (r, c) = source_pixel(&g, p, row, col);
            let xs = (c + 0.5 - g.center.0) / g.pixels_per_unit;
            let ys = (g.center.1 - (r + 0.5)) / g.pixels_per_unit;
            values[(row * g.width + col) as usize] =
                src.sample_bilinear(Complex64::new(xs, ys));
        }
    }
    ComplexField::new(g, values).expect("resampled field has grid dimensions")
}

/// Similarity-posed resampling (the classical stand-in for a pre-placement
/// spatial transformer).
pub fn pre_stn_transform(image: &GrayImage, p: &SimilarityParams) -> Result<GrayImage> {
    p.validate()?;
    Ok(affine_sample_image(image, &p.matrix()))
}

/// Rotate a disk field's domain by theta and, when `phase_correct` is set,
/// multiply values by e^{-2i theta} so the result transforms like a Beltrami
/// coefficient. Mask-aware bilinear sampling keeps the rim from bleeding the
/// exterior zeros inward.
pub fn post_stn_rotate(field: &ComplexField, theta: f64, phase_correct: bool) -> ComplexField {
    let g = field.geometry;
    let rot = Complex64::from_polar(1.0, theta);
    let phase = if phase_correct {
        Complex64::from_polar(1.0, -2.0 * theta)
    } else {
        Complex64::new(1.0, 0.0)
    };
    let mask = field.mask();
    let mut values = vec![Complex64::new(0.0, 0.0); g.len()];
    for row in 0..g.height {
        for col in 0..g.width {
            if !mask.inside(row, col) {
                continue;
            }
            let z = g.pixel_to_complex_unchecked(row, col);
            values[(row * g.width + col) as usize] =
                field.sample_bilinear_masked(rot * z) * phase;
        }
    }
    ComplexField::new(g, values).expect("rotated field has grid dimensions")
}

/// Distance between a prediction and a reference brought into the prediction's
/// rotational frame.
pub fn loss_hbs(predicted: &ComplexField, reference: &ComplexField, theta: f64) -> Result<f64> {
    hbs_distance(predicted, &post_stn_rotate(reference, theta, true))
}

/// Fixed-point defect of rotation normalization: zero exactly when the field
/// is already in its canonical rotational frame.
pub fn loss_post(field: &ComplexField) -> Result<f64> {
    let norm = normalize_rotation(field)?;
    hbs_distance(&norm.field, field)
}

pub const DEFAULT_LOSS_LAMBDA_POST: f64 = 0.1;

/// Rotation-aligned distance plus a weighted normalization defect.
pub fn loss_total(
    predicted: &ComplexField,
    reference: &ComplexField,
    lambda_post: f64,
) -> Result<f64> {
    if !(lambda_post >= 0.0) {
        return Err(HbsError::InvalidParam(format!(
            "lambda_post must be nonnegative, got {lambda_post}"
        )));
    }
    let aligned = align_rotation(reference, predicted)?;
    let base = loss_hbs(predicted, reference, aligned.theta)?;
    if lambda_post == 0.0 {
        return Ok(base);
    }
    Ok(base + lambda_post * loss_post(predicted)?)
}

/// Augment an upstream loss with the aligned signature distance of a candidate
/// mask against a reference signature. The mask must be simply connected.
pub fn loss_combined(
    base_loss: f64,
    mask: &GrayImage,
    reference_hbs: &ComplexField,
    lambda_hbs: f64,
    config: &HbsConfig,
) -> Result<f64> {
    if !(lambda_hbs >= 0.0) {
        return Err(HbsError::InvalidParam(format!(
            "lambda_hbs must be nonnegative, got {lambda_hbs}"
        )));
    }
    require_simply_connected(mask)?;
    if lambda_hbs == 0.0 {
        return Ok(base_loss);
    }
    let result = compute_hbs(mask, config)?;
    let aligned = align_rotation(reference_hbs, &result.hbs)?;
    Ok(base_loss + lambda_hbs * loss_hbs(&result.hbs, reference_hbs, aligned.theta)?)
}

/// Parameters of the soft thresholded relaxation: foreground drops toward
/// 1 - a, background rises toward b, plus seeded Gaussian noise, while the
/// 0.5 superlevel set stays exactly the original foreground.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SoftenParams {
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SoftenParams {
    fn default() -> Self {
        SoftenParams {
            a: 0.1,
            b: 0.1,
            epsilon: 1e-3,
            noise_sigma: 0.05,
            seed: 0,
        }
    }
}

impl SoftenParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.2).contains(&self.a) || !(0.0..=0.2).contains(&self.b) {
            return Err(HbsError::InvalidParam(format!(
                "soften a, b must lie in [0, 0.2], got a={} b={}",
                self.a, self.b
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(HbsError::InvalidParam(format!(
                "soften epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(HbsError::InvalidParam(format!(
                "soften noise_sigma must be finite and nonnegative, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }
}

/// Soft relaxation of a binary image that leaves the thresholded shape intact.
pub fn soften(image: &GrayImage, p: &SoftenParams) -> Result<GrayImage> {
    p.validate()?;
    let g = image.geometry;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let normal = if p.noise_sigma > 0.0 {
        Some(Normal::new(0.0, p.noise_sigma).expect("validated sigma"))
    } else {
        None
    };
    let mut out = GrayImage::zeros(g);
    for row in 0..g.height {
        for col in 0..g.width {
            let n = normal.as_ref().map_or(0.0, |d| d.sample(&mut rng));
            let v = if image.is_foreground(row, col) {
                (1.0 - p.a + n).max(0.5).min(1.0)
            } else {
                (p.b + n).min(0.5 - p.epsilon).max(0.0)
            };
            out.set(row, col, v);
        }
    }
    Ok(out)
}
