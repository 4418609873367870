//! Harmonic Beltrami signature: harmonic extension of the welding into the
//! disk, Beltrami coefficient on the signature grid, rotation normalization,
//! signature distance and alignment, and the end-to-end pipeline.

use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conformal::{
    extract_welding, normalize_interior, zipper_exterior, zipper_interior, WeldingMap,
};
use crate::error::{HbsError, Result};
use crate::field::ComplexField;
use crate::geometry::{make_disk_mask, GridGeometry};
use crate::image::GrayImage;
use crate::shape::{resample_boundary, trace_boundary};
use crate::transform::post_stn_rotate;

const TAU: f64 = std::f64::consts::TAU;
const PI: f64 = std::f64::consts::PI;

/// Modulus ceiling applied to the computed coefficient; overshoots are
/// clamped (argument preserved) and counted rather than treated as fatal.
pub const BELTRAMI_CLAMP: f64 = 0.999;

/// A circle homeomorphism sampled on the uniform angular grid t_m = 2pi m / M.
/// Values are unwrapped: strictly increasing, advancing by one turn per cycle.
#[derive(Debug, Clone)]
pub struct CircleMapSamples {
    values: Vec<f64>,
}

impl CircleMapSamples {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let m = values.len();
        if m < 4 {
            return Err(HbsError::InvalidParam(format!(
                "circle map needs at least 4 samples, got {m}"
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(HbsError::InvalidParam(format!(
                    "circle map sample {i} is not finite"
                )));
            }
            if i > 0 && values[i] <= values[i - 1] {
                return Err(HbsError::NonMonotoneWelding { index: i });
            }
        }
        if values[m - 1] - values[0] >= TAU {
            return Err(HbsError::NonMonotoneWelding { index: m - 1 });
        }
        Ok(CircleMapSamples { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Angular node t_m.
    pub fn node(&self, m: usize) -> f64 {
        TAU * m as f64 / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Resample the welding correspondence onto `nodes` uniform angles with a
/// monotone periodic cubic (harmonic-mean tangents). Monotonicity of the
/// input is preserved exactly; linear correspondences are reproduced exactly.
pub fn uniformize_welding(w: &WeldingMap, nodes: usize) -> Result<CircleMapSamples> {
    let n = w.sample_count();
    if n < 4 {
        return Err(HbsError::InvalidParam(format!(
            "welding has only {n} samples"
        )));
    }
    if nodes < 16 {
        return Err(HbsError::InvalidParam(format!(
            "need at least 16 output nodes, got {nodes}"
        )));
    }
    let beta = &w.exterior_angles;
    let alpha = &w.interior_angles;
    if alpha.len() != n {
        return Err(HbsError::GeometryMismatch(
            "welding angle arrays differ in length".into(),
        ));
    }
    // knots extended by one period: beta[n] = beta[0] + 2pi
    let knot = |k: usize| -> f64 {
        if k < n {
            beta[k]
        } else {
            beta[k - n] + TAU
        }
    };
    let val = |k: usize| -> f64 {
        if k < n {
            alpha[k]
        } else {
            alpha[k - n] + TAU
        }
    };
    let secant = |k: usize| -> Result<f64> {
        let h = knot(k + 1) - knot(k);
        let d = val(k + 1) - val(k);
        if !(h > 0.0) || !(d > 0.0) {
            return Err(HbsError::NonMonotoneWelding { index: k % n });
        }
        Ok(d / h)
    };
    // periodic tangents; harmonic mean keeps the cubic inside the monotone
    // region (m <= 2 min of the neighbor secants)
    let mut tangent = Vec::with_capacity(n + 1);
    for k in 0..n {
        let left = secant((k + n - 1) % n)?;
        let right = secant(k)?;
        tangent.push(2.0 * left * right / (left + right));
    }
    tangent.push(tangent[0]);

    let mut out = Vec::with_capacity(nodes);
    let base = beta[0];
    let mut seg = 0usize;
    for m in 0..nodes {
        let t_raw = TAU * m as f64 / nodes as f64;
        // shift into the covered period [beta0, beta0 + 2pi)
        let wraps = ((t_raw - base) / TAU).floor();
        let t = t_raw - TAU * wraps;
        // nodes are visited in increasing t order within each wrap class,
        // but the wrap shift can move us backwards; rescan from the start
        // when that happens
        if seg > 0 && knot(seg) > t {
            seg = 0;
        }
        while seg + 1 < n && knot(seg + 1) <= t {
            seg += 1;
        }
        // seg is now the interval with knot(seg) <= t < knot(seg+1)
        let h = knot(seg + 1) - knot(seg);
        let u = (t - knot(seg)) / h;
        let (u2, u3) = (u * u, u * u * u);
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        let g = val(seg) * h00
            + h * tangent[seg] * h10
            + val(seg + 1) * h01
            + h * tangent[seg + 1] * h11;
        out.push(g + TAU * wraps);
    }
    CircleMapSamples::new(out)
}

/// Harmonic extension of e^{i g(t)} as the Fourier sum of the sampled
/// boundary data: H(z) = sum_j c_j r^|j| e^{ij theta} with c_j the discrete
/// Fourier coefficients of the node values. Equal to the periodic trapezoid
/// Poisson sum to machine precision away from the rim, but free of the
/// aliasing blowup the raw kernel sum suffers as r -> 1.
struct FourierExtension {
    // index j + half for j in -half..=half
    coeff: Vec<Complex64>,
    half: usize,
}

impl FourierExtension {
    fn build(g: &CircleMapSamples) -> FourierExtension {
        let m = g.len();
        let half = m / 2;
        let width = 2 * half + 1;
        let mut coeff = vec![Complex64::new(0.0, 0.0); width];
        for (k, &gv) in g.values().iter().enumerate() {
            let t = TAU * k as f64 / m as f64;
            let e = Complex64::from_polar(1.0, gv);
            let step = Complex64::from_polar(1.0, -t);
            // e^{-ijt} walked from j = -half
            let mut cur = Complex64::from_polar(1.0, t * half as f64);
            for c in coeff.iter_mut() {
                *c += e * cur;
                cur *= step;
            }
        }
        let scale = 1.0 / m as f64;
        for c in coeff.iter_mut() {
            *c = c.scale(scale);
        }
        if m % 2 == 0 {
            // Nyquist mode is shared between the +-half bins
            coeff[0] = coeff[0].scale(0.5);
            coeff[width - 1] = coeff[width - 1].scale(0.5);
        }
        FourierExtension { coeff, half }
    }

    fn eval(&self, z: Complex64) -> Complex64 {
        let half = self.half;
        let zc = z.conj();
        let mut acc = self.coeff[half];
        let mut zp = Complex64::new(1.0, 0.0);
        let mut zn = Complex64::new(1.0, 0.0);
        for j in 1..=half {
            zp *= z;
            zn *= zc;
            acc += self.coeff[half + j] * zp + self.coeff[half - j] * zn;
        }
        acc
    }
}

/// Evaluate the harmonic extension H of e^{i g(t)} at an interior point.
pub fn poisson_extend(g: &CircleMapSamples, z: Complex64) -> Result<Complex64> {
    if z.norm_sqr() >= 1.0 {
        return Err(HbsError::InvalidParam(format!(
            "extension point {z} is not inside the open unit disk"
        )));
    }
    Ok(FourierExtension::build(g).eval(z))
}

/// Beltrami coefficient of the harmonic extension on the signature grid,
/// plus the number of pixels whose modulus had to be clamped.
#[derive(Debug, Clone)]
pub struct BeltramiGrid {
    pub field: ComplexField,
    pub clamped: usize,
}

/// Differentiate the harmonic extension of the welding on the disk grid:
/// mu = H_zbar / H_z by central differences where the full stencil is inside
/// |z| < 1 - 1e-6, one-sided differences pointing inward on the rim.
pub fn beltrami_on_grid(g: &CircleMapSamples, geometry: &GridGeometry) -> Result<BeltramiGrid> {
    let ext = FourierExtension::build(g);
    beltrami_from_extension(|z| ext.eval(z), geometry)
}

fn beltrami_from_extension<F>(eval: F, geometry: &GridGeometry) -> Result<BeltramiGrid>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let g = *geometry;
    let mask = make_disk_mask(&g);
    let w = g.width as i64;
    let h_count = g.height as i64;
    let len = g.len();

    let inside = |row: i64, col: i64| -> bool {
        row >= 0
            && col >= 0
            && row < h_count
            && col < w
            && mask.inside_at((row * w + col) as usize)
    };

    // evaluate H at every lattice point that a masked pixel's stencil can
    // touch; points on or outside the circle stay unevaluated
    let values: Vec<Option<Complex64>> = (0..len)
        .into_par_iter()
        .map(|idx| {
            let row = (idx as i64) / w;
            let col = (idx as i64) % w;
            let needed = inside(row, col)
                || inside(row - 1, col)
                || inside(row + 1, col)
                || inside(row, col - 1)
                || inside(row, col + 1);
            if !needed {
                return None;
            }
            let z = g.pixel_to_complex_unchecked(row as u32, col as u32);
            if z.norm_sqr() >= 1.0 {
                return None;
            }
            Some(eval(z))
        })
        .collect();

    let h = g.pixel_spacing();
    let central_bound = (1.0 - 1e-6) * (1.0 - 1e-6);
    let at = |row: i64, col: i64| -> Option<Complex64> {
        if row < 0 || col < 0 || row >= h_count || col >= w {
            None
        } else {
            values[(row * w + col) as usize]
        }
    };
    let central_ok = |row: i64, col: i64| -> bool {
        if row < 0 || col < 0 || row >= h_count || col >= w {
            return false;
        }
        let z = g.pixel_to_complex_unchecked(row as u32, col as u32);
        z.norm_sqr() < central_bound && values[(row * w + col) as usize].is_some()
    };

    let mut out = vec![Complex64::new(0.0, 0.0); len];
    let mut clamped = 0usize;
    for idx in 0..len {
        if !mask.inside_at(idx) {
            continue;
        }
        let row = (idx as i64) / w;
        let col = (idx as i64) % w;
        let z = g.pixel_to_complex_unchecked(row as u32, col as u32);
        let hc = values[idx].ok_or_else(|| {
            HbsError::DegenerateExtension(format!("masked pixel ({row}, {col}) not evaluable"))
        })?;

        let missing = |dr: i64, dc: i64| {
            HbsError::DegenerateExtension(format!(
                "stencil neighbor ({}, {}) unavailable",
                row + dr,
                col + dc
            ))
        };
        // columns step x by +h, rows step y by -h
        let hx = if central_ok(row, col - 1) && central_ok(row, col + 1) {
            (at(row, col + 1).unwrap() - at(row, col - 1).unwrap()) / (2.0 * h)
        } else if z.re > 0.0 {
            (hc - at(row, col - 1).ok_or_else(|| missing(0, -1))?) / h
        } else {
            (at(row, col + 1).ok_or_else(|| missing(0, 1))? - hc) / h
        };
        let hy = if central_ok(row - 1, col) && central_ok(row + 1, col) {
            (at(row - 1, col).unwrap() - at(row + 1, col).unwrap()) / (2.0 * h)
        } else if z.im > 0.0 {
            (hc - at(row + 1, col).ok_or_else(|| missing(1, 0))?) / h
        } else {
            (at(row - 1, col).ok_or_else(|| missing(-1, 0))? - hc) / h
        };

        let i = Complex64::new(0.0, 1.0);
        let hz = (hx - i * hy).scale(0.5);
        let hzb = (hx + i * hy).scale(0.5);
        if hz.norm() < 1e-12 {
            return Err(HbsError::DegenerateExtension(format!(
                "vanishing z-derivative at pixel ({row}, {col})"
            )));
        }
        let mut mu = hzb / hz;
        if mu.norm() >= BELTRAMI_CLAMP {
            mu = Complex64::from_polar(BELTRAMI_CLAMP, mu.arg());
            clamped += 1;
        }
        out[idx] = mu;
    }
    let field = ComplexField::new(g, out)?;
    Ok(BeltramiGrid { field, clamped })
}

/// Result of moving a field into its canonical rotational frame.
#[derive(Debug, Clone)]
pub struct RotationNormalization {
    pub field: ComplexField,
    pub theta: f64,
    /// Set when the field integral is too small to define a rotation; the
    /// field is returned unchanged in that case.
    pub degenerate: bool,
}

/// Rotate the field domain (and phase) so that the mask integral of B is
/// real positive and the integral of B/z has argument in [0, pi).
///
/// The action is B -> B(e^{i theta} z) e^{-2i theta}; the first condition
/// fixes theta mod pi, the second picks the representative.
pub fn normalize_rotation(field: &ComplexField) -> Result<RotationNormalization> {
    let i1 = field.integral();
    if i1.norm() < 1e-9 {
        return Ok(RotationNormalization {
            field: field.clone(),
            theta: 0.0,
            degenerate: true,
        });
    }
    let theta0 = i1.arg() / 2.0;
    let i2 = field.integral_over_z();
    let mut theta = if (i2.arg() - theta0).rem_euclid(TAU) < PI {
        theta0
    } else {
        theta0 + PI
    };
    // The resample behind the rotation perturbs the integral, so the
    // closed-form angle leaves an argument residual near 1e-3. Refine the
    // angle against the resampled field; every pass resamples the original,
    // so nothing smooths twice.
    let mut rotated = post_stn_rotate(field, theta, true);
    for _ in 0..8 {
        let residual = rotated.integral().arg();
        if residual.abs() < 1e-12 {
            break;
        }
        theta += residual / 2.0;
        rotated = post_stn_rotate(field, theta, true);
    }
    Ok(RotationNormalization {
        field: rotated,
        theta,
        degenerate: false,
    })
}

/// Mean squared pointwise difference over the disk mask.
pub fn hbs_distance(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    if a.geometry != b.geometry {
        return Err(HbsError::GeometryMismatch(
            "signature fields live on different grids".into(),
        ));
    }
    let mask = a.mask();
    let av = a.values();
    let bv = b.values();
    let mut acc = 0.0;
    for idx in 0..av.len() {
        if mask.inside_at(idx) {
            acc += (av[idx] - bv[idx]).norm_sqr();
        }
    }
    Ok(acc / mask.inside_count() as f64)
}

/// A field rotated into the frame that best matches a reference.
#[derive(Debug, Clone)]
pub struct RotationAlignment {
    pub field: ComplexField,
    pub theta: f64,
    pub distance: f64,
}

/// Minimize hbs_distance(rotate(b, theta), reference) over theta: 360-point
/// grid search refined by golden-section to 1e-4 rad.
pub fn align_rotation(b: &ComplexField, reference: &ComplexField) -> Result<RotationAlignment> {
    align_rotation_with(b, reference, true)
}

/// Alignment with an explicit choice of whether the rotation multiplies in
/// the e^{-2i theta} phase factor (the coefficient transformation law) or
/// rotates the domain alone.
pub fn align_rotation_with(
    b: &ComplexField,
    reference: &ComplexField,
    phase_correct: bool,
) -> Result<RotationAlignment> {
    if b.geometry != reference.geometry {
        return Err(HbsError::GeometryMismatch(
            "signature fields live on different grids".into(),
        ));
    }
    let eval = |theta: f64| -> f64 {
        let rotated = post_stn_rotate(b, theta, phase_correct);
        hbs_distance(&rotated, reference).expect("same geometry by construction")
    };

    let coarse = 360usize;
    let grid: Vec<(f64, f64)> = (0..coarse)
        .into_par_iter()
        .map(|j| {
            let theta = -PI + TAU * j as f64 / coarse as f64;
            (eval(theta), theta)
        })
        .collect();
    let mut best = grid[0];
    for &cand in &grid[1..] {
        if cand.0 < best.0 {
            best = cand;
        }
    }

    // golden-section refinement within one grid cell on either side
    let delta = TAU / coarse as f64;
    let mut lo = best.1 - delta;
    let mut hi = best.1 + delta;
    let inv_phi = 0.618_033_988_749_894_9;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = eval(x1);
    let mut f2 = eval(x2);
    while hi - lo > 1e-4 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = eval(x2);
        }
    }
    let mut theta = 0.5 * (lo + hi);
    let mut dist = eval(theta);
    // the refined point can only improve on the coarse winner
    if best.0 < dist {
        theta = best.1;
        dist = best.0;
    }
    Ok(RotationAlignment {
        field: post_stn_rotate(b, theta, phase_correct),
        theta,
        distance: dist,
    })
}

/// Pipeline parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HbsConfig {
    /// Boundary resampling count fed to the conformal stage.
    pub boundary_samples: usize,
    /// Uniform angular nodes for the welding resample / harmonic extension.
    pub welding_nodes: usize,
    /// Signature grid.
    pub geometry: GridGeometry,
}

impl Default for HbsConfig {
    fn default() -> Self {
        HbsConfig {
            boundary_samples: 400,
            welding_nodes: 1024,
            geometry: GridGeometry::signature_default(),
        }
    }
}

impl HbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.boundary_samples < 8 {
            return Err(HbsError::InvalidParam(format!(
                "boundary_samples must be at least 8, got {}",
                self.boundary_samples
            )));
        }
        if self.welding_nodes < 16 {
            return Err(HbsError::InvalidParam(format!(
                "welding_nodes must be at least 16, got {}",
                self.welding_nodes
            )));
        }
        Ok(())
    }
}

/// Wall-clock milliseconds per pipeline stage.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub trace_ms: f64,
    pub resample_ms: f64,
    pub interior_ms: f64,
    pub exterior_ms: f64,
    pub welding_ms: f64,
    pub extension_ms: f64,
    pub normalize_ms: f64,
    pub total_ms: f64,
}

/// Residuals of the three normalization conditions: modulus of the discrete
/// boundary integral of the interior map, argument of the field integral,
/// and argument of the field moment integral (reported in [0, 2pi)).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConditionResiduals {
    pub boundary_integral: f64,
    pub arg_field_integral: f64,
    pub arg_moment_integral: f64,
}

/// Output of the signature pipeline.
#[derive(Debug, Clone)]
pub struct HbsResult {
    pub hbs: ComplexField,
    pub rotation_applied: f64,
    pub rotation_degenerate: bool,
    pub clamp_warnings: usize,
    pub condition_residuals: ConditionResiduals,
    pub timings: StageTimings,
}

/// Compute the harmonic Beltrami signature of a binary shape image.
pub fn compute_hbs(image: &GrayImage, config: &HbsConfig) -> Result<HbsResult> {
    config.validate()?;
    let start = Instant::now();
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let poly = trace_boundary(image)?;
    timings.trace_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let poly = resample_boundary(&poly, config.boundary_samples)?;
    timings.resample_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let interior = normalize_interior(zipper_interior(&poly)?, &poly)?;
    timings.interior_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let exterior = zipper_exterior(&poly)?;
    timings.exterior_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let welding = extract_welding(&interior, &exterior, &poly)?;
    let samples = uniformize_welding(&welding, config.welding_nodes)?;
    timings.welding_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let grid = beltrami_on_grid(&samples, &config.geometry)?;
    timings.extension_ms = t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let rotation = normalize_rotation(&grid.field)?;
    timings.normalize_ms = t.elapsed().as_secs_f64() * 1e3;

    // residuals of the three normalization conditions on the final output;
    // the line integral uses the |dz| measure, matching normalize_interior
    let n = poly.len();
    let images = interior.boundary_images();
    let mut boundary_integral = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let prev = (poly.vertices[k] - poly.vertices[(k + n - 1) % n]).norm();
        let next = (poly.vertices[(k + 1) % n] - poly.vertices[k]).norm();
        boundary_integral += images[k].scale(0.5 * (prev + next));
    }
    let i1 = rotation.field.integral();
    let i2 = rotation.field.integral_over_z();
    let condition_residuals = ConditionResiduals {
        boundary_integral: boundary_integral.norm(),
        arg_field_integral: i1.arg(),
        arg_moment_integral: i2.arg().rem_euclid(TAU),
    };

    timings.total_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(HbsResult {
        hbs: rotation.field,
        rotation_applied: rotation.theta,
        rotation_degenerate: rotation.degenerate,
        clamp_warnings: grid.clamped,
        condition_residuals,
        timings,
    })
}
