//! Training-corpus generation: random star polygons, welding-derived shapes,
//! smooth boundary perturbation, similarity augmentation, softening, and
//! signature-labeled dataset output.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HbsError, Result};
use crate::field::{write_field, ComplexField};
use crate::geometry::GridGeometry;
use crate::hbs::{
    beltrami_on_grid, compute_hbs, normalize_rotation, CircleMapSamples, ConditionResiduals,
    HbsConfig,
};
use crate::image::{write_image, GrayImage};
use crate::reconstruct::shape_from_hbs;
use crate::shape::{
    rasterize, resample_boundary, trace_boundary, validate_shape, BoundaryPolygon, ShapeStatus,
    ShapeValidation,
};
use crate::transform::{pre_stn_transform, soften, SimilarityParams, SoftenParams};

const TAU: f64 = std::f64::consts::TAU;

/// Pixel size in complex units on the default grids (50 px per unit);
/// pixel-denominated knobs convert through this.
const UNITS_PER_PX: f64 = 1.0 / 50.0;

/// Fixed-increment hash for deriving independent per-entry seeds from a
/// master seed; splitmix64 finalizer.
fn mix_seed(master: u64, stream: u64) -> u64 {
    let mut z = master ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform_in(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Generation recipe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMethod {
    Polygon,
    Welding,
    /// Alternate polygon/welding per entry, an exact 50/50 split.
    Mixed,
}

/// Uniform draw ranges for the similarity augmentation (pixels, scale, rad).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AugmentRanges {
    pub dx: (f64, f64),
    pub dy: (f64, f64),
    pub scale: (f64, f64),
    pub theta: (f64, f64),
}

impl Default for AugmentRanges {
    fn default() -> Self {
        AugmentRanges {
            dx: (-20.0, 20.0),
            dy: (-20.0, 20.0),
            scale: (0.9, 1.15),
            theta: (-std::f64::consts::PI, std::f64::consts::PI),
        }
    }
}

impl AugmentRanges {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [
            ("dx", self.dx),
            ("dy", self.dy),
            ("scale", self.scale),
            ("theta", self.theta),
        ] {
            if !r.0.is_finite() || !r.1.is_finite() || r.1 < r.0 {
                return Err(HbsError::InvalidParam(format!(
                    "bad augment range {name}: ({}, {})",
                    r.0, r.1
                )));
            }
        }
        if self.scale.0 <= 0.0 {
            return Err(HbsError::InvalidParam(
                "augment scale range must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Dataset build configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenConfig {
    pub method: GenMethod,
    pub count: usize,
    pub seed: u64,
    /// Inclusive vertex-count range for polygon generation.
    pub polygon_points: (usize, usize),
    /// Inclusive Fourier-mode range for welding generation.
    pub welding_modes: (usize, usize),
    /// Std of the boundary perturbation in pixels; 0 disables.
    pub perturb_magnitude: f64,
    pub augment: Option<AugmentRanges>,
    /// Softening applied to the stored image; labels always come from the
    /// binary mask, and the per-entry noise seed is derived from `seed`.
    pub soften: Option<SoftenParams>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            method: GenMethod::Polygon,
            count: 16,
            seed: 0,
            polygon_points: (5, 16),
            welding_modes: (1, 4),
            perturb_magnitude: 0.0,
            augment: None,
            soften: None,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(HbsError::InvalidParam("count must be positive".into()));
        }
        if self.polygon_points.0 < 3 || self.polygon_points.1 < self.polygon_points.0 {
            return Err(HbsError::InvalidParam(format!(
                "bad polygon point range ({}, {})",
                self.polygon_points.0, self.polygon_points.1
            )));
        }
        if self.welding_modes.0 < 1 || self.welding_modes.1 < self.welding_modes.0 {
            return Err(HbsError::InvalidParam(format!(
                "bad welding mode range ({}, {})",
                self.welding_modes.0, self.welding_modes.1
            )));
        }
        if !self.perturb_magnitude.is_finite() || self.perturb_magnitude < 0.0 {
            return Err(HbsError::InvalidParam(
                "perturbation magnitude must be nonnegative".into(),
            ));
        }
        if let Some(r) = &self.augment {
            r.validate()?;
        }
        if let Some(s) = &self.soften {
            s.validate()?;
        }
        Ok(())
    }
}

/// Star-shaped polygon: n points uniform in the annulus 0.6..1.4 units about
/// the grid center, sorted clockwise by angle about their centroid. Redrawn
/// (deterministically) until the rasterized shape validates simply connected.
pub fn gen_polygon(seed: u64, n: usize) -> Result<BoundaryPolygon> {
    if n < 3 {
        return Err(HbsError::InvalidParam(format!(
            "polygon needs at least 3 points, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let geometry = GridGeometry::image_default();
    let mut last_error = String::new();
    for _attempt in 0..20 {
        let mut pts: Vec<Complex64> = (0..n)
            .map(|_| {
                let angle = rng.random_range(0.0..TAU);
                let radius = rng.random_range(0.6..1.4);
                Complex64::from_polar(radius, angle)
            })
            .collect();
        let centroid = pts.iter().sum::<Complex64>() / n as f64;
        // clockwise = descending angle in the y-up plane
        pts.sort_by(|a, b| {
            let ka = (a - centroid).arg();
            let kb = (b - centroid).arg();
            kb.partial_cmp(&ka).expect("finite angles")
        });
        // coincident angles would break the star property
        let mut distinct = true;
        for i in 0..n {
            let a = (pts[i] - centroid).arg();
            let b = (pts[(i + 1) % n] - centroid).arg();
            if (a - b).rem_euclid(TAU) < 1e-9 {
                distinct = false;
                break;
            }
        }
        if !distinct {
            last_error = "coincident vertex angles".into();
            continue;
        }
        let poly = BoundaryPolygon::new(pts)?;
        if !poly.is_simple() {
            last_error = "self-intersecting draw".into();
            continue;
        }
        // thin wedges can rasterize disconnected; keep only draws whose
        // image is usable downstream
        let image = rasterize(&poly, &geometry)?;
        let v = validate_shape(&image);
        if v.status == ShapeStatus::SimplyConnected {
            return Ok(poly);
        }
        last_error = format!("rasterization status {:?}", v.status);
    }
    Err(HbsError::DegenerateBoundary(format!(
        "no valid polygon in 20 draws (seed {seed}, n {n}): {last_error}"
    )))
}

/// Strictly monotone circle map g(t) = t + sum_m c_m sin(m t + phi_m), with
/// the coefficients rescaled until min g' > 0.05, sampled on 1024 nodes.
pub fn gen_monotone_circle_map(seed: u64, modes: usize) -> Result<CircleMapSamples> {
    if modes < 1 {
        return Err(HbsError::InvalidParam(
            "need at least one Fourier mode".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeff = Vec::with_capacity(modes);
    for m in 1..=modes {
        let c = rng.random_range(-0.6..0.6) / m as f64;
        let phi = rng.random_range(0.0..TAU);
        coeff.push((c, phi));
    }
    // derivative lower bound over a dense grid; rescale until safely monotone
    let min_slope = |coeff: &[(f64, f64)]| -> f64 {
        let dense = 4096;
        let mut worst = f64::MAX;
        for k in 0..dense {
            let t = TAU * k as f64 / dense as f64;
            let mut d = 1.0;
            for (m, (c, phi)) in coeff.iter().enumerate() {
                d += c * (m + 1) as f64 * ((m + 1) as f64 * t + phi).cos();
            }
            worst = worst.min(d);
        }
        worst
    };
    while min_slope(&coeff) <= 0.05 {
        for (c, _) in coeff.iter_mut() {
            *c *= 0.8;
        }
    }
    let nodes = 1024;
    let values = (0..nodes)
        .map(|k| {
            let t = TAU * k as f64 / nodes as f64;
            let mut g = t;
            for (m, (c, phi)) in coeff.iter().enumerate() {
                g += c * ((m + 1) as f64 * t + phi).sin();
            }
            g
        })
        .collect();
    CircleMapSamples::new(values)
}

/// Realize a welding as a shape: extend it harmonically, normalize the
/// rotation, and reconstruct the region from the signature field.
pub fn shape_from_welding(g: &CircleMapSamples) -> Result<GrayImage> {
    let grid = beltrami_on_grid(g, &GridGeometry::signature_default())?;
    let norm = normalize_rotation(&grid.field)?;
    shape_from_hbs(&norm.field)
}

const PERTURB_GRID: usize = 8;

/// Catmull-Rom weights for the four support points around parameter u.
fn catmull_rom(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [
        -0.5 * u3 + u2 - 0.5 * u,
        1.5 * u3 - 2.5 * u2 + 1.0,
        -1.5 * u3 + 2.0 * u2 + 0.5 * u,
        0.5 * u3 - 0.5 * u2,
    ]
}

/// Displace the boundary by a smooth random field: an 8x8 control grid of
/// Gaussian offsets (std = `magnitude` pixels) interpolated bicubically over
/// the polygon's bounding box. The polygon is resampled densely first; a
/// self-intersecting result is redrawn up to 20 times.
///
/// A fixed seed yields a displacement field exactly proportional to
/// `magnitude`, so perturbation families share geometry across magnitudes.
pub fn grid_perturb(poly: &BoundaryPolygon, magnitude: f64, seed: u64) -> Result<BoundaryPolygon> {
    if !magnitude.is_finite() || magnitude < 0.0 {
        return Err(HbsError::InvalidParam(format!(
            "perturbation magnitude {magnitude} must be nonnegative"
        )));
    }
    let dense = resample_boundary(poly, poly.len().max(256))?;
    if magnitude == 0.0 {
        return Ok(dense);
    }
    let v = &dense.vertices;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in v {
        x0 = x0.min(p.re);
        x1 = x1.max(p.re);
        y0 = y0.min(p.im);
        y1 = y1.max(p.im);
    }
    // pad so boundary points sit strictly inside the control lattice
    let pad_x = 0.05 * (x1 - x0).max(1e-9);
    let pad_y = 0.05 * (y1 - y0).max(1e-9);
    let (x0, x1) = (x0 - pad_x, x1 + pad_x);
    let (y0, y1) = (y0 - pad_y, y1 + pad_y);

    let sigma_units = magnitude * UNITS_PER_PX;
    let normal = Normal::new(0.0, sigma_units).map_err(|_| {
        HbsError::InvalidParam(format!("bad perturbation magnitude {magnitude}"))
    })?;

    for attempt in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, attempt));
        let mut control = [[Complex64::new(0.0, 0.0); PERTURB_GRID]; PERTURB_GRID];
        for row in control.iter_mut() {
            for c in row.iter_mut() {
                let dx = normal.sample(&mut rng);
                let dy = normal.sample(&mut rng);
                *c = Complex64::new(dx, dy);
            }
        }
        let displaced: Vec<Complex64> = v
            .iter()
            .map(|p| {
                let u = (p.re - x0) / (x1 - x0) * (PERTURB_GRID - 1) as f64;
                let w = (p.im - y0) / (y1 - y0) * (PERTURB_GRID - 1) as f64;
                let iu = (u.floor() as i64).clamp(0, (PERTURB_GRID - 2) as i64) as usize;
                let iw = (w.floor() as i64).clamp(0, (PERTURB_GRID - 2) as i64) as usize;
                let wu = catmull_rom(u - iu as f64);
                let ww = catmull_rom(w - iw as f64);
                let mut d = Complex64::new(0.0, 0.0);
                for (dj, wj) in ww.iter().enumerate() {
                    let gj = (iw + dj).saturating_sub(1).min(PERTURB_GRID - 1);
                    for (di, wi) in wu.iter().enumerate() {
                        let gi = (iu + di).saturating_sub(1).min(PERTURB_GRID - 1);
                        d += control[gj][gi].scale(wj * wi);
                    }
                }
                p + d
            })
            .collect();
        let candidate = BoundaryPolygon::new(displaced)?;
        if candidate.is_simple() {
            return Ok(candidate);
        }
    }
    Err(HbsError::DegenerateBoundary(format!(
        "perturbation (magnitude {magnitude} px, seed {seed}) self-intersects after 20 draws"
    )))
}

/// Random in-range similarity transform of the image, redrawn until the
/// foreground keeps a 4 px border margin (at most 50 tries).
pub fn augment(image: &GrayImage, ranges: &AugmentRanges, seed: u64) -> Result<GrayImage> {
    augment_with_params(image, ranges, seed).map(|(image, _)| image)
}

fn augment_with_params(
    image: &GrayImage,
    ranges: &AugmentRanges,
    seed: u64,
) -> Result<(GrayImage, SimilarityParams)> {
    ranges.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..50 {
        let params = SimilarityParams {
            dx: uniform_in(&mut rng, ranges.dx),
            dy: uniform_in(&mut rng, ranges.dy),
            scale: uniform_in(&mut rng, ranges.scale),
            theta: uniform_in(&mut rng, ranges.theta),
        };
        let candidate = pre_stn_transform(image, &params)?;
        if foreground_clears_border(&candidate, 4) {
            return Ok((candidate, params));
        }
    }
    Err(HbsError::GenerationFailed {
        index: 0,
        provenance: format!("augment seed {seed}"),
        reason: "no in-frame similarity draw in 50 tries".into(),
    })
}

fn foreground_clears_border(image: &GrayImage, margin: u32) -> bool {
    let g = image.geometry;
    if g.width <= 2 * margin || g.height <= 2 * margin {
        return false;
    }
    let mut any = false;
    for row in 0..g.height {
        for col in 0..g.width {
            if image.is_foreground(row, col) {
                if row < margin
                    || col < margin
                    || row >= g.height - margin
                    || col >= g.width - margin
                {
                    return false;
                }
                any = true;
            }
        }
    }
    any
}

/// What produced a dataset entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Provenance {
    pub method: String,
    pub entry_seed: u64,
    pub attempt: u32,
    pub polygon_points: Option<usize>,
    pub welding_modes: Option<usize>,
    pub perturb_magnitude: f64,
    pub augment: Option<SimilarityParams>,
    pub softened: bool,
}

/// One manifest line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub image_path: String,
    pub hbs_path: String,
    pub provenance: Provenance,
    pub validation: ShapeValidation,
    pub hbs_residuals: ConditionResiduals,
    pub rotation_applied: f64,
    pub rotation_degenerate: bool,
    pub clamp_warnings: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestHeader<'a> {
    schema: &'a str,
    count: usize,
    seed: u64,
    method: GenMethod,
}

/// A built dataset: manifest path plus the parsed entries.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub path: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

struct BuiltEntry {
    stored_image: GrayImage,
    hbs: ComplexField,
    manifest: ManifestEntry,
}

fn generate_entry(index: usize, config: &GenConfig, hbs_config: &HbsConfig) -> Result<BuiltEntry> {
    let entry_seed = mix_seed(config.seed, index as u64);
    let method = match config.method {
        GenMethod::Polygon => GenMethod::Polygon,
        GenMethod::Welding => GenMethod::Welding,
        GenMethod::Mixed => {
            if index % 2 == 0 {
                GenMethod::Polygon
            } else {
                GenMethod::Welding
            }
        }
    };

    let mut last_failure = String::new();
    for attempt in 0..5u32 {
        let attempt_seed = mix_seed(entry_seed, 100 + attempt as u64);
        let mut provenance = Provenance {
            method: match method {
                GenMethod::Polygon => "polygon".into(),
                GenMethod::Welding => "welding".into(),
                GenMethod::Mixed => unreachable!("resolved above"),
            },
            entry_seed,
            attempt,
            polygon_points: None,
            welding_modes: None,
            perturb_magnitude: config.perturb_magnitude,
            augment: None,
            softened: config.soften.is_some(),
        };
        let built = build_attempt(method, attempt_seed, config, hbs_config, &mut provenance);
        match built {
            Ok((stored_image, validation, result)) => {
                return Ok(BuiltEntry {
                    stored_image,
                    hbs: result.hbs,
                    manifest: ManifestEntry {
                        index,
                        image_path: format!("shape_{index:05}.pgm"),
                        hbs_path: format!("shape_{index:05}.hbs"),
                        provenance,
                        validation,
                        hbs_residuals: result.condition_residuals,
                        rotation_applied: result.rotation_applied,
                        rotation_degenerate: result.rotation_degenerate,
                        clamp_warnings: result.clamp_warnings,
                    },
                });
            }
            Err(e) => {
                last_failure = format!("attempt {attempt}: {e}");
            }
        }
    }
    Err(HbsError::GenerationFailed {
        index,
        provenance: format!(
            "method {:?}, entry seed {entry_seed}, config seed {}",
            method, config.seed
        ),
        reason: last_failure,
    })
}

type AttemptOutput = (GrayImage, ShapeValidation, crate::hbs::HbsResult);

fn build_attempt(
    method: GenMethod,
    attempt_seed: u64,
    config: &GenConfig,
    hbs_config: &HbsConfig,
    provenance: &mut Provenance,
) -> Result<AttemptOutput> {
    let mut param_rng = ChaCha8Rng::seed_from_u64(mix_seed(attempt_seed, 1));
    let mut image = match method {
        GenMethod::Polygon => {
            let n = param_rng.random_range(config.polygon_points.0..=config.polygon_points.1);
            provenance.polygon_points = Some(n);
            let poly = gen_polygon(mix_seed(attempt_seed, 2), n)?;
            rasterize(&poly, &GridGeometry::image_default())?
        }
        GenMethod::Welding => {
            let modes = param_rng.random_range(config.welding_modes.0..=config.welding_modes.1);
            provenance.welding_modes = Some(modes);
            let g = gen_monotone_circle_map(mix_seed(attempt_seed, 2), modes)?;
            shape_from_welding(&g)?
        }
        GenMethod::Mixed => unreachable!("resolved by caller"),
    };

    if config.perturb_magnitude > 0.0 {
        let poly = trace_boundary(&image)?;
        let perturbed = grid_perturb(&poly, config.perturb_magnitude, mix_seed(attempt_seed, 3))?;
        image = rasterize(&perturbed, &image.geometry)?;
    }
    if let Some(ranges) = &config.augment {
        let (augmented, params) = augment_with_params(&image, ranges, mix_seed(attempt_seed, 4))?;
        provenance.augment = Some(params);
        image = augmented;
    }

    let validation = validate_shape(&image);
    if validation.status != ShapeStatus::SimplyConnected {
        return Err(HbsError::NotSimplyConnected {
            status: validation.status,
            components: validation.component_count,
            holes: validation.hole_count,
        });
    }

    let result = compute_hbs(&image, hbs_config)?;
    if result.condition_residuals.boundary_integral >= 1e-5 {
        return Err(HbsError::InvalidBeltrami(format!(
            "normalization residual {:.3e} too large",
            result.condition_residuals.boundary_integral
        )));
    }

    let stored = match &config.soften {
        Some(params) => {
            let mut p = *params;
            p.seed = mix_seed(attempt_seed, 5);
            soften(&image, &p)?
        }
        None => image,
    };
    Ok((stored, validation, result))
}

/// Generate `config.count` labeled shapes into `out_dir`: one image, one
/// signature file, and one manifest line per entry. Byte-identical output
/// for a fixed config, independent of thread count; the first manifest line
/// is a schema header. Aborts on the first entry that cannot be generated.
pub fn build_dataset(config: &GenConfig, out_dir: &Path) -> Result<DatasetManifest> {
    config.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| HbsError::io(out_dir, e))?;
    let hbs_config = HbsConfig::default();

    let built: Vec<BuiltEntry> = (0..config.count)
        .into_par_iter()
        .map(|index| generate_entry(index, config, &hbs_config))
        .collect::<Result<Vec<_>>>()?;

    let manifest_path = out_dir.join("manifest.jsonl");
    let mut lines = Vec::with_capacity(config.count + 1);
    let header = ManifestHeader {
        schema: "dsv1",
        count: config.count,
        seed: config.seed,
        method: config.method,
    };
    lines.push(serde_json::to_string(&header).expect("header serializes"));

    let mut entries = Vec::with_capacity(config.count);
    for entry in &built {
        write_image(&entry.stored_image, &out_dir.join(&entry.manifest.image_path))?;
        write_field(&entry.hbs, &out_dir.join(&entry.manifest.hbs_path))?;
        lines.push(serde_json::to_string(&entry.manifest).expect("entry serializes"));
        entries.push(entry.manifest.clone());
    }

    let mut file = fs::File::create(&manifest_path).map_err(|e| HbsError::io(&manifest_path, e))?;
    for line in &lines {
        writeln!(file, "{line}").map_err(|e| HbsError::io(&manifest_path, e))?;
    }
    Ok(DatasetManifest {
        path: manifest_path,
        entries,
    })
}

/// Parse a manifest written by [`build_dataset`].
pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| HbsError::io(path, e))?;
    let mut lines = text.lines();
    let header: serde_json::Value = match lines.next() {
        Some(line) => serde_json::from_str(line).map_err(|e| HbsError::FieldFormat {
            path: path.display().to_string(),
            reason: format!("bad manifest header: {e}"),
        })?,
        None => {
            return Err(HbsError::FieldFormat {
                path: path.display().to_string(),
                reason: "empty manifest".into(),
            })
        }
    };
    if header.get("schema").and_then(|s| s.as_str()) != Some("dsv1") {
        return Err(HbsError::FieldFormat {
            path: path.display().to_string(),
            reason: "unsupported manifest schema".into(),
        });
    }
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry =
            serde_json::from_str(line).map_err(|e| HbsError::FieldFormat {
                path: path.display().to_string(),
                reason: format!("bad manifest entry on line {}: {e}", i + 2),
            })?;
        entries.push(entry);
    }
    Ok(DatasetManifest {
        path: path.to_path_buf(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hbs::hbs_distance;

    #[test]
    fn polygon_generation_is_deterministic_and_simple() {
        let a = gen_polygon(42, 9).unwrap();
        let b = gen_polygon(42, 9).unwrap();
        assert_eq!(a.vertices, b.vertices);
        assert!(a.is_simple());
        assert!(a.signed_area() < 0.0, "clockwise convention");
        let c = gen_polygon(43, 9).unwrap();
        assert_ne!(a.vertices, c.vertices);
    }

    #[test]
    fn polygon_batch_rasterizes_simply_connected() {
        let g = GridGeometry::image_default();
        for seed in 0..60u64 {
            let n = 3 + (seed as usize) % 14;
            let poly = gen_polygon(seed, n).unwrap();
            let image = rasterize(&poly, &g).unwrap();
            let v = validate_shape(&image);
            assert_eq!(
                v.status,
                ShapeStatus::SimplyConnected,
                "seed {seed} n {n} -> {v:?}"
            );
        }
    }

    #[test]
    fn monotone_map_has_positive_slope_everywhere() {
        for seed in 0..10u64 {
            let g = gen_monotone_circle_map(seed, 4).unwrap();
            let v = g.values();
            for i in 1..v.len() {
                assert!(v[i] > v[i - 1], "seed {seed} flat at {i}");
            }
        }
        let a = gen_monotone_circle_map(7, 3).unwrap();
        let b = gen_monotone_circle_map(7, 3).unwrap();
        assert_eq!(a.values(), b.values());
    }

    #[test]
    fn perturb_zero_magnitude_is_resample_only() {
        let poly = gen_polygon(5, 8).unwrap();
        let out = grid_perturb(&poly, 0.0, 123).unwrap();
        let dense = resample_boundary(&poly, 256).unwrap();
        assert_eq!(out.vertices, dense.vertices);
    }

    #[test]
    fn perturb_is_deterministic_and_proportional() {
        let poly = gen_polygon(11, 10).unwrap();
        let a = grid_perturb(&poly, 2.0, 77).unwrap();
        let b = grid_perturb(&poly, 2.0, 77).unwrap();
        assert_eq!(a.vertices, b.vertices);
        // same seed, doubled magnitude: displacement doubles exactly
        let base = resample_boundary(&poly, 256).unwrap();
        let c = grid_perturb(&poly, 4.0, 77).unwrap();
        for i in 0..base.len() {
            let d1 = a.vertices[i] - base.vertices[i];
            let d2 = c.vertices[i] - base.vertices[i];
            assert!((d2 - d1.scale(2.0)).norm() < 1e-12);
        }
        assert!(a.is_simple());
    }

    fn polyline_hausdorff(a: &BoundaryPolygon, b: &BoundaryPolygon) -> f64 {
        let directed = |from: &BoundaryPolygon, to: &BoundaryPolygon| -> f64 {
            let n = to.len();
            from.vertices
                .iter()
                .map(|&p| {
                    (0..n)
                        .map(|i| {
                            let s = to.vertices[i];
                            let e = to.vertices[(i + 1) % n];
                            let d = e - s;
                            let len2 = d.norm_sqr();
                            let t = if len2 > 0.0 {
                                (((p - s).re * d.re + (p - s).im * d.im) / len2).clamp(0.0, 1.0)
                            } else {
                                0.0
                            };
                            (p - (s + d.scale(t))).norm()
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .fold(0.0, f64::max)
        };
        directed(a, b).max(directed(b, a))
    }

    #[test]
    fn perturb_small_magnitude_stays_close() {
        let poly = gen_polygon(3, 3).unwrap();
        let out = grid_perturb(&poly, 2.0, 9).unwrap();
        let base = resample_boundary(&poly, 256).unwrap();
        let d = polyline_hausdorff(&out, &base);
        assert!(d <= 4.0 * UNITS_PER_PX, "hausdorff {d}");
    }

    #[test]
    fn augment_keeps_margin_and_is_deterministic() {
        let poly = gen_polygon(21, 7).unwrap();
        let image = rasterize(&poly, &GridGeometry::image_default()).unwrap();
        let ranges = AugmentRanges::default();
        let a = augment(&image, &ranges, 31).unwrap();
        let b = augment(&image, &ranges, 31).unwrap();
        assert_eq!(a.values(), b.values());
        assert!(foreground_clears_border(&a, 4));

        let identity = AugmentRanges {
            dx: (0.0, 0.0),
            dy: (0.0, 0.0),
            scale: (1.0, 1.0),
            theta: (0.0, 0.0),
        };
        let same = augment(&image, &identity, 5).unwrap();
        let mut diff = 0usize;
        for (x, y) in same.values().iter().zip(image.values()) {
            if (x - y).abs() > 1e-9 {
                diff += 1;
            }
        }
        assert_eq!(diff, 0, "zero-width ranges must be the identity");
    }

    #[test]
    fn welding_shape_roundtrip_consistency() {
        let g = gen_monotone_circle_map(3, 2).unwrap();
        let image = shape_from_welding(&g).unwrap();
        let v = validate_shape(&image);
        assert_eq!(v.status, ShapeStatus::SimplyConnected);

        // prescribed signature vs the one re-extracted from the image
        let grid = beltrami_on_grid(&g, &GridGeometry::signature_default()).unwrap();
        let prescribed = normalize_rotation(&grid.field).unwrap().field;
        let recomputed = compute_hbs(&image, &HbsConfig::default()).unwrap();
        let d = hbs_distance(&recomputed.hbs, &prescribed).unwrap();
        assert!(d < 0.02, "welding consistency distance {d}");
    }

    #[test]
    fn dataset_build_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let config = GenConfig {
            method: GenMethod::Mixed,
            count: 4,
            seed: 12,
            ..GenConfig::default()
        };
        let first = build_dataset(&config, &dir.path().join("a")).unwrap();
        let second = build_dataset(&config, &dir.path().join("b")).unwrap();
        let ma = fs::read(&first.path).unwrap();
        let mb = fs::read(&second.path).unwrap();
        assert_eq!(ma, mb, "manifests differ between runs");
        for entry in &first.entries {
            let ia = fs::read(dir.path().join("a").join(&entry.image_path)).unwrap();
            let ib = fs::read(dir.path().join("b").join(&entry.image_path)).unwrap();
            assert_eq!(ia, ib);
            let ha = fs::read(dir.path().join("a").join(&entry.hbs_path)).unwrap();
            let hb = fs::read(dir.path().join("b").join(&entry.hbs_path)).unwrap();
            assert_eq!(ha, hb);
        }
        // 50/50 method split, exactly
        let polygons = first
            .entries
            .iter()
            .filter(|e| e.provenance.method == "polygon")
            .count();
        assert_eq!(polygons, 2);

        let parsed = read_manifest(&first.path).unwrap();
        assert_eq!(parsed.entries.len(), 4);
    }
}
