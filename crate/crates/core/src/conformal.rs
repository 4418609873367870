//! Conformal maps of polygonal Jordan regions onto the unit disk, built with
//! the geodesic slit algorithm, plus the welding correspondence between the
//! interior and exterior maps.
//!
//! The interior map is assembled as a composition of elementary slit closures
//! in the upper half-plane: an initial square root opens the first edge, each
//! subsequent step closes the hyperbolic geodesic from the previous vertex
//! image to the next, and a terminal square closes the curve through the image
//! of the starting vertex. The exterior map reuses the same machinery on the
//! inverted polygon and is renormalized to fix infinity with positive real
//! derivative.

use num_complex::Complex64;

use crate::error::{HbsError, Result};
use crate::shape::{interior_point, BoundaryPolygon};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const TAU: f64 = std::f64::consts::TAU;

/// Square root with image in the closed upper half-plane.
fn sqrt_h(w: Complex64) -> Complex64 {
    let r = w.sqrt();
    if r.im < 0.0 {
        -r
    } else {
        r
    }
}

/// One stage of the composed map.
#[derive(Debug, Clone, Copy)]
enum Step {
    /// w = i * sqrt((z - tip)/(z - far)); far -> infinity, tip -> 0.
    Initial { far: Complex64, tip: Complex64 },
    /// Closes the geodesic from 0 to the current tip. mu(w) = w/(1 - w/d)
    /// turns the geodesic into the vertical segment [0, is]; the stage map is
    /// sqrt_h(mu^2 + s^2). d may be infinite (tip purely imaginary).
    Slit { d: f64, s: f64 },
    /// Closes the final geodesic from 0 to the real point p:
    /// w -> (w/(1 - w/p))^2. p may be infinite.
    Terminal { p: f64 },
    /// Half-plane to disk, w -> (w -+ iv)/(w +- iv). `lower` when the tracked
    /// interior ended in the lower half-plane after the terminal square. The
    /// scale v is matched to the tracked reference so its disk image keeps a
    /// representable margin from the circle; the chain otherwise reaches
    /// magnitudes where |w| - 1 underflows.
    Cayley { lower: bool, v: f64 },
}

/// Position of a tracked boundary sample during construction.
#[derive(Debug, Clone, Copy)]
enum Tracked {
    Free(Complex64),
    Edge(f64),
}

fn initial_free(far: Complex64, tip: Complex64, z: Complex64) -> Complex64 {
    I * ((z - tip) / (z - far)).sqrt()
}

fn slit_free(d: f64, s: f64, w: Complex64) -> Complex64 {
    let mu = w / (ONE - w.scale(1.0 / d));
    sqrt_h(mu * mu + Complex64::new(s * s, 0.0))
}

// Boundary restriction of the slit stage. The previous tip at x == 0 is not
// handled here; it splits by side and the caller resolves it.
fn slit_edge(d: f64, s: f64, x: f64) -> f64 {
    let mu = if x.is_infinite() {
        if d.is_infinite() {
            return x;
        }
        -d
    } else {
        let denom = 1.0 - x / d;
        if denom == 0.0 {
            return f64::INFINITY;
        }
        x / denom
    };
    mu.signum() * (mu * mu + s * s).sqrt()
}

fn terminal_free(p: f64, w: Complex64) -> Complex64 {
    let m = w / (ONE - w.scale(1.0 / p));
    m * m
}

fn terminal_edge(p: f64, x: f64) -> f64 {
    let m = if x.is_infinite() {
        if p.is_infinite() {
            return f64::INFINITY;
        }
        -p
    } else {
        let denom = 1.0 - x / p;
        if denom == 0.0 {
            return f64::INFINITY;
        }
        x / denom
    };
    m * m
}

fn cayley_free(lower: bool, v: f64, w: Complex64) -> Complex64 {
    let iv = Complex64::new(0.0, v);
    if lower {
        (w + iv) / (w - iv)
    } else {
        (w - iv) / (w + iv)
    }
}

fn cayley_edge(lower: bool, v: f64, x: f64) -> Complex64 {
    if x.is_infinite() {
        return ONE;
    }
    let w = Complex64::new(x, 0.0);
    cayley_free(lower, v, w)
}

/// Composed conformal map of a polygonal region onto the unit disk.
///
/// For interior maps the input region is the polygon interior. For exterior
/// maps ([`zipper_exterior`]) the struct additionally carries the inversion
/// center and evaluation goes through the chart 1/(z - c), with the output
/// reciprocated so that the image is the complement of the closed disk.
#[derive(Debug, Clone)]
pub struct ZipperMap {
    steps: Vec<Step>,
    post_a: Complex64,
    post_phase: f64,
    inversion: Option<Complex64>,
    raw_boundary: Vec<Complex64>,
}

impl ZipperMap {
    fn finish(&self, w: Complex64) -> Complex64 {
        let t = (w - self.post_a) / (ONE - self.post_a.conj() * w);
        let t = t * Complex64::from_polar(1.0, self.post_phase);
        match self.inversion {
            Some(_) => t.inv(),
            None => t,
        }
    }

    /// Images of the construction vertices, in input order. Interior maps
    /// yield points of the unit circle; exterior maps yield the same points
    /// seen from outside (also unit modulus).
    pub fn boundary_images(&self) -> Vec<Complex64> {
        self.raw_boundary.iter().map(|&w| self.finish(w)).collect()
    }

    /// Number of boundary samples the map was built from.
    pub fn sample_count(&self) -> usize {
        self.raw_boundary.len()
    }

    /// Disk automorphism parameters applied after the slit stages.
    pub fn post_mobius(&self) -> (Complex64, f64) {
        (self.post_a, self.post_phase)
    }

    /// Whether this is an exterior map (evaluated through an inversion chart).
    pub fn is_exterior(&self) -> bool {
        self.inversion.is_some()
    }

    /// Evaluate the map at a point of the open input region (the polygon
    /// interior, or its exterior for maps built by [`zipper_exterior`]).
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let mut w = match self.inversion {
            Some(c) => {
                if z == c {
                    return Err(HbsError::InvalidParam(
                        "exterior map evaluated at the inversion center".into(),
                    ));
                }
                (z - c).inv()
            }
            None => z,
        };
        for step in &self.steps {
            w = match *step {
                Step::Initial { far, tip } => initial_free(far, tip, w),
                Step::Slit { d, s } => slit_free(d, s, w),
                Step::Terminal { p } => terminal_free(p, w),
                Step::Cayley { lower, v } => cayley_free(lower, v, w),
            };
            if !w.re.is_finite() || !w.im.is_finite() {
                return Err(HbsError::ConformalBreakdown(
                    "point evaluation left the numeric range".into(),
                ));
            }
        }
        Ok(self.finish(w))
    }

    /// Post-compose a disk automorphism w -> (w - b)/(1 - conj(b) w) onto the
    /// current map.
    fn compose_automorphism(&mut self, b: Complex64) {
        // (a, alpha) followed by (b, 0) is again an automorphism; fold it
        // into canonical form.
        let ea = Complex64::from_polar(1.0, self.post_phase);
        let c = ea + b * self.post_a.conj();
        let e = ONE + b.conj() * ea * self.post_a;
        self.post_a = (ea * self.post_a + b) / c;
        self.post_phase = (c / e).arg();
    }
}

fn signed_area_of(vertices: &[Complex64]) -> f64 {
    let n = vertices.len();
    let mut acc = 0.0;
    for k in 0..n {
        let a = vertices[k];
        let b = vertices[(k + 1) % n];
        acc += a.re * b.im - b.re * a.im;
    }
    0.5 * acc
}

/// Core construction: zip the polygon onto the real axis and return the stage
/// list, the circle images of all vertices, and the disk image of
/// `interior_ref`. The reference must be a point of the region being mapped;
/// its tracked image decides the final half-plane.
fn build(
    vertices: &[Complex64],
    interior_ref: Complex64,
) -> Result<(Vec<Step>, Vec<Complex64>, Complex64)> {
    let n = vertices.len();
    if n < 8 {
        return Err(HbsError::DegenerateBoundary(format!(
            "need at least 8 boundary samples, got {n}"
        )));
    }
    for k in 0..n {
        if vertices[k] == vertices[(k + 1) % n] {
            return Err(HbsError::DegenerateBoundary(format!(
                "repeated boundary sample at index {k}"
            )));
        }
    }
    // Interior lies right of travel for clockwise input, left otherwise; the
    // slit stages put the right side on the positive real axis.
    let side = if signed_area_of(vertices) > 0.0 {
        -1.0
    } else {
        1.0
    };

    let far = vertices[0];
    let tip = vertices[1];
    let mut steps = Vec::with_capacity(n + 2);
    steps.push(Step::Initial { far, tip });

    let mut tracked: Vec<Tracked> = Vec::with_capacity(n);
    for (j, &z) in vertices.iter().enumerate() {
        tracked.push(match j {
            0 => Tracked::Edge(f64::INFINITY),
            1 => Tracked::Edge(0.0),
            _ => {
                let w = initial_free(far, tip, z);
                if !(w.im > 0.0) {
                    return Err(HbsError::ConformalBreakdown(format!(
                        "vertex {j} did not open into the upper half-plane"
                    )));
                }
                Tracked::Free(w)
            }
        });
    }
    let mut refp = initial_free(far, tip, interior_ref);
    if !(refp.im > 0.0) || !refp.is_finite() {
        return Err(HbsError::ConformalBreakdown(
            "reference point is not interior to the region".into(),
        ));
    }

    for k in 2..n {
        let zeta = match tracked[k] {
            Tracked::Free(w) => w,
            Tracked::Edge(_) => unreachable!("vertex zipped twice"),
        };
        if !zeta.is_finite() || !(zeta.im > 0.0) {
            return Err(HbsError::ConformalBreakdown(format!(
                "tip collision while closing vertex {k}"
            )));
        }
        let norm2 = zeta.norm_sqr();
        let d = if zeta.re == 0.0 {
            f64::INFINITY
        } else {
            norm2 / zeta.re
        };
        let s = norm2 / zeta.im;
        for (j, t) in tracked.iter_mut().enumerate() {
            *t = match *t {
                Tracked::Edge(x) => {
                    if j == k - 1 {
                        // previous tip splits; keep the prime end on the
                        // interior side
                        Tracked::Edge(side * s)
                    } else {
                        Tracked::Edge(slit_edge(d, s, x))
                    }
                }
                Tracked::Free(w) => {
                    if j == k {
                        Tracked::Edge(0.0)
                    } else {
                        Tracked::Free(slit_free(d, s, w))
                    }
                }
            };
        }
        refp = slit_free(d, s, refp);
        if !refp.is_finite() || !(refp.im > 0.0) {
            return Err(HbsError::ConformalBreakdown(format!(
                "reference point collided with the boundary at vertex {k}"
            )));
        }
        steps.push(Step::Slit { d, s });
    }

    let p = match tracked[0] {
        Tracked::Edge(x) => x,
        Tracked::Free(_) => unreachable!("start vertex never reached the axis"),
    };
    if p == 0.0 || p.is_nan() {
        return Err(HbsError::ConformalBreakdown(
            "closing point collapsed onto the final tip".into(),
        ));
    }
    steps.push(Step::Terminal { p });
    for t in tracked.iter_mut() {
        *t = match *t {
            Tracked::Edge(x) => Tracked::Edge(terminal_edge(p, x)),
            Tracked::Free(_) => unreachable!(),
        };
    }
    refp = terminal_free(p, refp);
    if !refp.is_finite() || refp.im == 0.0 {
        return Err(HbsError::ConformalBreakdown(
            "reference point degenerated at the closing stage".into(),
        ));
    }
    let lower = refp.im < 0.0;
    let v = refp.norm().clamp(1e-150, 1e150);
    steps.push(Step::Cayley { lower, v });

    let images: Vec<Complex64> = tracked
        .iter()
        .map(|t| match *t {
            Tracked::Edge(x) => cayley_edge(lower, v, x),
            Tracked::Free(_) => unreachable!(),
        })
        .collect();
    for (j, w) in images.iter().enumerate() {
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(HbsError::ConformalBreakdown(format!(
                "boundary image {j} is not finite"
            )));
        }
    }
    let ref_img = cayley_free(lower, v, refp);
    if !ref_img.re.is_finite() || !ref_img.im.is_finite() || ref_img.norm() >= 1.0 {
        return Err(HbsError::ConformalBreakdown(format!(
            "reference point left the unit disk (|w| = {:.6e}, half-plane point {:.3e}{:+.3e}i)",
            ref_img.norm(),
            refp.re,
            refp.im
        )));
    }
    Ok((steps, images, ref_img))
}

/// Conformal map from the polygon interior onto the unit disk.
///
/// The construction sends a representative interior point to the disk
/// center; without that the slit chain crowds the boundary images toward
/// the closing vertex and downstream resolution collapses. The rotation
/// gauge is arbitrary, and the residual translation freedom is fixed by
/// [`normalize_interior`].
pub fn zipper_interior(poly: &BoundaryPolygon) -> Result<ZipperMap> {
    let reference = interior_point(poly);
    let (steps, raw_boundary, ref_img) = build(&poly.vertices, reference)?;
    let mut map = ZipperMap {
        steps,
        post_a: Complex64::new(0.0, 0.0),
        post_phase: 0.0,
        inversion: None,
        raw_boundary,
    };
    map.compose_automorphism(ref_img);
    Ok(map)
}

/// Conformal map from the polygon exterior onto the exterior of the unit
/// disk, fixing infinity with positive real derivative.
pub fn zipper_exterior(poly: &BoundaryPolygon) -> Result<ZipperMap> {
    let c = interior_point(poly);
    let inverted: Vec<Complex64> = poly.vertices.iter().map(|&z| (z - c).inv()).collect();
    for (j, z) in inverted.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(HbsError::ConformalBreakdown(format!(
                "boundary sample {j} coincides with the inversion center"
            )));
        }
    }
    // infinity sits at 0 in the inverted chart; its disk image goes to the
    // center
    let (steps, raw_boundary, a) = build(&inverted, Complex64::new(0.0, 0.0))?;
    let mut map = ZipperMap {
        steps,
        post_a: a,
        post_phase: 0.0,
        inversion: Some(c),
        raw_boundary,
    };

    // rotation gauge: estimate the derivative at the chart origin by a
    // circle average, exact to O(r^m) for the probe radius r
    let inradius = inverted
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    let r = 0.25 * inradius;
    if !(r > 0.0) || !r.is_finite() {
        return Err(HbsError::ConformalBreakdown(
            "inverted polygon has no room around the origin".into(),
        ));
    }
    let m = 16;
    let mut dsum = Complex64::new(0.0, 0.0);
    for j in 0..m {
        let theta = TAU * j as f64 / m as f64;
        let probe = Complex64::from_polar(r, theta);
        let w = raw_eval(&map.steps, probe)?;
        let g = (w - map.post_a) / (ONE - map.post_a.conj() * w);
        dsum += g * Complex64::from_polar(1.0, -theta);
    }
    let deriv = dsum / (m as f64 * r);
    if !deriv.re.is_finite() || !deriv.im.is_finite() || deriv.norm() < 1e-12 {
        return Err(HbsError::ConformalBreakdown(
            "vanishing derivative at infinity".into(),
        ));
    }
    // the full map reciprocates the output, so the derivative of z -> 1/psi(1/(z-c))
    // at infinity is 1/psi'(0); making psi'(0) real positive fixes the gauge
    map.post_phase = -deriv.arg();
    Ok(map)
}

fn raw_eval(steps: &[Step], z: Complex64) -> Result<Complex64> {
    let mut w = z;
    for step in steps {
        w = match *step {
            Step::Initial { far, tip } => initial_free(far, tip, w),
            Step::Slit { d, s } => slit_free(d, s, w),
            Step::Terminal { p } => terminal_free(p, w),
            Step::Cayley { lower, v } => cayley_free(lower, v, w),
        };
    }
    if !w.re.is_finite() || !w.im.is_finite() {
        return Err(HbsError::ConformalBreakdown(
            "point evaluation left the numeric range".into(),
        ));
    }
    Ok(w)
}

/// Fix the Mobius freedom of an interior map so that the discrete boundary
/// integral sum_k Phi(z_k) dz_k vanishes (centered differences for dz_k).
///
/// Damped Newton iteration on the automorphism parameter; tolerance 1e-6 on
/// the integral modulus, at most 200 iterations.
pub fn normalize_interior(map: ZipperMap, poly: &BoundaryPolygon) -> Result<ZipperMap> {
    let mut map = map;
    let n = poly.vertices.len();
    if n != map.sample_count() {
        return Err(HbsError::GeometryMismatch(format!(
            "polygon has {n} samples, map was built from {}",
            map.sample_count()
        )));
    }
    if map.is_exterior() {
        return Err(HbsError::InvalidParam(
            "normalization applies to interior maps".into(),
        ));
    }
    // arclength weights: the literal complex-measure line integral is zero
    // for every automorphism by Cauchy's theorem, so the normalization uses
    // the |dz| measure, for which a disk centered at the image of 0 is the
    // unique stationary shape
    let ds: Vec<f64> = (0..n)
        .map(|k| {
            let prev = (poly.vertices[k] - poly.vertices[(k + n - 1) % n]).norm();
            let next = (poly.vertices[(k + 1) % n] - poly.vertices[k]).norm();
            0.5 * (prev + next)
        })
        .collect();
    let w: Vec<Complex64> = map.boundary_images();

    let integral = |b: Complex64| -> Complex64 {
        let mut f = Complex64::new(0.0, 0.0);
        for k in 0..n {
            f += (w[k] - b) / (ONE - b.conj() * w[k]) * ds[k];
        }
        f
    };

    let mut b = Complex64::new(0.0, 0.0);
    let tol = 1e-6;
    let max_iter = 200;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let f = integral(b);
        residual = f.norm();
        if residual < tol {
            map.compose_automorphism(b);
            return Ok(map);
        }
        // Wirtinger derivatives of the integral in b and conj(b)
        let mut da = Complex64::new(0.0, 0.0);
        let mut db = Complex64::new(0.0, 0.0);
        for k in 0..n {
            let den = ONE - b.conj() * w[k];
            da += -Complex64::new(ds[k], 0.0) / den;
            db += (w[k] - b) * w[k] / (den * den) * ds[k];
        }
        let denom = da.norm_sqr() - db.norm_sqr();
        let delta = if denom.abs() > 1e-30 {
            (db * f.conj() - da.conj() * f) / denom
        } else if db.norm() > da.norm() {
            -(f / db).conj()
        } else {
            -f / da
        };
        b += delta.scale(0.5);
        if b.norm() >= 1.0 {
            b = b.scale(0.95 / b.norm());
        }
    }
    Err(HbsError::NormalizationDiverged {
        iterations: max_iter,
        residual,
    })
}

/// Boundary correspondence between the exterior and interior disk maps.
///
/// `exterior_angles[k]` and `interior_angles[k]` are the unwrapped arguments
/// of the two images of the same boundary vertex; both sequences are strictly
/// increasing and advance by exactly one turn over the polygon.
#[derive(Debug, Clone)]
pub struct WeldingMap {
    pub exterior_angles: Vec<f64>,
    pub interior_angles: Vec<f64>,
}

impl WeldingMap {
    pub fn sample_count(&self) -> usize {
        self.exterior_angles.len()
    }
}

// Harmonic measure at a needle-thin boundary feature decays below f64
// resolution, so adjacent samples there can land on the same circle point
// (or swap by float noise). Gaps at that scale carry no signature content;
// they are widened to a strict sub-resolution wedge instead of failing.
const GAP_REPAIR_TOL: f64 = 1e-9;
const GAP_REPAIR_STEP: f64 = 1e-12;

fn unwrap_increasing(raw: &[f64], anchor_mod_tau: bool) -> Result<Vec<f64>> {
    let n = raw.len();
    let mut out = Vec::with_capacity(n);
    let first = if anchor_mod_tau {
        raw[0].rem_euclid(TAU)
    } else {
        raw[0]
    };
    out.push(first);
    for i in 1..n {
        let mut step = (raw[i] - raw[i - 1]).rem_euclid(TAU);
        if !step.is_finite() {
            return Err(HbsError::NonMonotoneWelding { index: i });
        }
        if step == 0.0 || step > TAU - GAP_REPAIR_TOL {
            step = GAP_REPAIR_STEP;
        }
        out.push(out[i - 1] + step);
    }
    // one full turn and no more
    if out[n - 1] - out[0] >= TAU {
        return Err(HbsError::NonMonotoneWelding { index: n - 1 });
    }
    Ok(out)
}

/// Extract the welding correspondence from matched interior and exterior
/// maps of the same polygon.
pub fn extract_welding(
    interior: &ZipperMap,
    exterior: &ZipperMap,
    poly: &BoundaryPolygon,
) -> Result<WeldingMap> {
    let n = poly.vertices.len();
    if interior.sample_count() != n || exterior.sample_count() != n {
        return Err(HbsError::GeometryMismatch(
            "welding inputs were built from different boundary samples".into(),
        ));
    }
    let wi = interior.boundary_images();
    let we = exterior.boundary_images();
    let mut alpha: Vec<f64> = wi.iter().map(|w| w.arg()).collect();
    let mut beta: Vec<f64> = we.iter().map(|w| w.arg()).collect();
    // run both correspondences counterclockwise
    if poly.signed_area() < 0.0 {
        alpha.reverse();
        beta.reverse();
    }
    let beta = unwrap_increasing(&beta, true)?;
    let alpha = unwrap_increasing(&alpha, true)?;
    Ok(WeldingMap {
        exterior_angles: beta,
        interior_angles: alpha,
    })
}
