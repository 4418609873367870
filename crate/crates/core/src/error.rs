//! Crate-wide error type.

use crate::shape::ShapeStatus;

pub type Result<T> = std::result::Result<T, HbsError>;

#[derive(Debug, thiserror::Error)]
pub enum HbsError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("bad image file {path}: {reason}")]
    ImageFormat { path: String, reason: String },
    #[error("bad field file {path}: {reason}")]
    FieldFormat { path: String, reason: String },
    #[error("invalid grid geometry: {0}")]
    InvalidGeometry(String),
    #[error("pixel index ({row}, {col}) outside {width}x{height} grid")]
    PixelOutOfRange {
        row: u32,
        col: u32,
        width: u32,
        height: u32,
    },
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),
    #[error("shape is not simply connected: {status:?} (components {components}, holes {holes})")]
    NotSimplyConnected {
        status: ShapeStatus,
        components: usize,
        holes: usize,
    },
    #[error("degenerate boundary: {0}")]
    DegenerateBoundary(String),
    #[error("polygon does not intersect the grid")]
    PolygonOutsideGrid,
    #[error("empty foreground")]
    EmptyForeground,
    #[error("conformal map breakdown: {0}")]
    ConformalBreakdown(String),
    #[error("Mobius normalization did not converge after {iterations} iterations (residual {residual:.3e})")]
    NormalizationDiverged { iterations: usize, residual: f64 },
    #[error("welding correspondence is not strictly monotone at sample {index}")]
    NonMonotoneWelding { index: usize },
    #[error("harmonic extension is degenerate: {0}")]
    DegenerateExtension(String),
    #[error("Beltrami coefficient out of range: {0}")]
    InvalidBeltrami(String),
    #[error("linear solver failed: {0}")]
    SolverFailure(String),
    #[error("reconstructed boundary is not a simple polygon")]
    FlippedBoundary,
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("generation failed for entry {index} ({provenance}): {reason}")]
    GenerationFailed {
        index: usize,
        provenance: String,
        reason: String,
    },
}

impl HbsError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        HbsError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
