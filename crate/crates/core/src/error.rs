use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Every failure the core can report.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    Domain { what: &'static str, value: f64 },
    /// A morphology or element failed validation.
    InvalidSpec { field: String, reason: String },
    /// Coincident nodes where a finite length is required.
    DegenerateGeometry { what: &'static str },
    /// A potential evaluated to NaN or infinity at a finite-difference probe.
    NonFinite { dof_a: usize, dof_b: usize, offset_a: f64, offset_b: f64 },
    /// A DoF index referenced by an element is outside the global system.
    Assembly { dof: usize, size: usize },
    /// Every DoF was fixed.
    EmptySystem,
    /// The reduced stiffness matrix is singular or indefinite.
    RankDeficient { mode: String },
    /// The incremental solver could not factor its tangent matrix.
    Convergence { increment: usize, mode: String },
    /// The incremental solver produced a non-finite displacement.
    Divergence { increment: usize },
    /// Iterative minimisation hit its iteration cap.
    NonConvergence { iterations: usize, gradient_norm: f64 },
    /// A root bracket could not be established.
    Bracket { lo: f64, hi: f64 },
    /// Commanded tendon displacement exceeds what the geometry allows.
    Saturation { requested: f64, maximum: f64 },
    /// Too few or malformed samples for a statistic or fit.
    Statistics { reason: &'static str },
    /// Calibration could not be completed.
    Calibration { reason: String },
    /// Two collections that must match in length do not.
    Mismatch { expected: usize, found: usize },
}

impl Error {
    /// Short stable identifier of the variant, for machine-readable reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::InvalidSpec { .. } => "invalid_spec",
            Error::DegenerateGeometry { .. } => "degenerate_geometry",
            Error::NonFinite { .. } => "non_finite",
            Error::Assembly { .. } => "assembly",
            Error::EmptySystem => "empty_system",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::Convergence { .. } => "convergence",
            Error::Divergence { .. } => "divergence",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Bracket { .. } => "bracket",
            Error::Saturation { .. } => "saturation",
            Error::Statistics { .. } => "statistics",
            Error::Calibration { .. } => "calibration",
            Error::Mismatch { .. } => "mismatch",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidSpec { field, reason } => write!(f, "invalid `{field}`: {reason}"),
            Error::DegenerateGeometry { what } => write!(f, "degenerate geometry: {what}"),
            Error::NonFinite {
                dof_a,
                dof_b,
                offset_a,
                offset_b,
            } => write!(
                f,
                "non-finite potential at probe (dof {dof_a} {offset_a:+e}, dof {dof_b} {offset_b:+e})"
            ),
            Error::Assembly { dof, size } => {
                write!(f, "dof {dof} out of range for a system of size {size}")
            }
            Error::EmptySystem => write!(f, "all degrees of freedom are fixed"),
            Error::RankDeficient { mode } => write!(f, "rank-deficient system: {mode}"),
            Error::Convergence { increment, mode } => {
                write!(f, "singular tangent at increment {increment}: {mode}")
            }
            Error::Divergence { increment } => {
                write!(f, "non-finite displacement at increment {increment}")
            }
            Error::NonConvergence {
                iterations,
                gradient_norm,
            } => write!(
                f,
                "no convergence after {iterations} iterations (gradient norm {gradient_norm:e})"
            ),
            Error::Bracket { lo, hi } => write!(f, "no sign change found in [{lo}, {hi}]"),
            Error::Saturation { requested, maximum } => write!(
                f,
                "tendon displacement {requested} mm exceeds achievable shortening {maximum} mm"
            ),
            Error::Statistics { reason } => write!(f, "statistics: {reason}"),
            Error::Calibration { reason } => write!(f, "calibration failed: {reason}"),
            Error::Mismatch { expected, found } => {
                write!(f, "length mismatch: expected {expected}, found {found}")
            }
        }
    }
}

impl core::error::Error for Error {}

pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Error {
    Error::InvalidSpec {
        field: field.into(),
        reason: reason.into(),
    }
}
