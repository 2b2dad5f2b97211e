use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid material: {0}")]
    InvalidMaterial(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate wavelength: frequency must be positive")]
    DegenerateWavelength,

    #[error("geometry self-intersection: {0}")]
    GeometrySelfIntersection(String),

    #[error("feature unresolved: {0}")]
    FeatureUnresolved(String),

    #[error("meshing failed: {0}")]
    Meshing(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("inverted element {element}: non-positive jacobian {jacobian:e}")]
    InvertedElement { element: usize, jacobian: f64 },

    #[error("rigid modes present: system is singular at pivot {pivot}")]
    RigidModesPresent { pivot: usize },

    #[error("factorization breakdown at pivot {pivot} (shift {shift:e})")]
    FactorizationBreakdown { pivot: usize, shift: f64 },

    #[error("eigensolver did not converge: {0}")]
    NoConvergence(String),

    #[error("not a unit cell: mesh has no periodic pairs")]
    NotAUnitCell,

    #[error("null mode: field vanishes identically")]
    NullMode,

    #[error("position ({x:e}, {y:e}) lies outside the mesh")]
    OutsideMesh { x: f64, y: f64 },

    #[error("invalid orientation: {0}")]
    InvalidOrientation(String),

    #[error("asymmetric strain tensor (asymmetry {0:e})")]
    AsymmetricStrain(f64),

    #[error("singular point: radius {0:e} must be positive")]
    SingularPoint(f64),

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("invalid configuration: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Short machine-readable kind, used by the CLI and the C interface.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidMaterial(_) => "invalid_material",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::DegenerateWavelength => "degenerate_wavelength",
            Error::GeometrySelfIntersection(_) => "geometry_self_intersection",
            Error::FeatureUnresolved(_) => "feature_unresolved",
            Error::Meshing(_) => "meshing",
            Error::InvalidMesh(_) => "invalid_mesh",
            Error::Parse { .. } => "parse",
            Error::InvertedElement { .. } => "inverted_element",
            Error::RigidModesPresent { .. } => "rigid_modes_present",
            Error::FactorizationBreakdown { .. } => "factorization_breakdown",
            Error::NoConvergence(_) => "no_convergence",
            Error::NotAUnitCell => "not_a_unit_cell",
            Error::NullMode => "null_mode",
            Error::OutsideMesh { .. } => "outside_mesh",
            Error::InvalidOrientation(_) => "invalid_orientation",
            Error::AsymmetricStrain(_) => "asymmetric_strain",
            Error::SingularPoint(_) => "singular_point",
            Error::ZeroDenominator(_) => "zero_denominator",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}
