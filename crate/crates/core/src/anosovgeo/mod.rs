//! Geodesic engine on the regular-octagon genus-2 surface.
//!
//! Group elements are kept both as SL(2,R) matrices (for exact trace
//! arithmetic) and as SU(1,1) disk automorphisms (for geometry). Words are
//! read left to right as matrix products.

mod classes;
mod geodesic;
mod group;
mod xray;

pub use classes::{
    classes_to_csv, enumerate_classes, enumerate_classes_with_budget, length_spectrum_report,
    systole, ClosedGeodesicClass, Collision, DEFAULT_WORD_BUDGET,
};
pub use geodesic::{
    axis_frame, canonical_lift, reduce_frame, reduce_point, sample_closed_geodesic,
    GeodesicSamples, REDUCTION_CAP,
};
pub use group::{
    build_default_surface, disk_distance, distance_from_origin, FuchsianGroup, Letter,
    OctagonDomain, Sl2, Su11, Word, OCTAGON_COSH_HALF, RELATION, RELATION_TOL,
};
pub use xray::{
    build_xray_system, ridge_by_discrepancy, xray_conformal_tensor, xray_flow, xray_function,
    xray_invert, default_samples, Basis, BasisDescriptor, BasisField, BumpBasis, ConstantField,
    FnField, SurfaceFunction, XRaySystem, MIN_SAMPLES, QUADRATURE_TOL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeoError {
    #[error("enumerating words up to length {max_len} needs {words} candidates, budget is {budget}")]
    EnumerationBudget {
        max_len: usize,
        words: usize,
        budget: usize,
    },
    #[error("fundamental-domain reduction did not terminate within {cap} steps")]
    ReductionBudget { cap: usize },
    #[error("element with trace {0} is not hyperbolic")]
    NotHyperbolic(f64),
    #[error("axis parametrization is inconsistent (error {0:e})")]
    GeometryMismatch(f64),
    #[error("invalid surface: {0}")]
    Construction(String),
    #[error("invalid word {0:?}")]
    InvalidWord(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("quadrature changed by {change:e} on doubling, tolerance {tol:e}")]
    QuadratureNotConverged { change: f64, tol: f64 },
    #[error("need at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },
    #[error("under-determined system: {rows} classes for {cols} basis functions")]
    Underdetermined { rows: usize, cols: usize },
    #[error("rank-deficient design matrix: rank {rank} < {cols}")]
    RankDeficient { rank: usize, cols: usize },
    #[error("expected {expected} values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("invalid basis: {0}")]
    InvalidBasis(String),
    #[error("malformed document: {0}")]
    Document(String),
}

impl GeoError {
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            GeoError::ReductionBudget { .. }
                | GeoError::GeometryMismatch(_)
                | GeoError::QuadratureNotConverged { .. }
                | GeoError::RankDeficient { .. }
        )
    }
}
