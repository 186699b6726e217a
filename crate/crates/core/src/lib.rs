//! Computational laboratory for Steklov inverse spectral problems.
//!
//! The crate is split along the natural layers of the problem:
//!
//! * [`symcalc`]: isotropic polyhomogeneous symbols on the boundary and the
//!   closed-form DN-map symbol differences for conformal and potential
//!   perturbations.
//! * [`modelgeo`]: exact and ODE-based Steklov spectra on balls and product
//!   cylinders, used as the operator oracle for the symbol identities.
//! * [`tracelab`]: Weyl-law volume recovery, mollified wave traces, peak
//!   detection, singularity calibration, and a dense return-operator lab.
//! * [`anosovgeo`]: the regular-octagon genus-2 surface: closed geodesic
//!   enumeration, length spectrum, geodesic X-ray transform and its
//!   regularized inverse.
//! * [`recover`]: the order-by-order boundary determination pipeline built on
//!   top of the previous modules.

pub mod anosovgeo;
pub mod linalg;
pub mod modelgeo;
pub mod profile;
pub mod recover;
pub mod symcalc;
pub mod tracelab;

pub use profile::RadialProfile;

/// Crate-wide error, used by front ends that drive several modules.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Symbol(#[from] symcalc::SymbolError),
    #[error(transparent)]
    Model(#[from] modelgeo::ModelError),
    #[error(transparent)]
    Trace(#[from] tracelab::TraceError),
    #[error(transparent)]
    Geodesic(#[from] anosovgeo::GeoError),
    #[error(transparent)]
    Recover(#[from] recover::RecoverError),
}

impl Error {
    /// True when the failure is numerical (non-convergence, conditioning,
    /// quadrature) rather than a violated precondition on the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Symbol(e) => e.is_numerical(),
            Error::Model(e) => e.is_numerical(),
            Error::Trace(e) => e.is_numerical(),
            Error::Geodesic(e) => e.is_numerical(),
            Error::Recover(e) => e.is_numerical(),
        }
    }
}
