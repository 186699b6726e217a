//! Steklov spectra on model manifolds.
//!
//! Exact spectra for the disk, the 3-ball and product cylinders, and per-mode
//! ODE solvers for radial conformal factors and potentials on the ball. The
//! ODE solvers are the operator-side oracle against which the closed-form
//! symbol differences in [`crate::symcalc`] are checked.

mod radial;

pub use radial::{Integrator, ModeOptions, NegatedSchrodinger, RadialGrid, RadialPotential};

use crate::linalg::{self, LinalgError};
use crate::profile::RadialProfile;
use crate::symcalc::SymbolError;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

pub const SCHEMA: &str = "spectrum/v1";

/// Default truncation of the mode sum.
pub const DEFAULT_KMAX: usize = 200;
/// Default lower frequency cut for asymptotic fits.
pub const DEFAULT_K_MIN: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("unsupported dimension n = {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),
    #[error("cylinder length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("negative boundary eigenvalue {0}")]
    NegativeEigenvalue(f64),
    #[error("boundary eigenvalues are not sorted")]
    Unsorted,
    #[error("profile is not positive at r = {r} (value {value})")]
    NonPositiveProfile { r: f64, value: f64 },
    #[error("conformal profile must equal 1 at r = 1, got {0}")]
    BoundaryValueNotOne(f64),
    #[error("mode k = {k} did not converge (last change {change:e})")]
    NonConvergent { k: usize, change: f64 },
    #[error("mode k = {k} is close to a Dirichlet eigenvalue (|f(1)|/max|f| = {ratio:e})")]
    DirichletProximity { k: usize, ratio: f64 },
    #[error("invalid spectrum entry: {0}")]
    InvalidEntry(String),
    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("fit frequencies must be distinct")]
    DuplicateFrequency,
    #[error("fit frequency {k} is below k_min = {k_min}")]
    BelowKMin { k: f64, k_min: f64 },
    #[error("model order must be between 1 and 3, got {0}")]
    InvalidOrder(usize),
    #[error("weights: {0}")]
    InvalidWeights(String),
    #[error("least squares: {0}")]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
    #[error("spectrum document: {0}")]
    Document(String),
}

impl ModelError {
    pub fn is_numerical(&self) -> bool {
        match self {
            ModelError::NonConvergent { .. }
            | ModelError::DirichletProximity { .. }
            | ModelError::Linalg(_) => true,
            ModelError::Symbol(e) => e.is_numerical(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Exact,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub sigma: f64,
    pub multiplicity: u32,
}

/// Sorted Steklov eigenvalues with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteklovSpectrum {
    pub n: usize,
    pub provenance: Provenance,
    entries: Vec<SpectrumEntry>,
}

#[derive(Serialize, Deserialize)]
struct SpectrumDocument {
    schema: String,
    n: usize,
    provenance: Provenance,
    entries: Vec<SpectrumEntry>,
}

impl SteklovSpectrum {
    /// Validates non-negativity, ordering and multiplicities.
    pub fn new(
        n: usize,
        provenance: Provenance,
        entries: Vec<SpectrumEntry>,
    ) -> Result<Self, ModelError> {
        for (i, e) in entries.iter().enumerate() {
            if !(e.sigma >= 0.0) || !e.sigma.is_finite() {
                return Err(ModelError::InvalidEntry(format!("sigma = {}", e.sigma)));
            }
            if e.multiplicity == 0 {
                return Err(ModelError::InvalidEntry(format!(
                    "zero multiplicity at sigma = {}",
                    e.sigma
                )));
            }
            if i > 0 && entries[i - 1].sigma > e.sigma {
                return Err(ModelError::InvalidEntry("eigenvalues not sorted".into()));
            }
        }
        Ok(Self {
            n,
            provenance,
            entries,
        })
    }

    /// Sorts values and merges exactly equal ones into multiplicities.
    pub fn from_values(
        n: usize,
        provenance: Provenance,
        mut values: Vec<(f64, u32)>,
    ) -> Result<Self, ModelError> {
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut entries: Vec<SpectrumEntry> = Vec::with_capacity(values.len());
        for (sigma, m) in values {
            match entries.last_mut() {
                Some(last) if last.sigma == sigma => last.multiplicity += m,
                _ => entries.push(SpectrumEntry {
                    sigma,
                    multiplicity: m,
                }),
            }
        }
        Self::new(n, provenance, entries)
    }

    pub fn empty(n: usize, provenance: Provenance) -> Self {
        Self {
            n,
            provenance,
            entries: Vec::new(),
        }
    }

    pub fn entries(&self) -> &[SpectrumEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Eigenvalue count with multiplicity.
    pub fn count(&self) -> usize {
        self.entries.iter().map(|e| e.multiplicity as usize).sum()
    }

    pub fn sigma_max(&self) -> Option<f64> {
        self.entries.last().map(|e| e.sigma)
    }

    /// #{σ_k ≤ σ} with multiplicity.
    pub fn counting(&self, sigma: f64) -> usize {
        let idx = self.entries.partition_point(|e| e.sigma <= sigma);
        self.entries[..idx]
            .iter()
            .map(|e| e.multiplicity as usize)
            .sum()
    }

    /// Keeps eigenvalues ≤ `sigma_max`.
    pub fn truncated(&self, sigma_max: f64) -> Self {
        Self {
            n: self.n,
            provenance: self.provenance,
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|e| e.sigma <= sigma_max)
                .collect(),
        }
    }

    /// Applies `f` to every eigenvalue and re-sorts.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self, ModelError> {
        Self::from_values(
            self.n,
            self.provenance,
            self.entries
                .iter()
                .map(|e| (f(e.sigma), e.multiplicity))
                .collect(),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("sigma,multiplicity\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{}", e.sigma, e.multiplicity);
        }
        out
    }

    pub fn from_csv(n: usize, provenance: Provenance, text: &str) -> Result<Self, ModelError> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("sigma,multiplicity") => {}
            other => {
                return Err(ModelError::Document(format!(
                    "bad CSV header {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut entries = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let (s, m) = line
                .split_once(',')
                .ok_or_else(|| ModelError::Document(format!("bad CSV row {line:?}")))?;
            let sigma = s
                .trim()
                .parse()
                .map_err(|_| ModelError::Document(format!("bad sigma {s:?}")))?;
            let multiplicity = m
                .trim()
                .parse()
                .map_err(|_| ModelError::Document(format!("bad multiplicity {m:?}")))?;
            entries.push(SpectrumEntry {
                sigma,
                multiplicity,
            });
        }
        Self::new(n, provenance, entries)
    }

    pub fn to_json(&self) -> String {
        let doc = SpectrumDocument {
            schema: SCHEMA.to_string(),
            n: self.n,
            provenance: self.provenance,
            entries: self.entries.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("spectrum serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: SpectrumDocument =
            serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))?;
        if doc.schema != SCHEMA {
            return Err(ModelError::Document(format!(
                "expected schema {SCHEMA}, got {}",
                doc.schema
            )));
        }
        Self::new(doc.n, doc.provenance, doc.entries)
    }
}

fn check_dimension(n: usize) -> Result<(), ModelError> {
    if n == 2 || n == 3 {
        Ok(())
    } else {
        Err(ModelError::UnsupportedDimension(n))
    }
}

/// Number of degree-k spherical harmonics on S^{n−1}.
pub fn harmonic_multiplicity(n: usize, k: usize) -> u32 {
    match (n, k) {
        (2, 0) => 1,
        (2, _) => 2,
        _ => 2 * k as u32 + 1,
    }
}

/// σ_k = k on the unit disk (n = 2) or unit 3-ball.
pub fn ball_steklov_exact(n: usize, kmax: usize) -> Result<SteklovSpectrum, ModelError> {
    check_dimension(n)?;
    let entries = (0..=kmax)
        .map(|k| SpectrumEntry {
            sigma: k as f64,
            multiplicity: harmonic_multiplicity(n, k),
        })
        .collect();
    SteklovSpectrum::new(n, Provenance::Exact, entries)
}

/// Laplace eigenvalues of the unit circle up to frequency `jmax`, with
/// repetition: 0, 1, 1, 4, 4, …
pub fn circle_eigenvalues(jmax: usize) -> Vec<f64> {
    std::iter::once(0.0)
        .chain((1..=jmax).flat_map(|j| {
            let l = (j * j) as f64;
            [l, l]
        }))
        .collect()
}

/// Steklov spectrum of [0, L] × N from the Laplace eigenvalues of N. Each λ
/// contributes an even and an odd mode in the interval variable.
pub fn cylinder_steklov(
    length: f64,
    boundary_eigenvalues: &[f64],
    n: usize,
) -> Result<SteklovSpectrum, ModelError> {
    if !(length > 0.0) {
        return Err(ModelError::NonPositiveLength(length));
    }
    let mut values = Vec::with_capacity(2 * boundary_eigenvalues.len());
    for (i, &lambda) in boundary_eigenvalues.iter().enumerate() {
        if lambda < 0.0 {
            return Err(ModelError::NegativeEigenvalue(lambda));
        }
        if i > 0 && boundary_eigenvalues[i - 1] > lambda {
            return Err(ModelError::Unsorted);
        }
        if lambda == 0.0 {
            values.push((0.0, 1));
            values.push((2.0 / length, 1));
        } else {
            let s = lambda.sqrt();
            let x = s * length / 2.0;
            values.push((s * x.tanh(), 1));
            values.push((s / x.tanh(), 1));
        }
    }
    SteklovSpectrum::from_values(n, Provenance::Exact, values)
}

fn check_conformal(profile: &dyn RadialProfile) -> Result<(), ModelError> {
    let c1 = profile.endpoint();
    if (c1 - 1.0).abs() > 1e-12 {
        return Err(ModelError::BoundaryValueNotOne(c1));
    }
    Ok(())
}

/// σ_k of Λ_{cg} on the unit ball for a radial conformal factor c.
pub fn radial_conformal_mode(
    profile: &dyn RadialProfile,
    k: usize,
    n: usize,
) -> Result<f64, ModelError> {
    radial_conformal_mode_with(profile, k, n, &ModeOptions::default())
}

pub fn radial_conformal_mode_with(
    profile: &dyn RadialProfile,
    k: usize,
    n: usize,
    opts: &ModeOptions,
) -> Result<f64, ModelError> {
    check_dimension(n)?;
    check_conformal(profile)?;
    radial::solve(&radial::ConformalMode { profile, n, k }, opts)
}

/// σ_k of Λ_{g,q} on the unit ball for a radial potential q.
pub fn radial_potential_mode(
    potential: &dyn RadialPotential,
    k: usize,
    n: usize,
) -> Result<f64, ModelError> {
    radial_potential_mode_with(potential, k, n, &ModeOptions::default())
}

pub fn radial_potential_mode_with(
    potential: &dyn RadialPotential,
    k: usize,
    n: usize,
    opts: &ModeOptions,
) -> Result<f64, ModelError> {
    check_dimension(n)?;
    radial::solve(&radial::PotentialMode { potential, n, k }, opts)
}

/// Per-mode eigenvalues σ_0..σ_kmax, computed in parallel and returned in
/// mode order.
pub fn conformal_modes(
    profile: &dyn RadialProfile,
    n: usize,
    kmax: usize,
    opts: &ModeOptions,
) -> Result<Vec<f64>, ModelError> {
    (0..=kmax)
        .into_par_iter()
        .map(|k| radial_conformal_mode_with(profile, k, n, opts))
        .collect()
}

pub fn potential_modes(
    potential: &dyn RadialPotential,
    n: usize,
    kmax: usize,
    opts: &ModeOptions,
) -> Result<Vec<f64>, ModelError> {
    (0..=kmax)
        .into_par_iter()
        .map(|k| radial_potential_mode_with(potential, k, n, opts))
        .collect()
}

/// Assembles per-mode eigenvalues into a spectrum with the spherical
/// harmonic multiplicities.
pub fn spectrum_from_modes(n: usize, modes: &[f64]) -> Result<SteklovSpectrum, ModelError> {
    check_dimension(n)?;
    SteklovSpectrum::from_values(
        n,
        Provenance::Ode,
        modes
            .iter()
            .enumerate()
            .map(|(k, &s)| (s, harmonic_multiplicity(n, k)))
            .collect(),
    )
}

pub fn conformal_spectrum(
    profile: &dyn RadialProfile,
    n: usize,
    kmax: usize,
) -> Result<SteklovSpectrum, ModelError> {
    let modes = conformal_modes(profile, n, kmax, &ModeOptions::default())?;
    spectrum_from_modes(n, &modes)
}

/// `A + B/k + C/k² + …` fitted to eigenvalue deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub k_range: (f64, f64),
    pub points: usize,
}

impl AsymptoticFit {
    /// Coefficient of k^{−j}, zero beyond the model order.
    pub fn coefficient(&self, j: usize) -> f64 {
        self.coefficients.get(j).copied().unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Number of powers 1, 1/k, …, 1/k^{order−1}.
    pub order: usize,
    pub k_min: f64,
    pub weights: Option<Vec<f64>>,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            order: 3,
            k_min: DEFAULT_K_MIN,
            weights: None,
        }
    }
}

/// Least-squares fit of (k, Δσ_k) pairs in inverse powers of k.
pub fn asymptotic_fit(
    deltas: &[(f64, f64)],
    opts: &FitOptions,
) -> Result<AsymptoticFit, ModelError> {
    if opts.order == 0 || opts.order > 3 {
        return Err(ModelError::InvalidOrder(opts.order));
    }
    let needed = 3 * opts.order;
    if deltas.len() < needed {
        return Err(ModelError::TooFewPoints {
            needed,
            got: deltas.len(),
        });
    }
    let mut ks: Vec<f64> = deltas.iter().map(|d| d.0).collect();
    if let Some(&k) = ks.iter().find(|&&k| k < opts.k_min) {
        return Err(ModelError::BelowKMin {
            k,
            k_min: opts.k_min,
        });
    }
    ks.sort_by(f64::total_cmp);
    if ks.windows(2).any(|w| w[0] == w[1]) {
        return Err(ModelError::DuplicateFrequency);
    }
    if let Some(w) = &opts.weights {
        if w.len() != deltas.len() || w.iter().any(|&x| !(x > 0.0)) {
            return Err(ModelError::InvalidWeights(
                "one positive weight per point required".into(),
            ));
        }
    }
    let a = DMatrix::from_fn(deltas.len(), opts.order, |i, j| deltas[i].0.powi(-(j as i32)));
    let b = DVector::from_iterator(deltas.len(), deltas.iter().map(|d| d.1));
    let (x, residual_norm) = linalg::weighted_lstsq(&a, &b, opts.weights.as_deref())?;
    Ok(AsymptoticFit {
        coefficients: x.iter().copied().collect(),
        residual_norm,
        k_range: (ks[0], ks[ks.len() - 1]),
        points: deltas.len(),
    })
}
