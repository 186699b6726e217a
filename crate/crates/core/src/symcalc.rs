//! Polyhomogeneous symbol arithmetic on the boundary cosphere bundle.
//!
//! Symbols here are isotropic: every homogeneous term is a coefficient field
//! on a finite set of boundary sample points multiplying `|ξ'|^degree`. This
//! covers every closed-form DN-map symbol difference the laboratory needs.
//!
//! Normal derivatives in jets are *outward* (`∂_ν`). Boundary normal
//! coordinates use the inward distance `x_n`, so `∂_n^j = (−1)^j ∂_ν^j`; the
//! closed forms below are written directly in outward derivatives with the
//! signs checked against the radial ODE solver in [`crate::modelgeo`]:
//!
//! * conformal, first non-vanishing derivative `c_{J+1}`:
//!   `α_n (−1/2)^J c_{J+1} |ξ'|^{−J}`, with `α_n = −(n−2)/4`;
//! * potential, first non-vanishing derivative `∂_ν^{j−1}(q₂ − q₁)`:
//!   `−(−1/2)^j ∂_ν^{j−1}(q₂ − q₁) |ξ'|^{−j}`.

use crate::profile::RadialProfile;
use serde::{Deserialize, Serialize};

pub const SCHEMA: &str = "symcalc/v1";

/// Absolute tolerance for "vanishes at every sample point".
pub const ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SymbolError {
    #[error("term degree {0} exceeds 1")]
    DegreeTooHigh(i32),
    #[error("dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),
    #[error("coefficient field has {got} samples, grid has {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("covector norm must be positive, got {0}")]
    NonPositiveNorm(f64),
    #[error("point index {index} out of range for a grid of {len}")]
    PointOutOfRange { index: usize, len: usize },
    #[error("conformal jet must equal 1 on the boundary (point {point}: c_0 = {value})")]
    BoundaryValueNotOne { point: usize, value: f64 },
    #[error("jet of order {order} does not contain derivative {needed}")]
    JetTooShort { order: usize, needed: usize },
    #[error("ragged jet: point {point} has {got} derivatives, expected {expected}")]
    RaggedJet { point: usize, expected: usize, got: usize },
    #[error("derivative {derivative} does not vanish at point {point} (value {value})")]
    PrefixNotZero {
        derivative: usize,
        point: usize,
        value: f64,
    },
    #[error("expected a {expected:?} jet")]
    WrongKind { expected: JetKind },
    #[error("first non-vanishing order must be positive")]
    ZeroOrder,
    #[error("profile is not positive at r = {r} (value {value})")]
    NonPositiveProfile { r: f64, value: f64 },
    #[error("profile is not smooth at r = {r}")]
    NonSmoothProfile { r: f64 },
    #[error("radius {0} outside [0, 1]")]
    RadiusOutOfRange(f64),
    #[error("unsupported document: {0}")]
    Document(String),
}

impl SymbolError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, SymbolError::NonSmoothProfile { .. })
    }
}

/// Dependence of a term on the direction of the covector. Only isotropic
/// terms (functions of `|ξ'|`) occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Isotropic,
}

/// Boundary sample points, in whatever coordinates the caller uses.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundaryGrid {
    pub points: Vec<Vec<f64>>,
}

impl BoundaryGrid {
    pub fn new(points: Vec<Vec<f64>>) -> Self {
        Self { points }
    }

    /// `len` unnamed points (index-only grids).
    pub fn indexed(len: usize) -> Self {
        Self {
            points: (0..len).map(|i| vec![i as f64]).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `coeff(x) · |ξ'|^degree`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneousTerm {
    pub degree: i32,
    pub coeff: Vec<f64>,
    #[serde(default)]
    pub direction: Direction,
}

impl HomogeneousTerm {
    pub fn new(degree: i32, coeff: Vec<f64>) -> Result<Self, SymbolError> {
        if degree > 1 {
            return Err(SymbolError::DegreeTooHigh(degree));
        }
        Ok(Self {
            degree,
            coeff,
            direction: Direction::Isotropic,
        })
    }

    pub fn zero(degree: i32, len: usize) -> Result<Self, SymbolError> {
        Self::new(degree, vec![0.0; len])
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.iter().all(|&c| c == 0.0)
    }

    pub fn evaluate(&self, point: usize, r: f64) -> Result<f64, SymbolError> {
        if r <= 0.0 || r.is_nan() {
            return Err(SymbolError::NonPositiveNorm(r));
        }
        let c = self.coeff.get(point).ok_or(SymbolError::PointOutOfRange {
            index: point,
            len: self.coeff.len(),
        })?;
        Ok(c * r.powi(self.degree))
    }
}

/// Finite sum of isotropic homogeneous terms in canonical form: strictly
/// decreasing degrees, no all-zero terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhomSymbol {
    n: usize,
    grid: BoundaryGrid,
    terms: Vec<HomogeneousTerm>,
}

impl PolyhomSymbol {
    pub fn new(
        n: usize,
        grid: BoundaryGrid,
        terms: Vec<HomogeneousTerm>,
    ) -> Result<Self, SymbolError> {
        if n < 2 {
            return Err(SymbolError::DimensionTooSmall(n));
        }
        let mut s = Self {
            n,
            grid,
            terms: Vec::new(),
        };
        for t in terms {
            s.push_term(t)?;
        }
        Ok(s)
    }

    pub fn zero(n: usize, grid: BoundaryGrid) -> Result<Self, SymbolError> {
        Self::new(n, grid, Vec::new())
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn terms(&self) -> &[HomogeneousTerm] {
        &self.terms
    }

    pub fn term(&self, degree: i32) -> Option<&HomogeneousTerm> {
        self.terms.iter().find(|t| t.degree == degree)
    }

    /// Adds a term, merging with an existing one of the same degree and
    /// pruning the result if it vanishes identically.
    pub fn push_term(&mut self, term: HomogeneousTerm) -> Result<(), SymbolError> {
        if term.degree > 1 {
            return Err(SymbolError::DegreeTooHigh(term.degree));
        }
        if term.coeff.len() != self.grid.len() {
            return Err(SymbolError::GridMismatch {
                expected: self.grid.len(),
                got: term.coeff.len(),
            });
        }
        match self.terms.binary_search_by(|t| term.degree.cmp(&t.degree)) {
            Ok(i) => {
                for (a, b) in self.terms[i].coeff.iter_mut().zip(&term.coeff) {
                    *a += b;
                }
                if self.terms[i].is_zero() {
                    self.terms.remove(i);
                }
            }
            Err(i) => {
                if !term.is_zero() {
                    self.terms.insert(i, term);
                }
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &PolyhomSymbol) -> Result<PolyhomSymbol, SymbolError> {
        if self.grid.len() != other.grid.len() {
            return Err(SymbolError::GridMismatch {
                expected: self.grid.len(),
                got: other.grid.len(),
            });
        }
        let mut out = self.clone();
        for t in &other.terms {
            out.push_term(t.clone())?;
        }
        Ok(out)
    }

    pub fn scale(&self, factor: f64) -> PolyhomSymbol {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.coeff.iter_mut().for_each(|c| *c *= factor);
        }
        out.terms.retain(|t| !t.is_zero());
        out
    }

    pub fn to_document(&self) -> Document {
        Document {
            schema: SCHEMA.to_string(),
            body: DocumentBody::Symbol {
                n: self.n,
                grid: self.grid.clone(),
                terms: self.terms.clone(),
            },
        }
    }
}

/// Σ coeff(x) r^degree over the terms of `s`.
pub fn symbol_evaluate(s: &PolyhomSymbol, point: usize, r: f64) -> Result<f64, SymbolError> {
    if r <= 0.0 || r.is_nan() {
        return Err(SymbolError::NonPositiveNorm(r));
    }
    if point >= s.grid.len() {
        return Err(SymbolError::PointOutOfRange {
            index: point,
            len: s.grid.len(),
        });
    }
    s.terms.iter().map(|t| t.evaluate(point, r)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JetKind {
    Conformal,
    Potential,
}

/// Outward normal-derivative jet `(c_0, …, c_J)` sampled on boundary points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryJet {
    kind: JetKind,
    grid: BoundaryGrid,
    samples: Vec<Vec<f64>>,
}

impl BoundaryJet {
    pub fn new(
        kind: JetKind,
        grid: BoundaryGrid,
        samples: Vec<Vec<f64>>,
    ) -> Result<Self, SymbolError> {
        if samples.len() != grid.len() {
            return Err(SymbolError::GridMismatch {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        let width = samples.first().map_or(1, Vec::len);
        for (point, s) in samples.iter().enumerate() {
            if s.len() != width || s.is_empty() {
                return Err(SymbolError::RaggedJet {
                    point,
                    expected: width.max(1),
                    got: s.len(),
                });
            }
            if kind == JetKind::Conformal && (s[0] - 1.0).abs() > ZERO_TOL {
                return Err(SymbolError::BoundaryValueNotOne { point, value: s[0] });
            }
        }
        Ok(Self {
            kind,
            grid,
            samples,
        })
    }

    /// Builds a jet from per-derivative fields: `fields[j][x] = c_j(x)`.
    pub fn from_fields(
        kind: JetKind,
        grid: BoundaryGrid,
        fields: &[Vec<f64>],
    ) -> Result<Self, SymbolError> {
        let len = grid.len();
        for f in fields {
            if f.len() != len {
                return Err(SymbolError::GridMismatch {
                    expected: len,
                    got: f.len(),
                });
            }
        }
        let samples = (0..len)
            .map(|x| fields.iter().map(|f| f[x]).collect())
            .collect();
        Self::new(kind, grid, samples)
    }

    pub fn kind(&self) -> JetKind {
        self.kind
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    /// Highest stored derivative J.
    pub fn order(&self) -> usize {
        self.samples.first().map_or(0, |s| s.len() - 1)
    }

    pub fn samples(&self) -> &[Vec<f64>] {
        &self.samples
    }

    /// The field `c_j` over all sample points.
    pub fn derivative(&self, j: usize) -> Result<Vec<f64>, SymbolError> {
        if j > self.order() {
            return Err(SymbolError::JetTooShort {
                order: self.order(),
                needed: j,
            });
        }
        Ok(self.samples.iter().map(|s| s[j]).collect())
    }

    pub fn to_document(&self) -> Document {
        let body = match self.kind {
            JetKind::Conformal => DocumentBody::Conformal {
                grid: self.grid.clone(),
                samples: self.samples.clone(),
            },
            JetKind::Potential => DocumentBody::Potential {
                grid: self.grid.clone(),
                samples: self.samples.clone(),
            },
        };
        Document {
            schema: SCHEMA.to_string(),
            body,
        }
    }
}

fn require_zero_prefix(
    fields: impl Iterator<Item = (usize, Vec<f64>)>,
) -> Result<(), SymbolError> {
    for (derivative, field) in fields {
        if let Some((point, &value)) = field
            .iter()
            .enumerate()
            .find(|(_, v)| v.abs() > ZERO_TOL)
        {
            return Err(SymbolError::PrefixNotZero {
                derivative,
                point,
                value,
            });
        }
    }
    Ok(())
}

/// `α_n = −(n−2)/4`.
pub fn alpha(n: usize) -> f64 {
    -(n as f64 - 2.0) / 4.0
}

/// Scalar factor of the conformal symbol difference at degree `−order`,
/// multiplying the outward derivative `c_{order+1}`.
pub fn conformal_factor(n: usize, order: usize) -> f64 {
    alpha(n) * (-0.5f64).powi(order as i32)
}

/// Scalar factor of the potential symbol difference at degree `−order`
/// (order ≥ 1), multiplying `∂_ν^{order−1}(q₂ − q₁)`.
pub fn potential_factor(order: usize) -> f64 {
    -(-0.5f64).powi(order as i32)
}

/// Leading term of `σ(Λ_{cg}) − σ(Λ_g)` when `c_1 = … = c_J = 0`.
///
/// `first_nonzero` is `J + 1`; the returned term has degree `−J`.
pub fn conformal_leading_term(
    jet: &BoundaryJet,
    n: usize,
    first_nonzero: usize,
) -> Result<HomogeneousTerm, SymbolError> {
    if n < 2 {
        return Err(SymbolError::DimensionTooSmall(n));
    }
    if jet.kind != JetKind::Conformal {
        return Err(SymbolError::WrongKind {
            expected: JetKind::Conformal,
        });
    }
    if first_nonzero == 0 {
        return Err(SymbolError::ZeroOrder);
    }
    let order = first_nonzero - 1;
    let top = jet.derivative(first_nonzero)?;
    require_zero_prefix((1..first_nonzero).map(|j| (j, jet.samples.iter().map(|s| s[j]).collect())))?;
    let factor = conformal_factor(n, order);
    HomogeneousTerm::new(-(order as i32), top.iter().map(|c| factor * c).collect())
}

/// Leading term of `σ(Λ_{g,q₂}) − σ(Λ_{g,q₁})` at degree `−order` (order ≥ 1),
/// given that `∂_ν^m(q₂ − q₁)` vanishes for `m < order − 1`.
pub fn potential_leading_term(
    jet1: &BoundaryJet,
    jet2: &BoundaryJet,
    order: usize,
) -> Result<HomogeneousTerm, SymbolError> {
    for j in [jet1, jet2] {
        if j.kind != JetKind::Potential {
            return Err(SymbolError::WrongKind {
                expected: JetKind::Potential,
            });
        }
    }
    if order == 0 {
        return Err(SymbolError::ZeroOrder);
    }
    if jet1.grid.len() != jet2.grid.len() || jet1.grid != jet2.grid {
        return Err(SymbolError::GridMismatch {
            expected: jet1.grid.len(),
            got: jet2.grid.len(),
        });
    }
    let diff = |m: usize| -> Result<Vec<f64>, SymbolError> {
        let a = jet1.derivative(m)?;
        let b = jet2.derivative(m)?;
        Ok(b.iter().zip(&a).map(|(x, y)| x - y).collect())
    };
    let top = diff(order - 1)?;
    let prefix: Result<Vec<_>, _> = (0..order - 1).map(|m| diff(m).map(|f| (m, f))).collect();
    require_zero_prefix(prefix?.into_iter())?;
    let factor = potential_factor(order);
    HomogeneousTerm::new(-(order as i32), top.iter().map(|d| factor * d).collect())
}

/// `sub(Λ_{cg}) − sub(Λ_g) = α_n ∂_ν c` on the boundary grid.
pub fn subprincipal_difference(jet: &BoundaryJet, n: usize) -> Result<Vec<f64>, SymbolError> {
    if n < 2 {
        return Err(SymbolError::DimensionTooSmall(n));
    }
    if jet.kind != JetKind::Conformal {
        return Err(SymbolError::WrongKind {
            expected: JetKind::Conformal,
        });
    }
    let a = alpha(n);
    Ok(jet.derivative(1)?.iter().map(|c| a * c).collect())
}

/// Step of the finite-difference stencils used for `q_c`.
pub const FD_STEP: f64 = 4e-3;

// Sixth-order central stencils on offsets −3..=3.
const D1: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
const D1_DEN: f64 = 60.0;
const D2: [f64; 7] = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0];
const D2_DEN: f64 = 180.0;

/// Schrödinger potential `q_c` at radius `r`, for which
/// `Λ_{cg} = Λ_{g,−q_c} − ((n−2)/4) ∂_ν c · Id`.
///
/// Computed as `c^{(n+2)/4} Δ_{cg}(c^{−(n−2)/4})` with the radial conformal
/// Laplacian `Δ_{cg} w = c^{−1}[w'' + ((n−1)/r + (n−2)c'/(2c)) w']`, all
/// derivatives by sixth-order central differences. Points closer to the
/// origin than the stencil use the even reflection `c(|r|)`, which requires
/// `c'(0) = 0`.
pub fn schrodinger_potential_at(
    profile: &dyn RadialProfile,
    n: usize,
    r: f64,
) -> Result<f64, SymbolError> {
    if n < 2 {
        return Err(SymbolError::DimensionTooSmall(n));
    }
    if !(0.0..=1.0).contains(&r) {
        return Err(SymbolError::RadiusOutOfRange(r));
    }
    if n == 2 {
        return Ok(0.0);
    }
    let h = FD_STEP;
    if r < 3.0 * h {
        let slope = profile.d1(0.0);
        if slope.abs() > 1e-10 * (1.0 + profile.value(0.0).abs()) {
            return Err(SymbolError::NonSmoothProfile { r });
        }
    }
    let a = (n as f64 - 2.0) / 4.0;
    let mut c = [0.0; 7];
    let mut w = [0.0; 7];
    for (i, off) in (-3i32..=3).enumerate() {
        let x = (r + off as f64 * h).abs();
        let v = profile.value(x);
        if !(v > 0.0) {
            return Err(SymbolError::NonPositiveProfile { r: x, value: v });
        }
        c[i] = v;
        w[i] = v.powf(-a);
    }
    let dot = |s: &[f64; 7], v: &[f64; 7]| s.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    let c1 = dot(&D1, &c) / (D1_DEN * h);
    let c2 = dot(&D2, &c) / (D2_DEN * h * h);
    let expected = profile.d2(r);
    if !c2.is_finite() || (c2 - expected).abs() > 1e-5 * (1.0 + expected.abs()) {
        return Err(SymbolError::NonSmoothProfile { r });
    }
    let w1 = dot(&D1, &w) / (D1_DEN * h);
    let w2 = dot(&D2, &w) / (D2_DEN * h * h);
    let c0 = c[3];
    let radial = if r == 0.0 {
        // w'(0) = 0 and (n−1) w'/r → (n−1) w''.
        n as f64 * w2
    } else {
        w2 + ((n as f64 - 1.0) / r + (n as f64 - 2.0) * c1 / (2.0 * c0)) * w1
    };
    Ok(c0.powf(a) * radial)
}

/// `q_c` on a radial grid.
pub fn conformal_schrodinger_potential(
    profile: &dyn RadialProfile,
    n: usize,
    radii: &[f64],
) -> Result<Vec<f64>, SymbolError> {
    radii
        .iter()
        .map(|&r| schrodinger_potential_at(profile, n, r))
        .collect()
}

/// Versioned JSON document for symbols and jets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub schema: String,
    #[serde(flatten)]
    pub body: DocumentBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DocumentBody {
    Symbol {
        n: usize,
        grid: BoundaryGrid,
        terms: Vec<HomogeneousTerm>,
    },
    Conformal {
        grid: BoundaryGrid,
        samples: Vec<Vec<f64>>,
    },
    Potential {
        grid: BoundaryGrid,
        samples: Vec<Vec<f64>>,
    },
}

impl Document {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("symcalc documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SymbolError> {
        let doc: Document =
            serde_json::from_str(text).map_err(|e| SymbolError::Document(e.to_string()))?;
        if doc.schema != SCHEMA {
            return Err(SymbolError::Document(format!(
                "expected schema {SCHEMA}, found {}",
                doc.schema
            )));
        }
        Ok(doc)
    }

    pub fn into_symbol(self) -> Result<PolyhomSymbol, SymbolError> {
        match self.body {
            DocumentBody::Symbol { n, grid, terms } => PolyhomSymbol::new(n, grid, terms),
            _ => Err(SymbolError::Document("not a symbol document".into())),
        }
    }

    pub fn into_jet(self) -> Result<BoundaryJet, SymbolError> {
        match self.body {
            DocumentBody::Conformal { grid, samples } => {
                BoundaryJet::new(JetKind::Conformal, grid, samples)
            }
            DocumentBody::Potential { grid, samples } => {
                BoundaryJet::new(JetKind::Potential, grid, samples)
            }
            DocumentBody::Symbol { .. } => Err(SymbolError::Document("not a jet document".into())),
        }
    }
}
