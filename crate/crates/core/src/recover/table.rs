// Per-geodesic invariants, order by order, and their forward simulation.

use super::{RecoverError, SurfaceJet};
use crate::anosovgeo::{
    default_samples, xray_function, Basis, ClosedGeodesicClass, FuchsianGroup,
};
use crate::symcalc::{alpha, conformal_factor, potential_factor, JetKind};
use crate::tracelab::{extract_invariants, TraceSignal};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Allowed deviation of an order-0 entry from unit modulus.
pub const MODULUS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    Synthetic,
    /// Extracted from computed wave traces; no accuracy claim.
    Experimental,
}

/// Invariants per class. Order 0 holds unit phases, order J ≥ 1 the real
/// geodesic averages of the degree −J symbol coefficient with the
/// Poincaré prefactor already stripped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvariantTable {
    pub kind: JetKind,
    pub n: usize,
    pub source: TableSource,
    pub words: Vec<String>,
    pub lengths: Vec<f64>,
    /// Primitive lengths T♯.
    pub primitive_lengths: Vec<f64>,
    pub poincare_factors: Vec<f64>,
    pub phases: Vec<Complex64>,
    /// `orders[J − 1]` holds the order-J values.
    pub orders: Vec<Vec<f64>>,
}

impl InvariantTable {
    fn skeleton(kind: JetKind, n: usize, source: TableSource, classes: &[ClosedGeodesicClass]) -> Self {
        Self {
            kind,
            n,
            source,
            words: classes.iter().map(|c| c.word.to_string()).collect(),
            lengths: classes.iter().map(|c| c.length).collect(),
            primitive_lengths: classes.iter().map(|c| c.primitive_length()).collect(),
            poincare_factors: classes.iter().map(|c| c.poincare_factor).collect(),
            phases: vec![Complex64::new(1.0, 0.0); classes.len()],
            orders: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_order(&self) -> usize {
        self.orders.len()
    }

    pub fn order(&self, j: usize) -> Result<&[f64], RecoverError> {
        if j == 0 {
            return Err(RecoverError::MissingOrder(0));
        }
        self.orders
            .get(j - 1)
            .map(Vec::as_slice)
            .ok_or(RecoverError::MissingOrder(j))
    }

    /// Prefactor |T♯| / |det(Id − P_γ)|^{1/2} of the class with index `i`
    /// (the Morse phase is trivial).
    pub fn prefactor(&self, i: usize) -> f64 {
        self.primitive_lengths[i] / self.poincare_factors[i]
    }

    /// Leading wave invariant at order J ≥ 1 with the prefactor restored:
    /// |T♯| / |det(Id − P)|^{1/2} · i · ℓ · value.
    pub fn wave_invariant(&self, i: usize, j: usize) -> Result<Complex64, RecoverError> {
        let v = self.order(j)?[i];
        Ok(Complex64::new(0.0, self.prefactor(i) * self.lengths[i] * v))
    }

    /// Order-0 modulus check and row-count consistency.
    pub fn validate(&self) -> Result<(), RecoverError> {
        let rows = self.len();
        if self.lengths.len() != rows
            || self.phases.len() != rows
            || self.primitive_lengths.len() != rows
            || self.poincare_factors.len() != rows
            || self.orders.iter().any(|o| o.len() != rows)
        {
            return Err(RecoverError::Document("table rows are not aligned".into()));
        }
        for (i, p) in self.phases.iter().enumerate() {
            let m = p.norm();
            if (m - 1.0).abs() > MODULUS_TOL {
                return Err(RecoverError::PhaseModulus {
                    word: self.words[i].clone(),
                    modulus: m,
                });
            }
        }
        Ok(())
    }
}

// Geodesic averages of the field `coefficients` over every class.
fn averages(
    basis: &Basis,
    coefficients: &[f64],
    classes: &[ClosedGeodesicClass],
    group: &FuchsianGroup,
) -> Result<Vec<f64>, RecoverError> {
    if coefficients.iter().all(|&c| c == 0.0) {
        return Ok(vec![0.0; classes.len()]);
    }
    let field = basis.field(coefficients)?;
    classes
        .par_iter()
        .map(|c| Ok(xray_function(&field, c, group, default_samples(c.length))?))
        .collect()
}

/// Simulates the invariant table of `jet` (read as the difference between
/// two boundary jets) up to order `j_max`.
pub fn forward_invariants(
    jet: &SurfaceJet,
    classes: &[ClosedGeodesicClass],
    basis: &Basis,
    group: &FuchsianGroup,
    n: usize,
    j_max: usize,
) -> Result<InvariantTable, RecoverError> {
    if jet.basis_len() != basis.len() {
        return Err(RecoverError::BasisMismatch {
            expected: basis.len(),
            got: jet.basis_len(),
        });
    }
    if n < 2 {
        return Err(RecoverError::InvalidParameter(format!("dimension {n}")));
    }
    let mut table = InvariantTable::skeleton(jet.kind(), n, TableSource::Synthetic, classes);
    if jet.kind() == JetKind::Conformal {
        let a = alpha(n);
        if let Some(c1) = jet.order_field(0) {
            let avg = averages(basis, c1, classes, group)?;
            table.phases = avg
                .iter()
                .zip(classes)
                .map(|(i0, c)| Complex64::from_polar(1.0, -a * c.length * i0))
                .collect();
        }
    }
    for j in 1..=j_max {
        let factor = match jet.kind() {
            JetKind::Conformal => conformal_factor(n, j),
            JetKind::Potential => potential_factor(j),
        };
        let row = match jet.order_field(j) {
            Some(f) if factor != 0.0 => averages(basis, f, classes, group)?
                .into_iter()
                .map(|v| factor * v)
                .collect(),
            _ => vec![0.0; classes.len()],
        };
        table.orders.push(row);
    }
    Ok(table)
}

/// Order-0 table from calibrated trace coefficients of two spectra at the
/// class lengths: phase = (c_A / c_B) / |c_A / c_B|. Classes sharing a length
/// share one extraction. Labeled experimental.
pub fn extracted_table(
    classes: &[ClosedGeodesicClass],
    signal_a: &TraceSignal,
    signal_b: &TraceSignal,
    n: usize,
) -> Result<(InvariantTable, Vec<f64>), RecoverError> {
    let mut distinct: Vec<f64> = Vec::new();
    let mut index = Vec::with_capacity(classes.len());
    for c in classes {
        match distinct.iter().position(|&l| (l - c.length).abs() < 1e-9) {
            Some(p) => index.push(p),
            None => {
                index.push(distinct.len());
                distinct.push(c.length);
            }
        }
    }
    let a = extract_invariants(signal_a, &distinct)?;
    let b = extract_invariants(signal_b, &distinct)?;
    let mut table =
        InvariantTable::skeleton(JetKind::Conformal, n, TableSource::Experimental, classes);
    let mut raw_modulus = Vec::with_capacity(classes.len());
    for (row, &p) in index.iter().enumerate() {
        let ratio = if b[p].norm() > 0.0 { a[p] / b[p] } else { Complex64::new(1.0, 0.0) };
        raw_modulus.push(ratio.norm());
        table.phases[row] = if ratio.norm() > 0.0 {
            ratio / ratio.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
    }
    Ok((table, raw_modulus))
}
