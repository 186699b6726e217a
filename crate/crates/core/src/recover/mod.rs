//! Order-by-order recovery of the boundary jet from geodesic invariants.
//!
//! The jet difference of two metrics (or potentials) is expanded in a basis
//! of surface functions. Each order is recovered by dividing out the known
//! symbol coefficient and inverting the X-ray transform; the induction stops
//! at the first order that is not zero, since the leading-term formula only
//! holds while all lower orders agree.

mod table;

pub use table::{extracted_table, forward_invariants, InvariantTable, TableSource, MODULUS_TOL};

use crate::anosovgeo::{
    reduce_point, ridge_by_discrepancy, xray_invert, Basis, ClosedGeodesicClass, FuchsianGroup,
    GeoError, XRaySystem,
};
use crate::symcalc::{alpha, conformal_factor, potential_factor, JetKind};
use crate::tracelab::TraceError;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Fraction of π kept clear of the branch cut when reading phases.
pub const BRANCH_MARGIN: f64 = 0.05;
/// Coefficient norm below which a recovered order counts as zero.
pub const DEFAULT_ZERO_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum RecoverError {
    #[error(transparent)]
    Geodesic(#[from] GeoError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("jets of different kinds")]
    KindMismatch,
    #[error("basis has {expected} functions, jet field has {got}")]
    BasisMismatch { expected: usize, got: usize },
    #[error("table rows do not match the X-ray system classes")]
    RowMismatch,
    #[error("order-0 entry for {word} has modulus {modulus}, expected 1")]
    PhaseModulus { word: String, modulus: f64 },
    #[error("phase of {word} has argument {arg}, outside the principal range ±{limit}")]
    BranchViolation { word: String, arg: f64, limit: f64 },
    #[error("dimension obstruction: the order-{order} coefficient vanishes for conformal jets in n = {n}")]
    DimensionObstruction { n: usize, order: usize },
    #[error("order {order} needs order {prior} to vanish first (norm {norm:e})")]
    PreconditionChain { order: usize, prior: usize, norm: f64 },
    #[error("table has no order {0}")]
    MissingOrder(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed document: {0}")]
    Document(String),
}

impl RecoverError {
    pub fn is_numerical(&self) -> bool {
        match self {
            RecoverError::Geodesic(e) => e.is_numerical(),
            RecoverError::Trace(e) => e.is_numerical(),
            _ => false,
        }
    }
}

/// Boundary jet whose derivative fields are coefficient vectors in a basis.
///
/// Conformal kind: `fields[m − 1]` is c_m for m ≥ 1 (c_0 ≡ 1 is implicit).
/// Potential kind: `fields[m]` is ∂ν^m q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceJet {
    kind: JetKind,
    basis_len: usize,
    fields: Vec<Vec<f64>>,
}

impl SurfaceJet {
    fn build(kind: JetKind, fields: Vec<Vec<f64>>) -> Result<Self, RecoverError> {
        let basis_len = fields.first().map_or(0, Vec::len);
        if basis_len == 0 {
            return Err(RecoverError::InvalidParameter("jet needs at least one field".into()));
        }
        if let Some(f) = fields.iter().find(|f| f.len() != basis_len) {
            return Err(RecoverError::BasisMismatch {
                expected: basis_len,
                got: f.len(),
            });
        }
        Ok(Self {
            kind,
            basis_len,
            fields,
        })
    }

    pub fn conformal(fields: Vec<Vec<f64>>) -> Result<Self, RecoverError> {
        Self::build(JetKind::Conformal, fields)
    }

    pub fn potential(fields: Vec<Vec<f64>>) -> Result<Self, RecoverError> {
        Self::build(JetKind::Potential, fields)
    }

    /// All-zero jet with `count` derivative fields.
    pub fn zero(kind: JetKind, basis_len: usize, count: usize) -> Self {
        Self {
            kind,
            basis_len,
            fields: vec![vec![0.0; basis_len]; count.max(1)],
        }
    }

    /// Jet that is zero except for the field probed at `order`.
    pub fn planted(
        kind: JetKind,
        order: usize,
        field: Vec<f64>,
    ) -> Result<Self, RecoverError> {
        let slot = match kind {
            JetKind::Conformal => order,
            JetKind::Potential => order
                .checked_sub(1)
                .ok_or_else(|| RecoverError::InvalidParameter("potential orders start at 1".into()))?,
        };
        let mut fields = vec![vec![0.0; field.len()]; slot + 1];
        fields[slot] = field;
        Self::build(kind, fields)
    }

    pub fn kind(&self) -> JetKind {
        self.kind
    }

    pub fn basis_len(&self) -> usize {
        self.basis_len
    }

    pub fn fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    /// Field entering the order-J symbol coefficient: c_{J+1} (conformal) or
    /// ∂ν^{J−1} q (potential, J ≥ 1). `None` means zero.
    pub fn order_field(&self, j: usize) -> Option<&[f64]> {
        let slot = match self.kind {
            JetKind::Conformal => Some(j),
            JetKind::Potential => j.checked_sub(1),
        }?;
        self.fields.get(slot).map(Vec::as_slice)
    }

    /// Coefficientwise `self − other`, padding the shorter jet with zeros.
    pub fn difference(&self, other: &SurfaceJet) -> Result<SurfaceJet, RecoverError> {
        if self.kind != other.kind {
            return Err(RecoverError::KindMismatch);
        }
        if self.basis_len != other.basis_len {
            return Err(RecoverError::BasisMismatch {
                expected: self.basis_len,
                got: other.basis_len,
            });
        }
        let count = self.fields.len().max(other.fields.len());
        let zero = vec![0.0; self.basis_len];
        let fields = (0..count)
            .map(|m| {
                let a = self.fields.get(m).unwrap_or(&zero);
                let b = other.fields.get(m).unwrap_or(&zero);
                a.iter().zip(b).map(|(x, y)| x - y).collect()
            })
            .collect();
        Ok(SurfaceJet {
            kind: self.kind,
            basis_len: self.basis_len,
            fields,
        })
    }
}

/// Regularization choice for each inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ridge {
    Fixed(f64),
    /// Discrepancy principle with noise level `relative · ‖v‖`.
    Discrepancy { relative: f64 },
}

impl Default for Ridge {
    fn default() -> Self {
        Ridge::Fixed(0.0)
    }
}

fn choose_ridge(system: &XRaySystem, values: &[f64], ridge: Ridge) -> Result<f64, RecoverError> {
    match ridge {
        Ridge::Fixed(l) => Ok(l),
        Ridge::Discrepancy { relative } => {
            let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(ridge_by_discrepancy(system, values, relative * norm)?)
        }
    }
}

/// One recovered order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderResult {
    pub order: usize,
    pub coefficients: Vec<f64>,
    pub coefficient_norm: f64,
    /// ‖A x − v‖ / ‖v‖, zero for zero data.
    pub residual: f64,
    pub lambda: f64,
}

impl OrderResult {
    pub fn is_zero(&self, tol: f64) -> bool {
        self.coefficient_norm < tol
    }
}

fn check_rows(table: &InvariantTable, system: &XRaySystem) -> Result<(), RecoverError> {
    if table.words != system.words {
        return Err(RecoverError::RowMismatch);
    }
    Ok(())
}

fn invert(
    system: &XRaySystem,
    order: usize,
    values: &[f64],
    ridge: Ridge,
) -> Result<OrderResult, RecoverError> {
    let lambda = choose_ridge(system, values, ridge)?;
    let x = xray_invert(system, values, lambda)?;
    let ax = system.apply(&x)?;
    let vnorm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rnorm = ax
        .iter()
        .zip(values)
        .map(|(a, v)| (a - v) * (a - v))
        .sum::<f64>()
        .sqrt();
    Ok(OrderResult {
        order,
        coefficient_norm: x.iter().map(|c| c * c).sum::<f64>().sqrt(),
        coefficients: x,
        residual: if vnorm > 0.0 { rnorm / vnorm } else { rnorm },
        lambda,
    })
}

/// Recovers ∂ν c from the order-0 phases by reading their principal
/// arguments, I₀(c₁)(γ) = −arg / (α_n ℓ_γ).
pub fn recover_order_zero(
    table: &InvariantTable,
    system: &XRaySystem,
    n: usize,
    ridge: Ridge,
) -> Result<OrderResult, RecoverError> {
    table.validate()?;
    check_rows(table, system)?;
    if table.kind != JetKind::Conformal {
        return Err(RecoverError::KindMismatch);
    }
    let a = alpha(n);
    if a == 0.0 {
        return Err(RecoverError::DimensionObstruction { n, order: 0 });
    }
    let limit = PI * (1.0 - BRANCH_MARGIN);
    let values = table
        .phases
        .iter()
        .zip(&table.lengths)
        .zip(&table.words)
        .map(|((p, &l), w)| {
            let arg = p.arg();
            if arg.abs() >= limit {
                return Err(RecoverError::BranchViolation {
                    word: w.clone(),
                    arg,
                    limit,
                });
            }
            Ok(-arg / (a * l))
        })
        .collect::<Result<Vec<_>, _>>()?;
    invert(system, 0, &values, ridge)
}

/// Recovers the order-J field (c_{J+1}, or ∂ν^{J−1} of the potential
/// difference) once all lower orders in `prior` are known to vanish.
pub fn recover_higher_order(
    table: &InvariantTable,
    j: usize,
    system: &XRaySystem,
    n: usize,
    prior: &[OrderResult],
    zero_tol: f64,
    ridge: Ridge,
) -> Result<OrderResult, RecoverError> {
    if j == 0 {
        return Err(RecoverError::InvalidParameter("higher orders start at 1".into()));
    }
    table.validate()?;
    check_rows(table, system)?;
    if let Some(p) = prior.iter().find(|p| p.order < j && !p.is_zero(zero_tol)) {
        return Err(RecoverError::PreconditionChain {
            order: j,
            prior: p.order,
            norm: p.coefficient_norm,
        });
    }
    let factor = match table.kind {
        JetKind::Conformal => conformal_factor(n, j),
        JetKind::Potential => potential_factor(j),
    };
    if factor == 0.0 {
        return Err(RecoverError::DimensionObstruction { n, order: j });
    }
    let values: Vec<f64> = table.order(j)?.iter().map(|v| v / factor).collect();
    invert(system, j, &values, ridge)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n: usize,
    pub j_max: usize,
    pub zero_tol: f64,
    pub ridge: Ridge,
}

impl PipelineConfig {
    pub fn new(n: usize, j_max: usize) -> Self {
        Self {
            n,
            j_max,
            zero_tol: DEFAULT_ZERO_TOL,
            ridge: Ridge::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Every recovered order vanishes: consistent with equal spectra.
    IsospectralConsistent,
    /// Some order is nonzero: the jets (hence the spectra) differ.
    JetsDiffer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conditioning {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub smallest_singular_value: f64,
    pub condition_number: Option<f64>,
}

impl Conditioning {
    pub fn of(system: &XRaySystem) -> Self {
        let c = system.condition_number();
        Self {
            rows: system.rows(),
            cols: system.cols(),
            rank: system.rank(),
            smallest_singular_value: system.smallest_singular_value(),
            condition_number: c.is_finite().then_some(c),
        }
    }
}

/// Recovered jet with per-order diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveredJet {
    pub kind: JetKind,
    pub n: usize,
    pub source: TableSource,
    pub orders: Vec<OrderResult>,
    pub first_nonzero: Option<usize>,
    pub verdict: Verdict,
    pub conditioning: Conditioning,
}

const RECOVER_SCHEMA: &str = "recover/v1";

#[derive(Serialize, Deserialize)]
struct RecoverDocument {
    schema: String,
    #[serde(flatten)]
    report: RecoveredJet,
}

impl RecoveredJet {
    pub fn order(&self, j: usize) -> Option<&OrderResult> {
        self.orders.iter().find(|o| o.order == j)
    }

    pub fn to_json(&self) -> String {
        let doc = RecoverDocument {
            schema: RECOVER_SCHEMA.into(),
            report: self.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, RecoverError> {
        let doc: RecoverDocument =
            serde_json::from_str(s).map_err(|e| RecoverError::Document(e.to_string()))?;
        if doc.schema != RECOVER_SCHEMA {
            return Err(RecoverError::Document(format!("schema {}", doc.schema)));
        }
        Ok(doc.report)
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{:?} jet, n = {}, {} classes x {} basis functions (cond {})\n",
            self.kind,
            self.n,
            self.conditioning.rows,
            self.conditioning.cols,
            self.conditioning
                .condition_number
                .map_or("inf".to_string(), |c| format!("{c:.3e}")),
        );
        for o in &self.orders {
            s += &format!(
                "  order {}: |x| = {:.3e}, residual = {:.3e}, lambda = {:.1e}\n",
                o.order, o.coefficient_norm, o.residual, o.lambda
            );
        }
        s += &match (self.verdict, self.first_nonzero) {
            (Verdict::IsospectralConsistent, _) => "verdict: isospectral-consistent\n".to_string(),
            (Verdict::JetsDiffer, Some(j)) => format!("verdict: jets differ, first at order {j}\n"),
            (Verdict::JetsDiffer, None) => "verdict: jets differ\n".to_string(),
        };
        if self.source == TableSource::Experimental {
            s += "(experimental table source)\n";
        }
        s
    }
}

/// Runs the induction on a prepared table: order 0 (conformal only), then
/// J = 1..j_max, stopping at the first nonzero order.
pub fn recover_from_table(
    table: &InvariantTable,
    system: &XRaySystem,
    cfg: &PipelineConfig,
) -> Result<RecoveredJet, RecoverError> {
    let mut orders: Vec<OrderResult> = Vec::new();
    let mut first_nonzero = None;
    if table.kind == JetKind::Conformal {
        let r = recover_order_zero(table, system, cfg.n, cfg.ridge)?;
        if !r.is_zero(cfg.zero_tol) {
            first_nonzero = Some(0);
        }
        orders.push(r);
    }
    if first_nonzero.is_none() {
        for j in 1..=cfg.j_max.min(table.max_order()) {
            let r = recover_higher_order(table, j, system, cfg.n, &orders, cfg.zero_tol, cfg.ridge)?;
            let nonzero = !r.is_zero(cfg.zero_tol);
            orders.push(r);
            if nonzero {
                first_nonzero = Some(j);
                break;
            }
        }
    }
    Ok(RecoveredJet {
        kind: table.kind,
        n: cfg.n,
        source: table.source,
        orders,
        first_nonzero,
        verdict: if first_nonzero.is_some() {
            Verdict::JetsDiffer
        } else {
            Verdict::IsospectralConsistent
        },
        conditioning: Conditioning::of(system),
    })
}

/// Forward-simulates the invariants of `jet_a − jet_b` and recovers them.
pub fn run_pipeline(
    jet_a: &SurfaceJet,
    jet_b: &SurfaceJet,
    classes: &[ClosedGeodesicClass],
    basis: &Basis,
    system: &XRaySystem,
    group: &FuchsianGroup,
    cfg: &PipelineConfig,
) -> Result<RecoveredJet, RecoverError> {
    let diff = jet_a.difference(jet_b)?;
    let table = forward_invariants(&diff, classes, basis, group, cfg.n, cfg.j_max)?;
    recover_from_table(&table, system, cfg)
}

/// L² norm on the surface for fields in a basis, by equal-weight quadrature
/// on area-uniform points of the fundamental domain.
#[derive(Debug, Clone)]
pub struct FieldNorm {
    values: DMatrix<f64>,
}

impl FieldNorm {
    pub fn new(basis: &Basis, group: &FuchsianGroup, points: usize) -> Result<Self, RecoverError> {
        let radius = group.domain.circumradius;
        let golden = PI * (3.0 - 5f64.sqrt());
        let mut inside = Vec::new();
        for i in 0..points {
            let u = (i as f64 + 0.5) / points as f64;
            let rho = (1.0 + u * (radius.cosh() - 1.0)).acosh();
            let z = Complex64::from_polar((0.5 * rho).tanh(), golden * i as f64);
            if (reduce_point(z, group)? - z).norm() == 0.0 {
                inside.push(z);
            }
        }
        if inside.is_empty() {
            return Err(RecoverError::InvalidParameter("no quadrature points".into()));
        }
        let values = DMatrix::from_fn(inside.len(), basis.len(), |i, j| basis.value(j, inside[i]));
        Ok(Self { values })
    }

    pub fn norm(&self, coefficients: &[f64]) -> f64 {
        let x = DVector::from_column_slice(coefficients);
        (&self.values * x).norm() / (self.values.nrows() as f64).sqrt()
    }

    /// ‖a − b‖ / ‖b‖.
    pub fn relative_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        self.norm(&d) / self.norm(b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anosovgeo::{build_default_surface, build_xray_system, enumerate_classes, BumpBasis};

    struct Fixture {
        group: FuchsianGroup,
        classes: Vec<ClosedGeodesicClass>,
        basis: Basis,
        system: XRaySystem,
    }

    fn fixture() -> Fixture {
        let group = build_default_surface();
        let classes = enumerate_classes(&group, 3).unwrap();
        let basis = Basis::Bumps(BumpBasis::spiral(&group, 8).unwrap());
        let system = build_xray_system(&basis, &classes, &group).unwrap();
        Fixture {
            group,
            classes,
            basis,
            system,
        }
    }

    const PLANT: [f64; 8] = [0.05, -0.03, 0.02, 0.04, -0.01, 0.03, -0.02, 0.01];

    fn run(f: &Fixture, a: &SurfaceJet, b: &SurfaceJet, n: usize, j_max: usize) -> Result<RecoveredJet, RecoverError> {
        run_pipeline(a, b, &f.classes, &f.basis, &f.system, &f.group, &PipelineConfig::new(n, j_max))
    }

    #[test]
    fn equal_jets_are_consistent() {
        let f = fixture();
        let a = SurfaceJet::conformal(vec![PLANT.to_vec(); 4]).unwrap();
        let r = run(&f, &a, &a, 3, 3).unwrap();
        assert_eq!(r.verdict, Verdict::IsospectralConsistent);
        assert_eq!(r.orders.len(), 4);
        assert!(r.orders.iter().all(|o| o.coefficient_norm < 1e-9 && o.residual < 1e-9));
    }

    #[test]
    fn planted_orders_are_found() {
        let f = fixture();
        let norm = FieldNorm::new(&f.basis, &f.group, 3000).unwrap();
        let zero = SurfaceJet::zero(JetKind::Conformal, 8, 1);
        for order in 0..=3 {
            let a = SurfaceJet::planted(JetKind::Conformal, order, PLANT.to_vec()).unwrap();
            let r = run(&f, &a, &zero, 3, 3).unwrap();
            assert_eq!(r.first_nonzero, Some(order));
            assert_eq!(r.verdict, Verdict::JetsDiffer);
            let got = &r.order(order).unwrap().coefficients;
            assert!(norm.relative_error(got, &PLANT) < 1e-6);
            for lower in &r.orders[..order] {
                assert!(lower.coefficient_norm < 1e-6);
            }
        }
    }

    #[test]
    fn potential_orders_start_at_one() {
        let f = fixture();
        let zero = SurfaceJet::zero(JetKind::Potential, 8, 1);
        let a = SurfaceJet::planted(JetKind::Potential, 2, PLANT.to_vec()).unwrap();
        let r = run(&f, &a, &zero, 3, 3).unwrap();
        assert_eq!(r.orders[0].order, 1);
        assert_eq!(r.first_nonzero, Some(2));
        assert!(SurfaceJet::planted(JetKind::Potential, 0, PLANT.to_vec()).is_err());
    }

    #[test]
    fn two_dimensions_obstruct() {
        let f = fixture();
        let a = SurfaceJet::planted(JetKind::Conformal, 1, PLANT.to_vec()).unwrap();
        let zero = SurfaceJet::zero(JetKind::Conformal, 8, 1);
        assert!(matches!(
            run(&f, &a, &zero, 2, 2),
            Err(RecoverError::DimensionObstruction { n: 2, .. })
        ));
        let table = forward_invariants(&a, &f.classes, &f.basis, &f.group, 3, 2).unwrap();
        assert!(matches!(
            recover_higher_order(&table, 1, &f.system, 2, &[], 1e-6, Ridge::default()),
            Err(RecoverError::DimensionObstruction { .. })
        ));
    }

    #[test]
    fn branch_and_chain_preconditions() {
        let f = fixture();
        let big: Vec<f64> = PLANT.iter().map(|c| 200.0 * c).collect();
        let a = SurfaceJet::planted(JetKind::Conformal, 0, big).unwrap();
        let table = forward_invariants(&a, &f.classes, &f.basis, &f.group, 3, 1).unwrap();
        assert!(matches!(
            recover_order_zero(&table, &f.system, 3, Ridge::default()),
            Err(RecoverError::BranchViolation { .. })
        ));
        let nonzero = OrderResult {
            order: 0,
            coefficients: vec![1.0],
            coefficient_norm: 1.0,
            residual: 0.0,
            lambda: 0.0,
        };
        assert!(matches!(
            recover_higher_order(&table, 1, &f.system, 3, &[nonzero], 1e-6, Ridge::default()),
            Err(RecoverError::PreconditionChain { .. })
        ));
    }

    #[test]
    fn linear_in_the_plant() {
        let f = fixture();
        let zero = SurfaceJet::zero(JetKind::Conformal, 8, 1);
        let p2: Vec<f64> = PLANT.iter().rev().copied().collect();
        let sum: Vec<f64> = PLANT.iter().zip(&p2).map(|(a, b)| a + b).collect();
        let get = |p: &[f64]| {
            let a = SurfaceJet::planted(JetKind::Conformal, 2, p.to_vec()).unwrap();
            run(&f, &a, &zero, 3, 2).unwrap().order(2).unwrap().coefficients.clone()
        };
        let (x1, x2, xs) = (get(&PLANT), get(&p2), get(&sum));
        for i in 0..8 {
            assert!((x1[i] + x2[i] - xs[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn report_json_round_trip() {
        let f = fixture();
        let zero = SurfaceJet::zero(JetKind::Conformal, 8, 1);
        let a = SurfaceJet::planted(JetKind::Conformal, 1, PLANT.to_vec()).unwrap();
        let r = run(&f, &a, &zero, 3, 2).unwrap();
        let back = RecoveredJet::from_json(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert!(r.to_json().contains("\"recover/v1\""));
        assert!(r.summary().contains("first at order 1"));
    }
}
