// Geodesic X-ray transform over closed geodesics and its regularized inverse.

use super::classes::ClosedGeodesicClass;
use super::geodesic::{reduce_point, sample_closed_geodesic};
use super::group::{distance_from_origin, FuchsianGroup, Su11};
use super::GeoError;
use crate::linalg::{Decomposition, LinalgError};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Minimum quadrature samples per geodesic.
pub const MIN_SAMPLES: usize = 64;
/// Allowed change of a transform value when the sample count is doubled.
pub const QUADRATURE_TOL: f64 = 1e-8;
const DEFAULT_WIDTH: f64 = 0.4;
const CUTOFF_WIDTHS: f64 = 8.0;

/// Samples used by default for a geodesic of length ℓ.
pub fn default_samples(length: f64) -> usize {
    MIN_SAMPLES.max((10.0 * length).ceil() as usize)
}

/// Scalar function on the surface, evaluated at points of the fundamental
/// domain in disk coordinates.
pub trait SurfaceFunction: Sync {
    fn value(&self, z: Complex64) -> f64;

    /// Euclidean gradient ∂x + i∂y, if available.
    fn gradient(&self, _z: Complex64) -> Option<Complex64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantField(pub f64);

impl SurfaceFunction for ConstantField {
    fn value(&self, _z: Complex64) -> f64 {
        self.0
    }

    fn gradient(&self, _z: Complex64) -> Option<Complex64> {
        Some(Complex64::new(0.0, 0.0))
    }
}

/// Wraps a closure; the caller is responsible for Γ-invariance.
pub struct FnField<F>(pub F);

impl<F: Fn(Complex64) -> f64 + Sync> SurfaceFunction for FnField<F> {
    fn value(&self, z: Complex64) -> f64 {
        (self.0)(z)
    }
}

// Walks the geodesic with 2·samples steps and returns the trapezoid
// averages over the even sub-grid and the full grid.
fn walk<G>(
    class: &ClosedGeodesicClass,
    group: &FuchsianGroup,
    samples: usize,
    integrand: G,
) -> Result<(f64, f64), GeoError>
where
    G: Fn(&Su11) -> f64,
{
    if samples < MIN_SAMPLES {
        return Err(GeoError::TooFewSamples {
            got: samples,
            min: MIN_SAMPLES,
        });
    }
    let geo = sample_closed_geodesic(&class.matrix.to_su11(), group, 2 * samples)?;
    let (mut even, mut odd) = (0.0, 0.0);
    for (i, f) in geo.frames.iter().enumerate() {
        let v = integrand(f);
        if i % 2 == 0 {
            even += v;
        } else {
            odd += v;
        }
    }
    let coarse = even / samples as f64;
    let fine = (even + odd) / (2 * samples) as f64;
    Ok((coarse, fine))
}

fn converged((coarse, fine): (f64, f64)) -> Result<f64, GeoError> {
    let change = (fine - coarse).abs();
    let tol = QUADRATURE_TOL * fine.abs().max(1.0);
    if change > tol {
        return Err(GeoError::QuadratureNotConverged { change, tol });
    }
    Ok(fine)
}

/// (1/ℓ)∫₀^ℓ f(γ(s)) ds along the closed geodesic of `class`.
pub fn xray_function(
    f: &dyn SurfaceFunction,
    class: &ClosedGeodesicClass,
    group: &FuchsianGroup,
    samples: usize,
) -> Result<f64, GeoError> {
    converged(walk(class, group, samples, |fr| f.value(fr.origin_image()))?)
}

/// (1/ℓ)∫₀^ℓ d/ds v(γ(s)) ds, which vanishes for closed orbits.
pub fn xray_flow(
    v: &dyn SurfaceFunction,
    class: &ClosedGeodesicClass,
    group: &FuchsianGroup,
    samples: usize,
) -> Result<f64, GeoError> {
    let probe = v
        .gradient(Complex64::new(0.0, 0.0))
        .ok_or_else(|| GeoError::InvalidBasis("function has no gradient".into()))?;
    debug_assert!(probe.re.is_finite());
    let pair = walk(class, group, samples, |fr| {
        let grad = v.gradient(fr.origin_image()).unwrap_or_default();
        (grad.conj() * fr.velocity()).re
    })?;
    // The integrand averages to zero, so judge convergence absolutely.
    let change = (pair.1 - pair.0).abs();
    if change > QUADRATURE_TOL {
        return Err(GeoError::QuadratureNotConverged {
            change,
            tol: QUADRATURE_TOL,
        });
    }
    Ok(pair.1)
}

/// Order-2 transform of the conformal tensor f·g along the unit-speed
/// geodesic, evaluating g on the velocity at every sample.
pub fn xray_conformal_tensor(
    f: &dyn SurfaceFunction,
    class: &ClosedGeodesicClass,
    group: &FuchsianGroup,
    samples: usize,
) -> Result<f64, GeoError> {
    converged(walk(class, group, samples, |fr| {
        let z = fr.origin_image();
        let v = fr.velocity();
        let conf = 2.0 / (1.0 - z.norm_sqr());
        f.value(z) * conf * conf * v.norm_sqr()
    })?)
}

/// Periodized Gaussian bumps exp(−d²/2w²) in hyperbolic distance, cut off
/// at 8w, summed over the translates of each center.
#[derive(Debug, Clone)]
pub struct BumpBasis {
    centers: Vec<Complex64>,
    width: f64,
    // Translates of each center that can reach the fundamental domain.
    orbits: Vec<Vec<(Complex64, f64)>>,
    cut_u: f64,
}

fn fibonacci_centers(count: usize, radius: f64) -> Vec<Complex64> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            // Area-uniform in the hyperbolic disk of the given radius.
            let u = (i as f64 + 0.5) / count as f64;
            let rho = (1.0 + u * (radius.cosh() - 1.0)).acosh();
            Complex64::from_polar((0.5 * rho).tanh(), golden * i as f64)
        })
        .collect()
}

// u = cosh d − 1 between z and p, with the precomputed 1 − |p|².
fn cosh_gap(z: Complex64, p: Complex64, bp: f64) -> f64 {
    2.0 * (z - p).norm_sqr() / ((1.0 - z.norm_sqr()) * bp)
}

impl BumpBasis {
    /// `count` bumps of the default width on a spiral covering the domain.
    pub fn spiral(group: &FuchsianGroup, count: usize) -> Result<Self, GeoError> {
        Self::spiral_with_width(group, count, DEFAULT_WIDTH)
    }

    pub fn spiral_with_width(
        group: &FuchsianGroup,
        count: usize,
        width: f64,
    ) -> Result<Self, GeoError> {
        if count == 0 {
            return Err(GeoError::InvalidBasis("empty bump basis".into()));
        }
        let centers = fibonacci_centers(count, group.domain.circumradius)
            .into_iter()
            .map(|c| reduce_point(c, group))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_centers(group, centers, width)
    }

    pub fn from_centers(
        group: &FuchsianGroup,
        centers: Vec<Complex64>,
        width: f64,
    ) -> Result<Self, GeoError> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(GeoError::InvalidBasis(format!("width {width}")));
        }
        if centers.is_empty() || centers.iter().any(|c| !(c.norm() < 1.0)) {
            return Err(GeoError::InvalidBasis("centers must lie in the disk".into()));
        }
        let r = group.domain.circumradius;
        let cutoff = CUTOFF_WIDTHS * width;
        let tiles = group.tiles_within(2.0 * r + cutoff, 3.0 * r + cutoff);
        let orbits = centers
            .iter()
            .map(|&c| {
                tiles
                    .iter()
                    .map(|g| g.apply(c))
                    .filter(|&p| distance_from_origin(p) <= r + cutoff)
                    .map(|p| (p, 1.0 - p.norm_sqr()))
                    .collect()
            })
            .collect();
        Ok(Self {
            centers,
            width,
            orbits,
            cut_u: cutoff.cosh() - 1.0,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[Complex64] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn value(&self, i: usize, z: Complex64) -> f64 {
        let s = 0.5 / (self.width * self.width);
        self.orbits[i]
            .iter()
            .map(|&(p, bp)| {
                let u = cosh_gap(z, p, bp);
                if u > self.cut_u {
                    0.0
                } else {
                    let d = (1.0 + u).acosh();
                    (-s * d * d).exp()
                }
            })
            .sum()
    }

    pub fn gradient(&self, i: usize, z: Complex64) -> Complex64 {
        let w2 = self.width * self.width;
        let a = 1.0 - z.norm_sqr();
        self.orbits[i]
            .iter()
            .map(|&(p, bp)| {
                let u = cosh_gap(z, p, bp);
                if u > self.cut_u {
                    return Complex64::new(0.0, 0.0);
                }
                let d = (1.0 + u).acosh();
                let phi = (-0.5 * d * d / w2).exp();
                // d / sqrt(u(u + 2)) → 1 as u → 0.
                let ratio = if u < 1e-12 { 1.0 } else { d / (u * (u + 2.0)).sqrt() };
                let du = (2.0 / bp) * (2.0 * (z - p) / a + 2.0 * (z - p).norm_sqr() * z / (a * a));
                -phi / w2 * ratio * du
            })
            .sum()
    }
}

/// Finite basis of surface functions used by the inversion.
#[derive(Debug, Clone)]
pub enum Basis {
    Constant,
    Bumps(BumpBasis),
}

impl Basis {
    pub fn len(&self) -> usize {
        match self {
            Basis::Constant => 1,
            Basis::Bumps(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value(&self, i: usize, z: Complex64) -> f64 {
        match self {
            Basis::Constant => 1.0,
            Basis::Bumps(b) => b.value(i, z),
        }
    }

    pub fn gradient(&self, i: usize, z: Complex64) -> Complex64 {
        match self {
            Basis::Constant => Complex64::new(0.0, 0.0),
            Basis::Bumps(b) => b.gradient(i, z),
        }
    }

    pub fn descriptor(&self) -> BasisDescriptor {
        match self {
            Basis::Constant => BasisDescriptor {
                kind: "constant".into(),
                width: None,
                centers: Vec::new(),
            },
            Basis::Bumps(b) => BasisDescriptor {
                kind: "bumps".into(),
                width: Some(b.width),
                centers: b.centers.iter().map(|c| [c.re, c.im]).collect(),
            },
        }
    }

    /// Σ cᵢ φᵢ as a surface function.
    pub fn field<'a>(&'a self, coefficients: &'a [f64]) -> Result<BasisField<'a>, GeoError> {
        if coefficients.len() != self.len() {
            return Err(GeoError::ValueCount {
                expected: self.len(),
                got: coefficients.len(),
            });
        }
        Ok(BasisField {
            basis: self,
            coefficients,
        })
    }
}

pub struct BasisField<'a> {
    basis: &'a Basis,
    coefficients: &'a [f64],
}

impl SurfaceFunction for BasisField<'_> {
    fn value(&self, z: Complex64) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| c * self.basis.value(i, z))
            .sum()
    }

    fn gradient(&self, z: Complex64) -> Option<Complex64> {
        Some(
            self.coefficients
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| *c * self.basis.gradient(i, z))
                .sum(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDescriptor {
    pub kind: String,
    pub width: Option<f64>,
    pub centers: Vec<[f64; 2]>,
}

/// Design matrix of geodesic averages, one row per class.
#[derive(Debug, Clone)]
pub struct XRaySystem {
    pub basis: BasisDescriptor,
    pub words: Vec<String>,
    pub lengths: Vec<f64>,
    pub matrix: DMatrix<f64>,
    decomposition: Decomposition,
}

#[derive(Serialize, Deserialize)]
struct XRayDocument {
    schema: String,
    basis: BasisDescriptor,
    words: Vec<String>,
    lengths: Vec<f64>,
    rows: usize,
    cols: usize,
    matrix: Vec<f64>,
    singular_values: Vec<f64>,
    smallest_singular_value: f64,
    condition_number: Option<f64>,
    rank: usize,
}

const XRAY_SCHEMA: &str = "xray/v1";

impl XRaySystem {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn singular_values(&self) -> &[f64] {
        self.decomposition.singular_values()
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    pub fn condition_number(&self) -> f64 {
        self.decomposition.condition_number()
    }

    pub fn rank(&self) -> usize {
        self.decomposition.rank()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.cols()
    }

    pub fn apply(&self, coefficients: &[f64]) -> Result<Vec<f64>, GeoError> {
        if coefficients.len() != self.cols() {
            return Err(GeoError::ValueCount {
                expected: self.cols(),
                got: coefficients.len(),
            });
        }
        let x = DVector::from_column_slice(coefficients);
        Ok((&self.matrix * x).as_slice().to_vec())
    }

    pub fn to_json(&self) -> String {
        let cond = self.condition_number();
        let doc = XRayDocument {
            schema: XRAY_SCHEMA.into(),
            basis: self.basis.clone(),
            words: self.words.clone(),
            lengths: self.lengths.clone(),
            rows: self.rows(),
            cols: self.cols(),
            matrix: self.matrix.transpose().as_slice().to_vec(),
            singular_values: self.singular_values().to_vec(),
            smallest_singular_value: self.smallest_singular_value(),
            condition_number: cond.is_finite().then_some(cond),
            rank: self.rank(),
        };
        serde_json::to_string_pretty(&doc).expect("plain data serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GeoError> {
        let doc: XRayDocument =
            serde_json::from_str(s).map_err(|e| GeoError::Document(e.to_string()))?;
        if doc.schema != XRAY_SCHEMA {
            return Err(GeoError::Document(format!("schema {}", doc.schema)));
        }
        if doc.matrix.len() != doc.rows * doc.cols
            || doc.words.len() != doc.rows
            || doc.lengths.len() != doc.rows
        {
            return Err(GeoError::Document("inconsistent dimensions".into()));
        }
        let matrix = DMatrix::from_row_slice(doc.rows, doc.cols, &doc.matrix);
        Self::assemble(doc.basis, doc.words, doc.lengths, matrix)
    }

    fn assemble(
        basis: BasisDescriptor,
        words: Vec<String>,
        lengths: Vec<f64>,
        matrix: DMatrix<f64>,
    ) -> Result<Self, GeoError> {
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(GeoError::Document("non-finite matrix entry".into()));
        }
        let decomposition = Decomposition::new(&matrix).map_err(linalg_error)?;
        Ok(Self {
            basis,
            words,
            lengths,
            matrix,
            decomposition,
        })
    }
}

fn linalg_error(e: LinalgError) -> GeoError {
    match e {
        LinalgError::RankDeficient { rank, cols } => GeoError::RankDeficient { rank, cols },
        LinalgError::DimensionMismatch { rows, len } => GeoError::ValueCount {
            expected: rows,
            got: len,
        },
        LinalgError::SvdFailed => GeoError::RankDeficient { rank: 0, cols: 0 },
    }
}

/// Geodesic averages of every basis function over every class.
pub fn build_xray_system(
    basis: &Basis,
    classes: &[ClosedGeodesicClass],
    group: &FuchsianGroup,
) -> Result<XRaySystem, GeoError> {
    let cols = basis.len();
    if classes.len() < cols {
        return Err(GeoError::Underdetermined {
            rows: classes.len(),
            cols,
        });
    }
    let rows: Vec<Vec<f64>> = classes
        .par_iter()
        .map(|class| {
            let samples = default_samples(class.length);
            let geo = sample_closed_geodesic(&class.matrix.to_su11(), group, 2 * samples)?;
            let mut even = vec![0.0; cols];
            let mut all = vec![0.0; cols];
            for (i, f) in geo.frames.iter().enumerate() {
                let z = f.origin_image();
                for j in 0..cols {
                    let v = basis.value(j, z);
                    all[j] += v;
                    if i % 2 == 0 {
                        even[j] += v;
                    }
                }
            }
            all.iter()
                .zip(&even)
                .map(|(&a, &e)| converged((e / samples as f64, a / (2 * samples) as f64)))
                .collect()
        })
        .collect::<Result<_, GeoError>>()?;
    let matrix = DMatrix::from_fn(classes.len(), cols, |i, j| rows[i][j]);
    XRaySystem::assemble(
        basis.descriptor(),
        classes.iter().map(|c| c.word.to_string()).collect(),
        classes.iter().map(|c| c.length).collect(),
        matrix,
    )
}

/// Minimizer of ‖A x − v‖² + λ‖x‖².
pub fn xray_invert(system: &XRaySystem, values: &[f64], lambda: f64) -> Result<Vec<f64>, GeoError> {
    if values.len() != system.rows() {
        return Err(GeoError::ValueCount {
            expected: system.rows(),
            got: values.len(),
        });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(GeoError::InvalidParameter(format!("ridge {lambda}")));
    }
    let b = DVector::from_column_slice(values);
    let x = system.decomposition.solve(&b, lambda).map_err(linalg_error)?;
    Ok(x.as_slice().to_vec())
}

fn residual(system: &XRaySystem, values: &[f64], lambda: f64) -> Result<f64, GeoError> {
    let x = xray_invert(system, values, lambda)?;
    let ax = system.apply(&x)?;
    Ok(ax
        .iter()
        .zip(values)
        .map(|(a, v)| (a - v) * (a - v))
        .sum::<f64>()
        .sqrt())
}

/// Largest λ whose residual stays within the noise level `delta` (the
/// discrepancy principle). Returns 0 when even the unregularized fit
/// exceeds `delta`.
pub fn ridge_by_discrepancy(
    system: &XRaySystem,
    values: &[f64],
    delta: f64,
) -> Result<f64, GeoError> {
    let smax = system.singular_values().first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0.0);
    }
    let floor = smax * smax * 1e-16;
    let lo_res = residual(system, values, if system.is_full_rank() { 0.0 } else { floor })?;
    if lo_res >= delta {
        return Ok(if system.is_full_rank() { 0.0 } else { floor });
    }
    let (mut lo, mut hi) = (floor.ln(), (smax * smax * 1e4).ln());
    if residual(system, values, hi.exp())? <= delta {
        return Ok(hi.exp());
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if residual(system, values, mid.exp())? <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anosovgeo::classes::enumerate_classes;
    use crate::anosovgeo::group::{build_default_surface, Word};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn class(g: &FuchsianGroup, w: &str) -> ClosedGeodesicClass {
        ClosedGeodesicClass::from_word(g, Word::parse(w).unwrap()).unwrap()
    }

    #[test]
    fn constant_averages_exactly() {
        let g = build_default_surface();
        let c = class(&g, "abC");
        let v = xray_function(&ConstantField(2.5), &c, &g, 64).unwrap();
        assert!((v - 2.5).abs() < 1e-14);
        assert!(xray_function(&ConstantField(1.0), &c, &g, 10).is_err());
    }

    #[test]
    fn tensor_of_metric_is_one() {
        let g = build_default_surface();
        for w in ["a", "aB", "abCd"] {
            let c = class(&g, w);
            let one = xray_conformal_tensor(&ConstantField(1.0), &c, &g, 64).unwrap();
            assert!((one - 1.0).abs() < 1e-12);
            assert_eq!(xray_conformal_tensor(&ConstantField(0.0), &c, &g, 64).unwrap(), 0.0);
        }
    }

    #[test]
    fn bump_is_periodic() {
        let g = build_default_surface();
        let b = BumpBasis::spiral(&g, 6).unwrap();
        // A point just outside the domain and its reduction agree.
        let z = Complex64::from_polar(0.72, 0.1);
        let zr = reduce_point(z, &g).unwrap();
        let h = g.disk_letters()[1];
        let zo = h.apply(zr);
        for i in 0..b.len() {
            let direct = b.value(i, zr);
            // Evaluate at the translate by re-reducing.
            let again = b.value(i, reduce_point(zo, &g).unwrap());
            assert!((direct - again).abs() < 1e-12);
        }
        let _ = z;
    }

    #[test]
    fn bump_gradient_matches_finite_difference() {
        let g = build_default_surface();
        let b = BumpBasis::spiral(&g, 5).unwrap();
        let z = Complex64::new(0.21, -0.33);
        let h = 1e-6;
        for i in 0..b.len() {
            let gx = (b.value(i, z + h) - b.value(i, z - h)) / (2.0 * h);
            let gy = (b.value(i, z + Complex64::new(0.0, h)) - b.value(i, z - Complex64::new(0.0, h)))
                / (2.0 * h);
            let an = b.gradient(i, z);
            assert!((an.re - gx).abs() < 1e-6 && (an.im - gy).abs() < 1e-6, "{an} {gx} {gy}");
        }
    }

    #[test]
    fn coboundaries_vanish() {
        let g = build_default_surface();
        let basis = Basis::Bumps(BumpBasis::spiral(&g, 8).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let coeffs: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v = basis.field(&coeffs).unwrap();
        for c in enumerate_classes(&g, 2).unwrap() {
            let x = xray_flow(&v, &c, &g, default_samples(c.length)).unwrap();
            assert!(x.abs() < 1e-6, "{} {x}", c.word);
        }
    }

    #[test]
    fn conjugation_invariance() {
        let g = build_default_surface();
        let basis = Basis::Bumps(BumpBasis::spiral(&g, 8).unwrap());
        let coeffs = [1.0, -0.5, 0.3, 0.0, 0.7, -0.2, 0.1, 0.4];
        let f = basis.field(&coeffs).unwrap();
        let c = class(&g, "aBcd");
        let h = g.evaluate(&Word::parse("Cb").unwrap());
        let a = xray_function(&f, &c, &g, 200).unwrap();
        let b = xray_function(&f, &c.conjugated(&h), &g, 200).unwrap();
        assert!((a - b).abs() < 1e-8, "{a} {b}");
    }

    #[test]
    fn constant_basis_column_of_ones() {
        let g = build_default_surface();
        let cls = enumerate_classes(&g, 2).unwrap();
        let s = build_xray_system(&Basis::Constant, &cls, &g).unwrap();
        assert_eq!(s.rank(), 1);
        assert!(s.matrix.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn duplicated_bump_is_rank_deficient() {
        let g = build_default_surface();
        let mut centers = BumpBasis::spiral(&g, 4).unwrap().centers().to_vec();
        centers.push(centers[0]);
        let basis = Basis::Bumps(BumpBasis::from_centers(&g, centers, 0.4).unwrap());
        let cls = enumerate_classes(&g, 2).unwrap();
        let s = build_xray_system(&basis, &cls, &g).unwrap();
        assert_eq!(s.rank(), 4);
        let v = vec![1.0; s.rows()];
        assert!(matches!(xray_invert(&s, &v, 0.0), Err(GeoError::RankDeficient { .. })));
        assert!(xray_invert(&s, &v, 1e-6).is_ok());
    }

    #[test]
    fn underdetermined_rejected() {
        let g = build_default_surface();
        let basis = Basis::Bumps(BumpBasis::spiral(&g, 10).unwrap());
        let cls = enumerate_classes(&g, 1).unwrap();
        assert!(matches!(
            build_xray_system(&basis, &cls, &g),
            Err(GeoError::Underdetermined { .. })
        ));
    }

    #[test]
    fn round_trip_and_json() {
        let g = build_default_surface();
        let basis = Basis::Bumps(BumpBasis::spiral(&g, 6).unwrap());
        let cls = enumerate_classes(&g, 2).unwrap();
        let s = build_xray_system(&basis, &cls, &g).unwrap();
        let x0 = [0.3, -1.0, 0.5, 0.25, 0.8, -0.4];
        let v = s.apply(&x0).unwrap();
        let x = xray_invert(&s, &v, 0.0).unwrap();
        let err = x.iter().zip(&x0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-6, "{err} cond {}", s.condition_number());
        assert!(xray_invert(&s, &vec![0.0; s.rows()], 0.0).unwrap().iter().all(|&c| c == 0.0));
        let back = XRaySystem::from_json(&s.to_json()).unwrap();
        assert_eq!(back.matrix, s.matrix);
        assert_eq!(back.words, s.words);
    }
}
