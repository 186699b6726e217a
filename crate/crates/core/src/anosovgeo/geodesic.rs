// Arclength parametrization of closed geodesics and their projection to the
// fundamental domain.

use super::group::{FuchsianGroup, Su11};
use super::GeoError;
use num_complex::Complex64;
use std::cmp::Ordering;

/// Iteration cap for the greedy fundamental-domain reduction.
pub const REDUCTION_CAP: usize = 256;
const IMPROVEMENT: f64 = 1e-13;

/// Left-multiplies `frame` by generators while that moves its base point
/// closer to the origin. Returns the reduced frame.
pub fn reduce_frame(frame: Su11, letters: &[Su11], cap: usize) -> Result<Su11, GeoError> {
    let mut g = frame;
    for _ in 0..cap {
        let r = g.origin_image().norm();
        let mut best = None;
        let mut best_r = r - IMPROVEMENT;
        for h in letters {
            let cand = h.mul(&g);
            let rc = cand.origin_image().norm();
            if rc < best_r {
                best_r = rc;
                best = Some(cand);
            }
        }
        match best {
            Some(b) => g = b.normalized(),
            None => return Ok(g),
        }
    }
    Err(GeoError::ReductionBudget { cap })
}

/// Reduces a point of the disk into the fundamental domain.
pub fn reduce_point(z: Complex64, group: &FuchsianGroup) -> Result<Complex64, GeoError> {
    let letters = group.disk_letters();
    let mut z = z;
    for _ in 0..REDUCTION_CAP {
        let r = z.norm();
        let mut best = None;
        let mut best_r = r - IMPROVEMENT;
        for h in &letters {
            let w = h.apply(z);
            if w.norm() < best_r {
                best_r = w.norm();
                best = Some(w);
            }
        }
        match best {
            Some(w) => z = w,
            None => return Ok(z),
        }
    }
    Err(GeoError::ReductionBudget { cap: REDUCTION_CAP })
}

/// Frame G₀ with G₀·D(s)·0 tracing the axis of `m` by arclength, starting
/// at the axis point closest to the origin and moving towards the
/// attracting fixed point.
pub fn axis_frame(m: &Su11) -> Result<(Su11, f64), GeoError> {
    let re = m.alpha.re;
    if re.abs() <= 1.0 || m.beta.norm() == 0.0 {
        return Err(GeoError::NotHyperbolic(2.0 * re));
    }
    let length = 2.0 * re.abs().acosh();
    // Fixed points of z ↦ (αz + β)/(β̄z + ᾱ).
    let root = (re * re - 1.0).sqrt();
    let bc = m.beta.conj();
    let z1 = Complex64::new(0.0, m.alpha.im) + root;
    let z2 = Complex64::new(0.0, m.alpha.im) - root;
    let (p, q) = (z1 / bc, z2 / bc);
    let deriv = |z: Complex64| 1.0 / (bc * z + m.alpha.conj()).norm_sqr();
    let (attract, repel) = if deriv(p) < deriv(q) { (p, q) } else { (q, p) };
    // Midpoint of the shorter arc and half the angular separation.
    let (a1, a2) = (attract.arg(), repel.arg());
    let mut diff = a2 - a1;
    while diff > std::f64::consts::PI {
        diff -= 2.0 * std::f64::consts::PI;
    }
    while diff < -std::f64::consts::PI {
        diff += 2.0 * std::f64::consts::PI;
    }
    let psi = a1 + 0.5 * diff;
    let delta = 0.5 * diff.abs();
    let r = (std::f64::consts::FRAC_PI_4 - 0.5 * delta).tan();
    let rho = 2.0 * r.atanh();
    let base = Su11::rotation(psi).mul(&Su11::translation(rho));
    let candidates = [
        base.mul(&Su11::rotation(std::f64::consts::FRAC_PI_2)),
        base.mul(&Su11::rotation(-std::f64::consts::FRAC_PI_2)),
    ];
    let frame = candidates
        .iter()
        .copied()
        .min_by(|x, y| {
            let ex = (x.apply(Complex64::new(1.0, 0.0)) - attract).norm();
            let ey = (y.apply(Complex64::new(1.0, 0.0)) - attract).norm();
            ex.total_cmp(&ey)
        })
        .expect("two candidates");
    // M·γ(0) must equal γ(ℓ).
    let moved = m.apply(frame.origin_image());
    let along = frame.mul(&Su11::translation(length)).origin_image();
    let err = (moved - along).norm();
    if err > 1e-8 {
        return Err(GeoError::GeometryMismatch(err));
    }
    Ok((frame, length))
}

/// Samples of a closed geodesic projected to the fundamental domain.
#[derive(Debug, Clone)]
pub struct GeodesicSamples {
    pub length: f64,
    /// Frames at s_i = i·ℓ/len, i = 0..len, reduced into the domain.
    pub frames: Vec<Su11>,
}

impl GeodesicSamples {
    pub fn points(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.frames.iter().map(|f| f.origin_image())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Walks the closed geodesic of `m` with `count` equal steps, reducing the
/// frame after each step.
pub fn sample_closed_geodesic(
    m: &Su11,
    group: &FuchsianGroup,
    count: usize,
) -> Result<GeodesicSamples, GeoError> {
    let (frame0, length) = axis_frame(m)?;
    let letters = group.disk_letters();
    let step = Su11::translation(length / count as f64);
    let mut frames = Vec::with_capacity(count);
    let mut g = reduce_frame(frame0, &letters, REDUCTION_CAP)?;
    for _ in 0..count {
        frames.push(g);
        g = reduce_frame(g.mul(&step).normalized(), &letters, REDUCTION_CAP)?;
    }
    Ok(GeodesicSamples { length, frames })
}

/// Unordered endpoint pair of a lift of the axis; the lift visible in
/// `frame` is frame·(−1, +1).
pub fn frame_lift(frame: &Su11) -> (Complex64, Complex64) {
    let a = frame.apply(Complex64::new(-1.0, 0.0));
    let b = frame.apply(Complex64::new(1.0, 0.0));
    order_pair(a, b)
}

fn order_pair(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
    let key = |z: Complex64| (z.re, z.im);
    if key(a) <= key(b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Distance from the origin to the geodesic with the given ideal endpoints.
pub fn lift_distance(l: &(Complex64, Complex64)) -> f64 {
    let mut diff = (l.1 / l.0).arg().abs();
    if diff > std::f64::consts::PI {
        diff = 2.0 * std::f64::consts::PI - diff;
    }
    let delta = 0.5 * diff;
    let r = (std::f64::consts::FRAC_PI_4 - 0.5 * delta).tan().max(0.0);
    2.0 * r.atanh()
}

/// Canonical lift of the closed geodesic: the lift nearest the origin,
/// ties broken by endpoint order. Minimal lifts meet the closed domain, so
/// images of the visited lifts under the tiles touching it cover them all.
pub fn canonical_lift(
    samples: &GeodesicSamples,
    group: &FuchsianGroup,
) -> (Complex64, Complex64) {
    let mut visited: Vec<(Complex64, Complex64)> = Vec::new();
    for f in &samples.frames {
        let l = frame_lift(f);
        if !visited.iter().any(|p| same_lift(p, &l)) {
            visited.push(l);
        }
    }
    let lifts: Vec<(Complex64, Complex64)> = group
        .neighbor_tiles()
        .iter()
        .flat_map(|h| visited.iter().map(move |l| order_pair(h.apply(l.0), h.apply(l.1))))
        .collect();
    let dmin = lifts.iter().map(lift_distance).fold(f64::INFINITY, f64::min);
    lifts
        .into_iter()
        .filter(|l| lift_distance(l) <= dmin + 1e-7)
        .min_by(|a, b| {
            [a.0.re, a.0.im, a.1.re, a.1.im]
                .iter()
                .zip([b.0.re, b.0.im, b.1.re, b.1.im])
                .map(|(x, y)| fuzzy_cmp(*x, y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
        .expect("at least one sample")
}

// Endpoint coordinates agreeing to 1e-9 count as equal so rounding cannot
// decide a tie.
fn fuzzy_cmp(x: f64, y: f64) -> Ordering {
    if (x - y).abs() < 1e-9 {
        Ordering::Equal
    } else {
        x.total_cmp(&y)
    }
}

pub fn same_lift(a: &(Complex64, Complex64), b: &(Complex64, Complex64)) -> bool {
    (a.0 - b.0).norm() < 1e-7 && (a.1 - b.1).norm() < 1e-7
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anosovgeo::group::{build_default_surface, distance_from_origin, Word};

    #[test]
    fn generator_axis_passes_through_origin() {
        let g = build_default_surface();
        let m = g.evaluate_disk(&Word::parse("a").unwrap());
        let (frame, len) = axis_frame(&m).unwrap();
        assert!(frame.origin_image().norm() < 1e-12);
        assert!((len - 2.0 * (1.0 + 2f64.sqrt()).acosh()).abs() < 1e-12);
    }

    #[test]
    fn samples_stay_in_domain_and_close_up() {
        let g = build_default_surface();
        let m = g.evaluate_disk(&Word::parse("abC").unwrap());
        let s = sample_closed_geodesic(&m, &g, 200).unwrap();
        for z in s.points() {
            assert!(distance_from_origin(z) <= g.domain.circumradius + 1e-9);
        }
        // One more step returns to the starting point on the surface.
        let (frame0, len) = axis_frame(&m).unwrap();
        let end = frame0.mul(&Su11::translation(len)).origin_image();
        let a = reduce_point(end, &g).unwrap();
        let b = reduce_point(frame0.origin_image(), &g).unwrap();
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn canonical_lift_is_conjugation_invariant() {
        let g = build_default_surface();
        let w = Word::parse("abCd").unwrap();
        let h = g.evaluate_disk(&Word::parse("cB").unwrap());
        let m = g.evaluate_disk(&w);
        let mc = h.mul(&m).mul(&h.inverse());
        let a = canonical_lift(&sample_closed_geodesic(&m, &g, 300).unwrap(), &g);
        let b = canonical_lift(&sample_closed_geodesic(&mc, &g, 300).unwrap(), &g);
        assert!(same_lift(&a, &b), "{a:?} {b:?}");
    }
}
