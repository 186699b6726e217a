// SL(2,R) and SU(1,1) elements, words over the surface generators, and the
// regular-octagon Fuchsian group.

use super::GeoError;
use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::sync::OnceLock;

/// Real 2×2 matrix of determinant 1, acting on the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sl2(pub Matrix2<f64>);

impl Sl2 {
    pub fn identity() -> Self {
        Sl2(Matrix2::identity())
    }

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Sl2(Matrix2::new(a, b, c, d))
    }

    pub fn trace(&self) -> f64 {
        self.0[(0, 0)] + self.0[(1, 1)]
    }

    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn inverse(&self) -> Self {
        let m = &self.0;
        Sl2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
    }

    pub fn mul(&self, other: &Sl2) -> Sl2 {
        Sl2(self.0 * other.0)
    }

    /// Distance to ±Id in the max-entry norm.
    pub fn distance_to_pm_identity(&self) -> f64 {
        let id = Matrix2::identity();
        let plus = (self.0 - id).abs().max();
        let minus = (self.0 + id).abs().max();
        plus.min(minus)
    }

    /// Image under the Cayley transform z ↦ (z − i)/(z + i).
    pub fn to_su11(&self) -> Su11 {
        let m = &self.0;
        let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        Su11 {
            alpha: Complex64::new(0.5 * (a + d), 0.5 * (b - c)),
            beta: Complex64::new(0.5 * (a - d), -0.5 * (b + c)),
        }
    }

    /// Translation length 2·arccosh(|tr|/2).
    pub fn translation_length(&self) -> Option<f64> {
        let t = self.trace().abs();
        (t > 2.0).then(|| 2.0 * (t / 2.0).acosh())
    }
}

/// Disk automorphism z ↦ (αz + β)/(β̄z + ᾱ) with |α|² − |β|² = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Su11 {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl Su11 {
    pub fn identity() -> Self {
        Su11 {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    /// Rotation of the disk by θ about the origin.
    pub fn rotation(theta: f64) -> Self {
        Su11 {
            alpha: Complex64::from_polar(1.0, 0.5 * theta),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    /// Hyperbolic translation by s along the real diameter, towards +1.
    pub fn translation(s: f64) -> Self {
        Su11 {
            alpha: Complex64::new((0.5 * s).cosh(), 0.0),
            beta: Complex64::new((0.5 * s).sinh(), 0.0),
        }
    }

    pub fn mul(&self, o: &Su11) -> Su11 {
        Su11 {
            alpha: self.alpha * o.alpha + self.beta * o.beta.conj(),
            beta: self.alpha * o.beta + self.beta * o.alpha.conj(),
        }
    }

    pub fn inverse(&self) -> Su11 {
        Su11 {
            alpha: self.alpha.conj(),
            beta: -self.beta,
        }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.alpha * z + self.beta) / (self.beta.conj() * z + self.alpha.conj())
    }

    /// Image of the origin.
    pub fn origin_image(&self) -> Complex64 {
        self.beta / self.alpha.conj()
    }

    /// Euclidean velocity of s ↦ self·D(s)·0 at s = 0 (unit hyperbolic speed).
    pub fn velocity(&self) -> Complex64 {
        0.5 / (self.alpha.conj() * self.alpha.conj())
    }

    pub fn det(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    /// Rescales back onto |α|² − |β|² = 1.
    pub fn normalized(&self) -> Su11 {
        let s = self.det().sqrt();
        Su11 {
            alpha: self.alpha / s,
            beta: self.beta / s,
        }
    }

    pub fn to_sl2(&self) -> Sl2 {
        let (a, b) = (self.alpha, self.beta);
        Sl2::new(a.re + b.re, a.im - b.im, -a.im - b.im, a.re - b.re)
    }
}

/// Hyperbolic distance between points of the unit disk.
pub fn disk_distance(z: Complex64, w: Complex64) -> f64 {
    let num = 2.0 * (z - w).norm_sqr();
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    (1.0 + num / den).acosh()
}

/// Hyperbolic distance from the origin.
pub fn distance_from_origin(z: Complex64) -> f64 {
    2.0 * z.norm().atanh()
}

/// Generator index with an inversion flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter(pub u8);

impl Letter {
    pub fn new(generator: usize, inverse: bool) -> Self {
        Letter((2 * generator + inverse as usize) as u8)
    }

    pub fn generator(self) -> usize {
        (self.0 / 2) as usize
    }

    pub fn is_inverse(self) -> bool {
        self.0 % 2 == 1
    }

    pub fn inverse(self) -> Letter {
        Letter(self.0 ^ 1)
    }

    pub fn to_char(self) -> char {
        let c = (b'a' + self.generator() as u8) as char;
        if self.is_inverse() {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    pub fn from_char(c: char) -> Option<Letter> {
        let lower = c.to_ascii_lowercase();
        if !lower.is_ascii_lowercase() {
            return None;
        }
        Some(Letter::new((lower as u8 - b'a') as usize, c.is_ascii_uppercase()))
    }
}

/// Word in the generators, read left to right as a matrix product.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn parse(s: &str) -> Result<Word, GeoError> {
        s.chars()
            .map(|c| Letter::from_char(c).ok_or_else(|| GeoError::InvalidWord(s.to_string())))
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[1] != w[0].inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.is_reduced()
            && match (self.0.first(), self.0.last()) {
                (Some(&f), Some(&l)) => self.0.len() == 1 || f != l.inverse(),
                _ => true,
            }
    }

    pub fn rotated(&self, k: usize) -> Word {
        let n = self.0.len();
        Word((0..n).map(|i| self.0[(i + k) % n]).collect())
    }

    /// Smallest rotation of the word or of its inverse.
    pub fn canonical(&self) -> Word {
        let inv = self.inverse();
        (0..self.len())
            .flat_map(|k| [self.rotated(k), inv.rotated(k)])
            .min()
            .unwrap_or_default()
    }

    /// Shortest u with self = u^m, and m.
    pub fn primitive_root(&self) -> (Word, u32) {
        let n = self.len();
        for d in 1..n {
            if n % d == 0 && (0..n).all(|i| self.0[i] == self.0[i % d]) {
                return (Word(self.0[..d].to_vec()), (n / d) as u32);
            }
        }
        (self.clone(), 1)
    }

    pub fn power(&self, m: usize) -> Word {
        Word(self.0.iter().copied().cycle().take(self.len() * m).collect())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.0 {
            write!(f, "{}", l.to_char())?;
        }
        Ok(())
    }
}

/// Parameters of the regular hyperbolic octagon with interior angles π/4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OctagonDomain {
    /// Distance from the center to a side midpoint.
    pub inradius: f64,
    /// Distance from the center to a vertex.
    pub circumradius: f64,
    pub sides: usize,
}

/// Cocompact surface group with its side-pairing generators.
#[derive(Debug, Clone)]
pub struct FuchsianGroup {
    generators: Vec<Sl2>,
    disk: Vec<Su11>,
    relation: Word,
    pub domain: OctagonDomain,
    neighbors: OnceLock<Vec<Su11>>,
}

/// cosh(ℓ_T/2) for the side pairings of the regular octagon.
pub const OCTAGON_COSH_HALF: f64 = 1.0 + std::f64::consts::SQRT_2;
pub const RELATION: &str = "aBcDAbCd";
pub const RELATION_TOL: f64 = 1e-10;

impl FuchsianGroup {
    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn generators(&self) -> &[Sl2] {
        &self.generators
    }

    /// Group elements whose tiles lie within `radius` of the origin, found
    /// by a breadth-first walk through tiles within `expand`.
    pub fn tiles_within(&self, radius: f64, expand: f64) -> Vec<Su11> {
        let quant = 1e7;
        let key = |z: Complex64| ((z.re * quant).round() as i64, (z.im * quant).round() as i64);
        let mut seen: HashSet<(i64, i64)> = HashSet::new();
        let known = |seen: &HashSet<(i64, i64)>, z: Complex64| {
            let (kx, ky) = key(z);
            (-1..=1).any(|dx| (-1..=1).any(|dy| seen.contains(&(kx + dx, ky + dy))))
        };
        let mut frontier = vec![Su11::identity()];
        seen.insert(key(Complex64::new(0.0, 0.0)));
        let mut kept = vec![Su11::identity()];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for g in &frontier {
                for h in &self.disk_letters() {
                    let e = g.mul(h).normalized();
                    let z = e.origin_image();
                    let d = distance_from_origin(z);
                    if d > expand || known(&seen, z) {
                        continue;
                    }
                    seen.insert(key(z));
                    if d <= radius {
                        kept.push(e);
                    }
                    next.push(e);
                }
            }
            frontier = next;
        }
        kept
    }

    /// Elements whose tiles touch the closed fundamental domain, identity
    /// included.
    pub fn neighbor_tiles(&self) -> &[Su11] {
        self.neighbors.get_or_init(|| {
            let r = 2.0 * self.domain.circumradius + 1e-6;
            self.tiles_within(r, r + 1.0)
        })
    }

    pub fn relation(&self) -> &Word {
        &self.relation
    }

    pub fn letter_matrix(&self, l: Letter) -> Sl2 {
        let g = self.generators[l.generator()];
        if l.is_inverse() {
            g.inverse()
        } else {
            g
        }
    }

    pub fn letter_disk(&self, l: Letter) -> Su11 {
        let g = self.disk[l.generator()];
        if l.is_inverse() {
            g.inverse()
        } else {
            g
        }
    }

    /// All generators and their inverses as disk maps.
    pub fn disk_letters(&self) -> Vec<Su11> {
        (0..2 * self.generators.len())
            .map(|i| self.letter_disk(Letter(i as u8)))
            .collect()
    }

    pub fn evaluate(&self, w: &Word) -> Sl2 {
        w.0.iter()
            .fold(Sl2::identity(), |acc, &l| acc.mul(&self.letter_matrix(l)))
    }

    pub fn evaluate_disk(&self, w: &Word) -> Su11 {
        w.0.iter()
            .fold(Su11::identity(), |acc, &l| acc.mul(&self.letter_disk(l)))
    }

    /// Checks generator determinants, hyperbolicity and the relation.
    pub fn verify(&self) -> Result<(), GeoError> {
        for g in &self.generators {
            if (g.det() - 1.0).abs() > 1e-12 {
                return Err(GeoError::Construction(format!("determinant {}", g.det())));
            }
            if g.trace().abs() <= 2.0 {
                return Err(GeoError::NotHyperbolic(g.trace()));
            }
        }
        let r = self.evaluate(&self.relation).distance_to_pm_identity();
        if r > RELATION_TOL {
            return Err(GeoError::Construction(format!(
                "relation {} is off identity by {r:e}",
                self.relation
            )));
        }
        Ok(())
    }
}

/// Genus-2 surface from the regular octagon: g_j = R(jπ/4) T R(−jπ/4),
/// j = 0..3, with R(θ) the rotation of the disk by θ and T the translation
/// with cosh(ℓ_T/2) = 1 + √2.
pub fn build_default_surface() -> FuchsianGroup {
    let c = OCTAGON_COSH_HALF;
    let t = Su11 {
        alpha: Complex64::new(c, 0.0),
        beta: Complex64::new((c * c - 1.0).sqrt(), 0.0),
    };
    let disk: Vec<Su11> = (0..4)
        .map(|j| {
            let theta = j as f64 * std::f64::consts::FRAC_PI_4;
            Su11::rotation(theta)
                .mul(&t)
                .mul(&Su11::rotation(-theta))
        })
        .collect();
    let generators = disk.iter().map(Su11::to_sl2).collect();
    let pi8 = std::f64::consts::PI / 8.0;
    let group = FuchsianGroup {
        generators,
        disk,
        relation: Word::parse(RELATION).expect("static relation"),
        neighbors: OnceLock::new(),
        domain: OctagonDomain {
            inradius: c.acosh(),
            // cosh R = cot²(π/8) = (1 + √2)².
            circumradius: (1.0 / (pi8.tan() * pi8.tan())).acosh(),
            sides: 8,
        },
    };
    group
        .verify()
        .expect("default surface satisfies its own invariants");
    group
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_have_expected_trace_and_determinant() {
        let g = build_default_surface();
        assert_eq!(g.generator_count(), 4);
        for m in g.generators() {
            assert!((m.trace().abs() - 2.0 * (1.0 + 2f64.sqrt())).abs() < 1e-12);
            assert!((m.det() - 1.0).abs() < 1e-12);
            assert!((m.trace() - 4.8284).abs() < 1e-4);
        }
    }

    #[test]
    fn relation_is_identity() {
        let g = build_default_surface();
        let r = g.evaluate(g.relation());
        assert!(r.distance_to_pm_identity() < 1e-10);
        // Dropping a letter breaks it.
        let mut w = g.relation().clone();
        w.0.pop();
        assert!(g.evaluate(&w).distance_to_pm_identity() > 1.0);
    }

    #[test]
    fn cayley_is_a_homomorphism() {
        let g = build_default_surface();
        let w = Word::parse("abCd").unwrap();
        let a = g.evaluate(&w).to_su11();
        let b = g.evaluate_disk(&w);
        let z = Complex64::new(0.1, -0.3);
        assert!((a.apply(z) - b.apply(z)).norm() < 1e-10);
        let back = b.to_sl2();
        assert!((back.0 - g.evaluate(&w).0).abs().max() < 1e-10);
    }

    #[test]
    fn octagon_radii() {
        let g = build_default_surface();
        assert!((g.domain.inradius - 1.528570919).abs() < 1e-8);
        assert!((g.domain.circumradius - 2.448452447).abs() < 1e-8);
        // Side pairing moves the center by twice the inradius.
        let p = g.letter_disk(Letter::new(0, false)).origin_image();
        assert!((distance_from_origin(p) - 2.0 * g.domain.inradius).abs() < 1e-12);
    }

    #[test]
    fn word_utilities() {
        let w = Word::parse("abAB").unwrap();
        assert_eq!(w.to_string(), "abAB");
        assert_eq!(w.inverse().to_string(), "baBA");
        assert!(w.is_cyclically_reduced());
        assert!(!Word::parse("aA").unwrap().is_reduced());
        assert!(!Word::parse("abA").unwrap().is_cyclically_reduced());
        let (root, m) = Word::parse("abab").unwrap().primitive_root();
        assert_eq!((root.to_string(), m), ("ab".to_string(), 2));
        assert_eq!(Word::parse("ba").unwrap().canonical(), Word::parse("ab").unwrap().canonical());
        assert_eq!(Word::parse("A").unwrap().canonical().to_string(), "a");
    }

    #[test]
    fn su11_inverse_and_distance() {
        let m = Su11::rotation(0.7).mul(&Su11::translation(1.3));
        let id = m.mul(&m.inverse());
        assert!((id.alpha - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!(id.beta.norm() < 1e-14);
        let z = Complex64::new(0.2, 0.1);
        let w = Complex64::new(-0.4, 0.3);
        assert!((disk_distance(m.apply(z), m.apply(w)) - disk_distance(z, w)).abs() < 1e-12);
        assert!((distance_from_origin(Su11::translation(1.3).origin_image()) - 1.3).abs() < 1e-14);
    }
}
