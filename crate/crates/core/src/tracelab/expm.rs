// Complex dense matrices stored as separate real and imaginary parts, so
// every product goes through the real GEMM kernel.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            re: DMatrix::zeros(n, n),
            im: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            re: DMatrix::identity(n, n),
            im: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.re.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.re[(i, j)] = z.re;
        self.im[(i, j)] = z.im;
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        CMatrix {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn add(&self, other: &CMatrix) -> CMatrix {
        CMatrix {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        CMatrix {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn scale(&self, s: f64) -> CMatrix {
        CMatrix {
            re: &self.re * s,
            im: &self.im * s,
        }
    }

    /// Σ_i c_i M_i for real coefficients.
    fn combo(terms: &[(f64, &CMatrix)]) -> CMatrix {
        let n = terms[0].1.dim();
        let mut out = CMatrix::zeros(n);
        for &(c, m) in terms {
            out.re += &m.re * c;
            out.im += &m.im * c;
        }
        out
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|j| (0..n).map(|i| self.get(i, j).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || (self.re[(i, j)] == 0.0 && self.im[(i, j)] == 0.0)))
    }

    pub fn is_finite(&self) -> bool {
        self.re.iter().chain(self.im.iter()).all(|x| x.is_finite())
    }

    /// Solves `self · X = rhs` through the real 2n × 2n embedding.
    fn solve(&self, rhs: &CMatrix) -> Option<CMatrix> {
        let n = self.dim();
        let mut big = DMatrix::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(&self.re);
        big.view_mut((0, n), (n, n)).copy_from(&(-&self.im));
        big.view_mut((n, 0), (n, n)).copy_from(&self.im);
        big.view_mut((n, n), (n, n)).copy_from(&self.re);
        let mut b = DMatrix::zeros(2 * n, rhs.dim());
        b.view_mut((0, 0), (n, rhs.dim())).copy_from(&rhs.re);
        b.view_mut((n, 0), (n, rhs.dim())).copy_from(&rhs.im);
        let x = big.lu().solve(&b)?;
        Some(CMatrix {
            re: x.rows(0, n).into_owned(),
            im: x.rows(n, n).into_owned(),
        })
    }
}

const THETA_13: f64 = 5.371920351148152;

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant. Diagonal inputs are exponentiated entrywise. Returns `None`
/// when the result is not finite.
pub fn expm(a: &CMatrix) -> Option<CMatrix> {
    let n = a.dim();
    if a.is_diagonal() {
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            out.set(i, i, a.get(i, i).exp());
        }
        return out.is_finite().then_some(out);
    }
    let norm = a.norm1();
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.scale(0.5f64.powi(s));
    let b = &PADE_13;
    let id = CMatrix::identity(n);
    let a2 = a.mul(&a);
    let a4 = a2.mul(&a2);
    let a6 = a4.mul(&a2);
    let inner_u = a6.mul(&CMatrix::combo(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)]));
    let u = a.mul(&inner_u.add(&CMatrix::combo(&[
        (b[7], &a6),
        (b[5], &a4),
        (b[3], &a2),
        (b[1], &id),
    ])));
    let inner_v = a6.mul(&CMatrix::combo(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)]));
    let v = inner_v.add(&CMatrix::combo(&[
        (b[6], &a6),
        (b[4], &a4),
        (b[2], &a2),
        (b[0], &id),
    ]));
    let mut r = v.sub(&u).solve(&v.add(&u))?;
    for _ in 0..s {
        r = r.mul(&r);
    }
    r.is_finite().then_some(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_generator() {
        // exp(θ [[0, −1], [1, 0]]) is the rotation by θ.
        let theta = 7.3;
        let mut a = CMatrix::zeros(2);
        a.set(0, 1, Complex64::new(-theta, 0.0));
        a.set(1, 0, Complex64::new(theta, 0.0));
        let e = expm(&a).unwrap();
        assert!((e.get(0, 0).re - theta.cos()).abs() < 1e-13);
        assert!((e.get(1, 0).re - theta.sin()).abs() < 1e-13);
        assert!(e.get(0, 1).im.abs() < 1e-13);
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let mut a = CMatrix::zeros(3);
        a.set(0, 1, Complex64::new(0.0, 2.0));
        a.set(1, 2, Complex64::new(3.0, 0.0));
        let e = expm(&a).unwrap();
        // I + A + A²/2 with A² having the single entry 6i at (0, 2).
        assert!((e.get(0, 2) - Complex64::new(0.0, 3.0)).norm() < 1e-14);
        assert!((e.get(0, 1) - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        assert!((e.get(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn skew_hermitian_gives_unitary() {
        let n = 6;
        let mut a = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let x = ((i * 7 + j * 3) % 5) as f64 - 2.0;
                let y = ((i * 2 + j * 5) % 7) as f64 - 3.0;
                // H = X + X^*, then A = iH·scale
                let h = Complex64::new(x + ((j * 7 + i * 3) % 5) as f64 - 2.0, y - (((j * 2 + i * 5) % 7) as f64 - 3.0));
                a.set(i, j, Complex64::i() * h * 3.0);
            }
        }
        let e = expm(&a).unwrap();
        let mut eh = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                eh.set(i, j, e.get(j, i).conj());
            }
        }
        let p = e.mul(&eh);
        let id = CMatrix::identity(n);
        let err = p.sub(&id).norm1();
        assert!(err < 1e-11, "{err}");
    }
}
