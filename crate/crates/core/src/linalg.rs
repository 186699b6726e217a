//! Dense least-squares helpers shared by the fitting and inversion code.

use nalgebra::{DMatrix, DVector, SVD};

/// Singular values below `RANK_RTOL · σ_max` count as zero.
pub const RANK_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("rank-deficient system: rank {rank} < {cols} unknowns")]
    RankDeficient { rank: usize, cols: usize },
    #[error("dimension mismatch: {rows} rows but {len} right-hand-side entries")]
    DimensionMismatch { rows: usize, len: usize },
    #[error("singular value decomposition failed")]
    SvdFailed,
}

/// Thin SVD of a tall matrix, kept for repeated solves.
#[derive(Debug, Clone)]
pub struct Decomposition {
    u: DMatrix<f64>,
    singular_values: DVector<f64>,
    v_t: DMatrix<f64>,
    rows: usize,
}

impl Decomposition {
    pub fn new(a: &DMatrix<f64>) -> Result<Self, LinalgError> {
        let svd = SVD::new(a.clone(), true, true);
        let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
            return Err(LinalgError::SvdFailed);
        };
        // nalgebra does not sort singular values; order them descending.
        let k = svd.singular_values.len();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let singular_values = DVector::from_iterator(k, order.iter().map(|&i| svd.singular_values[i]));
        let u = DMatrix::from_columns(&order.iter().map(|&i| u.column(i).into_owned()).collect::<Vec<_>>());
        let v_t = DMatrix::from_rows(&order.iter().map(|&i| v_t.row(i).into_owned()).collect::<Vec<_>>());
        Ok(Self {
            u,
            singular_values,
            v_t,
            rows: a.nrows(),
        })
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> &[f64] {
        self.singular_values.as_slice()
    }

    pub fn rank(&self) -> usize {
        let top = self.singular_values.get(0).copied().unwrap_or(0.0);
        self.singular_values
            .iter()
            .filter(|&&s| s > RANK_RTOL * top && s > 0.0)
            .count()
    }

    pub fn cols(&self) -> usize {
        self.v_t.ncols()
    }

    /// σ_max / σ_min, infinite when σ_min = 0.
    pub fn condition_number(&self) -> f64 {
        let s = self.singular_values();
        match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            _ => f64::INFINITY,
        }
    }

    /// Minimizer of `‖A x − b‖² + λ ‖x‖²`. With λ = 0 the system must have
    /// full column rank.
    pub fn solve(&self, b: &DVector<f64>, lambda: f64) -> Result<DVector<f64>, LinalgError> {
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                rows: self.rows,
                len: b.len(),
            });
        }
        let rank = self.rank();
        if lambda == 0.0 && rank < self.cols() {
            return Err(LinalgError::RankDeficient {
                rank,
                cols: self.cols(),
            });
        }
        let utb = self.u.transpose() * b;
        let mut scaled = DVector::zeros(self.singular_values.len());
        for (i, &s) in self.singular_values.iter().enumerate() {
            let denom = s * s + lambda;
            if denom > 0.0 {
                scaled[i] = s * utb[i] / denom;
            }
        }
        Ok(self.v_t.transpose() * scaled)
    }
}

/// Weighted linear least squares `min Σ w_i (A x − b)_i²`. Returns the
/// solution and the weighted residual norm.
pub fn weighted_lstsq(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    weights: Option<&[f64]>,
) -> Result<(DVector<f64>, f64), LinalgError> {
    if a.nrows() != b.len() {
        return Err(LinalgError::DimensionMismatch {
            rows: a.nrows(),
            len: b.len(),
        });
    }
    let mut aw = a.clone();
    let mut bw = b.clone();
    if let Some(w) = weights {
        if w.len() != b.len() {
            return Err(LinalgError::DimensionMismatch {
                rows: a.nrows(),
                len: w.len(),
            });
        }
        for (i, &wi) in w.iter().enumerate() {
            let s = wi.sqrt();
            aw.row_mut(i).scale_mut(s);
            bw[i] *= s;
        }
    }
    let dec = Decomposition::new(&aw)?;
    let x = dec.solve(&bw, 0.0)?;
    let residual = (&aw * &x - &bw).norm();
    Ok((x, residual))
}
