// Dense return-operator experiment on the circle.
//
// A = |D| and B = b(x)|D|^{−o} on the Fourier modes −N/2 ≤ k < N/2. With
// U(t) = exp(it(A + B)) and U₀(t) = exp(itA), the return operator
// W(t) = U(t)U₀(−t) − I has a symbol whose leading part is predicted by
// Duhamel's formula as i|k|^{−o} ∫₀ᵗ b(x + s·sgn k) ds.

use super::expm::{expm, CMatrix};
use super::TraceError;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub const MIN_N: usize = 64;
pub const MAX_N: usize = 1024;
/// Upper bound on t·sup|b|/k_lo^o, the size of the neglected second-order
/// Duhamel term relative to the first.
pub const ACCURACY_BUDGET: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpLabConfig {
    pub n: usize,
    pub order: u32,
    pub t: f64,
    /// Inclusive |k| window; `None` selects N/8 ≤ |k| ≤ N/4.
    pub window: Option<(usize, usize)>,
    /// Sample count in x for the symbol comparison.
    pub x_samples: usize,
}

impl OpLabConfig {
    pub fn new(n: usize, order: u32, t: f64) -> Self {
        Self {
            n,
            order,
            t,
            window: None,
            x_samples: 64,
        }
    }

    pub fn frequency_window(&self) -> (usize, usize) {
        self.window.unwrap_or((self.n / 8, self.n / 4))
    }
}

/// Empirical and predicted symbols on the window frequencies.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OpLabReport {
    pub config: OpLabConfig,
    pub x: Vec<f64>,
    pub frequencies: Vec<i64>,
    /// `empirical[f][j]` is w(x_j, frequencies[f]).
    pub empirical: Vec<Vec<Complex64>>,
    pub predicted: Vec<Vec<Complex64>>,
    /// Relative L²(x) deviation per frequency.
    pub per_frequency: Vec<f64>,
    /// Mean of `per_frequency`.
    pub deviation: f64,
    /// ‖emp − pred‖ / ‖pred‖ over the whole window at once.
    pub pooled_deviation: f64,
    /// max_x |w_emp(x, k)| per frequency.
    pub band_sup: Vec<f64>,
    /// max |W_{jk}| over the full matrix.
    pub max_entry: f64,
}

fn freq(i: usize, n: usize) -> i64 {
    i as i64 - (n / 2) as i64
}

fn index(k: i64, n: usize) -> Option<usize> {
    let i = k + (n / 2) as i64;
    (0..n as i64).contains(&i).then_some(i as usize)
}

// Fourier coefficients b̂_m, |m| < n, from 4n equispaced samples.
fn fourier_coefficients(b: &dyn Fn(f64) -> f64, n: usize) -> Vec<Complex64> {
    let l = 4 * n;
    let samples: Vec<f64> = (0..l).map(|j| b(2.0 * PI * j as f64 / l as f64)).collect();
    (0..2 * n - 1)
        .map(|idx| {
            let m = idx as i64 - (n as i64 - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, &v) in samples.iter().enumerate() {
                let phase = -2.0 * PI * (m * j as i64).rem_euclid(l as i64) as f64 / l as f64;
                acc += v * Complex64::from_polar(1.0, phase);
            }
            acc / l as f64
        })
        .collect()
}

fn multiplier(k: i64, order: u32) -> f64 {
    if k == 0 {
        1.0
    } else {
        (k.unsigned_abs() as f64).powi(-(order as i32))
    }
}

// Composite Simpson on [0, t].
fn duhamel_integral(b: &dyn Fn(f64) -> f64, x: f64, t: f64, sign: f64) -> f64 {
    const M: usize = 1024;
    if t == 0.0 {
        return 0.0;
    }
    let h = t / M as f64;
    let mut acc = b(x) + b(x + t * sign);
    for i in 1..M {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * b(x + i as f64 * h * sign);
    }
    acc * h / 3.0
}

/// Runs the experiment. `b` must be 2π-periodic.
pub fn return_operator_lab(
    b: &dyn Fn(f64) -> f64,
    cfg: &OpLabConfig,
) -> Result<OpLabReport, TraceError> {
    let n = cfg.n;
    if n < MIN_N || n > MAX_N {
        return Err(TraceError::TruncationSize { n });
    }
    if cfg.order == 0 {
        return Err(TraceError::InvalidParameter("operator order must be positive".into()));
    }
    let (k_lo, k_hi) = cfg.frequency_window();
    if k_lo == 0 || k_lo > k_hi || 2 * k_hi > n / 2 {
        return Err(TraceError::FrequencyWindow { k_lo, k_hi, n });
    }
    if cfg.x_samples < 4 {
        return Err(TraceError::InvalidParameter("need at least 4 x samples".into()));
    }
    let bhat = fourier_coefficients(b, n);
    let sup_b = bhat.iter().map(|c| c.norm()).sum::<f64>();
    let budget = cfg.t.abs() * sup_b / (k_lo as f64).powi(cfg.order as i32);
    if budget > ACCURACY_BUDGET {
        return Err(TraceError::AccuracyBudget {
            value: budget,
            limit: ACCURACY_BUDGET,
        });
    }

    // Generator it(A + B) and the free propagators.
    let mut gen = CMatrix::zeros(n);
    let mut free = CMatrix::zeros(n);
    let mut free_back = vec![Complex64::new(0.0, 0.0); n];
    let it = Complex64::new(0.0, cfg.t);
    for col in 0..n {
        let k = freq(col, n);
        let ak = k.unsigned_abs() as f64;
        gen.set(col, col, it * ak);
        free.set(col, col, (it * ak).exp());
        free_back[col] = (-it * ak).exp();
        let mk = multiplier(k, cfg.order);
        for row in 0..n {
            let m = freq(row, n) - k;
            let c = bhat[(m + n as i64 - 1) as usize];
            if c.re != 0.0 || c.im != 0.0 {
                let z = gen.get(row, col) + it * c * mk;
                gen.set(row, col, z);
            }
        }
    }
    let u = expm(&gen).ok_or(TraceError::ExpmFailed)?;
    // W = (U(t) − U₀(t)) U₀(−t), exactly zero when U = U₀.
    let diff = u.sub(&free);
    let mut w = CMatrix::zeros(n);
    let mut max_entry: f64 = 0.0;
    for col in 0..n {
        for row in 0..n {
            let z = diff.get(row, col) * free_back[col];
            max_entry = max_entry.max(z.norm());
            w.set(row, col, z);
        }
    }

    let xs: Vec<f64> = (0..cfg.x_samples)
        .map(|j| 2.0 * PI * j as f64 / cfg.x_samples as f64)
        .collect();
    let frequencies: Vec<i64> = (-(k_hi as i64)..=-(k_lo as i64))
        .chain(k_lo as i64..=k_hi as i64)
        .collect();
    let mut empirical = Vec::with_capacity(frequencies.len());
    let mut predicted = Vec::with_capacity(frequencies.len());
    let mut per_frequency = Vec::with_capacity(frequencies.len());
    let mut band_sup = Vec::with_capacity(frequencies.len());
    let (mut pooled_num, mut pooled_den) = (0.0, 0.0);
    for &k in &frequencies {
        let col = index(k, n).expect("window inside basis");
        let emp: Vec<Complex64> = xs
            .iter()
            .map(|&x| {
                // w(x, k) = Σ_m W_{k+m, k} e^{imx}
                (0..n)
                    .map(|row| {
                        let m = freq(row, n) - k;
                        w.get(row, col) * Complex64::from_polar(1.0, m as f64 * x)
                    })
                    .sum()
            })
            .collect();
        let sign = k.signum() as f64;
        let mk = multiplier(k, cfg.order);
        let pred: Vec<Complex64> = xs
            .iter()
            .map(|&x| Complex64::new(0.0, mk * duhamel_integral(b, x, cfg.t, sign)))
            .collect();
        let num: f64 = emp.iter().zip(&pred).map(|(a, b)| (a - b).norm_sqr()).sum();
        let den: f64 = pred.iter().map(|p| p.norm_sqr()).sum();
        pooled_num += num;
        pooled_den += den;
        per_frequency.push(if den > 0.0 {
            (num / den).sqrt()
        } else if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        });
        band_sup.push(emp.iter().map(|z| z.norm()).fold(0.0, f64::max));
        empirical.push(emp);
        predicted.push(pred);
    }
    let deviation = per_frequency.iter().sum::<f64>() / per_frequency.len() as f64;
    let pooled_deviation = if pooled_den > 0.0 {
        (pooled_num / pooled_den).sqrt()
    } else if pooled_num == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(OpLabReport {
        config: cfg.clone(),
        x: xs,
        frequencies,
        empirical,
        predicted,
        per_frequency,
        deviation,
        pooled_deviation,
        band_sup,
        max_entry,
    })
}
