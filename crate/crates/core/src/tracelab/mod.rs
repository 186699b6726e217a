//! Spectral traces.
//!
//! Weyl-law volume fits, Gaussian-mollified wave traces `Σ m_k w(σ_k) e^{−iσ_k t}`,
//! difference traces for operator pairs, peak detection, calibrated
//! extraction of singularity coefficients, and the dense return-operator lab.

mod expm;
mod oplab;

pub use expm::{expm, CMatrix};
pub use oplab::{return_operator_lab, OpLabConfig, OpLabReport, ACCURACY_BUDGET, MAX_N, MIN_N};

use crate::modelgeo::SteklovSpectrum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

pub const PEAKS_SCHEMA: &str = "peaks/v1";
/// Minimum spectrum size for a Weyl fit.
pub const WEYL_MIN_ENTRIES: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TraceError {
    #[error("window bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),
    #[error("invalid time grid: {0}")]
    InvalidGrid(String),
    #[error("grid step {step} violates the anti-aliasing bound π/σ_max = {limit}")]
    Aliasing { step: f64, limit: f64 },
    #[error("spectrum too short: {entries} eigenvalues, need {needed}")]
    TooShort { entries: usize, needed: usize },
    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),
    #[error("spectra are not truncated at a common level ({a} vs {b} eigenvalues)")]
    TruncationMismatch { a: usize, b: usize },
    #[error("windows around lengths {t1} and {t2} overlap")]
    OverlappingWindows { t1: f64, t2: f64 },
    #[error("integration window around length {0} leaves the time grid")]
    WindowOutsideGrid(f64),
    #[error("truncation N = {n} outside [{}, {}]", MIN_N, MAX_N)]
    TruncationSize { n: usize },
    #[error("frequency window [{k_lo}, {k_hi}] does not fit in N = {n} modes")]
    FrequencyWindow { k_lo: usize, k_hi: usize, n: usize },
    #[error("t·‖B‖ = {value} exceeds the accuracy budget {limit}")]
    AccuracyBudget { value: f64, limit: f64 },
    #[error("matrix exponential produced non-finite entries")]
    ExpmFailed,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("document: {0}")]
    Document(String),
}

impl TraceError {
    pub fn is_numerical(&self) -> bool {
        matches!(self, TraceError::ExpmFailed)
    }
}

/// Uniform time grid `t_min + i·step`, i = 0..len.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(t_min: f64, t_max: f64, step: f64) -> Result<Self, TraceError> {
        if !(step > 0.0) || !t_min.is_finite() || !t_max.is_finite() || t_max < t_min {
            return Err(TraceError::InvalidGrid(format!(
                "[{t_min}, {t_max}] with step {step}"
            )));
        }
        Ok(Self { t_min, t_max, step })
    }

    pub fn len(&self) -> usize {
        ((self.t_max - self.t_min) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, i: usize) -> f64 {
        self.t_min + i as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.at(i)).collect()
    }

    /// Grid reflected through t = 0.
    pub fn reflected(&self) -> Self {
        Self {
            t_min: -self.t_min - (self.len() - 1) as f64 * self.step,
            t_max: -self.t_min,
            step: self.step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowShape {
    Gaussian,
}

/// Frequency window `w(σ) = exp(−σ²/(2Ω²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub shape: WindowShape,
    pub bandwidth: f64,
}

impl Window {
    pub fn gaussian(bandwidth: f64) -> Result<Self, TraceError> {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            return Err(TraceError::NonPositiveBandwidth(bandwidth));
        }
        Ok(Self {
            shape: WindowShape::Gaussian,
            bandwidth,
        })
    }

    /// Ω = σ_max/20.
    pub fn default_for(spec: &SteklovSpectrum) -> Result<Self, TraceError> {
        Self::gaussian(spec.sigma_max().unwrap_or(0.0) / 20.0)
    }

    pub fn weight(&self, sigma: f64) -> f64 {
        let x = sigma / self.bandwidth;
        (-0.5 * x * x).exp()
    }

    /// Time-domain resolution 1/Ω.
    pub fn time_width(&self) -> f64 {
        1.0 / self.bandwidth
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSignal {
    pub grid: TimeGrid,
    pub window: Window,
    pub values: Vec<Complex64>,
}

impl TraceSignal {
    pub fn times(&self) -> Vec<f64> {
        self.grid.points()
    }

    pub fn abs(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,re,im,abs\n");
        for (i, z) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{},{},{},{}", self.grid.at(i), z.re, z.im, z.norm());
        }
        out
    }

    /// Pointwise `self − other` on a shared grid and window.
    pub fn sub(&self, other: &TraceSignal) -> Result<TraceSignal, TraceError> {
        if self.grid != other.grid || self.window != other.window {
            return Err(TraceError::InvalidGrid("signals live on different grids".into()));
        }
        Ok(TraceSignal {
            grid: self.grid,
            window: self.window,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn add(&self, other: &TraceSignal) -> Result<TraceSignal, TraceError> {
        let neg = TraceSignal {
            values: other.values.iter().map(|z| -z).collect(),
            ..other.clone()
        };
        self.sub(&neg)
    }

    /// Value at the grid point closest to t.
    pub fn sample(&self, t: f64) -> Option<Complex64> {
        let i = ((t - self.grid.t_min) / self.grid.step).round();
        if i < 0.0 {
            return None;
        }
        self.values.get(i as usize).copied()
    }

    /// Largest |Z| within `radius` of t.
    pub fn local_max(&self, t: f64, radius: f64) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(i, _)| (self.grid.at(*i) - t).abs() <= radius)
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max)
    }
}

/// `Σ_k c_k w(σ_k) e^{−iσ_k t}` for arbitrary complex weights. Terms are
/// accumulated in the given order at every t.
pub fn weighted_trace(
    terms: &[(f64, Complex64)],
    window: Window,
    grid: TimeGrid,
) -> Result<TraceSignal, TraceError> {
    let sigma_max = terms.iter().map(|t| t.0.abs()).fold(0.0, f64::max);
    if sigma_max > 0.0 {
        let limit = PI / sigma_max;
        if grid.step >= limit {
            return Err(TraceError::Aliasing {
                step: grid.step,
                limit,
            });
        }
    }
    let weighted: Vec<(f64, Complex64)> = terms
        .iter()
        .map(|&(s, c)| (s, c * window.weight(s)))
        .collect();
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let t = grid.at(i);
            let mut acc = Complex64::new(0.0, 0.0);
            for &(s, c) in &weighted {
                acc += c * Complex64::from_polar(1.0, -s * t);
            }
            acc
        })
        .collect();
    Ok(TraceSignal {
        grid,
        window,
        values,
    })
}

fn spectrum_terms(spec: &SteklovSpectrum) -> Vec<(f64, Complex64)> {
    spec.entries()
        .iter()
        .map(|e| (e.sigma, Complex64::new(e.multiplicity as f64, 0.0)))
        .collect()
}

/// Mollified wave trace of a spectrum, summed in ascending σ.
pub fn mollified_trace(
    spec: &SteklovSpectrum,
    window: Window,
    grid: TimeGrid,
) -> Result<TraceSignal, TraceError> {
    weighted_trace(&spectrum_terms(spec), window, grid)
}

/// Mollified `Tr(U_A(t) − U_B(t))`. Both spectra must hold the same number
/// of eigenvalues (counted with multiplicity).
pub fn difference_trace(
    a: &SteklovSpectrum,
    b: &SteklovSpectrum,
    window: Window,
    grid: TimeGrid,
) -> Result<TraceSignal, TraceError> {
    if a.count() != b.count() {
        return Err(TraceError::TruncationMismatch {
            a: a.count(),
            b: b.count(),
        });
    }
    let mut terms = spectrum_terms(a);
    terms.extend(
        spectrum_terms(b)
            .into_iter()
            .map(|(s, c)| (s, -c)),
    );
    weighted_trace(&terms, window, grid)
}

/// Volume of the unit ball in R^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * PI / d as f64 * unit_ball_volume(d - 2),
    }
}

/// Samples on the upper half of the range used by [`weyl_fit`].
pub const WEYL_SAMPLES: usize = 256;

/// Boundary volume from a least-squares fit of the counting function to
/// `C σ^{n−1}` on `[σ_max/2, σ_max]`.
pub fn weyl_fit(spec: &SteklovSpectrum, n: usize) -> Result<f64, TraceError> {
    if n < 2 {
        return Err(TraceError::UnsupportedDimension(n));
    }
    if spec.count() < WEYL_MIN_ENTRIES {
        return Err(TraceError::TooShort {
            entries: spec.count(),
            needed: WEYL_MIN_ENTRIES,
        });
    }
    let sigma_max = spec.sigma_max().unwrap_or(0.0);
    let d = (n - 1) as i32;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..WEYL_SAMPLES {
        let s = sigma_max * (0.5 + 0.5 * i as f64 / (WEYL_SAMPLES - 1) as f64);
        let p = s.powi(d);
        num += spec.counting(s) as f64 * p;
        den += p * p;
    }
    let c = num / den;
    Ok(c * (2.0 * PI).powi(d) / unit_ball_volume(n - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub time: f64,
    pub amplitude: f64,
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub peaks: Vec<Peak>,
    pub threshold: f64,
}

#[derive(Serialize, Deserialize)]
struct PeakDocument {
    schema: String,
    threshold: f64,
    peaks: Vec<Peak>,
}

impl PeakReport {
    /// Peaks by decreasing amplitude, ties broken by time.
    pub fn by_amplitude(&self) -> Vec<Peak> {
        let mut p = self.peaks.clone();
        p.sort_by(|a, b| b.amplitude.total_cmp(&a.amplitude).then(a.time.total_cmp(&b.time)));
        p
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PeakDocument {
            schema: PEAKS_SCHEMA.into(),
            threshold: self.threshold,
            peaks: self.peaks.clone(),
        })
        .expect("peaks serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, TraceError> {
        let doc: PeakDocument =
            serde_json::from_str(text).map_err(|e| TraceError::Document(e.to_string()))?;
        if doc.schema != PEAKS_SCHEMA {
            return Err(TraceError::Document(format!("unexpected schema {}", doc.schema)));
        }
        Ok(Self {
            peaks: doc.peaks,
            threshold: doc.threshold,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    /// Threshold as a multiple of the median of |Z|.
    pub median_factor: f64,
    /// Floor relative to max |Z|; keeps rounding noise out when the median
    /// itself is at rounding level.
    pub relative_floor: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self {
            median_factor: 5.0,
            relative_floor: 1e-6,
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Local maxima of |Z| above threshold, with full widths at half
/// prominence.
pub fn detect_peaks(signal: &TraceSignal, opts: &PeakOptions) -> PeakReport {
    let a = signal.abs();
    let top = a.iter().copied().fold(0.0, f64::max);
    let threshold = (opts.median_factor * median(a.clone())).max(opts.relative_floor * top);
    let mut peaks = Vec::new();
    if a.len() < 3 || top == 0.0 {
        return PeakReport { peaks, threshold };
    }
    let h = signal.grid.step;
    for i in 1..a.len() - 1 {
        if !(a[i] > a[i - 1] && a[i] >= a[i + 1] && a[i] >= threshold && a[i] > 0.0) {
            continue;
        }
        // Bases: minima on each side before reaching a higher point.
        let mut left_min = a[i];
        let mut j = i;
        while j > 0 && a[j - 1] <= a[i] {
            j -= 1;
            left_min = left_min.min(a[j]);
        }
        let mut right_min = a[i];
        let mut j = i;
        while j + 1 < a.len() && a[j + 1] <= a[i] {
            j += 1;
            right_min = right_min.min(a[j]);
        }
        let base = left_min.max(right_min);
        let half = a[i] - 0.5 * (a[i] - base);
        let mut l = i;
        while l > 0 && a[l - 1] > half {
            l -= 1;
        }
        let left = if l > 0 {
            let (y0, y1) = (a[l - 1], a[l]);
            signal.grid.at(l - 1) + h * (half - y0) / (y1 - y0)
        } else {
            signal.grid.at(0)
        };
        let mut r = i;
        while r + 1 < a.len() && a[r + 1] > half {
            r += 1;
        }
        let right = if r + 1 < a.len() {
            let (y0, y1) = (a[r], a[r + 1]);
            signal.grid.at(r) + h * (y0 - half) / (y0 - y1)
        } else {
            signal.grid.at(a.len() - 1)
        };
        peaks.push(Peak {
            time: signal.grid.at(i),
            amplitude: a[i],
            width: right - left,
        });
    }
    PeakReport { peaks, threshold }
}

/// Half-width, in units of the window's time width, of the integration
/// region used by [`extract_invariants`].
pub const EXTRACTION_RADIUS: f64 = 8.0;
/// Minimum separation between lengths, in window time widths.
pub const MIN_SEPARATION: f64 = 3.0;

/// Response of `∫ φ(t − T) Z(t) dt`, φ(u) = exp(−u²/(2s²)), to a unit
/// `(t − T − i0)^{−1}` singularity mollified by the signal's window.
pub fn singularity_response(window: &Window, s: f64) -> Complex64 {
    let o = window.bandwidth;
    Complex64::new(0.0, PI * s / (1.0 / (o * o) + s * s).sqrt())
}

/// Calibrated coefficients c_T of `c_T (t − T − i0)^{−1}` at each length.
pub fn extract_invariants(
    signal: &TraceSignal,
    lengths: &[f64],
) -> Result<Vec<Complex64>, TraceError> {
    let s = signal.window.time_width();
    let mut sorted = lengths.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[1] - w[0] < MIN_SEPARATION * s {
            return Err(TraceError::OverlappingWindows { t1: w[0], t2: w[1] });
        }
    }
    let cal = singularity_response(&signal.window, s);
    let h = signal.grid.step;
    lengths
        .iter()
        .map(|&t_len| {
            let lo = t_len - EXTRACTION_RADIUS * s;
            let hi = t_len + EXTRACTION_RADIUS * s;
            if lo < signal.grid.t_min || hi > signal.grid.t_max {
                return Err(TraceError::WindowOutsideGrid(t_len));
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, z) in signal.values.iter().enumerate() {
                let u = signal.grid.at(i) - t_len;
                if u.abs() <= EXTRACTION_RADIUS * s {
                    acc += z * (-0.5 * (u / s) * (u / s)).exp();
                }
            }
            Ok(acc * h / cal)
        })
        .collect()
}

/// Self-contained SVG line plot of |Z(t)|.
pub fn signal_svg(signal: &TraceSignal) -> String {
    let (w, h, pad) = (800.0, 300.0, 40.0);
    let a = signal.abs();
    let top = a.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let span = (signal.grid.t_max - signal.grid.t_min).max(f64::MIN_POSITIVE);
    let mut pts = String::new();
    for (i, v) in a.iter().enumerate() {
        let x = pad + (w - 2.0 * pad) * (signal.grid.at(i) - signal.grid.t_min) / span;
        let y = h - pad - (h - 2.0 * pad) * v / top;
        let _ = write!(pts, "{x:.2},{y:.2} ");
    }
    format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n",
            "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
            "<line x1=\"{pad}\" y1=\"{yb}\" x2=\"{xr}\" y2=\"{yb}\" stroke=\"black\"/>\n",
            "<line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{yb}\" stroke=\"black\"/>\n",
            "<text x=\"{pad}\" y=\"{yt}\" font-size=\"12\">t = {t0:.3}</text>\n",
            "<text x=\"{xr}\" y=\"{yt}\" font-size=\"12\" text-anchor=\"end\">t = {t1:.3}</text>\n",
            "<text x=\"{pad}\" y=\"{ymax}\" font-size=\"12\">max |Z| = {top:.4e}</text>\n",
            "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1\" points=\"{pts}\"/>\n",
            "</svg>\n"
        ),
        w = w,
        h = h,
        pad = pad,
        yb = h - pad,
        xr = w - pad,
        yt = h - pad + 16.0,
        ymax = pad - 8.0,
        t0 = signal.grid.t_min,
        t1 = signal.grid.t_max,
        top = top,
        pts = pts.trim_end(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modelgeo::{ball_steklov_exact, circle_eigenvalues, cylinder_steklov, Provenance};

    fn grid_for(spec: &SteklovSpectrum, t0: f64, t1: f64) -> TimeGrid {
        let step = 0.5 * PI / spec.sigma_max().unwrap();
        TimeGrid::new(t0, t1, step).unwrap()
    }

    #[test]
    fn weyl_examples() {
        let disk = ball_steklov_exact(2, 500).unwrap();
        let v = weyl_fit(&disk, 2).unwrap();
        assert!((v / (2.0 * PI) - 1.0).abs() < 0.01, "{v}");
        let ball = ball_steklov_exact(3, 200).unwrap();
        let v = weyl_fit(&ball, 3).unwrap();
        assert!((v / (4.0 * PI) - 1.0).abs() < 0.01, "{v}");
        let cyl = cylinder_steklov(2.0, &circle_eigenvalues(300), 2).unwrap();
        let v = weyl_fit(&cyl, 2).unwrap();
        assert!((v / (4.0 * PI) - 1.0).abs() < 0.02, "{v}");
    }

    #[test]
    fn weyl_doubling_consistency() {
        for (n, k) in [(2usize, 300usize), (3, 150)] {
            let a = weyl_fit(&ball_steklov_exact(n, k).unwrap(), n).unwrap();
            let b = weyl_fit(&ball_steklov_exact(n, 2 * k).unwrap(), n).unwrap();
            assert!((a / b - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn weyl_rejects_short_spectrum() {
        let s = ball_steklov_exact(2, 10).unwrap();
        assert!(matches!(weyl_fit(&s, 2), Err(TraceError::TooShort { .. })));
    }

    #[test]
    fn empty_spectrum_gives_zero_signal() {
        let s = SteklovSpectrum::empty(2, Provenance::Exact);
        let g = TimeGrid::new(0.0, 1.0, 0.1).unwrap();
        let z = mollified_trace(&s, Window::gaussian(1.0).unwrap(), g).unwrap();
        assert_eq!(z.values.len(), 11);
        assert!(z.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn aliasing_guard() {
        let s = ball_steklov_exact(2, 100).unwrap();
        let g = TimeGrid::new(0.0, 1.0, 0.05).unwrap();
        assert!(matches!(
            mollified_trace(&s, Window::gaussian(5.0).unwrap(), g),
            Err(TraceError::Aliasing { .. })
        ));
    }

    #[test]
    fn conjugate_symmetry() {
        let terms = vec![
            (1.0, Complex64::new(1.0, 0.5)),
            (2.5, Complex64::new(-0.3, 2.0)),
            (7.0, Complex64::new(0.2, 0.0)),
        ];
        let conj: Vec<_> = terms.iter().map(|&(s, c)| (s, c.conj())).collect();
        let w = Window::gaussian(3.0).unwrap();
        let g = TimeGrid::new(-2.0, 5.0, 0.01).unwrap();
        let z = weighted_trace(&terms, w, g).unwrap();
        let zr = weighted_trace(&conj, w, g.reflected()).unwrap();
        let m = zr.values.len();
        for (i, v) in z.values.iter().enumerate() {
            assert!((v - zr.values[m - 1 - i].conj()).norm() < 1e-12);
        }
    }

    #[test]
    fn disk_trace_peaks_on_circle_lengths() {
        let disk = ball_steklov_exact(2, 500).unwrap();
        let g = grid_for(&disk, 1.0, 13.5);
        let z = mollified_trace(&disk, Window::default_for(&disk).unwrap(), g).unwrap();
        let peaks = detect_peaks(&z, &PeakOptions::default()).by_amplitude();
        assert!(peaks.len() >= 2);
        let mut t: Vec<f64> = peaks[..2].iter().map(|p| p.time).collect();
        t.sort_by(f64::total_cmp);
        assert!((t[0] - 2.0 * PI).abs() <= g.step);
        assert!((t[1] - 4.0 * PI).abs() <= g.step);
        assert!(peaks.iter().all(|p| p.amplitude >= 0.0 && p.width > 0.0));
    }

    #[test]
    fn ball_trace_peaks_on_great_circles() {
        let ball = ball_steklov_exact(3, 200).unwrap();
        let g = grid_for(&ball, 1.0, 13.5);
        let z = mollified_trace(&ball, Window::default_for(&ball).unwrap(), g).unwrap();
        let peaks = detect_peaks(&z, &PeakOptions::default()).by_amplitude();
        let mut t: Vec<f64> = peaks[..2].iter().map(|p| p.time).collect();
        t.sort_by(f64::total_cmp);
        assert!((t[0] - 2.0 * PI).abs() <= g.step);
        assert!((t[1] - 4.0 * PI).abs() <= g.step);
    }

    #[test]
    fn difference_trace_linearity() {
        let a = ball_steklov_exact(3, 60).unwrap();
        let b = a.map(|s| s + 0.01 / (s + 1.0)).unwrap();
        let c = a.map(|s| s + 0.03 / (s + 1.0)).unwrap();
        let w = Window::gaussian(3.0).unwrap();
        let g = grid_for(&a, 0.0, 8.0);
        let ab = difference_trace(&a, &b, w, g).unwrap();
        let bc = difference_trace(&b, &c, w, g).unwrap();
        let ac = difference_trace(&a, &c, w, g).unwrap();
        let sum = ab.add(&bc).unwrap();
        for (x, y) in sum.values.iter().zip(&ac.values) {
            assert!((x - y).norm() < 1e-9);
        }
        let same = difference_trace(&a, &a, w, g).unwrap();
        assert!(same.values.iter().all(|z| z.norm() < 1e-12));
        let short = ball_steklov_exact(3, 59).unwrap();
        assert!(matches!(
            difference_trace(&a, &short, w, g),
            Err(TraceError::TruncationMismatch { .. })
        ));
    }

    #[test]
    fn synthetic_singularity_recovered() {
        // Discretized density c·i·e^{iσT} dσ approximates c (t − T − i0)^{−1}.
        let (t_len, coeff) = (5.0, Complex64::new(0.7, -0.4));
        let omega = 20.0;
        let ds = 0.01;
        let terms: Vec<(f64, Complex64)> = (0..16000)
            .map(|j| {
                let s = (j as f64 + 0.5) * ds;
                (s, coeff * Complex64::i() * Complex64::from_polar(1.0, s * t_len) * ds)
            })
            .collect();
        let g = TimeGrid::new(3.0, 7.0, 0.01).unwrap();
        let z = weighted_trace(&terms, Window::gaussian(omega).unwrap(), g).unwrap();
        let c = extract_invariants(&z, &[t_len]).unwrap()[0];
        assert!((c - coeff).norm() / coeff.norm() < 0.02, "{c}");
    }

    #[test]
    fn zero_signal_zero_invariants() {
        let g = TimeGrid::new(0.0, 10.0, 0.01).unwrap();
        let z = weighted_trace(&[], Window::gaussian(10.0).unwrap(), g).unwrap();
        let c = extract_invariants(&z, &[3.0, 6.0]).unwrap();
        assert!(c.iter().all(|v| v.norm() == 0.0));
        assert!(matches!(
            extract_invariants(&z, &[3.0, 3.1]),
            Err(TraceError::OverlappingWindows { .. })
        ));
        assert!(matches!(
            extract_invariants(&z, &[0.1]),
            Err(TraceError::WindowOutsideGrid(_))
        ));
    }

    #[test]
    fn disk_difference_bandwidth_stability() {
        let disk = ball_steklov_exact(2, 500).unwrap();
        let shifted = disk.map(|s| if s > 0.0 { s + 0.05 } else { s }).unwrap();
        let g = grid_for(&disk, 4.0, 8.5);
        let mut amps = Vec::new();
        for omega in [25.0, 12.5] {
            let w = Window::gaussian(omega).unwrap();
            let z = difference_trace(&shifted, &disk, w, g).unwrap();
            amps.push(extract_invariants(&z, &[2.0 * PI]).unwrap()[0]);
        }
        assert!((amps[0] - amps[1]).norm() / amps[0].norm() < 0.05, "{amps:?}");
    }

    #[test]
    fn csv_and_peak_json() {
        let s = ball_steklov_exact(2, 20).unwrap();
        let g = grid_for(&s, 0.0, 7.0);
        let z = mollified_trace(&s, Window::gaussian(2.0).unwrap(), g).unwrap();
        let csv = z.to_csv();
        assert!(csv.starts_with("t,re,im,abs\n"));
        assert_eq!(csv.lines().count(), g.len() + 1);
        let rep = detect_peaks(&z, &PeakOptions::default());
        let back = PeakReport::from_json(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
        assert!(rep.peaks.iter().all(|p| p.amplitude >= rep.threshold));
        assert!(signal_svg(&z).starts_with("<svg"));
    }
}
