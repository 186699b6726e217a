// One function per subcommand. Each writes its artifacts into `out` and
// returns a one-line summary.

use crate::config::{ExperimentConfig, Format, ModelKind, ProfileSpec};
use crate::output::{xy_svg, OutputDir};
use crate::CliError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use steklov_core::anosovgeo::{
    build_default_surface, build_xray_system, classes_to_csv, enumerate_classes,
    length_spectrum_report, ridge_by_discrepancy, xray_invert, Basis, BumpBasis,
    ClosedGeodesicClass, FuchsianGroup, XRaySystem,
};
use steklov_core::modelgeo::{
    ball_steklov_exact, circle_eigenvalues, conformal_spectrum, cylinder_steklov,
    potential_modes, spectrum_from_modes, ModeOptions, Provenance, SteklovSpectrum,
};
use steklov_core::profile::{BoundaryPolynomial, Constant, EvenPolynomial};
use steklov_core::recover::{
    forward_invariants, recover_from_table, FieldNorm, PipelineConfig, Ridge, SurfaceJet,
};
use steklov_core::symcalc::JetKind;
use steklov_core::tracelab::{
    detect_peaks, difference_trace, mollified_trace, return_operator_lab, signal_svg, weyl_fit,
    OpLabConfig, PeakOptions, TimeGrid, Window,
};
use steklov_core::RadialProfile;

/// Quadrature points for surface L² errors.
const NORM_POINTS: usize = 4000;
/// Relative tolerance for reporting near-equal geodesic lengths.
const COLLISION_TOL: f64 = 1e-9;

pub type Outcome = Result<String, CliError>;

enum Profile {
    Even(EvenPolynomial),
    Boundary(BoundaryPolynomial),
    Constant(Constant),
}

impl RadialProfile for Profile {
    fn value(&self, r: f64) -> f64 {
        match self {
            Profile::Even(p) => p.value(r),
            Profile::Boundary(p) => p.value(r),
            Profile::Constant(p) => p.value(r),
        }
    }
    fn d1(&self, r: f64) -> f64 {
        match self {
            Profile::Even(p) => p.d1(r),
            Profile::Boundary(p) => p.d1(r),
            Profile::Constant(p) => p.d1(r),
        }
    }
    fn d2(&self, r: f64) -> f64 {
        match self {
            Profile::Even(p) => p.d2(r),
            Profile::Boundary(p) => p.d2(r),
            Profile::Constant(p) => p.d2(r),
        }
    }
}

fn profile(spec: &ProfileSpec) -> Result<Profile, CliError> {
    Ok(match spec {
        ProfileSpec::Even(c) => Profile::Even(EvenPolynomial::new(c.clone())),
        ProfileSpec::Boundary(c) => Profile::Boundary(BoundaryPolynomial::new(c.clone())),
        ProfileSpec::Constant(v) => Profile::Constant(Constant(*v)),
        ProfileSpec::Preset(name) => match name.as_str() {
            "flat" => Profile::Even(EvenPolynomial::new(vec![1.0])),
            "bump" => Profile::Even(EvenPolynomial::new(vec![1.0, 0.15, 0.1])),
            m if m.starts_with("matched-") => {
                let order: usize = m["matched-".len()..]
                    .parse()
                    .ok()
                    .filter(|&o| (1..=6).contains(&o))
                    .ok_or_else(|| CliError::Config(format!("unknown preset {m:?}")))?;
                Profile::Even(EvenPolynomial::matched_jet(order, 1.0))
            }
            other => return Err(CliError::Config(format!("unknown preset {other:?}"))),
        },
    })
}

fn model_spectrum(cfg: &ExperimentConfig, spec: &ProfileSpec) -> Result<SteklovSpectrum, CliError> {
    let m = &cfg.model;
    Ok(match m.kind {
        ModelKind::Ball => ball_steklov_exact(m.n, m.kmax)?,
        ModelKind::Cylinder => {
            let lambdas = m.lambdas.clone().unwrap_or_else(|| circle_eigenvalues(m.circle_jmax));
            cylinder_steklov(m.length, &lambdas, m.n)?
        }
        ModelKind::Conformal => conformal_spectrum(&profile(spec)?, m.n, m.kmax)?,
        ModelKind::Potential => {
            let q = profile(spec)?;
            let modes = potential_modes(&q, m.n, m.kmax, &ModeOptions::default())?;
            spectrum_from_modes(m.n, &modes)?
        }
    })
}

fn read_spectrum(path: &std::path::Path, n: usize) -> Result<SteklovSpectrum, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e == "json");
    Ok(if is_json {
        SteklovSpectrum::from_json(&text)?
    } else {
        SteklovSpectrum::from_csv(n, Provenance::Exact, &text)?
    })
}

fn spectrum_points(s: &SteklovSpectrum) -> Vec<(f64, f64)> {
    s.entries()
        .iter()
        .enumerate()
        .map(|(i, e)| (i as f64, e.sigma))
        .collect()
}

pub fn spectrum(cfg: &ExperimentConfig, out: &mut OutputDir) -> Outcome {
    let s = model_spectrum(cfg, &cfg.model.profile)?;
    if cfg.wants(Format::Csv) {
        out.write("spectrum.csv", &s.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        out.write("spectrum.json", &(s.to_json() + "\n"))?;
    }
    if cfg.wants(Format::Svg) {
        out.write("spectrum.svg", &xy_svg("Steklov eigenvalues", &spectrum_points(&s), false))?;
    }
    Ok(format!(
        "spectrum: {} distinct eigenvalues, {} with multiplicity",
        s.entries().len(),
        s.count()
    ))
}

#[derive(Serialize)]
struct WeylReport {
    n: usize,
    volume: f64,
    entries: usize,
    sigma_max: Option<f64>,
}

pub fn weyl(cfg: &ExperimentConfig, out: &mut OutputDir) -> Outcome {
    let s = model_spectrum(cfg, &cfg.model.profile)?;
    let volume = weyl_fit(&s, cfg.model.n)?;
    let counting: Vec<(f64, f64)> = s
        .entries()
        .iter()
        .map(|e| (e.sigma, s.counting(e.sigma) as f64))
        .collect();
    if cfg.wants(Format::Csv) {
        let mut text = String::from("sigma,count\n");
        for (x, c) in &counting {
            let _ = writeln!(text, "{x},{c}");
        }
        out.write("weyl.csv", &text)?;
    }
    if cfg.wants(Format::Json) {
        out.write_json(
            "weyl.json",
            &WeylReport {
                n: cfg.model.n,
                volume,
                entries: s.count(),
                sigma_max: s.sigma_max(),
            },
        )?;
    }
    if cfg.wants(Format::Svg) {
        out.write("weyl.svg", &xy_svg("Counting function", &counting, true))?;
    }
    Ok(format!("weyl: boundary volume {volume:.6} from {} eigenvalues", s.count()))
}

pub fn trace(cfg: &ExperimentConfig, out: &mut OutputDir) -> Outcome {
    let t = &cfg.trace;
    let n = cfg.model.n;
    let a = match &t.spectrum_file {
        Some(p) => read_spectrum(p, n)?,
        None => model_spectrum(cfg, &cfg.model.profile)?,
    };
    let b = match (&t.compare_file, &cfg.model.compare) {
        (Some(p), _) => Some(read_spectrum(p, n)?),
        (None, Some(spec)) => Some(model_spectrum(cfg, spec)?),
        (None, None) => None,
    };
    let sigma_max = a
        .sigma_max()
        .into_iter()
        .chain(b.as_ref().and_then(|b| b.sigma_max()))
        .fold(0.0, f64::max);
    let window = match t.bandwidth {
        Some(w) => Window::gaussian(w)?,
        None if sigma_max > 0.0 => Window::gaussian(sigma_max / 20.0)?,
        None => Window::gaussian(1.0)?,
    };
    let step = t
        .step
        .unwrap_or(if sigma_max > 0.0 { PI / (4.0 * sigma_max) } else { 0.01 });
    let grid = TimeGrid::new(t.t_min, t.t_max, step)?;
    let signal = match &b {
        Some(b) => difference_trace(&a, b, window, grid)?,
        None => mollified_trace(&a, window, grid)?,
    };
    let peaks = detect_peaks(&signal, &PeakOptions::default());
    if cfg.wants(Format::Csv) {
        out.write("trace.csv", &signal.to_csv())?;
    }
    if cfg.wants(Format::Json) {
        out.write("peaks.json", &(peaks.to_json() + "\n"))?;
    }
    if cfg.wants(Format::Svg) {
        out.write("trace.svg", &signal_svg(&signal))?;
    }
    let top = peaks
        .by_amplitude()
        .iter()
        .take(3)
        .map(|p| format!("{:.4}", p.time))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(format!(
        "trace: {} samples, {} peaks{}",
        signal.values.len(),
        peaks.peaks.len(),
        if top.is_empty() { String::new() } else { format!(" (largest at {top})") }
    ))
}

#[derive(Serialize)]
struct ClassRow {
    word: String,
    root: String,
    length: f64,
    trace: f64,
    primitive: bool,
    multiplicity: u32,
    poincare_factor: f64,
}

#[derive(Serialize)]
struct ClassDocument {
    schema: &'static str,
    max_word_length: usize,
    classes: Vec<ClassRow>,
    collisions: Vec<steklov_core::anosovgeo::Collision>,
}

fn surface_classes(cfg: &ExperimentConfig) -> Result<(FuchsianGroup, Vec<ClosedGeodesicClass>), CliError> {
    let g = build_default_surface();
    let classes = enumerate_classes(&g, cfg.surface.max_word_length)?;
    Ok((g, classes))
}

pub fn geodesics(cfg: &ExperimentConfig, out: &mut OutputDir) -> Outcome {
    let (_, classes) = surface_classes(cfg)?;
    let collisions = length_spectrum_report(&classes, COLLISION_TOL);
    if cfg.wants(Format::Csv) {
        out.write("classes.csv", &classes_to_csv(&classes))?;
    }
    if cfg.wants(Format::Json) {
        let rows = classes
            .iter()
            .map(|c| ClassRow {
                word: c.word.to_string(),
                root: c.root.to_string(),
                length: c.length,
                trace: c.trace,
                primitive: c.primitive,
                multiplicity: c.multiplicity,
                poincare_factor: c.poincare_factor,
            })
            .collect();
        out.write_json(
            "classes.json",
            &ClassDocument {
                schema: "classes/v1",
                max_word_length: cfg.surface.max_word_length,
                classes: rows,
                collisions: collisions.clone(),
            },
        )?;
    }
    if cfg.wants(Format::Svg) {
        let pts: Vec<(f64, f64)> = classes.iter().enumerate().map(|(i, c)| (i as f64, c.length)).collect();
        out.write("classes.svg", &xy_svg("Length spectrum", &pts, false))?;
    }
    let systole = classes.first().map_or(f64::NAN, |c| c.length);
    Ok(format!(
        "geodesics: {} classes up to word length {}, systole {systole:.6}, {} collisions",
        classes.len(),
        cfg.surface.max_word_length,
        collisions.len()
    ))
}

struct SurfaceSetup {
    group: FuchsianGroup,
    classes: Vec<ClosedGeodesicClass>,
    basis: Basis,
    system: XRaySystem,
}

fn surface_setup(cfg: &ExperimentConfig) -> Result<SurfaceSetup, CliError> {
    let (group, classes) = surface_classes(cfg)?;
    let bumps = BumpBasis::spiral_with_width(&group, cfg.surface.basis_size, cfg.surface.bump_width)?;
    let basis = Basis::Bumps(bumps);
    let system = build_xray_system(&basis, &classes, &group)?;
    Ok(SurfaceSetup {
        group,
        classes,
        basis,
        system,
    })
}

fn ridge(cfg: &ExperimentConfig) -> Ridge {
    match cfg.surface.ridge_discrepancy {
        Some(relative) => Ridge::Discrepancy { relative },
        None => Ridge::Fixed(cfg.surface.ridge),
    }
}

#[derive(Serialize)]
struct XRayReport {
    rows: usize,
    cols: usize,
    rank: usize,
    smallest_singular_value: f64,
    condition_number: Option<f64>,
    lambda: f64,
    round_trip_relative_error: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn xray(cfg: &ExperimentConfig, out: &mut OutputDir) -> Outcome {
    let s = surface_setup(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let x0: Vec<f64> = (0..s.basis.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v = s.system.apply(&x0)?;
    let lambda = match ridge(cfg) {
        Ridge::Fixed(l) => l,
        Ridge::Discrepancy { relative } => ridge_by_discrepancy(&s.system, &v, relative * norm(&v))?,
    };
    let x = xray_invert(&s.system, &v, lambda)?;
    let diff: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
    let err = norm(&diff) / norm(&x0);
    let cond = s.system.condition_number();
    if cfg.wants(Format::Csv) {
        let mut text = String::from("index,singular_value\n");
        for (i, sv) in s.system.singular_values().iter().enumerate() {
            let _ = writeln!(text, "{i},{sv}");
        }
        out.write("singular_values.csv", &text)?;
    }
    if cfg.wants(Format::Json) {
        out.write("xray.json", &(s.system.to_json() + "\n"))?;
        out.write_json(
            "xray_report.json",
            &XRayReport {
                rows: s.system.rows(),
                cols: s.system.cols(),
                rank: s.system.rank(),
                smallest_singular_value: s.system.smallest_singular_value(),
                condition_number: cond.is_finite().then_some(cond),
                lambda,
                round_trip_relative_error: err,
            },
        )?;
    }
    if cfg.wants(Format::Svg) {
        let pts: Vec<(f64, f64)> = s
            .system
            .singular_values()
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64, v.log10()))
            .collect();
        out.write("singular_values.svg", &xy_svg("log10 singular values", &pts, true))?;
    }
    Ok(format!(
        "xray: {} classes x {} basis functions, sigma_min {:.4e}, condition {cond:.4e}, round trip {err:.1e}",
        s.system.rows(),
        s.system.cols(),
        s.system.smallest_singular_value()
    ))
}

#[derive(Serialize)]
struct VerdictFile {
    verdict: steklov_core::recover::Verdict,
    first_nonzero: Option<usize>,
    planted_order: Option<usize>,
    relative_error: Option<f64>,
}

pub fn recover(cfg: &ExperimentConfig, out: &mut OutputDir) -> Outcome {
    let r = &cfg.recover;
    let kind = match r.kind.as_str() {
        "conformal" => JetKind::Conformal,
        "potential" => JetKind::Potential,
        other => return Err(CliError::Config(format!("unknown jet kind {other:?}"))),
    };
    let s = surface_setup(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let planted_field: Option<Vec<f64>> = r.planted_order.map(|_| {
        (0..s.basis.len())
            .map(|_| rng.gen_range(-r.amplitude..=r.amplitude))
            .collect()
    });
    let jet = match (r.planted_order, &planted_field) {
        (Some(o), Some(f)) => SurfaceJet::planted(kind, o, f.clone())?,
        _ => SurfaceJet::zero(kind, s.basis.len(), 1),
    };
    let pipeline = PipelineConfig {
        n: r.n,
        j_max: r.j_max,
        zero_tol: r.zero_tol,
        ridge: ridge(cfg),
    };
    let table = forward_invariants(&jet, &s.classes, &s.basis, &s.group, r.n, r.j_max)?;
    let result = recover_from_table(&table, &s.system, &pipeline)?;
    let relative_error = match (r.planted_order, &planted_field) {
        (Some(o), Some(f)) => match result.order(o) {
            Some(found) => {
                let fnorm = FieldNorm::new(&s.basis, &s.group, NORM_POINTS)?;
                Some(fnorm.relative_error(&found.coefficients, f))
            }
            None => None,
        },
        _ => None,
    };
    if cfg.wants(Format::Csv) {
        let mut text = String::from("order,coefficient_norm,residual,lambda\n");
        for o in &result.orders {
            let _ = writeln!(text, "{},{},{},{}", o.order, o.coefficient_norm, o.residual, o.lambda);
        }
        out.write("orders.csv", &text)?;
    }
    if cfg.wants(Format::Json) {
        out.write("recovered.json", &(result.to_json() + "\n"))?;
        out.write_json(
            "verdict.json",
            &VerdictFile {
                verdict: result.verdict,
                first_nonzero: result.first_nonzero,
                planted_order: r.planted_order,
                relative_error,
            },
        )?;
        out.write_json("invariants.json", &table)?;
    }
    if cfg.wants(Format::Svg) {
        let pts: Vec<(f64, f64)> = result
            .orders
            .iter()
            .map(|o| (o.order as f64, o.coefficient_norm))
            .collect();
        out.write("orders.svg", &xy_svg("Recovered coefficient norm per order", &pts, false))?;
    }
    out.write("summary.txt", &result.summary())?;
    Ok(match result.first_nonzero {
        Some(j) => format!("recover: jets differ, first nonzero order {j}"),
        None => "recover: isospectral-consistent".to_string(),
    })
}

fn b_function(name: &str) -> Result<fn(f64) -> f64, CliError> {
    Ok(match name {
        "cos" => f64::cos,
        "sin" => f64::sin,
        "cos2" => |x: f64| (2.0 * x).cos(),
        "zero" => |_| 0.0,
        other => return Err(CliError::Config(format!("unknown multiplier {other:?}"))),
    })
}

pub fn oplab(cfg: &ExperimentConfig, out: &mut OutputDir) -> Outcome {
    let o = &cfg.oplab;
    let b = b_function(&o.b)?;
    let mut lab = OpLabConfig::new(o.n, o.order, o.t);
    lab.window = o.window;
    let report = return_operator_lab(&b, &lab)?;
    if cfg.wants(Format::Csv) {
        let mut text = String::from("k,deviation,band_sup\n");
        for ((k, d), s) in report.frequencies.iter().zip(&report.per_frequency).zip(&report.band_sup) {
            let _ = writeln!(text, "{k},{d},{s}");
        }
        out.write("oplab.csv", &text)?;
    }
    if cfg.wants(Format::Json) {
        out.write_json("oplab.json", &report)?;
    }
    if cfg.wants(Format::Svg) {
        let pts: Vec<(f64, f64)> = report
            .frequencies
            .iter()
            .zip(&report.per_frequency)
            .map(|(&k, &d)| (k as f64, d))
            .collect();
        out.write("oplab.svg", &xy_svg("Symbol deviation per frequency", &pts, false))?;
    }
    let (lo, hi) = lab.frequency_window();
    Ok(format!(
        "oplab: N = {}, window [{lo}, {hi}], deviation {:.4e} (pooled {:.4e})",
        o.n, report.deviation, report.pooled_deviation
    ))
}
