// Experiment configuration: one JSON document plus dotted-path overrides.

use crate::CliError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Optional; when present it must name the subcommand being run.
    pub command: Option<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub formats: Vec<Format>,
    pub model: ModelConfig,
    pub surface: SurfaceConfig,
    pub trace: TraceConfig,
    pub recover: RecoverConfig,
    pub oplab: OpLabConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            out: PathBuf::from("steklov-out"),
            seed: 0,
            formats: vec![Format::Csv, Format::Json],
            model: ModelConfig::default(),
            surface: SurfaceConfig::default(),
            trace: TraceConfig::default(),
            recover: RecoverConfig::default(),
            oplab: OpLabConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Ball,
    Cylinder,
    Conformal,
    Potential,
}

/// Radial profile: a named preset or explicit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ProfileSpec {
    /// `flat`, `bump`, `matched-1` .. `matched-4`.
    Preset(String),
    /// Coefficients of Σ a_i (r² − 1)^i.
    Even(Vec<f64>),
    /// Coefficients of Σ a_i (1 − r)^i.
    Boundary(Vec<f64>),
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub n: usize,
    pub kmax: usize,
    /// Cylinder length L.
    pub length: f64,
    /// Cylinder cross-section eigenvalues; defaults to the unit circle's.
    pub lambdas: Option<Vec<f64>>,
    /// Frequency cutoff for the default circle eigenvalues.
    pub circle_jmax: usize,
    pub profile: ProfileSpec,
    /// Second profile for difference traces.
    pub compare: Option<ProfileSpec>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::Ball,
            n: 3,
            kmax: 200,
            length: 2.0,
            lambdas: None,
            circle_jmax: 100,
            profile: ProfileSpec::Preset("flat".into()),
            compare: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SurfaceConfig {
    /// Maximum word length W.
    pub max_word_length: usize,
    pub basis_size: usize,
    pub bump_width: f64,
    /// Fixed ridge parameter λ.
    pub ridge: f64,
    /// When set, λ is chosen by the discrepancy principle at this relative
    /// noise level instead.
    pub ridge_discrepancy: Option<f64>,
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self {
            max_word_length: 4,
            basis_size: 20,
            bump_width: 0.4,
            ridge: 0.0,
            ridge_discrepancy: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TraceConfig {
    /// Ω of the Gaussian window; defaults to σ_max/20.
    pub bandwidth: Option<f64>,
    pub t_min: f64,
    pub t_max: f64,
    /// Defaults to π/(4 σ_max).
    pub step: Option<f64>,
    /// Spectrum CSV or JSON to use instead of the model.
    pub spectrum_file: Option<PathBuf>,
    /// Second spectrum for a difference trace.
    pub compare_file: Option<PathBuf>,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            bandwidth: None,
            t_min: 0.0,
            t_max: 15.0,
            step: None,
            spectrum_file: None,
            compare_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecoverConfig {
    /// `conformal` or `potential`.
    pub kind: String,
    pub n: usize,
    pub j_max: usize,
    /// Order of the planted difference; `None` plants nothing.
    pub planted_order: Option<usize>,
    /// Planted coefficients are uniform in [−amplitude, amplitude].
    pub amplitude: f64,
    pub zero_tol: f64,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self {
            kind: "conformal".into(),
            n: 3,
            j_max: 4,
            planted_order: None,
            amplitude: 0.1,
            zero_tol: steklov_core::recover::DEFAULT_ZERO_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OpLabConfig {
    pub n: usize,
    pub order: u32,
    pub t: f64,
    /// `cos`, `sin`, `cos2` or `zero`.
    pub b: String,
    pub window: Option<(usize, usize)>,
}

impl Default for OpLabConfig {
    fn default() -> Self {
        Self {
            n: 256,
            order: 1,
            t: std::f64::consts::PI,
            b: "cos".into(),
            window: None,
        }
    }
}

// A value given on the command line: JSON when it parses, else a string.
fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn set_path(root: &mut Value, key: &str, value: Value) -> Result<(), CliError> {
    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(CliError::Config(format!("bad key {key:?}")));
        }
        let map = match node {
            Value::Object(m) => m,
            _ => return Err(CliError::Config(format!("{key}: {part} is not a section"))),
        };
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        node = map
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("split yields at least one part")
}

impl ExperimentConfig {
    /// Base document (file or defaults) with `K=V` overrides applied in
    /// order. Unknown keys anywhere are rejected.
    pub fn resolve(file: Option<&str>, overrides: &[String]) -> Result<Self, CliError> {
        let mut doc = match file {
            Some(text) => serde_json::from_str::<Value>(text)
                .map_err(|e| CliError::Config(format!("config: {e}")))?,
            None => Value::Object(Default::default()),
        };
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects K=V, got {o:?}")))?;
            set_path(&mut doc, k.trim(), parse_value(v.trim()))?;
        }
        serde_json::from_value(doc).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_reach_nested_fields() {
        let c = ExperimentConfig::resolve(
            Some(r#"{"model": {"n": 2}}"#),
            &["model.kmax=7".into(), "model.kind=cylinder".into(), "seed=9".into()],
        )
        .unwrap();
        assert_eq!((c.model.n, c.model.kmax, c.seed), (2, 7, 9));
        assert_eq!(c.model.kind, ModelKind::Cylinder);
        assert_eq!(c.trace, TraceConfig::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ExperimentConfig::resolve(Some(r#"{"modle": {}}"#), &[]).is_err());
        assert!(ExperimentConfig::resolve(None, &["model.kmaxx=3".into()]).is_err());
        assert!(ExperimentConfig::resolve(None, &["model".into()]).is_err());
    }

    #[test]
    fn profile_forms() {
        let c = ExperimentConfig::resolve(None, &["model.profile={\"even\":[1,0.2]}".into()]).unwrap();
        assert_eq!(c.model.profile, ProfileSpec::Even(vec![1.0, 0.2]));
    }

    #[test]
    fn resolved_config_round_trips() {
        let c = ExperimentConfig::default();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(ExperimentConfig::resolve(Some(&text), &[]).unwrap(), c);
    }
}
