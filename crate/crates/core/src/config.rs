//! Declarative experiment description in TOML.
//!
//! Every optional key has a default that is filled in at parse time, so the
//! serialized form of a parsed config is fully explicit and parses back to
//! an equal value.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lab::{ProbeSettings, SystemEntry};
use crate::measure::{random_atomic, random_grid, CircleMeasure};
use crate::rng::rng_for;
use crate::schema;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default)]
    pub format: Format,
}

fn default_out_dir() -> String {
    "out".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            format: Format::Json,
        }
    }
}

/// Where a named measure comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSource {
    Uniform { bins: usize },
    Dirac { bins: usize, angle: f64, mass: f64 },
    /// `[angle, mass]` pairs.
    Atoms { bins: usize, atoms: Vec<[f64; 2]> },
    /// Per-radian density values, one per bin.
    Density { values: Vec<f64> },
    /// A `circle-measure/1` JSON document, relative to the config file.
    File { path: String },
    /// Seeded random atomic probability measure.
    RandomAtomic { bins: usize, count: usize },
    /// Seeded random smooth-density probability measure.
    RandomGrid { bins: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureEntry {
    pub name: String,
    pub source: MeasureSource,
}

fn d_window() -> i64 {
    64
}
fn d_tail_tol() -> f64 {
    1e-12
}
fn d_dual_tol() -> f64 {
    1e-8
}
fn d_exp_tol() -> f64 {
    1e-5
}
fn d_nodes() -> usize {
    8
}
fn d_samples() -> usize {
    10_000
}
fn d_stat_tol() -> f64 {
    0.05
}
fn d_threshold() -> f64 {
    0.05
}
fn d_min_len() -> usize {
    16
}

/// Ball used by lab probes: around a point of the unit circle (rotations)
/// or around the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BallConfig {
    Arc { angle: f64, length: f64 },
    Origin { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "probe", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProbeConfig {
    /// Fourier/convolution duality `(μ*ν)^ = μ̂ ν̂` on `|n| <= window`.
    Convolve {
        a: String,
        b: String,
        #[serde(default = "d_window")]
        window: i64,
        #[serde(default = "d_dual_tol")]
        tolerance: f64,
    },
    /// `(exp ρ)^(n) = e^{ρ̂(n)}` on `|n| <= window`.
    Exp {
        measure: String,
        #[serde(default = "d_tail_tol")]
        tail_tol: f64,
        #[serde(default = "d_window")]
        window: i64,
        #[serde(default = "d_exp_tol")]
        tolerance: f64,
    },
    /// Normalized chaos measure and its Fourier table.
    Chaos {
        measure: String,
        #[serde(default = "d_tail_tol")]
        tail_tol: f64,
    },
    /// Fourier coefficients on `|n| <= window`.
    Fourier {
        measure: String,
        #[serde(default = "d_window")]
        window: i64,
    },
    /// Rajchman, Dirichlet and mild-mixing window probes.
    Mixing {
        measure: String,
        #[serde(default = "d_window")]
        window: i64,
        epsilon: f64,
        family_size: usize,
        delta: f64,
    },
    /// `‖Tχ − e^{iλ}χ‖ / ‖χ‖` at each angle.
    KalishResidual { grid: usize, lambdas: Vec<f64>, threshold: f64 },
    /// Gaussian model over a measure with corrected eigenvectors; checks
    /// invariance and, optionally, a non-unimodular negative control.
    GaussInvariance {
        measure: String,
        grid: usize,
        #[serde(default = "d_nodes")]
        nodes: usize,
        #[serde(default = "d_samples")]
        samples: usize,
        #[serde(default = "d_stat_tol")]
        tolerance: f64,
        #[serde(default = "d_threshold")]
        residual_threshold: f64,
        /// Modulus of the negative control; `None` skips it.
        #[serde(default)]
        control_modulus: Option<f64>,
    },
    /// Visit set of a ball along an orbit from a fixed start, with its
    /// densities, return-set certification and gap statistics. A
    /// `check_ball` different from `ball` is a negative control.
    ReturnSet {
        system: String,
        ball: BallConfig,
        #[serde(default)]
        check_ball: Option<BallConfig>,
        #[serde(default = "d_min_len")]
        min_len: usize,
    },
    /// The classification harness over all configured systems.
    Classify {
        #[serde(default)]
        settings: ProbeSettings,
    },
}

impl ProbeConfig {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Convolve { .. } => "convolve",
            Self::Exp { .. } => "exp",
            Self::Chaos { .. } => "chaos",
            Self::Fourier { .. } => "fourier",
            Self::Mixing { .. } => "mixing",
            Self::KalishResidual { .. } => "kalish-residual",
            Self::GaussInvariance { .. } => "gauss-invariance",
            Self::ReturnSet { .. } => "return-set",
            Self::Classify { .. } => "classify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema: String,
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub measures: Vec<MeasureEntry>,
    #[serde(default)]
    pub systems: Vec<SystemEntry>,
    #[serde(default)]
    pub probes: Vec<ProbeConfig>,
}

/// Parses and validates a config; defaults are expanded in the result.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl ExperimentConfig {
    /// The fully expanded TOML form.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        schema::check(schema::EXPERIMENT, &self.schema)?;
        let bad = |m: String| Err(LabError::Config(m));
        let mut names: Vec<&str> = self.measures.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return bad("measure names must be unique".into());
        }
        let lab = crate::lab::ClassificationConfig {
            seed: self.seed,
            settings: ProbeSettings::default(),
            systems: self.systems.clone(),
        };
        lab.validate()?;
        let has_measure = |n: &str| self.measures.iter().any(|m| m.name == n);
        let has_system = |n: &str| self.systems.iter().any(|s| s.name == n);
        for (i, p) in self.probes.iter().enumerate() {
            let at = format!("probes[{i}] ({})", p.name());
            let measures: Vec<&String> = match p {
                ProbeConfig::Convolve { a, b, .. } => vec![a, b],
                ProbeConfig::Exp { measure, .. }
                | ProbeConfig::Chaos { measure, .. }
                | ProbeConfig::Fourier { measure, .. }
                | ProbeConfig::Mixing { measure, .. }
                | ProbeConfig::GaussInvariance { measure, .. } => vec![measure],
                _ => vec![],
            };
            for m in measures {
                if !has_measure(m) {
                    return bad(format!("{at}: unknown measure {m:?}"));
                }
            }
            match p {
                ProbeConfig::ReturnSet { system, .. } if !has_system(system) => {
                    return bad(format!("{at}: unknown system {system:?}"));
                }
                ProbeConfig::Classify { settings } => {
                    crate::lab::ClassificationConfig {
                        seed: self.seed,
                        settings: settings.clone(),
                        systems: vec![],
                    }
                    .validate()
                    .map_err(|e| LabError::Config(format!("{at}: {e}")))?;
                }
                ProbeConfig::Convolve { window, tolerance, .. } | ProbeConfig::Exp { window, tolerance, .. }
                    if *window < 0 || !(*tolerance > 0.0) =>
                {
                    return bad(format!("{at}: window must be >= 0 and tolerance positive"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Materializes a named measure. `base` anchors relative file paths.
    pub fn measure(&self, name: &str, base: &Path) -> Result<CircleMeasure> {
        let entry = self
            .measures
            .iter()
            .find(|m| m.name == name)
            .ok_or_else(|| LabError::Config(format!("unknown measure {name:?}")))?;
        let mut rng = rng_for(self.seed, &format!("measure:{name}"));
        match &entry.source {
            MeasureSource::Uniform { bins } => CircleMeasure::uniform(*bins),
            MeasureSource::Dirac { bins, angle, mass } => CircleMeasure::dirac(*bins, *angle, *mass),
            MeasureSource::Atoms { bins, atoms } => {
                let pairs: Vec<(f64, f64)> = atoms.iter().map(|[a, m]| (*a, *m)).collect();
                CircleMeasure::from_atoms(*bins, &pairs)
            }
            MeasureSource::Density { values } => CircleMeasure::from_density(values.clone()),
            MeasureSource::File { path } => {
                let p: PathBuf = base.join(path);
                CircleMeasure::from_json(&std::fs::read_to_string(&p)?)
            }
            MeasureSource::RandomAtomic { bins, count } => random_atomic(*bins, *count, &mut rng),
            MeasureSource::RandomGrid { bins } => random_grid(*bins, &mut rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
schema = "experiment/1"
seed = 3

[[measures]]
name = "u"
source = { kind = "uniform", bins = 256 }

[[probes]]
probe = "exp"
measure = "u"
"#;

    #[test]
    fn minimal_config_expands_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.output, OutputSpec::default());
        assert_eq!(
            c.probes[0],
            ProbeConfig::Exp {
                measure: "u".into(),
                tail_tol: 1e-12,
                window: 64,
                tolerance: 1e-5
            }
        );
        let text = c.to_toml().unwrap();
        assert!(text.contains("tail_tol"));
        assert!(text.contains("dir = \"out\""));
    }

    #[test]
    fn round_trip_is_stable() {
        let c = parse_config(MINIMAL).unwrap();
        let text = c.to_toml().unwrap();
        let again = parse_config(&text).unwrap();
        assert_eq!(c, again);
        assert_eq!(text, again.to_toml().unwrap());
    }

    #[test]
    fn unknown_field_is_named() {
        let err = parse_config(&format!("{MINIMAL}\nbogus = 1\n")).unwrap_err().to_string();
        assert!(err.contains("bogus"), "{err}");
        let err = parse_config(&MINIMAL.replace("measure = \"u\"", "measure = \"u\"\nwindw = 3")).unwrap_err();
        assert!(err.to_string().contains("windw"), "{err}");
    }

    #[test]
    fn references_are_checked() {
        let err = parse_config(&MINIMAL.replace("measure = \"u\"", "measure = \"v\"")).unwrap_err();
        assert!(err.to_string().contains("unknown measure"));
        assert!(parse_config(&MINIMAL.replace("experiment/1", "experiment/2")).is_err());
    }

    #[test]
    fn measures_materialize() {
        let c = parse_config(MINIMAL).unwrap();
        let u = c.measure("u", Path::new(".")).unwrap();
        assert!((u.total_mass() - 1.0).abs() < 1e-12);
        assert!(c.measure("nope", Path::new(".")).is_err());
    }
}
