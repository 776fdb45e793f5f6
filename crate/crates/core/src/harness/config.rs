//! Scenario documents (JSON).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::Complex64;
use crate::sim::{NoiseSignal, Perturbation, ResetRule};

const BUILTIN: &str = include_str!("../../configs/presets.json");

fn default_x0() -> Vec<f64> {
    vec![0.0, 2.0]
}

fn default_z0() -> Vec<f64> {
    vec![1.0, 1.0]
}

fn default_t_end() -> f64 {
    60.0
}

fn default_stride() -> usize {
    10
}

fn default_window() -> f64 {
    0.25
}

fn default_tolerance() -> f64 {
    1e-3
}

/// A single experiment: plant, observer, how it is implemented, and how it
/// is driven.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: Option<String>,
    pub plant: PlantSpec,
    pub observer: ObserverSpec,
    /// Defaults to `discrete` for discrete observers and `sampled-data`
    /// otherwise.
    #[serde(default)]
    pub implementation: Option<Implementation>,
    #[serde(default)]
    pub schedule: Option<ScheduleSpec>,
    #[serde(default)]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub reset: ResetSpec,
    #[serde(default = "default_x0")]
    pub x0: Vec<f64>,
    #[serde(default = "default_z0")]
    pub z0: Vec<f64>,
    #[serde(default)]
    pub w0: f64,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    /// Fraction of the horizon, at its end, used for tail metrics.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PlantSpec {
    /// `oscillator`, `double-integrator` or `sin-triangular`.
    Named(String),
    Inline {
        linear: InlineLinear,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineLinear {
    pub a: Vec<Vec<f64>>,
    pub c: Vec<f64>,
}

/// A pole given as a real number or as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PoleSpec {
    Real(f64),
    Complex([f64; 2]),
}

impl PoleSpec {
    pub fn to_complex(self) -> Complex64 {
        match self {
            Self::Real(re) => Complex64::new(re, 0.0),
            Self::Complex([re, im]) => Complex64::new(re, im),
        }
    }
}

pub fn poles(specs: &[PoleSpec]) -> Vec<Complex64> {
    specs.iter().map(|p| p.to_complex()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ObserverSpec {
    /// Either `k` or `poles` fixes the gain.
    Linear {
        #[serde(default)]
        k: Option<Vec<f64>>,
        #[serde(default)]
        poles: Option<Vec<PoleSpec>>,
        #[serde(default)]
        mu: Option<f64>,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        p: Option<Vec<Vec<f64>>>,
    },
    Highgain {
        poles: Vec<PoleSpec>,
        mu: f64,
        #[serde(default)]
        theta: Option<f64>,
    },
    Discrete {
        period: f64,
        targets: Vec<PoleSpec>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Implementation {
    SampledData,
    Zoh,
    Continuous,
    Discrete,
}

impl Implementation {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::SampledData => "sampled-data",
            Self::Zoh => "zoh",
            Self::Continuous => "continuous",
            Self::Discrete => "discrete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DiameterSpec {
    Value(f64),
    /// A fraction of the design's maximum certified period.
    FractionOfMax {
        fraction_of_max: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub r: DiameterSpec,
    #[serde(default)]
    pub perturbation: PerturbationSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PerturbationSpec {
    #[default]
    Zero,
    Constant {
        d: f64,
    },
    Uniform {
        max: f64,
        seed: u64,
    },
}

impl PerturbationSpec {
    pub fn to_source(self) -> Perturbation {
        match self {
            Self::Zero => Perturbation::Zero,
            Self::Constant { d } => Perturbation::Constant(d),
            Self::Uniform { max, seed } => Perturbation::Uniform { max, seed },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum NoiseSpec {
    #[default]
    Zero,
    Constant {
        level: f64,
    },
    Uniform {
        bound: f64,
        seed: u64,
    },
    Custom {
        samples: Vec<f64>,
    },
}

impl NoiseSpec {
    pub fn to_signal(&self) -> NoiseSignal {
        match self {
            Self::Zero => NoiseSignal::Zero,
            Self::Constant { level } => NoiseSignal::Constant(*level),
            Self::Uniform { bound, seed } => NoiseSignal::UniformRandom {
                bound: *bound,
                seed: *seed,
            },
            Self::Custom { samples } => NoiseSignal::Custom(samples.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResetSpec {
    #[default]
    Fresh,
    Stale,
}

impl ResetSpec {
    pub fn to_rule(self) -> ResetRule {
        match self {
            Self::Fresh => ResetRule::Fresh,
            Self::Stale => ResetRule::Stale,
        }
    }
}

/// A run entry: a preset name or an inline scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RunEntry {
    Preset(String),
    Inline(Box<Scenario>),
}

/// A config file: named presets plus the entries to run. A file holding a
/// bare scenario is accepted too.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    #[serde(default)]
    pub presets: BTreeMap<String, Scenario>,
    #[serde(default)]
    pub run: Vec<RunEntry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot parse config: {0}")]
    Parse(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("config selects no scenario")]
    NothingToRun,
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

impl Scenario {
    pub fn implementation(&self) -> Implementation {
        self.implementation.unwrap_or(match self.observer {
            ObserverSpec::Discrete { .. } => Implementation::Discrete,
            _ => Implementation::SampledData,
        })
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.implementation().as_str().to_string())
    }

    /// Checks the scalar settings that do not need the plant or the design.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |msg: String| Err(ConfigError::Invalid(msg));
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return invalid(format!("t_end must be positive, got {}", self.t_end));
        }
        if let Some(step) = self.step {
            if !(step > 0.0) || !step.is_finite() {
                return invalid(format!("step must be positive, got {step}"));
            }
        }
        if !(self.window > 0.0 && self.window < 1.0) {
            return invalid(format!("window must lie in (0, 1), got {}", self.window));
        }
        if !(self.tolerance > 0.0) {
            return invalid(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            ));
        }
        if self.stride == 0 {
            return invalid("stride must be at least 1".into());
        }
        let discrete_observer = matches!(self.observer, ObserverSpec::Discrete { .. });
        let implementation = self.implementation();
        if discrete_observer != (implementation == Implementation::Discrete) {
            return invalid(format!(
                "implementation {} does not match the observer kind",
                implementation.as_str()
            ));
        }
        if implementation != Implementation::Continuous {
            match &self.schedule {
                None => return invalid(format!("{} needs a schedule", implementation.as_str())),
                Some(ScheduleSpec {
                    r: DiameterSpec::Value(r),
                    ..
                }) if !(*r > 0.0) => return invalid(format!("r must be positive, got {r}")),
                Some(ScheduleSpec {
                    r: DiameterSpec::FractionOfMax { fraction_of_max: f },
                    ..
                }) if !(*f > 0.0) => {
                    return invalid(format!("fraction_of_max must be positive, got {f}"))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Replaces every seed (schedule perturbation and noise) by `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        if let Some(ScheduleSpec {
            perturbation: PerturbationSpec::Uniform { seed: s, .. },
            ..
        }) = &mut self.schedule
        {
            *s = seed;
        }
        if let NoiseSpec::Uniform { seed: s, .. } = &mut self.noise {
            *s = seed;
        }
        self
    }
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let is_document = value
            .as_object()
            .is_some_and(|m| m.contains_key("presets") || m.contains_key("run"));
        if is_document {
            serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))
        } else {
            let scenario: Scenario =
                serde_json::from_value(value).map_err(|e| ConfigError::Parse(e.to_string()))?;
            Ok(Self {
                presets: BTreeMap::new(),
                run: vec![RunEntry::Inline(Box::new(scenario))],
            })
        }
    }

    /// The shipped presets.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("built-in presets parse")
    }

    /// Looks a preset up in this document, then among the built-in ones.
    pub fn preset(&self, name: &str) -> Result<Scenario, ConfigError> {
        let mut scenario = match self.presets.get(name) {
            Some(s) => s.clone(),
            None => Self::builtin()
                .presets
                .get(name)
                .cloned()
                .ok_or_else(|| ConfigError::UnknownPreset(name.into()))?,
        };
        scenario.name.get_or_insert_with(|| name.to_string());
        Ok(scenario)
    }

    /// The scenarios to run: `run` entries in order, or, when empty, every
    /// preset of this document in name order.
    pub fn scenarios(&self) -> Result<Vec<Scenario>, ConfigError> {
        let list: Vec<Scenario> = if self.run.is_empty() {
            self.presets
                .keys()
                .map(|k| self.preset(k))
                .collect::<Result<_, _>>()?
        } else {
            self.run
                .iter()
                .map(|entry| match entry {
                    RunEntry::Preset(name) => self.preset(name),
                    RunEntry::Inline(s) => Ok((**s).clone()),
                })
                .collect::<Result<_, _>>()?
        };
        if list.is_empty() {
            return Err(ConfigError::NothingToRun);
        }
        for s in &list {
            s.validate()?;
        }
        Ok(list)
    }
}
