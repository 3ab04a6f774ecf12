use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;

use crate::learner::LearnerParams;
use crate::mechanisms::{GameParams, MechanismKind, SelectionMode, WsmWeights};
use crate::monitor::MonitorConfig;
use crate::simulator::{Adapter, Disruptor, GeneratorParams, PhaseSplit};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetSource {
    #[default]
    Generate,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub source: DatasetSource,
    /// Feature CSV, read when `source` is `csv`.
    pub path: Option<PathBuf>,
    pub generator: GeneratorParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DisruptorSpec {
    pub id: String,
    pub beta: f64,
}

impl Default for DisruptorSpec {
    fn default() -> Self {
        Self {
            id: "darken".into(),
            beta: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechanismSpec {
    pub id: String,
    pub weights: WsmWeights,
    pub alpha_match: f64,
    pub alpha_mismatch: f64,
    pub selection: SelectionMode,
    /// Derived from the master seed when absent.
    pub seed: Option<u64>,
}

impl Default for MechanismSpec {
    fn default() -> Self {
        let g = GameParams::default();
        Self {
            id: "game".into(),
            weights: WsmWeights::default(),
            alpha_match: g.alpha_match,
            alpha_mismatch: g.alpha_mismatch,
            selection: g.selection,
            seed: None,
        }
    }
}

impl MechanismSpec {
    pub fn game_params(&self) -> GameParams {
        GameParams {
            alpha_match: self.alpha_match,
            alpha_mismatch: self.alpha_mismatch,
            selection: self.selection,
        }
    }
}

/// Duration model and energy draw of one action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionSpec {
    pub mean_s: f64,
    pub sigma_s: f64,
    pub power_w: f64,
    pub nhi_required: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionsConfig {
    pub autonomous: ActionSpec,
    pub human: ActionSpec,
}

impl Default for ActionsConfig {
    fn default() -> Self {
        Self {
            // the arm classifies on its own in a couple of seconds
            autonomous: ActionSpec {
                mean_s: 2.0,
                sigma_s: 0.2,
                power_w: 100.0,
                nhi_required: 0,
            },
            // waiting for a person keeps the cell and an operator station running
            human: ActionSpec {
                mean_s: 10.0,
                sigma_s: 2.0,
                power_w: 60.0,
                nhi_required: 1,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingConfig {
    pub et_alpha: f64,
    pub ecf_alpha: f64,
}

impl Default for SmoothingConfig {
    fn default() -> Self {
        Self {
            et_alpha: crate::estimators::DEFAULT_ALPHA,
            ecf_alpha: crate::estimators::DEFAULT_ALPHA,
        }
    }
}

/// Whether autonomous predictions are fed back into the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdatePolicy {
    #[default]
    Always,
    HumanOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: Option<String>,
    pub dataset: DatasetSpec,
    pub adapter: String,
    pub disruptor: DisruptorSpec,
    pub phase_split: PhaseSplit,
    pub monitor: MonitorConfig,
    pub mechanism: MechanismSpec,
    pub learner: LearnerParams,
    pub actions: ActionsConfig,
    pub nhi_max: u32,
    pub carbon_intensity_g_per_kwh: f64,
    pub smoothing: SmoothingConfig,
    pub update_policy: UpdatePolicy,
    pub seed: u64,
    /// Stream length; defaults to the dataset size.
    pub iterations: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            name: None,
            dataset: DatasetSpec::default(),
            adapter: "identity".into(),
            disruptor: DisruptorSpec::default(),
            phase_split: PhaseSplit::default(),
            monitor: MonitorConfig::default(),
            mechanism: MechanismSpec::default(),
            learner: LearnerParams::default(),
            actions: ActionsConfig::default(),
            nhi_max: 100,
            carbon_intensity_g_per_kwh: 400.0,
            smoothing: SmoothingConfig::default(),
            update_policy: UpdatePolicy::default(),
            seed: 0,
            iterations: None,
        }
    }
}

/// One rejected config field, addressed by its dotted path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    /// Every problem at once, so a form can highlight them all.
    pub fn validate(&self) -> std::result::Result<(), Vec<FieldError>> {
        let mut errs = Vec::new();
        let mut push = |field: &str, e: Error| {
            let message = match e {
                Error::InvalidInput(m) => m,
                other => other.to_string(),
            };
            errs.push(FieldError {
                field: field.to_string(),
                message,
            });
        };

        match self.dataset.source {
            DatasetSource::Generate => {
                if let Err(e) = self.dataset.generator.validate() {
                    push("dataset.generator", e);
                }
            }
            DatasetSource::Csv if self.dataset.path.is_none() => {
                push("dataset.path", Error::InvalidInput("required when source is csv".into()))
            }
            DatasetSource::Csv => {}
        }
        if let Err(e) = self.adapter.parse::<Adapter>() {
            push("adapter", e);
        }
        if let Err(e) = Disruptor::from_id(&self.disruptor.id, self.disruptor.beta) {
            let field = if matches!(e, Error::UnknownComponent { .. }) {
                "disruptor.id"
            } else {
                "disruptor.beta"
            };
            push(field, e);
        }
        if let Err(e) = self.phase_split.validate() {
            push("phase_split", e);
        }
        if let Err(e) = self.monitor.validate() {
            push("monitor", e);
        }
        if let Err(e) = self.mechanism.id.parse::<MechanismKind>() {
            push("mechanism.id", e);
        }
        if let Err(e) = self.mechanism.weights.validate() {
            push("mechanism.weights", e);
        }
        if let Err(e) = self.mechanism.game_params().validate() {
            push("mechanism.alpha_match", e);
        }
        if let Err(e) = self.learner.validate() {
            push("learner", e);
        }
        for (name, a) in [("autonomous", &self.actions.autonomous), ("human", &self.actions.human)] {
            if !(a.mean_s > 0.0 && a.mean_s.is_finite()) {
                push(&format!("actions.{name}.mean_s"), Error::InvalidInput("must be positive".into()));
            }
            if !(a.sigma_s >= 0.0 && a.sigma_s.is_finite()) {
                push(&format!("actions.{name}.sigma_s"), Error::InvalidInput("must be non-negative".into()));
            }
            if !(a.power_w > 0.0 && a.power_w.is_finite()) {
                push(&format!("actions.{name}.power_w"), Error::InvalidInput("must be positive".into()));
            }
        }
        if self.actions.autonomous.nhi_required != 0 {
            push(
                "actions.autonomous.nhi_required",
                Error::InvalidInput("the autonomous action cannot need human interactions".into()),
            );
        }
        if !(self.carbon_intensity_g_per_kwh >= 0.0 && self.carbon_intensity_g_per_kwh.is_finite()) {
            push(
                "carbon_intensity_g_per_kwh",
                Error::InvalidInput("must be non-negative".into()),
            );
        }
        for (field, a) in [
            ("smoothing.et_alpha", self.smoothing.et_alpha),
            ("smoothing.ecf_alpha", self.smoothing.ecf_alpha),
        ] {
            if !(0.0..=1.0).contains(&a) {
                push(field, Error::InvalidInput(format!("must be in [0,1], got {a}")));
            }
        }
        if self.iterations == Some(0) {
            push("iterations", Error::InvalidInput("must be at least 1".into()));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    pub fn check(&self) -> Result<()> {
        self.validate().map_err(|errs| {
            Error::InvalidInput(
                errs.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join("; "),
            )
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_json_is_all_defaults() {
        let c = ExperimentConfig::from_json("{}").unwrap();
        assert_eq!(c, ExperimentConfig::default());
        assert!(c.validate().is_ok());
    }

    #[test]
    fn json_round_trip() {
        let mut c = ExperimentConfig::default();
        c.mechanism.id = "wsm".into();
        c.update_policy = UpdatePolicy::HumanOnly;
        c.iterations = Some(42);
        let text = c.to_json_pretty();
        assert!(text.contains("\"human-only\""));
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"mechanisms": {}}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"monitor": {"window": 3}}"#).is_err());
    }

    #[test]
    fn field_errors_name_the_field() {
        let mut c = ExperimentConfig::default();
        c.mechanism.id = "dice".into();
        c.adapter = "sepia".into();
        c.disruptor.beta = 3.0;
        c.monitor.adr_threshold = 1.5;
        c.actions.autonomous.nhi_required = 2;
        let fields: Vec<String> = c.validate().unwrap_err().into_iter().map(|e| e.field).collect();
        for f in [
            "mechanism.id",
            "adapter",
            "disruptor.beta",
            "monitor",
            "actions.autonomous.nhi_required",
        ] {
            assert!(fields.iter().any(|x| x == f), "{f} missing from {fields:?}");
        }
        assert!(c.check().is_err());
    }

    #[test]
    fn csv_source_needs_a_path() {
        let mut c = ExperimentConfig::default();
        c.dataset.source = DatasetSource::Csv;
        assert_eq!(c.validate().unwrap_err()[0].field, "dataset.path");
    }
}
