//! The intervention loop: feed, estimate, decide, monitor, maybe override,
//! execute, observe, log.

mod config;
mod log;

pub use config::{
    ActionSpec, ActionsConfig, DatasetSource, DatasetSpec, DisruptorSpec, ExperimentConfig, FieldError,
    MechanismSpec, SmoothingConfig, UpdatePolicy,
};
pub use log::{log_to_string, read_log, read_log_from, write_log, write_log_to, DecisionRecord, LOG_HEADER};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs::File;

use crate::estimators::{remaining_budget, smooth_update, HumanBudget, SmoothingState};
use crate::learner::{decide, OnlineModel};
use crate::mechanisms::{ActionCandidate, Mechanism, MechanismKind, Rule, Selection};
use crate::monitor::{recovery_time, segment_states, should_intervene, AdrWindow, PhaseTimeline, RecoveryTimes};
use crate::simulator::{generate_cube_dataset, read_dataset_csv, Adapter, Disruptor, Feeder, RawRecord};
use crate::{Decision, Error, Result};

/// Independent random streams carved out of the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seeds {
    pub dataset: u64,
    pub shuffle: u64,
    pub mechanism: u64,
    pub observations: u64,
}

impl Seeds {
    pub fn derive(master: u64) -> Self {
        Self {
            dataset: splitmix(master, 1),
            shuffle: splitmix(master, 2),
            mechanism: splitmix(master, 3),
            observations: splitmix(master, 4),
        }
    }
}

fn splitmix(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One executed action's measured cost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub duration_s: f64,
    pub dcf_g: f64,
}

pub fn carbon_grams(power_w: f64, duration_s: f64, intensity_g_per_kwh: f64) -> f64 {
    power_w * duration_s / 3600.0 * intensity_g_per_kwh / 1000.0
}

/// Draws a duration from N(mean, sigma) kept strictly positive, and prices it.
pub fn observe_action<R: Rng + ?Sized>(spec: &ActionSpec, intensity_g_per_kwh: f64, rng: &mut R) -> Observation {
    let duration_s = match Normal::new(spec.mean_s, spec.sigma_s) {
        Ok(d) if spec.sigma_s > 0.0 => (0..64)
            .map(|_| d.sample(rng))
            .find(|v| *v > 0.0)
            .unwrap_or(spec.mean_s),
        _ => spec.mean_s,
    };
    Observation {
        duration_s,
        dcf_g: carbon_grams(spec.power_w, duration_s, intensity_g_per_kwh),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Totals {
    pub iterations: usize,
    pub human_interactions: u32,
    pub autonomous_actions: usize,
    pub overrides: usize,
    pub grams_co2: f64,
    pub model_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// False when the run was cut short.
    pub completed: bool,
    pub records: Vec<DecisionRecord>,
    pub observations: Vec<Observation>,
    pub timeline: PhaseTimeline,
    pub recovery: RecoveryTimes,
    pub totals: Totals,
}

impl ExperimentResult {
    pub fn adr_series(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.adr).collect()
    }
}

pub fn load_dataset(config: &ExperimentConfig, seeds: &Seeds) -> Result<Vec<RawRecord>> {
    match config.dataset.source {
        DatasetSource::Generate => generate_cube_dataset(&config.dataset.generator, seeds.dataset),
        DatasetSource::Csv => {
            let path = config
                .dataset
                .path
                .as_deref()
                .ok_or_else(|| Error::InvalidInput("dataset.path is required for csv".into()))?;
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            read_dataset_csv(std::io::BufReader::new(file))
        }
    }
}

/// Per-action running state, indexed by `slot`.
#[derive(Debug, Clone)]
struct ActionTrack {
    spec: ActionSpec,
    et: SmoothingState,
    ecf: SmoothingState,
}

fn slot(d: Decision) -> usize {
    match d {
        Decision::Autonomous => 0,
        Decision::Human => 1,
    }
}

/// A run that can be advanced one iteration at a time.
#[derive(Debug)]
pub struct Runner {
    config: ExperimentConfig,
    feeder: Feeder,
    model: OnlineModel,
    window: AdrWindow,
    mechanism: Mechanism,
    budget: HumanBudget,
    actions: [ActionTrack; 2],
    obs_rng: ChaCha8Rng,
    clock_s: f64,
    records: Vec<DecisionRecord>,
    observations: Vec<Observation>,
}

impl Runner {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.check()?;
        let seeds = Seeds::derive(config.seed);
        let data = load_dataset(&config, &seeds)?;
        let classes: BTreeSet<String> = data.iter().map(|r| r.true_label.clone()).collect();
        let adapter: Adapter = config.adapter.parse()?;
        let disruptor = Disruptor::from_id(&config.disruptor.id, config.disruptor.beta)?;
        let feeder = Feeder::new(
            data,
            adapter,
            disruptor,
            config.phase_split,
            seeds.shuffle,
            config.iterations,
        )?;
        let model = OnlineModel::new(feeder.input_dim(), config.learner)?.with_classes(classes);
        let kind: MechanismKind = config.mechanism.id.parse()?;
        let mechanism = Mechanism::new(
            kind,
            config.mechanism.weights,
            config.mechanism.game_params(),
            config.mechanism.seed.unwrap_or(seeds.mechanism),
        )?;
        let track = |spec: ActionSpec| -> Result<ActionTrack> {
            Ok(ActionTrack {
                spec,
                et: SmoothingState::new(config.smoothing.et_alpha)?,
                ecf: SmoothingState::new(config.smoothing.ecf_alpha)?,
            })
        };
        Ok(Self {
            window: AdrWindow::new(config.monitor.window_size)?,
            budget: HumanBudget::new(config.nhi_max),
            actions: [track(config.actions.autonomous)?, track(config.actions.human)?],
            obs_rng: ChaCha8Rng::seed_from_u64(seeds.observations),
            clock_s: 0.0,
            records: Vec::with_capacity(feeder.len()),
            observations: Vec::with_capacity(feeder.len()),
            feeder,
            model,
            mechanism,
            config,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn total(&self) -> usize {
        self.feeder.len()
    }

    pub fn progress(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[DecisionRecord] {
        &self.records
    }

    pub fn model(&self) -> &OnlineModel {
        &self.model
    }

    /// Smoothed estimates, or the nominal ones before any observation.
    fn candidate(&self, d: Decision) -> ActionCandidate {
        let t = &self.actions[slot(d)];
        let nominal = t.spec.mean_s;
        ActionCandidate {
            id: d,
            et_seconds: t.et.value().unwrap_or(nominal),
            ecf_grams: t.ecf.value().unwrap_or_else(|| {
                carbon_grams(t.spec.power_w, nominal, self.config.carbon_intensity_g_per_kwh)
            }),
            nhi_required: t.spec.nhi_required,
            nhi_remaining: remaining_budget(&self.budget, t.spec.nhi_required),
        }
    }

    /// Runs one iteration. `None` once the stream is exhausted.
    pub fn step(&mut self) -> Result<Option<&DecisionRecord>> {
        let Some(inst) = self.feeder.feed_next()? else {
            return Ok(None);
        };
        let payload = &inst.record.payload;
        let est = self.model.estimate(payload)?;
        let original = decide(est.epsilon, self.config.learner.min_prob);
        let adr = self.window.record(original);

        let intervene = should_intervene(adr, &self.config.monitor, inst.sequence);
        let mut sel = Selection {
            action: original,
            rule: Rule::None,
        };
        let mut intervened = false;
        if intervene {
            let candidates = [self.candidate(Decision::Autonomous), self.candidate(Decision::Human)];
            if let Some(outcome) = self.mechanism.recommend(&candidates, est.epsilon, original) {
                intervened = true;
                sel = match outcome {
                    Ok(s) => s,
                    Err(Error::NoFeasibleAction) => Selection {
                        action: Decision::Human,
                        rule: Rule::ForcedHuman,
                    },
                    Err(e) => return Err(e),
                };
            }
        }
        let human_cost = self.actions[slot(Decision::Human)].spec.nhi_required;
        if sel.action == Decision::Human && !self.budget.can_afford(human_cost) {
            sel = Selection {
                action: Decision::Autonomous,
                rule: Rule::BudgetExhausted,
            };
        }
        let overridden = intervened && sel.action != original;
        self.window.replace_last(sel.action);

        match sel.action {
            Decision::Human => {
                self.model.learn(payload, &inst.record.true_label)?;
                self.budget.consume(human_cost)?;
            }
            Decision::Autonomous => {
                if let (UpdatePolicy::Always, Some(label)) = (self.config.update_policy, &est.predicted) {
                    self.model.learn(payload, label)?;
                }
            }
        }

        let track = &mut self.actions[slot(sel.action)];
        let obs = observe_action(&track.spec, self.config.carbon_intensity_g_per_kwh, &mut self.obs_rng);
        track.et = smooth_update(track.et, obs.duration_s)?;
        track.ecf = smooth_update(track.ecf, obs.dcf_g)?;
        self.clock_s += obs.duration_s;

        self.records.push(DecisionRecord {
            timestamp_ms: (self.clock_s * 1000.0).round() as u64,
            iteration: inst.sequence,
            phase: inst.phase,
            true_label: inst.record.true_label,
            predicted_label: est.predicted,
            epsilon: est.epsilon,
            original_decision: original,
            final_action: sel.action,
            overridden,
            mechanism_rule: sel.rule,
            et_est_s: track.et.estimate,
            ecf_est_g: track.ecf.estimate,
            nhi_remaining: self.budget.left(),
            adr,
        });
        self.observations.push(obs);
        Ok(self.records.last())
    }

    /// Labels the states over whatever has run so far.
    pub fn finish(self) -> Result<ExperimentResult> {
        let n = self.records.len();
        let adr: Vec<f64> = self.records.iter().map(|r| r.adr).collect();
        let onset = self.feeder.disruption_onset().min(n);
        let fix = self.feeder.fix_event().min(n);
        let timeline = segment_states(
            &adr,
            self.config.monitor.adr_threshold,
            onset,
            fix,
            self.config.monitor.recovery_sustain,
        )?;
        let totals = Totals {
            iterations: n,
            human_interactions: self.budget.used_interactions,
            autonomous_actions: self
                .records
                .iter()
                .filter(|r| r.final_action == Decision::Autonomous)
                .count(),
            overrides: self.records.iter().filter(|r| r.overridden).count(),
            grams_co2: self.observations.iter().map(|o| o.dcf_g).sum(),
            model_seconds: self.observations.iter().map(|o| o.duration_s).sum(),
        };
        Ok(ExperimentResult {
            completed: n == self.feeder.len(),
            recovery: recovery_time(&timeline),
            timeline,
            totals,
            records: self.records,
            observations: self.observations,
            config: self.config,
        })
    }
}

pub fn run_experiment(config: ExperimentConfig) -> Result<ExperimentResult> {
    let mut runner = Runner::new(config)?;
    while runner.step()?.is_some() {}
    runner.finish()
}
