use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::RawRecord;
use super::transform::{Adapter, Disruptor};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Steady,
    Disrupted,
    Fixed,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Steady => "steady",
            Phase::Disrupted => "disrupted",
            Phase::Fixed => "fixed",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "steady" => Ok(Phase::Steady),
            "disrupted" => Ok(Phase::Disrupted),
            "fixed" => Ok(Phase::Fixed),
            other => Err(Error::InvalidInput(format!("unknown phase '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSplit {
    pub steady_fraction: f64,
    pub disrupted_fraction: f64,
    pub fixed_fraction: f64,
}

impl Default for PhaseSplit {
    fn default() -> Self {
        Self {
            steady_fraction: 1.0 / 3.0,
            disrupted_fraction: 1.0 / 3.0,
            fixed_fraction: 1.0 / 3.0,
        }
    }
}

impl PhaseSplit {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.steady_fraction, self.disrupted_fraction, self.fixed_fraction];
        if parts.iter().any(|f| f.is_nan() || *f < 0.0) {
            return Err(Error::InvalidInput("phase fractions must be non-negative".into()));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!(
                "phase fractions must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }

    /// `(disruption onset, fix event)` for a stream of `n` items. Each of the
    /// first two phases gets the floor of its share; the rest goes last.
    pub fn boundaries(&self, n: usize) -> (usize, usize) {
        // the slack absorbs 1/3-style representation error before flooring
        let share = |f: f64| ((n as f64 * f) + 1e-9).floor() as usize;
        let steady = share(self.steady_fraction).min(n);
        let disrupted = share(self.disrupted_fraction).min(n - steady);
        (steady, steady + disrupted)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamInstance {
    pub sequence: usize,
    pub phase: Phase,
    pub record: RawRecord,
}

/// Emits records in a seeded order with the phase applied.
#[derive(Debug, Clone)]
pub struct Feeder {
    records: Vec<RawRecord>,
    order: Vec<usize>,
    adapter: Adapter,
    disruptor: Disruptor,
    onset: usize,
    fix: usize,
    next: usize,
}

impl Feeder {
    /// `iterations` truncates the stream, or extends it with fresh reshuffled
    /// passes when larger than the dataset.
    pub fn new(
        records: Vec<RawRecord>,
        adapter: Adapter,
        disruptor: Disruptor,
        split: PhaseSplit,
        shuffle_seed: u64,
        iterations: Option<usize>,
    ) -> Result<Self> {
        split.validate()?;
        if records.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        let dim = records[0].payload.len();
        if let Some(r) = records.iter().find(|r| r.payload.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "record {} has {} features, expected {dim}",
                r.id,
                r.payload.len()
            )));
        }
        adapter.output_dim(dim)?;
        let total = iterations.unwrap_or(records.len());
        let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
        let mut order = Vec::with_capacity(total);
        while order.len() < total {
            let mut pass: Vec<usize> = (0..records.len()).collect();
            pass.shuffle(&mut rng);
            order.extend(pass);
        }
        order.truncate(total);
        let (onset, fix) = split.boundaries(total);
        Ok(Self {
            records,
            order,
            adapter,
            disruptor,
            onset,
            fix,
            next: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn disruption_onset(&self) -> usize {
        self.onset
    }

    pub fn fix_event(&self) -> usize {
        self.fix
    }

    pub fn input_dim(&self) -> usize {
        self.adapter
            .output_dim(self.records[0].payload.len())
            .expect("checked in new")
    }

    pub fn phase_of(&self, sequence: usize) -> Phase {
        if sequence < self.onset {
            Phase::Steady
        } else if sequence < self.fix {
            Phase::Disrupted
        } else {
            Phase::Fixed
        }
    }

    pub fn feed_next(&mut self) -> Result<Option<StreamInstance>> {
        let Some(&idx) = self.order.get(self.next) else {
            return Ok(None);
        };
        let sequence = self.next;
        self.next += 1;
        let phase = self.phase_of(sequence);
        let mut record = self.adapter.apply(&self.records[idx])?;
        if phase == Phase::Disrupted {
            record.payload = self.disruptor.apply(&record.payload)?;
        }
        Ok(Some(StreamInstance {
            sequence,
            phase,
            record,
        }))
    }
}
