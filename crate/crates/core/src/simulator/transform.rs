use std::str::FromStr;

use super::dataset::{RawRecord, FEATURE_DIM, HIST_BINS};
use crate::{Error, Result};

pub const ADAPTER_IDS: [&str; 2] = ["identity", "histogram-only"];
pub const DISRUPTOR_IDS: [&str; 1] = ["darken"];

/// Reshapes raw records into what the learner consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adapter {
    Identity,
    /// Drops the mean-RGB prefix and keeps the three histograms.
    HistogramOnly,
}

impl FromStr for Adapter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Adapter::Identity),
            "histogram-only" => Ok(Adapter::HistogramOnly),
            other => Err(Error::UnknownComponent {
                kind: "adapter",
                id: other.to_string(),
            }),
        }
    }
}

impl Adapter {
    pub fn id(self) -> &'static str {
        match self {
            Adapter::Identity => "identity",
            Adapter::HistogramOnly => "histogram-only",
        }
    }

    pub fn output_dim(self, input_dim: usize) -> Result<usize> {
        match self {
            Adapter::Identity => Ok(input_dim),
            Adapter::HistogramOnly if input_dim == FEATURE_DIM => Ok(FEATURE_DIM - 3),
            Adapter::HistogramOnly => Err(Error::InvalidInput(format!(
                "histogram-only adapter expects {FEATURE_DIM} features, got {input_dim}"
            ))),
        }
    }

    pub fn apply(self, record: &RawRecord) -> Result<RawRecord> {
        self.output_dim(record.payload.len())?;
        let payload = match self {
            Adapter::Identity => record.payload.clone(),
            Adapter::HistogramOnly => record.payload[3..].to_vec(),
        };
        Ok(RawRecord {
            id: record.id,
            payload,
            true_label: record.true_label.clone(),
        })
    }
}

/// Where the colour parts sit inside a payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureLayout {
    /// Mean RGB followed by three histograms.
    Full,
    /// Three histograms only.
    Histograms,
    /// Unknown shape: every component is treated as an intensity.
    Plain,
}

impl FeatureLayout {
    pub fn detect(len: usize) -> Self {
        match len {
            FEATURE_DIM => FeatureLayout::Full,
            n if n == 3 * HIST_BINS => FeatureLayout::Histograms,
            _ => FeatureLayout::Plain,
        }
    }
}

/// Lowers the light by `beta`.
///
/// Mean intensities are multiplied by `beta`. Histogram entries are pixel
/// fractions, so instead of shrinking they move: the mass of each bin lands in
/// the bin holding `beta` times its centre. Anything else is scaled. Results
/// are clamped to [0,1].
pub fn darken(payload: &[f64], beta: f64) -> Result<Vec<f64>> {
    check_beta(beta)?;
    let scale = |v: &f64| (v * beta).clamp(0.0, 1.0);
    let hist_start = match FeatureLayout::detect(payload.len()) {
        FeatureLayout::Plain => return Ok(payload.iter().map(scale).collect()),
        FeatureLayout::Full => 3,
        FeatureLayout::Histograms => 0,
    };
    let mut out: Vec<f64> = payload[..hist_start].iter().map(scale).collect();
    for hist in payload[hist_start..].chunks(HIST_BINS) {
        let mut moved = [0.0; HIST_BINS];
        for (k, mass) in hist.iter().enumerate() {
            let center = (k as f64 + 0.5) / HIST_BINS as f64;
            let to = ((center * beta * HIST_BINS as f64) as usize).min(HIST_BINS - 1);
            moved[to] += mass;
        }
        out.extend(moved.iter().map(|v| v.clamp(0.0, 1.0)));
    }
    Ok(out)
}

fn check_beta(beta: f64) -> Result<()> {
    if (0.0..=1.0).contains(&beta) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("beta must be in [0,1], got {beta}")))
    }
}

/// Corrupts payloads during the disrupted phase only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Disruptor {
    Darken { beta: f64 },
}

impl Disruptor {
    pub fn from_id(id: &str, beta: f64) -> Result<Self> {
        match id {
            "darken" => {
                check_beta(beta)?;
                Ok(Disruptor::Darken { beta })
            }
            other => Err(Error::UnknownComponent {
                kind: "disruptor",
                id: other.to_string(),
            }),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Disruptor::Darken { .. } => "darken",
        }
    }

    pub fn apply(&self, payload: &[f64]) -> Result<Vec<f64>> {
        match *self {
            Disruptor::Darken { beta } => darken(payload, beta),
        }
    }
}
