//! Smoothed per-action measures and human-budget arithmetic.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.3;

/// Exponentially smoothed estimate. The first observation seeds it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingState {
    pub estimate: f64,
    pub alpha: f64,
    pub initialized: bool,
}

impl SmoothingState {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidInput(format!(
                "smoothing alpha must be in [0,1], got {alpha}"
            )));
        }
        Ok(Self {
            estimate: 0.0,
            alpha,
            initialized: false,
        })
    }

    pub fn seeded(estimate: f64, alpha: f64) -> Result<Self> {
        let mut s = Self::new(alpha)?;
        s.estimate = estimate;
        s.initialized = true;
        Ok(s)
    }

    /// The current estimate, if any observation has been fed.
    pub fn value(&self) -> Option<f64> {
        self.initialized.then_some(self.estimate)
    }
}

pub fn smooth_update(state: SmoothingState, observed: f64) -> Result<SmoothingState> {
    if !observed.is_finite() || observed < 0.0 {
        return Err(Error::InvalidObservation(format!(
            "observations must be finite and non-negative, got {observed}"
        )));
    }
    let estimate = if state.initialized {
        state.estimate + state.alpha * (observed - state.estimate)
    } else {
        observed
    };
    Ok(SmoothingState {
        estimate,
        alpha: state.alpha,
        initialized: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HumanBudget {
    pub max_interactions: u32,
    pub used_interactions: u32,
}

impl HumanBudget {
    pub fn new(max_interactions: u32) -> Self {
        Self {
            max_interactions,
            used_interactions: 0,
        }
    }

    pub fn can_afford(&self, required: u32) -> bool {
        self.used_interactions as u64 + required as u64 <= self.max_interactions as u64
    }

    /// Spends `required` interactions. Refuses to overdraw.
    pub fn consume(&mut self, required: u32) -> Result<()> {
        if !self.can_afford(required) {
            return Err(Error::InvalidInput(format!(
                "human budget exhausted: {} of {} used, {} requested",
                self.used_interactions, self.max_interactions, required
            )));
        }
        self.used_interactions += required;
        Ok(())
    }

    pub fn left(&self) -> u32 {
        self.max_interactions - self.used_interactions
    }
}

/// Interactions left after taking an action that needs `required` of them,
/// clamped at zero.
pub fn remaining_budget(budget: &HumanBudget, required: u32) -> u32 {
    let left = budget.max_interactions as i64 - budget.used_interactions as i64 - required as i64;
    left.max(0) as u32
}

/// Sum-normalization. An all-zero input maps to the uniform vector.
pub fn normalize(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::InvalidInput("cannot normalize an empty list".into()));
    }
    if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::InvalidInput(format!(
            "normalize expects finite non-negative values, got {bad}"
        )));
    }
    let total: f64 = values.iter().sum();
    if total > 0.0 {
        Ok(values.iter().map(|v| v / total).collect())
    } else {
        let n = values.len() as f64;
        Ok(vec![1.0 / n; values.len()])
    }
}
