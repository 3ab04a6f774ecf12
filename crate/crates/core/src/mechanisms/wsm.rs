use serde::{Deserialize, Serialize};

use super::{check_epsilon, ActionCandidate, Rule, Selection};
use crate::estimators::normalize;
use crate::{Decision, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WsmWeights {
    pub w_resilience: f64,
    pub w_greenness: f64,
}

impl Default for WsmWeights {
    fn default() -> Self {
        Self {
            w_resilience: 0.5,
            w_greenness: 0.5,
        }
    }
}

impl WsmWeights {
    pub fn validate(&self) -> Result<()> {
        let ok = self.w_resilience >= 0.0
            && self.w_greenness >= 0.0
            && self.w_resilience + self.w_greenness > 0.0
            && (self.w_resilience + self.w_greenness).is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "weights must be non-negative with a positive sum, got ({}, {})",
                self.w_resilience, self.w_greenness
            )))
        }
    }
}

/// Scores every candidate against the others.
///
/// `S(a) = wR·ε·N(1/ET) + wG·(1−ε)·(N(NHI_remaining) + N(1/ECF))`, with each
/// `N` a sum-normalization over `candidates`.
pub fn wsm_scores(candidates: &[ActionCandidate], epsilon: f64, weights: &WsmWeights) -> Result<Vec<f64>> {
    check_epsilon(epsilon)?;
    weights.validate()?;
    let inv_et: Vec<f64> = candidates.iter().map(|c| 1.0 / c.et()).collect();
    let inv_ecf: Vec<f64> = candidates.iter().map(|c| 1.0 / c.ecf()).collect();
    let nhi: Vec<f64> = candidates.iter().map(|c| c.nhi_remaining as f64).collect();
    let (n_et, n_ecf, n_nhi) = (normalize(&inv_et)?, normalize(&inv_ecf)?, normalize(&nhi)?);
    Ok((0..candidates.len())
        .map(|i| {
            weights.w_resilience * epsilon * n_et[i]
                + weights.w_greenness * (1.0 - epsilon) * (n_nhi[i] + n_ecf[i])
        })
        .collect())
}

pub fn wsm_score(
    index: usize,
    candidates: &[ActionCandidate],
    epsilon: f64,
    weights: &WsmWeights,
) -> Result<f64> {
    if index >= candidates.len() {
        return Err(Error::InvalidInput(format!(
            "candidate index {index} out of range for {} candidates",
            candidates.len()
        )));
    }
    Ok(wsm_scores(candidates, epsilon, weights)?[index])
}

/// Highest-scoring feasible candidate. Exact ties go to `ai_choice`.
pub fn wsm_select(
    candidates: &[ActionCandidate],
    epsilon: f64,
    weights: &WsmWeights,
    ai_choice: Decision,
) -> Result<Selection> {
    check_epsilon(epsilon)?;
    let feasible: Vec<ActionCandidate> = candidates.iter().copied().filter(|c| c.is_feasible()).collect();
    match feasible.len() {
        0 => return Err(Error::NoFeasibleAction),
        1 => {
            return Ok(Selection {
                action: feasible[0].id,
                rule: Rule::SingleFeasible,
            })
        }
        _ => {}
    }
    let scores = wsm_scores(&feasible, epsilon, weights)?;
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<Decision> = feasible
        .iter()
        .zip(&scores)
        .filter(|(_, s)| **s == best)
        .map(|(c, _)| c.id)
        .collect();
    let action = if tied.contains(&ai_choice) { ai_choice } else { tied[0] };
    Ok(Selection {
        action,
        rule: Rule::Wsm,
    })
}
