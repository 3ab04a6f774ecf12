use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{check_epsilon, wsm_select, ActionCandidate, Rule, Selection, WsmWeights};
use crate::{Decision, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    #[default]
    Deterministic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameParams {
    pub alpha_match: f64,
    pub alpha_mismatch: f64,
    pub selection: SelectionMode,
}

impl Default for GameParams {
    fn default() -> Self {
        Self {
            alpha_match: 2.0,
            alpha_mismatch: 1.0,
            selection: SelectionMode::Deterministic,
        }
    }
}

impl GameParams {
    pub fn validate(&self) -> Result<()> {
        check_alphas(self.alpha_match, self.alpha_mismatch)
    }
}

fn check_alphas(alpha_match: f64, alpha_mismatch: f64) -> Result<()> {
    if alpha_mismatch > 0.0 && alpha_match > alpha_mismatch && alpha_match.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "need alpha_match > alpha_mismatch > 0, got {alpha_match} and {alpha_mismatch}"
        )))
    }
}

/// Rows are the resilience player's action, columns the greenness player's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix2x2 {
    pub actions: [Decision; 2],
    pub r_payoffs: [[f64; 2]; 2],
    pub g_payoffs: [[f64; 2]; 2],
    pub alpha_match: f64,
    pub alpha_mismatch: f64,
}

/// `q` is the probability the resilience player picks the first action,
/// `p` the probability the greenness player does.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedEquilibrium {
    pub p: f64,
    pub q: f64,
}

pub fn build_payoff_matrix(
    candidates: &[ActionCandidate],
    epsilon: f64,
    alpha_match: f64,
    alpha_mismatch: f64,
) -> Result<PayoffMatrix2x2> {
    check_epsilon(epsilon)?;
    check_alphas(alpha_match, alpha_mismatch)?;
    let [a, b] = candidates else {
        return Err(Error::InvalidInput(format!(
            "the game needs exactly two candidates, got {}",
            candidates.len()
        )));
    };
    if let Some(c) = [a, b].into_iter().find(|c| c.nhi_remaining == 0) {
        return Err(Error::InvalidInput(format!(
            "action '{}' has no remaining human budget and cannot enter the game",
            c.id
        )));
    }
    let pair = [a, b];
    let alpha = |i: usize, j: usize| if i == j { alpha_match } else { alpha_mismatch };
    let mut r = [[0.0; 2]; 2];
    let mut g = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = epsilon * alpha(i, j) / pair[i].et();
            g[i][j] = (1.0 - epsilon) * alpha(i, j) / (pair[j].nhi_remaining as f64 * pair[j].ecf());
        }
    }
    Ok(PayoffMatrix2x2 {
        actions: [a.id, b.id],
        r_payoffs: r,
        g_payoffs: g,
        alpha_match,
        alpha_mismatch,
    })
}

/// Pure equilibria under weak best response, as (row, column) pairs.
pub fn find_psne(m: &PayoffMatrix2x2) -> Vec<(usize, usize)> {
    let (r, g) = (&m.r_payoffs, &m.g_payoffs);
    let mut out = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            if r[i][j] >= r[1 - i][j] && g[i][j] >= g[i][1 - j] {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn find_msne(m: &PayoffMatrix2x2) -> Option<MixedEquilibrium> {
    let (r, g) = (&m.r_payoffs, &m.g_payoffs);
    // p leaves the row player indifferent, q the column player.
    let dp = r[0][0] - r[0][1] - r[1][0] + r[1][1];
    let dq = g[0][0] - g[1][0] - g[0][1] + g[1][1];
    if dp == 0.0 || dq == 0.0 {
        return None;
    }
    let p = (r[1][1] - r[0][1]) / dp;
    let q = (g[1][1] - g[1][0]) / dq;
    let unit = |x: f64| x.is_finite() && (0.0..=1.0).contains(&x);
    (unit(p) && unit(q)).then_some(MixedEquilibrium { p, q })
}

/// Resolves the game to one action.
///
/// Order: infeasible actions are dropped; the pure equilibrium with the
/// largest joint payoff wins; else the mixed equilibrium; else the weighted
/// sum. A mismatched pure equilibrium has no single action and resolves to
/// `ai_choice`.
pub fn game_select<R: Rng + ?Sized>(
    candidates: &[ActionCandidate],
    epsilon: f64,
    params: &GameParams,
    weights: &WsmWeights,
    ai_choice: Decision,
    rng: &mut R,
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
    let fallback = |feasible: &[ActionCandidate]| {
        wsm_select(feasible, epsilon, weights, ai_choice).map(|s| Selection {
            rule: Rule::WsmFallback,
            ..s
        })
    };
    let Ok(m) = build_payoff_matrix(&feasible, epsilon, params.alpha_match, params.alpha_mismatch) else {
        return fallback(&feasible);
    };

    match resolve_matrix(&m, params.selection, ai_choice, rng) {
        Some(sel) => Ok(sel),
        None => fallback(&feasible),
    }
}

/// Equilibrium part of the selection chain. `None` means neither a pure nor a
/// usable mixed equilibrium exists.
pub fn resolve_matrix<R: Rng + ?Sized>(
    m: &PayoffMatrix2x2,
    mode: SelectionMode,
    ai_choice: Decision,
    rng: &mut R,
) -> Option<Selection> {
    let pure = find_psne(m);
    if !pure.is_empty() {
        let joint = |&(i, j): &(usize, usize)| m.r_payoffs[i][j] + m.g_payoffs[i][j];
        let best = pure.iter().map(joint).fold(f64::NEG_INFINITY, f64::max);
        let picks: Vec<Decision> = pure
            .iter()
            .filter(|e| joint(e) == best)
            .map(|&(i, j)| if i == j { m.actions[i] } else { ai_choice })
            .collect();
        let action = if picks.contains(&ai_choice) { ai_choice } else { picks[0] };
        return Some(Selection {
            action,
            rule: Rule::Psne,
        });
    }

    let MixedEquilibrium { p, q } = find_msne(m)?;
    let action = match mode {
        SelectionMode::Deterministic => {
            let (first, second) = (p + q, 2.0 - p - q);
            if first > second {
                m.actions[0]
            } else if second > first {
                m.actions[1]
            } else {
                ai_choice
            }
        }
        SelectionMode::Stochastic => {
            if rng.random::<f64>() < (p + q) / 2.0 {
                m.actions[0]
            } else {
                m.actions[1]
            }
        }
    };
    Some(Selection {
        action,
        rule: Rule::Msne,
    })
}
