//! Recovery-action selection: a weighted-sum scorer and a 2x2 coordination
//! game between a resilience player and a greenness player.

mod game;
mod wsm;

pub use game::{
    build_payoff_matrix, find_msne, find_psne, game_select, GameParams, MixedEquilibrium,
    resolve_matrix, PayoffMatrix2x2, SelectionMode,
};
pub use wsm::{wsm_score, wsm_scores, wsm_select, WsmWeights};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::{Decision, Error, Result};

pub const MECHANISM_IDS: [&str; 3] = ["wsm", "game", "none"];

/// Lower bound applied to ET and ECF before they are inverted.
pub const MEASURE_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActionCandidate {
    pub id: Decision,
    pub et_seconds: f64,
    pub ecf_grams: f64,
    pub nhi_required: u32,
    pub nhi_remaining: u32,
}

impl ActionCandidate {
    /// An action that needs people is off the table once nobody is left.
    pub fn is_feasible(&self) -> bool {
        !(self.nhi_required > 0 && self.nhi_remaining == 0)
    }

    pub(crate) fn et(&self) -> f64 {
        self.et_seconds.max(MEASURE_FLOOR)
    }

    pub(crate) fn ecf(&self) -> f64 {
        self.ecf_grams.max(MEASURE_FLOOR)
    }
}

/// Which branch of a mechanism produced the final action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    None,
    Wsm,
    Psne,
    Msne,
    WsmFallback,
    SingleFeasible,
    BudgetExhausted,
    ForcedHuman,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::None => "none",
            Rule::Wsm => "wsm",
            Rule::Psne => "psne",
            Rule::Msne => "msne",
            Rule::WsmFallback => "wsm-fallback",
            Rule::SingleFeasible => "single-feasible",
            Rule::BudgetExhausted => "budget-exhausted",
            Rule::ForcedHuman => "forced-human",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Rule::None,
            Rule::Wsm,
            Rule::Psne,
            Rule::Msne,
            Rule::WsmFallback,
            Rule::SingleFeasible,
            Rule::BudgetExhausted,
            Rule::ForcedHuman,
        ]
        .into_iter()
        .find(|r| r.as_str() == s)
        .ok_or_else(|| Error::InvalidInput(format!("unknown mechanism rule '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Selection {
    pub action: Decision,
    pub rule: Rule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MechanismKind {
    Wsm,
    Game,
    None,
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wsm" => Ok(MechanismKind::Wsm),
            "game" => Ok(MechanismKind::Game),
            "none" => Ok(MechanismKind::None),
            other => Err(Error::UnknownComponent {
                kind: "mechanism",
                id: other.to_string(),
            }),
        }
    }
}

/// A configured mechanism together with its own random stream.
#[derive(Debug, Clone)]
pub struct Mechanism {
    kind: MechanismKind,
    weights: WsmWeights,
    game: GameParams,
    rng: ChaCha8Rng,
}

impl Mechanism {
    pub fn new(kind: MechanismKind, weights: WsmWeights, game: GameParams, seed: u64) -> Result<Self> {
        weights.validate()?;
        game.validate()?;
        Ok(Self {
            kind,
            weights,
            game,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn kind(&self) -> MechanismKind {
        self.kind
    }

    /// `None` for the pass-through mechanism, which never intervenes.
    pub fn recommend(
        &mut self,
        candidates: &[ActionCandidate],
        epsilon: f64,
        ai_choice: Decision,
    ) -> Option<Result<Selection>> {
        match self.kind {
            MechanismKind::None => None,
            MechanismKind::Wsm => Some(wsm_select(candidates, epsilon, &self.weights, ai_choice)),
            MechanismKind::Game => Some(game_select(
                candidates,
                epsilon,
                &self.game,
                &self.weights,
                ai_choice,
                &mut self.rng,
            )),
        }
    }
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if (0.0..=1.0).contains(&epsilon) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "epsilon must be in [0,1], got {epsilon}"
        )))
    }
}
