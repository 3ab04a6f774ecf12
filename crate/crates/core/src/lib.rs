//! Core library for simulating a human-in-the-loop online learner under
//! disruption, watching its autonomous-decision ratio, and picking the next
//! action by trading recovery speed against carbon and human effort.
//!
//! The pieces compose as `simulator -> learner -> monitor -> mechanisms`,
//! driven by [`runner::Runner`].

pub mod error;
pub mod estimators;
pub mod learner;
pub mod mechanisms;
pub mod monitor;
pub mod runner;
pub mod simulator;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Which way the loop goes on a single instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Autonomous,
    Human,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Autonomous => "autonomous",
            Decision::Human => "human",
        }
    }

    /// Window mark: 1 for autonomous, 0 for human.
    pub fn mark(self) -> u8 {
        match self {
            Decision::Autonomous => 1,
            Decision::Human => 0,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "autonomous" => Ok(Decision::Autonomous),
            "human" => Ok(Decision::Human),
            other => Err(Error::InvalidInput(format!("unknown decision '{other}'"))),
        }
    }
}
