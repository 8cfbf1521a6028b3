use std::fmt;
use std::str::FromStr;

use super::features::ParameterVector;
use super::graph::ProofGraph;
use super::nibble::{nibble_prove, NibbleConfig, NibbleStatus};
use super::power::{power_iteration_prove, PowerConfig};
use super::space::GroundingConfig;
use crate::error::{Error, Result};
use crate::kb::FactIndex;
use crate::logic::{Goal, Program};

/// Which inference procedure grounds a query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prover {
    Nibble(NibbleConfig),
    Power(PowerConfig),
}

impl Default for Prover {
    fn default() -> Self {
        Prover::Nibble(NibbleConfig::default())
    }
}

/// Prover name only; parameters are taken from the defaults.
impl FromStr for Prover {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nibble" => Ok(Prover::Nibble(NibbleConfig::default())),
            "power" => Ok(Prover::Power(PowerConfig::default())),
            other => Err(Error::InvalidParameter(format!(
                "unknown prover {other:?} (expected nibble or power)"
            ))),
        }
    }
}

impl fmt::Display for Prover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Prover::Nibble(_) => "nibble",
            Prover::Power(_) => "power",
        })
    }
}

/// A grounded query: its graph, the mass of each graph node and the ranked
/// answers.
#[derive(Clone, Debug)]
pub struct Grounding {
    pub graph: ProofGraph,
    pub mass: Vec<f64>,
    pub answers: Vec<(Goal, f64)>,
    /// False when nibble grounded nothing or power iteration hit its cap.
    pub complete: bool,
}

pub fn ground(
    query: &Goal,
    program: &Program,
    facts: &FactIndex,
    params: &ParameterVector,
    grounding: GroundingConfig,
    prover: Prover,
) -> Grounding {
    match prover {
        Prover::Nibble(c) => {
            let r = nibble_prove(query, program, facts, params, grounding, c);
            Grounding {
                graph: r.graph,
                mass: r.p,
                answers: r.answers,
                complete: r.status == NibbleStatus::Converged,
            }
        }
        Prover::Power(c) => {
            let r = power_iteration_prove(query, program, facts, params, grounding, c);
            Grounding {
                graph: r.graph,
                mass: r.mass,
                answers: r.answers,
                complete: r.converged,
            }
        }
    }
}
