//! A probabilistic logic engine that answers queries over small, query-local proof graphs.
//!
//! Programs are annotated definite clauses. A query is grounded into a small
//! proof graph whose edges carry feature vectors; answer probabilities come
//! from personalized PageRank over that graph, computed either by power
//! iteration or by a local push procedure whose graph size does not depend on
//! the size of the fact database. Edge-feature weights are learned by
//! (parallel) stochastic gradient descent on a log loss.

pub mod error;
pub mod eval;
pub mod grounder;
pub mod kb;
pub mod learner;
pub mod logic;
pub mod pra;
pub mod symbol;
pub mod synth;

pub use error::{Error, Result};
pub use eval::{auc_macro, auc_micro, auc_roc, mean_avg_precision, RankedAnswerList};
pub use grounder::{
    ground, nibble_prove, power_iteration_prove, GroundingConfig, NibbleConfig, ParameterVector,
    PowerConfig, ProofGraph, Prover, Weighting,
};
pub use kb::{load_facts, Fact, FactIndex};
pub use learner::{train, GroundedExample, Hyperparams, TrainingExample};
pub use logic::{parse_goal, parse_program, Clause, Goal, Program, Substitution, Term};
pub use pra::{path_walk, translate_paths, RelationPath};
pub use symbol::Sym;
