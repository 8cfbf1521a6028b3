//! Proof-graph construction and personalized PageRank inference.

mod features;
mod graph;
mod nibble;
mod node;
mod power;
mod prover;
mod space;

pub use features::{
    features_of_clause, restart_feature, transition_distribution, FeatureVector, ParameterVector,
    Weighting, DB_FEATURE, LINEAR_FLOOR, RESTART_FEATURE, SELF_LOOP_FEATURE,
};
pub use graph::{rank_answers, GroundGraph, ProofGraph};
pub use nibble::{
    nibble_prove, page_rank_nibble, push, AlphaPrime, NibbleConfig, NibbleOutcome, NibbleResult,
    NibbleStatus, PprState,
};
pub use node::ProofNode;
pub use power::{power_iterate, power_iteration_prove, PowerConfig, PowerResult};
pub use prover::{ground, Grounding, Prover};
pub use space::{
    expand, EdgeKind, Expansion, GroundingConfig, LocalGraph, NodeId, ProofSpace, Transition,
};
