//! Fixtures shared by the benchmarks.

use proppr::grounder::{GroundingConfig, ParameterVector, Prover};
use proppr::learner::{ground_examples, GroundedExample};
use proppr::synth::{citation_task, CitationConfig, CitationTask};

/// The default synthetic citation-matching task.
pub fn citation() -> CitationTask {
    citation_task(CitationConfig::default())
}

/// Every example of `task` grounded under unit weights.
pub fn grounded(task: &CitationTask) -> Vec<GroundedExample> {
    ground_examples(
        &task.examples,
        &task.program,
        &task.facts,
        &ParameterVector::new(),
        GroundingConfig::default(),
        Prover::default(),
        1,
    )
    .grounded
}
