use super::features::ParameterVector;
use super::graph::{rank_answers, ProofGraph};
use super::space::{GroundingConfig, LocalGraph, NodeId, ProofSpace};
use crate::kb::FactIndex;
use crate::logic::{Goal, Program};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerConfig {
    pub max_iterations: usize,
    /// Stop once the L1 change between iterates drops below this.
    pub tolerance: f64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        PowerConfig {
            max_iterations: 1000,
            tolerance: 1e-12,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PowerResult {
    /// Every node expanded during the iteration, with its out-edges.
    pub graph: ProofGraph,
    /// Final iterate, indexed by graph node.
    pub mass: Vec<f64>,
    pub answers: Vec<(Goal, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `v ← v·W` from the root indicator, expanding nodes as they
/// receive mass. Returns the final iterate (indexed by graph id), the nodes
/// that were expanded, the iteration count and whether it converged.
pub fn power_iterate<G: LocalGraph>(
    g: &mut G,
    config: PowerConfig,
) -> (Vec<f64>, Vec<NodeId>, usize, bool) {
    let mut v = vec![0.0; 1];
    v[g.root()] = 1.0;
    let mut expanded = Vec::new();
    let mut seen = Vec::new();
    for it in 1..=config.max_iterations {
        let mut next = vec![0.0; v.len()];
        for u in 0..v.len() {
            let mass = v[u];
            if mass == 0.0 {
                continue;
            }
            if seen.len() <= u {
                seen.resize(u + 1, false);
            }
            if !seen[u] {
                seen[u] = true;
                expanded.push(u);
            }
            for t in g.transitions(u) {
                if next.len() <= t.dst {
                    next.resize(t.dst + 1, 0.0);
                }
                next[t.dst] += mass * t.prob;
            }
        }
        v.resize(next.len(), 0.0);
        let diff: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = next;
        if diff < config.tolerance {
            return (v, expanded, it, true);
        }
    }
    (v, expanded, config.max_iterations, false)
}

/// Answers a query by power iteration over the (lazily expanded) proof
/// graph. Answer probabilities are solution-node masses renormalized over
/// all solutions; an empty answer list means no solution received mass.
pub fn power_iteration_prove(
    query: &Goal,
    program: &Program,
    facts: &FactIndex,
    params: &ParameterVector,
    grounding: GroundingConfig,
    config: PowerConfig,
) -> PowerResult {
    let mut space = ProofSpace::new(query, program, facts, params, grounding);
    let (v, expanded, iterations, converged) = power_iterate(&mut space, config);
    if !converged {
        log::warn!("power iteration for {query} stopped after {iterations} iterations");
    }
    let (graph, map) = ProofGraph::from_space(&mut space, &expanded);
    let mut mass = vec![0.0; graph.node_count()];
    for (old, &new) in &map {
        mass[new] = v.get(*old).copied().unwrap_or(0.0);
    }
    let answers = rank_answers(
        graph
            .solutions
            .iter()
            .map(|&s| (graph.nodes[s].query.clone(), mass[s])),
    );
    if answers.is_empty() {
        log::warn!("no solutions reached for {query}");
    }
    PowerResult {
        graph,
        mass,
        answers,
        iterations,
        converged,
    }
}
