//! Lazily expanded proof graph.

use std::collections::HashMap;

use super::features::{
    feature, features_of_clause, restart_feature, transition_distribution, FeatureVector,
    ParameterVector, Weighting, DB_FEATURE, RESTART_FEATURE, SELF_LOOP_FEATURE,
};
use super::node::ProofNode;
use crate::kb::FactIndex;
use crate::logic::{Goal, Program, Substitution};

pub type NodeId = usize;

/// Grounding parameters shared by every prover.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GroundingConfig {
    /// Restart parameter used in the fact-restart feature.
    pub alpha: f64,
    pub weighting: Weighting,
}

impl Default for GroundingConfig {
    fn default() -> Self {
        GroundingConfig {
            alpha: 0.1,
            weighting: Weighting::Exp,
        }
    }
}

/// What produced an out-edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    /// Application of the program clause with this index.
    Clause(usize),
    Fact,
    SelfLoop,
    Restart,
}

/// Successors of a node before they are assigned ids.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub successors: Vec<(ProofNode, FeatureVector, EdgeKind)>,
    /// Features of the edge back to the root.
    pub restart: FeatureVector,
}

/// One SLD step from `node`: every clause and fact applicable to the leftmost
/// subgoal, in program/lexicographic order, plus the restart edge. Solution
/// nodes get a self-loop and the restart edge.
pub fn expand(node: &ProofNode, program: &Program, facts: &FactIndex, alpha: f64) -> Expansion {
    let Some((first, rest)) = node.subgoals.split_first() else {
        return Expansion {
            successors: vec![(
                node.clone(),
                FeatureVector::unit(feature(SELF_LOOP_FEATURE)),
                EdgeKind::SelfLoop,
            )],
            restart: FeatureVector::unit(feature(RESTART_FEATURE)),
        };
    };
    let mut successors = Vec::new();
    let offset = node.var_count();
    for &ci in program.clauses_for(first.key()) {
        let clause = program.clause(ci).shifted(offset);
        let mut theta = Substitution::new();
        if !theta.unify_goals(first, &clause.head) {
            continue;
        }
        let phi = match features_of_clause(&clause, ci + 1, &theta) {
            Ok(phi) => phi,
            Err(e) => {
                // parse-time checks make this unreachable for parsed programs
                log::error!("skipping clause {}: {e}", ci + 1);
                continue;
            }
        };
        let subgoals: Vec<Goal> = clause
            .body
            .iter()
            .chain(rest)
            .map(|g| theta.apply(g))
            .collect();
        let next = ProofNode::canonical(theta.apply(&node.query), subgoals);
        successors.push((next, phi, EdgeKind::Clause(ci)));
    }
    if facts.defines(first.key()) {
        for theta in facts.match_goal(first) {
            let subgoals = rest.iter().map(|g| theta.apply(g)).collect();
            let next = ProofNode::canonical(theta.apply(&node.query), subgoals);
            successors.push((
                next,
                FeatureVector::unit(feature(DB_FEATURE)),
                EdgeKind::Fact,
            ));
        }
    }
    Expansion {
        successors,
        restart: restart_feature(first, program, facts, alpha),
    }
}

/// An out-edge with its transition probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub dst: NodeId,
    pub prob: f64,
    pub restart: bool,
}

/// Graph interface used by the provers: a root and lazily computed
/// out-transitions (each node's probabilities sum to one).
pub trait LocalGraph {
    fn root(&self) -> NodeId;
    fn transitions(&mut self, u: NodeId) -> &[Transition];
    /// Whether `u` has been expanded already.
    fn is_expanded(&self, u: NodeId) -> bool;
}

struct Expanded {
    transitions: Vec<Transition>,
    features: Vec<FeatureVector>,
    kinds: Vec<EdgeKind>,
}

/// The proof graph of one query, expanded on demand and memoized.
pub struct ProofSpace<'a> {
    program: &'a Program,
    facts: &'a FactIndex,
    params: &'a ParameterVector,
    config: GroundingConfig,
    nodes: Vec<ProofNode>,
    ids: HashMap<ProofNode, NodeId>,
    out: Vec<Option<Expanded>>,
}

impl<'a> ProofSpace<'a> {
    pub fn new(
        query: &Goal,
        program: &'a Program,
        facts: &'a FactIndex,
        params: &'a ParameterVector,
        config: GroundingConfig,
    ) -> Self {
        let mut space = ProofSpace {
            program,
            facts,
            params,
            config,
            nodes: Vec::new(),
            ids: HashMap::new(),
            out: Vec::new(),
        };
        space.intern(ProofNode::root(query));
        space
    }

    fn intern(&mut self, node: ProofNode) -> NodeId {
        if let Some(&id) = self.ids.get(&node) {
            return id;
        }
        let id = self.nodes.len();
        self.ids.insert(node.clone(), id);
        self.nodes.push(node);
        self.out.push(None);
        id
    }

    pub fn node(&self, u: NodeId) -> &ProofNode {
        &self.nodes[u]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn config(&self) -> GroundingConfig {
        self.config
    }

    fn ensure(&mut self, u: NodeId) {
        if self.out[u].is_some() {
            return;
        }
        let exp = expand(&self.nodes[u], self.program, self.facts, self.config.alpha);
        let mut dsts = Vec::with_capacity(exp.successors.len() + 1);
        let mut features = Vec::with_capacity(exp.successors.len() + 1);
        let mut kinds = Vec::with_capacity(exp.successors.len() + 1);
        for (node, phi, kind) in exp.successors {
            dsts.push(self.intern(node));
            features.push(phi);
            kinds.push(kind);
        }
        dsts.push(0);
        features.push(exp.restart);
        kinds.push(EdgeKind::Restart);
        let probs = transition_distribution(&features, self.params, self.config.weighting);
        let transitions = dsts
            .into_iter()
            .zip(probs)
            .zip(&kinds)
            .map(|((dst, prob), kind)| Transition {
                dst,
                prob,
                restart: *kind == EdgeKind::Restart,
            })
            .collect();
        self.out[u] = Some(Expanded {
            transitions,
            features,
            kinds,
        });
    }

    /// Feature vectors of `u`'s out-edges, aligned with `transitions(u)`.
    pub fn edge_features(&mut self, u: NodeId) -> &[FeatureVector] {
        self.ensure(u);
        &self.out[u].as_ref().unwrap().features
    }

    pub fn edge_kinds(&mut self, u: NodeId) -> &[EdgeKind] {
        self.ensure(u);
        &self.out[u].as_ref().unwrap().kinds
    }

    /// Probability of the restart edge out of `u`.
    pub fn restart_probability(&mut self, u: NodeId) -> f64 {
        self.transitions(u)
            .iter()
            .filter(|t| t.restart)
            .map(|t| t.prob)
            .sum()
    }
}

impl LocalGraph for ProofSpace<'_> {
    fn root(&self) -> NodeId {
        0
    }

    fn transitions(&mut self, u: NodeId) -> &[Transition] {
        self.ensure(u);
        &self.out[u].as_ref().unwrap().transitions
    }

    fn is_expanded(&self, u: NodeId) -> bool {
        self.out[u].is_some()
    }
}
