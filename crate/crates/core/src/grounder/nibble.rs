//! Local push approximation of personalized PageRank that grounds the proof
//! graph as it goes.
//!
//! Each node's restart edge carries probability at least `α′`, so the chain
//! `W` splits as `α′·(teleport to root) + (1−α′)·M` and its stationary vector
//! is the PageRank of `M` with teleport `α′`. A push moves `α′·r[u]` into
//! `p[u]`, `(Pr(root|u) − α′)·r[u]` to the root and `Pr(v|u)·r[u]` to every
//! other successor, so `‖p‖₁ + ‖r‖₁` stays 1 and each push lowers `‖r‖₁` by
//! at least `α′·r[u] > α′·ε·|N(u)|`. Self-loops are resolved within the push. Pushing stops when every node has
//! `r[u]/|N(u)| ≤ ε`, which bounds the edges of the grounded graph by
//! `1/(α′ε)`.

use super::features::ParameterVector;
use super::graph::{rank_answers, ProofGraph};
use super::space::{GroundingConfig, LocalGraph, NodeId, ProofSpace};
use crate::kb::FactIndex;
use crate::logic::{Goal, Program};

/// Lower bound on the restart probability used by the push rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaPrime {
    Fixed(f64),
    /// Start at `start`; whenever a node about to be pushed has a smaller
    /// restart probability, lower the bound to it (never below `floor`) and
    /// rerun from scratch.
    Auto {
        start: f64,
        floor: f64,
    },
}

impl AlphaPrime {
    fn initial(self) -> f64 {
        match self {
            AlphaPrime::Fixed(a) => a,
            AlphaPrime::Auto { start, .. } => start,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NibbleConfig {
    pub alpha_prime: AlphaPrime,
    pub epsilon: f64,
}

impl Default for NibbleConfig {
    fn default() -> Self {
        NibbleConfig {
            alpha_prime: AlphaPrime::Auto {
                start: 0.1,
                floor: 1e-4,
            },
            epsilon: 1e-4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NibbleStatus {
    Converged,
    /// The root never met the push condition; nothing was grounded.
    EpsilonTooLarge,
}

impl std::fmt::Display for NibbleStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NibbleStatus::Converged => "ok",
            NibbleStatus::EpsilonTooLarge => "epsilon-too-large",
        })
    }
}

/// Approximation `p`, residual `r` and the set of pushed nodes, indexed by
/// graph node id. Vectors grow as new nodes are discovered.
#[derive(Clone, Debug, Default)]
pub struct PprState {
    pub p: Vec<f64>,
    pub r: Vec<f64>,
    /// Distinct pushed nodes in first-push order; their out-edges form Ĝ.
    pub pushed: Vec<NodeId>,
    is_pushed: Vec<bool>,
    pub pushes: usize,
    /// Sum of out-degrees over all pushes (with repetition).
    pub degree_sum: usize,
    /// Pushes at nodes whose restart probability was below `α′`.
    pub clamped: usize,
}

fn slot(v: &mut Vec<f64>, i: usize) -> &mut f64 {
    if v.len() <= i {
        v.resize(i + 1, 0.0);
    }
    &mut v[i]
}

impl PprState {
    pub fn new(root: NodeId) -> Self {
        let mut s = PprState::default();
        *slot(&mut s.r, root) = 1.0;
        s
    }

    pub fn p_at(&self, u: NodeId) -> f64 {
        self.p.get(u).copied().unwrap_or(0.0)
    }

    pub fn r_at(&self, u: NodeId) -> f64 {
        self.r.get(u).copied().unwrap_or(0.0)
    }

    /// `‖p‖₁ + ‖r‖₁`.
    pub fn total_mass(&self) -> f64 {
        self.p.iter().sum::<f64>() + self.r.iter().sum::<f64>()
    }

    /// Number of edges in the grounded graph.
    pub fn edge_count<G: LocalGraph>(&self, g: &mut G) -> usize {
        self.pushed.iter().map(|&u| g.transitions(u).len()).sum()
    }
}

/// Pushes the residual of `u`. When `Pr(root|u) < α′` the forward mass is
/// rescaled by `(1−α′)/(1−Pr(root|u))` so the update still conserves mass;
/// such pushes are counted in `state.clamped`. Mass that an edge would
/// return to `u` itself is pushed again at once: the geometric series of
/// repeated pushes is summed, so `r[u]` ends at zero.
pub fn push<G: LocalGraph>(g: &mut G, u: NodeId, alpha_prime: f64, state: &mut PprState) {
    let ru = state.r_at(u);
    debug_assert!(ru > 0.0);
    state.r[u] = 0.0;
    let root = g.root();
    let ts = g.transitions(u);
    let rho: f64 = ts.iter().filter(|t| t.restart).map(|t| t.prob).sum();
    let scale = if rho < alpha_prime {
        state.clamped += 1;
        log::debug!("restart probability {rho} below alpha' {alpha_prime} at node {u}");
        (1.0 - alpha_prime) / (1.0 - rho)
    } else {
        1.0
    };
    let share = |t: &super::space::Transition| {
        if t.restart {
            debug_assert_eq!(t.dst, root);
            (t.prob - alpha_prime).max(0.0)
        } else {
            t.prob * scale
        }
    };
    let looped: f64 = ts.iter().filter(|t| t.dst == u).map(share).sum();
    let total = ru / (1.0 - looped);
    *slot(&mut state.p, u) += alpha_prime * total;
    for t in ts.iter().filter(|t| t.dst != u) {
        *slot(&mut state.r, t.dst) += share(t) * total;
    }
    state.pushes += 1;
    state.degree_sum += ts.len();
    if state.is_pushed.len() <= u {
        state.is_pushed.resize(u + 1, false);
    }
    if !state.is_pushed[u] {
        state.is_pushed[u] = true;
        state.pushed.push(u);
    }
}

#[derive(Clone, Debug)]
pub struct NibbleOutcome {
    pub state: PprState,
    /// The `α′` the final run used.
    pub alpha_prime: f64,
    /// Reruns caused by lowering `α′`.
    pub restarts: usize,
    pub status: NibbleStatus,
}

/// Runs pushes from the root until `r[u]/|N(u)| ≤ ε` everywhere. Nodes are
/// visited depth-first, successors in clause order.
pub fn page_rank_nibble<G: LocalGraph>(g: &mut G, config: NibbleConfig) -> NibbleOutcome {
    let eps = config.epsilon;
    let root = g.root();
    let mut alpha_prime = config.alpha_prime.initial();
    let mut restarts = 0;
    'run: loop {
        let mut state = PprState::new(root);
        let mut queued = vec![false; 1];
        queued[root] = true;
        let mut stack = vec![root];
        while let Some(u) = stack.pop() {
            queued[u] = false;
            let degree = g.transitions(u).len();
            if state.r_at(u) / degree as f64 <= eps {
                continue;
            }
            if let AlphaPrime::Auto { floor, .. } = config.alpha_prime {
                let rho: f64 = g
                    .transitions(u)
                    .iter()
                    .filter(|t| t.restart)
                    .map(|t| t.prob)
                    .sum();
                let lowered = rho.max(floor);
                if lowered < alpha_prime {
                    alpha_prime = lowered;
                    restarts += 1;
                    continue 'run;
                }
            }
            push(g, u, alpha_prime, &mut state);
            let succ: Vec<NodeId> = g.transitions(u).iter().rev().map(|t| t.dst).collect();
            for v in succ {
                if queued.len() <= v {
                    queued.resize(v + 1, false);
                }
                if queued[v] {
                    continue;
                }
                let threshold = if g.is_expanded(v) {
                    eps * g.transitions(v).len() as f64
                } else {
                    eps
                };
                if state.r_at(v) > threshold {
                    queued[v] = true;
                    stack.push(v);
                }
            }
        }
        let status = if state.pushes == 0 {
            NibbleStatus::EpsilonTooLarge
        } else {
            NibbleStatus::Converged
        };
        return NibbleOutcome {
            state,
            alpha_prime,
            restarts,
            status,
        };
    }
}

#[derive(Clone, Debug)]
pub struct NibbleResult {
    /// The grounded graph Ĝ: out-edges of every pushed node.
    pub graph: ProofGraph,
    /// Approximate PageRank, indexed by graph node.
    pub p: Vec<f64>,
    pub answers: Vec<(Goal, f64)>,
    pub status: NibbleStatus,
    pub alpha_prime: f64,
    pub pushes: usize,
    pub degree_sum: usize,
    pub clamped: usize,
    pub restarts: usize,
}

/// Grounds and answers `query` with the push procedure.
pub fn nibble_prove(
    query: &Goal,
    program: &Program,
    facts: &FactIndex,
    params: &ParameterVector,
    grounding: GroundingConfig,
    config: NibbleConfig,
) -> NibbleResult {
    let mut space = ProofSpace::new(query, program, facts, params, grounding);
    let outcome = page_rank_nibble(&mut space, config);
    let state = &outcome.state;
    if state.clamped > 0 {
        log::warn!(
            "{query}: {} pushes at nodes with restart probability below alpha' = {}",
            state.clamped,
            outcome.alpha_prime
        );
    }
    let (graph, map) = ProofGraph::from_space(&mut space, &state.pushed);
    let mut p = vec![0.0; graph.node_count()];
    for (old, &new) in &map {
        p[new] = state.p_at(*old);
    }
    let answers = rank_answers(
        graph
            .solutions
            .iter()
            .map(|&s| (graph.nodes[s].query.clone(), p[s])),
    );
    NibbleResult {
        graph,
        p,
        answers,
        status: outcome.status,
        alpha_prime: outcome.alpha_prime,
        pushes: state.pushes,
        degree_sum: state.degree_sum,
        clamped: state.clamped,
        restarts: outcome.restarts,
    }
}
