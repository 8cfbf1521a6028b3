//! Log loss of a grounded example and its gradient.
//!
//! `p` is obtained by `T` steps of `v ← v·W(w)` on the grounded graph,
//! starting from the root indicator; nodes without out-edges (the frontier
//! left by nibble) send their mass back to the root. The gradient is carried
//! forward alongside `v`, one column per feature.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::grounder::{GroundGraph, NodeId, ParameterVector, Weighting, LINEAR_FLOOR};
use crate::logic::Goal;

use super::examples::TrainingExample;
use super::Hyperparams;

/// Floor on probabilities inside logarithms.
pub const P_FLOOR: f64 = 1e-10;

/// A grounded graph together with the solution nodes of labelled answers.
#[derive(Clone, Debug)]
pub struct GroundedExample {
    pub query: Goal,
    pub graph: GroundGraph,
    pub positives: Vec<NodeId>,
    pub negatives: Vec<NodeId>,
    /// Labelled answers with no solution node in the graph.
    pub missing_positives: usize,
    pub missing_negatives: usize,
}

impl GroundedExample {
    pub fn new(example: &TrainingExample, graph: GroundGraph) -> Self {
        let by_answer: HashMap<&Goal, NodeId> =
            graph.solutions.iter().map(|(id, g)| (g, *id)).collect();
        let lookup = |answers: &[Goal]| {
            let found: Vec<NodeId> = answers
                .iter()
                .filter_map(|a| by_answer.get(a).copied())
                .collect();
            let missing = answers.len() - found.len();
            (found, missing)
        };
        let (positives, missing_positives) = lookup(&example.positives);
        let (negatives, missing_negatives) = lookup(&example.negatives);
        GroundedExample {
            query: example.query.clone(),
            positives,
            negatives,
            missing_positives,
            missing_negatives,
            graph,
        }
    }

    /// Distinct features on the graph's edges, in display order.
    pub fn features(&self) -> Vec<Goal> {
        let set: BTreeMap<String, Goal> = self
            .graph
            .edges
            .iter()
            .flat_map(|(_, _, phi)| phi.iter().map(|(f, _)| (f.to_string(), f.clone())))
            .collect();
        set.into_values().collect()
    }
}

struct Row {
    /// Local indices of the features appearing on this row.
    features: Vec<usize>,
    edges: Vec<(NodeId, Vec<(usize, f64)>)>,
}

/// A grounded example in index form, with features numbered locally.
pub(crate) struct Compiled {
    pub features: Vec<Goal>,
    n: usize,
    rows: Vec<Row>,
    positives: Vec<NodeId>,
    negatives: Vec<NodeId>,
    missing_positives: usize,
}

pub(crate) struct Evaluation {
    pub loss: f64,
    /// Indexed like `Compiled::features`; empty when not requested.
    pub gradient: Vec<f64>,
}

impl Compiled {
    pub fn new(ge: &GroundedExample) -> Self {
        let features = ge.features();
        let index: HashMap<&Goal, usize> =
            features.iter().enumerate().map(|(i, f)| (f, i)).collect();
        let n = ge.graph.node_count;
        let mut rows: Vec<Row> = (0..n)
            .map(|_| Row {
                features: Vec::new(),
                edges: Vec::new(),
            })
            .collect();
        for (src, dst, phi) in &ge.graph.edges {
            let local: Vec<(usize, f64)> = phi.iter().map(|(f, x)| (index[f], x)).collect();
            rows[*src].edges.push((*dst, local));
        }
        for row in &mut rows {
            let set: BTreeSet<usize> = row
                .edges
                .iter()
                .flat_map(|(_, phi)| phi.iter().map(|p| p.0))
                .collect();
            row.features = set.into_iter().collect();
        }
        Compiled {
            features,
            n,
            rows,
            positives: ge.positives.clone(),
            negatives: ge.negatives.clone(),
            missing_positives: ge.missing_positives,
        }
    }

    /// `v^T` and, when requested, `dv^T/dw` as an `n × F` row-major matrix.
    fn propagate(&self, w: &[f64], h: &Hyperparams, want_gradient: bool) -> (Vec<f64>, Vec<f64>) {
        let f = if want_gradient {
            self.features.len()
        } else {
            0
        };
        let n = self.n;
        // Per row: transition probabilities and their derivatives with
        // respect to the row's features.
        let mut probs: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut dprobs: Vec<Vec<Vec<f64>>> = Vec::with_capacity(n);
        for row in self.rows.iter() {
            let scores: Vec<f64> = row
                .edges
                .iter()
                .map(|(_, phi)| phi.iter().map(|&(j, x)| w[j] * x).sum())
                .collect();
            let k = row.features.len();
            let pos = |j: usize| row.features.binary_search(&j).unwrap();
            match h.weighting {
                Weighting::Exp => {
                    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let raw: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
                    let z: f64 = raw.iter().sum();
                    let p: Vec<f64> = raw.iter().map(|x| x / z).collect();
                    if want_gradient {
                        let mut mean = vec![0.0; k];
                        for ((_, phi), &pe) in row.edges.iter().zip(&p) {
                            for &(j, x) in phi {
                                mean[pos(j)] += pe * x;
                            }
                        }
                        let d = row
                            .edges
                            .iter()
                            .zip(&p)
                            .map(|((_, phi), &pe)| {
                                let mut dv: Vec<f64> = mean.iter().map(|m| -pe * m).collect();
                                for &(j, x) in phi {
                                    dv[pos(j)] += pe * x;
                                }
                                dv
                            })
                            .collect();
                        dprobs.push(d);
                    }
                    probs.push(p);
                }
                Weighting::Linear => {
                    let g: Vec<f64> = scores.iter().map(|&s| s.max(LINEAR_FLOOR)).collect();
                    let z: f64 = g.iter().sum();
                    let p: Vec<f64> = g.iter().map(|x| x / z).collect();
                    if want_gradient {
                        let dg: Vec<Vec<f64>> = row
                            .edges
                            .iter()
                            .zip(&scores)
                            .map(|((_, phi), &s)| {
                                let mut v = vec![0.0; k];
                                if s > LINEAR_FLOOR {
                                    for &(j, x) in phi {
                                        v[pos(j)] += x;
                                    }
                                }
                                v
                            })
                            .collect();
                        let mut dz = vec![0.0; k];
                        for v in &dg {
                            for (a, b) in dz.iter_mut().zip(v) {
                                *a += b;
                            }
                        }
                        let d = dg
                            .iter()
                            .zip(&p)
                            .map(|(v, &pe)| {
                                v.iter().zip(&dz).map(|(a, b)| (a - pe * b) / z).collect()
                            })
                            .collect();
                        dprobs.push(d);
                    }
                    probs.push(p);
                }
            }
        }

        let mut v = vec![0.0; n];
        v[0] = 1.0;
        let mut dv = vec![0.0; n * f];
        let mut nv = vec![0.0; n];
        let mut ndv = vec![0.0; n * f];
        for _ in 0..h.iterations {
            nv.iter_mut().for_each(|x| *x = 0.0);
            ndv.iter_mut().for_each(|x| *x = 0.0);
            for u in 0..n {
                let row = &self.rows[u];
                if row.edges.is_empty() {
                    nv[0] += v[u];
                    for j in 0..f {
                        ndv[j] += dv[u * f + j];
                    }
                    continue;
                }
                for (e, (dst, _)) in row.edges.iter().enumerate() {
                    let pe = probs[u][e];
                    nv[*dst] += v[u] * pe;
                    if f > 0 {
                        let (src_d, dst_d) = (u * f, dst * f);
                        for j in 0..f {
                            ndv[dst_d + j] += dv[src_d + j] * pe;
                        }
                        for (kk, &j) in row.features.iter().enumerate() {
                            ndv[dst_d + j] += v[u] * dprobs[u][e][kk];
                        }
                    }
                }
            }
            std::mem::swap(&mut v, &mut nv);
            std::mem::swap(&mut dv, &mut ndv);
        }
        (v, dv)
    }

    pub fn evaluate(&self, w: &[f64], h: &Hyperparams, want_gradient: bool) -> Evaluation {
        let f = if want_gradient {
            self.features.len()
        } else {
            0
        };
        let (v, dv) = self.propagate(w, h, want_gradient);

        let mut loss = self.missing_positives as f64 * -P_FLOOR.ln();
        let mut gradient = vec![0.0; f];
        for &u in &self.positives {
            let p = v[u];
            if p > P_FLOOR {
                loss -= p.ln();
                for j in 0..f {
                    gradient[j] -= dv[u * f + j] / p;
                }
            } else {
                loss -= P_FLOOR.ln();
            }
        }
        for &u in &self.negatives {
            let q = 1.0 - v[u];
            if q > P_FLOOR {
                loss -= q.ln();
                for j in 0..f {
                    gradient[j] += dv[u * f + j] / q;
                }
            } else {
                loss -= P_FLOOR.ln();
            }
        }
        for (j, &wj) in w.iter().enumerate() {
            loss += h.mu * wj * wj;
            if want_gradient {
                gradient[j] += 2.0 * h.mu * wj;
            }
        }
        Evaluation { loss, gradient }
    }

    pub fn weights_from(&self, w: &ParameterVector) -> Vec<f64> {
        self.features.iter().map(|f| w.get(f)).collect()
    }
}

/// Regularized log loss of one grounded example under `w`.
pub fn loss(ge: &GroundedExample, w: &ParameterVector, h: &Hyperparams) -> f64 {
    let c = Compiled::new(ge);
    c.evaluate(&c.weights_from(w), h, false).loss
}

/// Gradient of [`loss`] for every feature on the example's graph.
pub fn gradient(ge: &GroundedExample, w: &ParameterVector, h: &Hyperparams) -> Vec<(Goal, f64)> {
    let c = Compiled::new(ge);
    let e = c.evaluate(&c.weights_from(w), h, true);
    c.features.into_iter().zip(e.gradient).collect()
}

/// Probability mass `v^T` of every node, the quantity inside the loss.
pub fn node_masses(ge: &GroundedExample, w: &ParameterVector, h: &Hyperparams) -> Vec<f64> {
    let c = Compiled::new(ge);
    c.propagate(&c.weights_from(w), h, false).0
}
