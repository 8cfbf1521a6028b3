#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use proppr::grounder::{LocalGraph, ProofNode, ProofSpace};
use rand::{Rng, SeedableRng};

/// The full proof graph reachable from the root, if it has at most `cap`
/// nodes: per node, its out-edges `(dst, prob)`.
pub struct Enumerated {
    pub nodes: Vec<ProofNode>,
    pub out: Vec<Vec<(usize, f64)>>,
}

pub fn enumerate(space: &mut ProofSpace<'_>, cap: usize) -> Option<Enumerated> {
    let mut out = Vec::new();
    let mut u = 0;
    while u < space.node_count() {
        if space.node_count() > cap {
            return None;
        }
        let ts: Vec<(usize, f64)> = space
            .transitions(u)
            .iter()
            .map(|t| (t.dst, t.prob))
            .collect();
        out.push(ts);
        u += 1;
    }
    if space.node_count() > cap {
        return None;
    }
    let nodes = (0..space.node_count())
        .map(|i| space.node(i).clone())
        .collect();
    Some(Enumerated { nodes, out })
}

/// Stationary distribution of the walk, from a dense linear solve of
/// `π(I − W) = 0, Σπ = 1`.
pub fn dense_stationary(g: &Enumerated) -> Vec<f64> {
    let n = g.out.len();
    let mut a = DMatrix::<f64>::identity(n, n);
    for (u, edges) in g.out.iter().enumerate() {
        for &(v, p) in edges {
            // row v of (I − W)ᵀ
            a[(v, u)] -= p;
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .expect("restart makes the chain irreducible on its support");
    x.iter().copied().collect()
}

pub fn by_node(g: &Enumerated, values: &[f64]) -> HashMap<ProofNode, f64> {
    g.nodes
        .iter()
        .cloned()
        .zip(values.iter().copied())
        .collect()
}

/// Cumulative-density helper: sum of `values` over nodes at each BFS depth.
pub fn mass_by_depth(g: &Enumerated, values: &[f64]) -> Vec<f64> {
    let n = g.out.len();
    let mut depth = vec![usize::MAX; n];
    depth[0] = 0;
    let mut queue = std::collections::VecDeque::from([0]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in &g.out[u] {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let max = depth
        .iter()
        .copied()
        .filter(|&d| d != usize::MAX)
        .max()
        .unwrap_or(0);
    let mut out = vec![0.0; max + 1];
    for u in 0..n {
        if depth[u] != usize::MAX {
            out[depth[u]] += values[u];
        }
    }
    out
}

/// Sums the probability of every relation-labelled walk, scanning the raw
/// fact list at each step.
pub fn enumerate_walks(
    rows: &[(String, String, String)],
    start: &str,
    steps: &[(String, bool)],
) -> HashMap<String, f64> {
    let mut out = HashMap::new();
    fn go(
        rows: &[(String, String, String)],
        at: &str,
        steps: &[(String, bool)],
        prob: f64,
        out: &mut HashMap<String, f64>,
    ) {
        let Some(((rel, inverse), rest)) = steps.split_first() else {
            *out.entry(at.to_string()).or_insert(0.0) += prob;
            return;
        };
        let mut next: Vec<&str> = rows
            .iter()
            .filter(|(r, _, _)| r == rel)
            .filter_map(|(_, a, b)| match inverse {
                false if a == at => Some(b.as_str()),
                true if b == at => Some(a.as_str()),
                _ => None,
            })
            .collect();
        next.sort();
        next.dedup();
        for n in &next {
            go(rows, n, rest, prob / next.len() as f64, out);
        }
    }
    go(rows, start, steps, 1.0, &mut out);
    out
}

/// A random KB over at most 50 entities and a random path with inverse steps.
pub fn random_pra_case(
    seed: u64,
) -> (
    Vec<(String, String, String)>,
    proppr::pra::RelationPath,
    String,
) {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=50);
    let density = rng.gen_range(0.02..0.2);
    let mut rows = Vec::new();
    for r in ["r0", "r1", "r2"] {
        for a in 0..n {
            for b in 0..n {
                if rng.gen_bool(density) {
                    rows.push((r.to_string(), format!("e{a}"), format!("e{b}")));
                }
            }
        }
        rows.push((
            r.to_string(),
            "e0".to_string(),
            format!("e{}", rng.gen_range(0..n)),
        ));
    }
    let len = rng.gen_range(1..=3);
    let steps: Vec<(String, bool)> = (0..len)
        .map(|_| (format!("r{}", rng.gen_range(0..3)), rng.gen_bool(0.3)))
        .collect();
    let refs: Vec<(&str, bool)> = steps.iter().map(|(r, i)| (r.as_str(), *i)).collect();
    (
        rows,
        proppr::pra::RelationPath::new("target", &refs),
        "e0".to_string(),
    )
}
