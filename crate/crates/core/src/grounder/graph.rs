use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use super::features::FeatureVector;
use super::node::ProofNode;
use super::space::{NodeId, ProofSpace};
use crate::error::{Error, Result};
use crate::logic::{parse_goal, Goal};

#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub features: FeatureVector,
}

/// A grounded proof graph. Node 0 is the root; nodes are numbered in
/// breadth-first order from the root and edges are grouped by source.
#[derive(Clone, Debug)]
pub struct ProofGraph {
    pub nodes: Vec<ProofNode>,
    pub edges: Vec<GraphEdge>,
    pub solutions: Vec<NodeId>,
}

impl ProofGraph {
    /// Collects the out-edges of `expanded` nodes of `space` and renumbers
    /// breadth-first from the root. Returns the graph and the mapping from
    /// space ids to graph ids.
    pub fn from_space(
        space: &mut ProofSpace<'_>,
        expanded: &[NodeId],
    ) -> (ProofGraph, HashMap<NodeId, NodeId>) {
        let mut out: HashMap<NodeId, Vec<(NodeId, FeatureVector)>> = HashMap::new();
        for &u in expanded {
            if out.contains_key(&u) {
                continue;
            }
            let dsts: Vec<NodeId> = crate::grounder::LocalGraph::transitions(space, u)
                .iter()
                .map(|t| t.dst)
                .collect();
            let feats = space.edge_features(u).to_vec();
            out.insert(u, dsts.into_iter().zip(feats).collect());
        }
        let mut map: HashMap<NodeId, NodeId> = HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([0]);
        map.insert(0, 0);
        order.push(0);
        while let Some(u) = queue.pop_front() {
            for (v, _) in out.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                if !map.contains_key(v) {
                    map.insert(*v, order.len());
                    order.push(*v);
                    queue.push_back(*v);
                }
            }
        }
        let nodes: Vec<ProofNode> = order.iter().map(|&u| space.node(u).clone()).collect();
        let mut edges = Vec::new();
        for &u in &order {
            for (v, phi) in out.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                edges.push(GraphEdge {
                    src: map[&u],
                    dst: map[v],
                    features: phi.clone(),
                });
            }
        }
        let solutions = (0..nodes.len())
            .filter(|&i| nodes[i].is_solution())
            .collect();
        (
            ProofGraph {
                nodes,
                edges,
                solutions,
            },
            map,
        )
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Breadth-first distance of every node from the root.
    pub fn depths(&self) -> Vec<usize> {
        let mut depth = vec![usize::MAX; self.nodes.len()];
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            adj[e.src].push(e.dst);
        }
        depth[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        depth
    }

    pub fn to_ground(&self) -> GroundGraph {
        GroundGraph {
            node_count: self.nodes.len(),
            solutions: self
                .solutions
                .iter()
                .map(|&s| (s, self.nodes[s].query.clone()))
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| (e.src, e.dst, e.features.clone()))
                .collect(),
        }
    }
}

/// The variable-free form of a proof graph used for learning: node count,
/// root 0, solution nodes with their answers and feature-labelled edges.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundGraph {
    pub node_count: usize,
    pub solutions: Vec<(NodeId, Goal)>,
    pub edges: Vec<(NodeId, NodeId, FeatureVector)>,
}

/// Splits on `sep` outside parentheses and quotes.
fn split_top_level(s: &str, sep: char) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut quote, mut escaped, mut start) = (0i32, None::<char>, false, 0);
    for (i, c) in s.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' if s[..i].chars().last().is_none_or(|p| !p.is_alphanumeric()) => {
                quote = Some(c)
            }
            '(' => depth += 1,
            ')' => depth -= 1,
            c if c == sep && depth == 0 => {
                parts.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

pub(crate) fn parse_feature_list(text: &str, line: usize) -> Result<FeatureVector> {
    let bad = |message: String| Error::Format { line, message };
    let mut phi = FeatureVector::new();
    if text.trim().is_empty() {
        return Ok(phi);
    }
    for item in split_top_level(text, ',') {
        let (name, value) = item
            .rsplit_once(':')
            .ok_or_else(|| bad(format!("expected feature:value, got {item:?}")))?;
        let value: f64 = value
            .parse()
            .map_err(|e| bad(format!("bad feature value {value:?}: {e}")))?;
        let (f, _) = parse_goal(name).map_err(|e| bad(e.to_string()))?;
        phi.set(f, value);
    }
    Ok(phi)
}

impl GroundGraph {
    /// Writes the graph: a header `nodes TAB root TAB id=answer ...`, then
    /// one `src TAB dst TAB feat:val,...` line per edge.
    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "{}\t0", self.node_count)?;
        for (id, answer) in &self.solutions {
            write!(out, "\t{id}={answer}")?;
        }
        writeln!(out)?;
        for (s, d, phi) in &self.edges {
            writeln!(out, "{s}\t{d}\t{phi}")?;
        }
        Ok(())
    }

    /// Reads the format produced by [`GroundGraph::write`]. Lines starting
    /// with `#` are skipped.
    pub fn read<R: BufRead>(reader: R) -> Result<GroundGraph> {
        let mut header: Option<(usize, Vec<(NodeId, Goal)>)> = None;
        let mut edges = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if line.starts_with('#') || line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Format {
                line: lineno,
                message,
            };
            let fields: Vec<&str> = line.split('\t').collect();
            match header {
                None => {
                    let n: usize = fields[0]
                        .parse()
                        .map_err(|_| bad(format!("bad node count {:?}", fields[0])))?;
                    if fields.get(1) != Some(&"0") {
                        return Err(bad("root id must be 0".into()));
                    }
                    let mut sols = Vec::new();
                    for f in &fields[2..] {
                        let (id, lit) = f
                            .split_once('=')
                            .ok_or_else(|| bad(format!("expected id=answer, got {f:?}")))?;
                        let id: NodeId =
                            id.parse().map_err(|_| bad(format!("bad node id {id:?}")))?;
                        if id >= n {
                            return Err(bad(format!("solution id {id} out of range")));
                        }
                        let (g, _) = parse_goal(lit).map_err(|e| bad(e.to_string()))?;
                        sols.push((id, g));
                    }
                    header = Some((n, sols));
                }
                Some((n, _)) => {
                    if fields.len() < 2 || fields.len() > 3 {
                        return Err(bad("expected src TAB dst TAB features".into()));
                    }
                    let src: NodeId = fields[0].parse().map_err(|_| bad("bad source id".into()))?;
                    let dst: NodeId = fields[1].parse().map_err(|_| bad("bad target id".into()))?;
                    if src >= n || dst >= n {
                        return Err(bad(format!("edge {src}->{dst} out of range")));
                    }
                    let phi = parse_feature_list(fields.get(2).copied().unwrap_or(""), lineno)?;
                    edges.push((src, dst, phi));
                }
            }
        }
        let (node_count, solutions) = header.ok_or_else(|| Error::Format {
            line: 1,
            message: "missing header".into(),
        })?;
        Ok(GroundGraph {
            node_count,
            solutions,
            edges,
        })
    }
}

/// Sums mass per answer, renormalizes over positive-mass answers and sorts by
/// decreasing probability (ties by answer text).
pub fn rank_answers(masses: impl IntoIterator<Item = (Goal, f64)>) -> Vec<(Goal, f64)> {
    let mut total: HashMap<Goal, f64> = HashMap::new();
    for (g, m) in masses {
        if m > 0.0 {
            *total.entry(g).or_default() += m;
        }
    }
    let z: f64 = total.values().sum();
    let mut out: Vec<(String, Goal, f64)> = total
        .into_iter()
        .map(|(g, m)| (g.to_string(), g, m / z))
        .collect();
    out.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.0.cmp(&b.0)));
    out.into_iter().map(|(_, g, p)| (g, p)).collect()
}
