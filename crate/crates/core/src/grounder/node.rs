use std::collections::HashMap;
use std::fmt;

use crate::logic::{Goal, Term, VarId};

/// A proof state: the query as transformed so far and the remaining
/// subgoals. An empty subgoal list marks a solution.
///
/// Nodes are kept in canonical form (variables numbered `0..` by first
/// occurrence, query first), so structurally equivalent states are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProofNode {
    pub query: Goal,
    pub subgoals: Vec<Goal>,
}

impl ProofNode {
    /// The start state `(Q, Q)`.
    pub fn root(query: &Goal) -> ProofNode {
        ProofNode::canonical(query.clone(), vec![query.clone()])
    }

    pub fn canonical(query: Goal, subgoals: Vec<Goal>) -> ProofNode {
        let mut map: HashMap<VarId, VarId> = HashMap::new();
        let mut rename = |g: Goal| Goal {
            functor: g.functor,
            args: g
                .args
                .iter()
                .map(|t| match *t {
                    Term::Var(v) => {
                        let next = VarId(map.len() as u32);
                        Term::Var(*map.entry(v).or_insert(next))
                    }
                    c => c,
                })
                .collect(),
        };
        let query = rename(query);
        let subgoals = subgoals.into_iter().map(&mut rename).collect();
        ProofNode { query, subgoals }
    }

    pub fn is_solution(&self) -> bool {
        self.subgoals.is_empty()
    }

    /// Number of distinct variables (canonical form numbers them densely).
    pub fn var_count(&self) -> u32 {
        std::iter::once(&self.query)
            .chain(&self.subgoals)
            .map(Goal::var_bound)
            .max()
            .unwrap_or(0)
    }
}

impl fmt::Display for ProofNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} | ", self.query)?;
        if self.subgoals.is_empty() {
            return f.write_str("[]");
        }
        for (i, g) in self.subgoals.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{g}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_goal;

    #[test]
    fn equivalent_states_are_equal() {
        let (q, _) = parse_goal("about(a,Z)").unwrap();
        let renamed = Goal::new(q.functor, [q.args[0], Term::Var(VarId(9))]);
        assert_eq!(ProofNode::root(&q), ProofNode::root(&renamed));
        assert_eq!(ProofNode::root(&q).var_count(), 1);
        assert!(!ProofNode::root(&q).is_solution());
    }
}
