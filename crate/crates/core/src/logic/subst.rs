use std::fmt;

use super::term::{Goal, Term, VarId};

/// A normalized substitution: no variable is bound to itself and no binding
/// refers to another bound variable, so applying it once is enough.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: Vec<(VarId, Term)>,
}

impl Substitution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn get(&self, v: VarId) -> Option<Term> {
        self.bindings
            .iter()
            .find_map(|&(w, t)| (w == v).then_some(t))
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, Term)> + '_ {
        self.bindings.iter().copied()
    }

    pub fn resolve(&self, t: Term) -> Term {
        match t {
            Term::Var(v) => self.get(v).unwrap_or(t),
            c => c,
        }
    }

    /// Adds `v = t`, keeping the substitution normalized.
    ///
    /// `t` must already be resolved against `self` and `v` must be unbound.
    fn bind(&mut self, v: VarId, t: Term) {
        debug_assert!(self.get(v).is_none());
        if t == Term::Var(v) {
            return;
        }
        for (_, existing) in self.bindings.iter_mut() {
            if *existing == Term::Var(v) {
                *existing = t;
            }
        }
        self.bindings.push((v, t));
    }

    /// Builds a substitution from explicit pairs; pairs are unified in order
    /// so chains are normalized.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, Term)>) -> Option<Self> {
        let mut s = Substitution::new();
        for (v, t) in pairs {
            if !s.unify_terms(Term::Var(v), t) {
                return None;
            }
        }
        Some(s)
    }

    fn unify_terms(&mut self, a: Term, b: Term) -> bool {
        let a = self.resolve(a);
        let b = self.resolve(b);
        match (a, b) {
            _ if a == b => true,
            (Term::Var(v), t) | (t, Term::Var(v)) => {
                self.bind(v, t);
                true
            }
            (Term::Const(_), Term::Const(_)) => false,
        }
    }

    /// Extends this substitution so that it also unifies `a` and `b`.
    pub fn unify_goals(&mut self, a: &Goal, b: &Goal) -> bool {
        if a.functor != b.functor || a.args.len() != b.args.len() {
            return false;
        }
        a.args
            .iter()
            .zip(b.args.iter())
            .all(|(&x, &y)| self.unify_terms(x, y))
    }

    pub fn apply_term(&self, t: Term) -> Term {
        self.resolve(t)
    }

    pub fn apply(&self, g: &Goal) -> Goal {
        if self.is_empty() {
            return g.clone();
        }
        Goal {
            functor: g.functor,
            args: g.args.iter().map(|&t| self.resolve(t)).collect(),
        }
    }

    pub fn apply_all(&self, goals: &[Goal]) -> Vec<Goal> {
        goals.iter().map(|g| self.apply(g)).collect()
    }

    /// Composition `self` then `other`: applying the result equals applying
    /// `self` followed by `other`.
    pub fn compose(&self, other: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (v, t) in self.iter() {
            let t = other.resolve(t);
            if t != Term::Var(v) {
                out.bindings.push((v, t));
            }
        }
        for (v, t) in other.iter() {
            if self.get(v).is_none() {
                out.bindings.push((v, t));
            }
        }
        out
    }
}

/// Most general unifier of two atoms, or `None` when they do not unify.
pub fn mgu(a: &Goal, b: &Goal) -> Option<Substitution> {
    let mut s = Substitution::new();
    s.unify_goals(a, b).then_some(s)
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (v, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            match t {
                Term::Var(w) => write!(f, "_{}=_{}", v.0, w.0)?,
                Term::Const(c) => write!(f, "_{}={}", v.0, c)?,
            }
        }
        f.write_str("}")
    }
}
