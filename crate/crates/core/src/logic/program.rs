use std::collections::HashMap;
use std::fmt;
use std::sync::LazyLock;

use super::term::{Goal, PredicateKey, Term, VarId};
use crate::symbol::Sym;

/// An annotated definite clause `head :- body # features.`
///
/// Variables are numbered `0..var_names.len()` in order of first occurrence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clause {
    pub head: Goal,
    pub body: Vec<Goal>,
    pub features: Vec<Goal>,
    pub var_names: Vec<Sym>,
}

impl Clause {
    pub fn var_count(&self) -> u32 {
        self.var_names.len() as u32
    }

    pub fn is_unit(&self) -> bool {
        self.body.is_empty()
    }

    /// Shifts every variable by `offset`.
    pub fn shifted(&self, offset: u32) -> Clause {
        if offset == 0 {
            return self.clone();
        }
        let shift = |g: &Goal| Goal {
            functor: g.functor,
            args: g
                .args
                .iter()
                .map(|t| match *t {
                    Term::Var(v) => Term::Var(VarId(v.0 + offset)),
                    c => c,
                })
                .collect(),
        };
        static PLACEHOLDER: LazyLock<Sym> = LazyLock::new(|| Sym::intern("_"));
        let mut fresh = vec![*PLACEHOLDER; offset as usize];
        fresh.extend_from_slice(&self.var_names);
        Clause {
            head: shift(&self.head),
            body: self.body.iter().map(shift).collect(),
            features: self.features.iter().map(shift).collect(),
            var_names: fresh,
        }
    }

    /// True when the two clauses are equal up to a consistent renaming of
    /// variables.
    pub fn is_variant_of(&self, other: &Clause) -> bool {
        fn goals(c: &Clause) -> impl Iterator<Item = &Goal> {
            std::iter::once(&c.head)
                .chain(c.body.iter())
                .chain(c.features.iter())
        }
        if self.body.len() != other.body.len() || self.features.len() != other.features.len() {
            return false;
        }
        let mut fwd = HashMap::new();
        let mut bwd = HashMap::new();
        for (a, b) in goals(self).zip(goals(other)) {
            if a.functor != b.functor || a.args.len() != b.args.len() {
                return false;
            }
            for (&x, &y) in a.args.iter().zip(b.args.iter()) {
                match (x, y) {
                    (Term::Const(p), Term::Const(q)) if p == q => {}
                    (Term::Var(p), Term::Var(q)) => {
                        if *fwd.entry(p).or_insert(q) != q || *bwd.entry(q).or_insert(p) != p {
                            return false;
                        }
                    }
                    _ => return false,
                }
            }
        }
        true
    }
}

/// Standardizes a clause apart: every variable is replaced by a fresh one
/// drawn from `counter`.
pub fn rename_apart(clause: &Clause, counter: &mut u32) -> Clause {
    let renamed = clause.shifted(*counter);
    *counter += clause.var_count();
    renamed
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = &self.var_names;
        write!(f, "{}", self.head.display_with(names))?;
        if !self.body.is_empty() {
            f.write_str(" :- ")?;
            for (i, g) in self.body.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", g.display_with(names))?;
            }
        }
        if !self.features.is_empty() {
            f.write_str(" # ")?;
            for (i, g) in self.features.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{}", g.display_with(names))?;
            }
        }
        f.write_str(".")
    }
}

/// An ordered list of clauses indexed by head predicate.
#[derive(Clone, Debug, Default)]
pub struct Program {
    clauses: Vec<Clause>,
    index: HashMap<PredicateKey, Vec<usize>>,
}

impl Program {
    pub fn new(clauses: Vec<Clause>) -> Program {
        let mut index: HashMap<PredicateKey, Vec<usize>> = HashMap::new();
        for (i, c) in clauses.iter().enumerate() {
            index.entry(c.head.key()).or_default().push(i);
        }
        Program { clauses, index }
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Indices of clauses whose head has the given predicate, in file order.
    pub fn clauses_for(&self, key: PredicateKey) -> &[usize] {
        self.index.get(&key).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn defines(&self, key: PredicateKey) -> bool {
        self.index.contains_key(&key)
    }

    pub fn clause(&self, i: usize) -> &Clause {
        &self.clauses[i]
    }

    pub fn extend(&mut self, other: Program) {
        for c in other.clauses {
            self.index
                .entry(c.head.key())
                .or_default()
                .push(self.clauses.len());
            self.clauses.push(c);
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.clauses {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}
