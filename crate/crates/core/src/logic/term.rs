use std::fmt;

use smallvec::SmallVec;

use crate::symbol::Sym;

/// Clause- or node-local variable number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

/// A function-free term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(VarId),
    Const(Sym),
}

impl Term {
    pub fn constant(name: &str) -> Term {
        Term::Const(Sym::intern(name))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    pub fn as_const(&self) -> Option<Sym> {
        match *self {
            Term::Const(c) => Some(c),
            Term::Var(_) => None,
        }
    }
}

pub type Args = SmallVec<[Term; 3]>;

/// An atom `functor(arg, ...)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Goal {
    pub functor: Sym,
    pub args: Args,
}

impl Goal {
    pub fn new(functor: Sym, args: impl IntoIterator<Item = Term>) -> Goal {
        Goal {
            functor,
            args: args.into_iter().collect(),
        }
    }

    /// Builds a ground goal from string constants.
    pub fn ground(functor: &str, args: &[&str]) -> Goal {
        Goal::new(Sym::intern(functor), args.iter().map(|a| Term::constant(a)))
    }

    pub fn atom(functor: &str) -> Goal {
        Goal::new(Sym::intern(functor), [])
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn key(&self) -> PredicateKey {
        PredicateKey {
            functor: self.functor,
            arity: self.args.len(),
        }
    }

    pub fn is_ground(&self) -> bool {
        self.args.iter().all(|t| !t.is_var())
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.args.iter().filter_map(|t| match t {
            Term::Var(v) => Some(*v),
            Term::Const(_) => None,
        })
    }

    /// Largest variable number + 1, or 0 for ground goals.
    pub fn var_bound(&self) -> u32 {
        self.vars().map(|v| v.0 + 1).max().unwrap_or(0)
    }

    /// Displays the goal with the given variable names (falls back to `_N`).
    pub fn display_with<'a>(&'a self, names: &'a [Sym]) -> GoalDisplay<'a> {
        GoalDisplay { goal: self, names }
    }

    /// Lexicographic comparison on the printed form.
    pub fn cmp_lexical(&self, other: &Goal) -> std::cmp::Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

/// Functor/arity pair identifying a predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PredicateKey {
    pub functor: Sym,
    pub arity: usize,
}

impl fmt::Display for PredicateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.functor, self.arity)
    }
}

/// True when `s` can be written without quotes as a constant or functor.
pub(crate) fn is_bare_constant(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() || c.is_ascii_digit() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
}

pub(crate) fn write_symbol(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if is_bare_constant(s) {
        f.write_str(s)
    } else {
        f.write_str("\"")?;
        for c in s.chars() {
            match c {
                '"' => f.write_str("\\\"")?,
                '\\' => f.write_str("\\\\")?,
                '\n' => f.write_str("\\n")?,
                '\t' => f.write_str("\\t")?,
                c => write!(f, "{c}")?,
            }
        }
        f.write_str("\"")
    }
}

pub struct GoalDisplay<'a> {
    goal: &'a Goal,
    names: &'a [Sym],
}

impl fmt::Display for GoalDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_symbol(f, self.goal.functor.as_str())?;
        if self.goal.args.is_empty() {
            return Ok(());
        }
        f.write_str("(")?;
        for (i, t) in self.goal.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match *t {
                Term::Const(c) => write_symbol(f, c.as_str())?,
                Term::Var(v) => match self.names.get(v.0 as usize) {
                    Some(name) => f.write_str(name.as_str())?,
                    None => write!(f, "_{}", v.0)?,
                },
            }
        }
        f.write_str(")")
    }
}

impl fmt::Display for Goal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.display_with(&[]).fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_quotes_when_needed() {
        let g = Goal::ground("hasWord", &["The Beatles", "w1"]);
        assert_eq!(g.to_string(), "hasWord(\"The Beatles\",w1)");
        assert_eq!(Goal::atom("db").to_string(), "db");
    }

    #[test]
    fn unnamed_variables_print_with_underscore() {
        let g = Goal::new(Sym::intern("p"), [Term::Var(VarId(3)), Term::constant("a")]);
        assert_eq!(g.to_string(), "p(_3,a)");
        assert_eq!(g.var_bound(), 4);
    }
}
