//! Terms, substitutions, unification and the clause-file parser.

mod parser;
mod program;
mod subst;
mod term;

pub use parser::{parse_goal, parse_program};
pub use program::{rename_apart, Clause, Program};
pub use subst::{mgu, Substitution};
pub use term::{Args, Goal, PredicateKey, Term, VarId};
