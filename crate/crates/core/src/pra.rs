//! Path-constrained random walks over binary facts and their translation
//! into clause programs.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::kb::{Fact, FactIndex, FactIndexBuilder};
use crate::logic::{parse_program, Goal, PredicateKey, Program, Term, VarId};
use crate::symbol::Sym;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub relation: Sym,
    /// Walk from the second argument to the first.
    pub inverse: bool,
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            f.write_str("^")?;
        }
        write!(f, "{}", self.relation)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RelationPath {
    pub target: Sym,
    pub steps: Vec<Step>,
}

impl RelationPath {
    pub fn new(target: &str, steps: &[(&str, bool)]) -> Self {
        RelationPath {
            target: Sym::intern(target),
            steps: steps
                .iter()
                .map(|&(r, inverse)| Step {
                    relation: Sym::intern(r),
                    inverse,
                })
                .collect(),
        }
    }
}

impl fmt::Display for RelationPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

/// Walk mass per entity. Sums to at most one.
pub type PathDistribution = HashMap<Sym, f64>;

/// Weighted paths grouped by target predicate, each list in file order.
pub type PathSet = BTreeMap<String, Vec<(RelationPath, f64)>>;

fn relation_key(r: Sym) -> PredicateKey {
    PredicateKey {
        functor: r,
        arity: 2,
    }
}

/// Distinct entities reached from `e` by one step, in lexicographic order.
fn successors(idx: &FactIndex, e: Sym, step: Step) -> Vec<Sym> {
    let (probe, out) = if step.inverse { (1, 0) } else { (0, 1) };
    let mut args = [Term::Var(VarId(0)), Term::Var(VarId(1))];
    args[probe] = Term::Const(e);
    let goal = Goal::new(step.relation, args);
    let mut next: Vec<Sym> = idx.matching_rows(&goal).map(|row| row[out]).collect();
    next.sort_by(|a, b| a.cmp_str(*b));
    next.dedup();
    next
}

fn check_path(idx: &FactIndex, path: &RelationPath) -> Result<()> {
    for s in &path.steps {
        if !idx.defines(relation_key(s.relation)) {
            return Err(Error::UnknownRelation(format!("{}/2", s.relation)));
        }
    }
    Ok(())
}

/// Distribution of a walk from `s` that follows `path`, choosing uniformly
/// among the distinct successors at each step. Mass at entities without a
/// successor is dropped.
pub fn path_walk(idx: &FactIndex, s: Sym, path: &RelationPath) -> Result<PathDistribution> {
    if !idx.contains_entity(s) {
        return Err(Error::UnknownEntity(s.to_string()));
    }
    check_path(idx, path)?;
    let mut h: PathDistribution = HashMap::from([(s, 1.0)]);
    for &step in &path.steps {
        let mut next: PathDistribution = HashMap::new();
        let mut current: Vec<(Sym, f64)> = h.into_iter().collect();
        current.sort_by(|a, b| a.0.cmp_str(b.0));
        for (e, mass) in current {
            let succ = successors(idx, e, step);
            if succ.is_empty() {
                continue;
            }
            let share = mass / succ.len() as f64;
            for v in succ {
                *next.entry(v).or_insert(0.0) += share;
            }
        }
        h = next;
    }
    Ok(h)
}

/// `Σᵢ wᵢ·h_{s,Pᵢ}`. Entities reached by no path are absent; zero-weight
/// paths contribute nothing.
pub fn score_entities(
    idx: &FactIndex,
    s: Sym,
    paths: &[(RelationPath, f64)],
) -> Result<HashMap<Sym, f64>> {
    let mut out: HashMap<Sym, f64> = HashMap::new();
    for (path, w) in paths {
        if *w == 0.0 {
            continue;
        }
        for (e, m) in path_walk(idx, s, path)? {
            *out.entry(e).or_insert(0.0) += w * m;
        }
    }
    Ok(out)
}

/// Entities by decreasing score, ties by name.
pub fn rank_entities(scores: &HashMap<Sym, f64>) -> Vec<(Sym, f64)> {
    let mut v: Vec<(Sym, f64)> = scores.iter().map(|(&e, &x)| (e, x)).collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp_str(b.0)));
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TranslationMode {
    NonRecursive,
    Recursive,
}

impl std::str::FromStr for TranslationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nonrecursive" | "non-recursive" => Ok(TranslationMode::NonRecursive),
            "recursive" => Ok(TranslationMode::Recursive),
            other => Err(Error::InvalidParameter(format!(
                "unknown translation mode {other:?} (expected nonrecursive or recursive)"
            ))),
        }
    }
}

fn capitalized(name: &str) -> String {
    let mut c = name.chars();
    match c.next() {
        Some(first) => first.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Name of the fact view of relation `r`: `factR`, or `factRInverse` for
/// the transposed relation.
pub fn fact_predicate(r: &str, inverse: bool) -> String {
    let mut s = format!("fact{}", capitalized(r));
    if inverse {
        s.push_str("Inverse");
    }
    s
}

fn path_variable(i: usize, len: usize) -> String {
    match i {
        0 => "S".to_string(),
        _ if i == len => "T".to_string(),
        _ => format!("X{i}"),
    }
}

/// Writes the clauses for the top `k` paths (by weight) of every target.
///
/// Non-recursive mode calls only fact views. Recursive mode adds the base
/// clause `p(S,T) :- factP(S,T)` for every target and calls targets directly
/// instead of their fact views, giving mutually recursive rules.
pub fn translate_paths(paths: &PathSet, mode: TranslationMode, k: usize) -> Result<Program> {
    if k == 0 {
        return Err(Error::InvalidParameter("top-k must be positive".into()));
    }
    let targets: std::collections::HashSet<&str> = paths.keys().map(String::as_str).collect();
    let mut text = String::new();
    for (pred, list) in paths {
        if mode == TranslationMode::Recursive {
            text.push_str(&format!(
                "{pred}(S,T) :- {}(S,T) # base_{pred}.\n",
                fact_predicate(pred, false)
            ));
        }
        let mut ranked: Vec<&(RelationPath, f64)> = list.iter().collect();
        ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
        for (rank, (path, _)) in ranked.into_iter().take(k).enumerate() {
            let len = path.steps.len();
            if len == 0 {
                continue;
            }
            let body: Vec<String> = path
                .steps
                .iter()
                .enumerate()
                .map(|(i, step)| {
                    let (a, b) = (path_variable(i, len), path_variable(i + 1, len));
                    let r = step.relation.as_str();
                    if mode == TranslationMode::Recursive && targets.contains(r) {
                        if step.inverse {
                            format!("{r}({b},{a})")
                        } else {
                            format!("{r}({a},{b})")
                        }
                    } else {
                        format!("{}({a},{b})", fact_predicate(r, step.inverse))
                    }
                })
                .collect();
            text.push_str(&format!(
                "{pred}(S,T) :- {} # path_{pred}_{}.\n",
                body.join(", "),
                rank + 1
            ));
        }
    }
    parse_program(&text)
}

/// Reads `predicate TAB r1,^r2,... TAB weight` lines; `^` marks an inverse
/// step. Blank lines and `#` comments are skipped.
pub fn read_paths<R: BufRead>(reader: R) -> Result<PathSet> {
    let mut out = PathSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = t.split('\t').map(str::trim).collect();
        let bad = |message: String| Error::Format {
            line: lineno,
            message,
        };
        if fields.len() != 3 {
            return Err(bad(format!(
                "expected 3 tab-separated fields, found {}",
                fields.len()
            )));
        }
        let weight: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad weight {:?}", fields[2])))?;
        if !weight.is_finite() {
            return Err(bad(format!("weight {weight} is not finite")));
        }
        let mut steps = Vec::new();
        for s in fields[1]
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
        {
            let (inverse, name) = match s.strip_prefix('^') {
                Some(rest) => (true, rest),
                None => (false, s),
            };
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(bad(format!("bad relation {s:?}")));
            }
            steps.push(Step {
                relation: Sym::intern(name),
                inverse,
            });
        }
        out.entry(fields[0].to_string()).or_default().push((
            RelationPath {
                target: Sym::intern(fields[0]),
                steps,
            },
            weight,
        ));
    }
    Ok(out)
}

pub fn write_paths<W: Write>(paths: &PathSet, mut out: W) -> std::io::Result<()> {
    for (pred, list) in paths {
        for (p, w) in list {
            writeln!(out, "{pred}\t{p}\t{w}")?;
        }
    }
    Ok(())
}

/// Adds `factR` and `factRInverse` copies of every binary relation, the
/// predicates translated programs read from.
pub fn with_fact_views(idx: &FactIndex) -> FactIndex {
    let mut b = FactIndexBuilder::new();
    for f in idx.facts() {
        if f.args.len() == 2 {
            let r = f.functor.as_str();
            let (x, y) = (f.args[0].as_str(), f.args[1].as_str());
            b.add(Fact::new(&fact_predicate(r, false), &[x, y]))
                .and_then(|_| b.add(Fact::new(&fact_predicate(r, true), &[y, x])))
                .expect("fact views are binary");
        }
        b.add(f).expect("arity already consistent");
    }
    b.build()
}
