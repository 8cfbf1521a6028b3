//! Ground fact storage.
//!
//! Facts are kept per predicate, sorted lexicographically by their argument
//! strings, with one posting list per argument position. Strings are interned.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::logic::{Goal, PredicateKey, Substitution, Term};
use crate::symbol::Sym;

pub type Row = SmallVec<[Sym; 2]>;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fact {
    pub functor: Sym,
    pub args: Row,
}

impl Fact {
    pub fn new(functor: &str, args: &[&str]) -> Fact {
        Fact {
            functor: Sym::intern(functor),
            args: args.iter().map(|a| Sym::intern(a)).collect(),
        }
    }

    pub fn to_goal(&self) -> Goal {
        Goal::new(self.functor, self.args.iter().map(|&a| Term::Const(a)))
    }

    pub fn from_goal(g: &Goal) -> Option<Fact> {
        Some(Fact {
            functor: g.functor,
            args: g.args.iter().map(|t| t.as_const()).collect::<Option<_>>()?,
        })
    }
}

fn cmp_rows(a: &[Sym], b: &[Sym]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.cmp_str(*y) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

#[derive(Clone, Debug, Default)]
struct Table {
    rows: Vec<Row>,
    by_arg: Vec<HashMap<Sym, Vec<u32>>>,
}

impl Table {
    fn build(mut rows: Vec<Row>, arity: usize) -> Table {
        rows.sort_by(|a, b| cmp_rows(a, b));
        let mut by_arg = vec![HashMap::<Sym, Vec<u32>>::new(); arity];
        for (i, row) in rows.iter().enumerate() {
            for (pos, &s) in row.iter().enumerate() {
                by_arg[pos].entry(s).or_default().push(i as u32);
            }
        }
        Table { rows, by_arg }
    }

    /// Row indices consistent with the goal, in table (lexicographic) order.
    fn candidates<'a>(&'a self, goal: &'a Goal) -> impl Iterator<Item = &'a Row> + 'a {
        let mut best: Option<&Vec<u32>> = None;
        let mut empty = false;
        for (pos, t) in goal.args.iter().enumerate() {
            if let Term::Const(c) = t {
                match self.by_arg[pos].get(c) {
                    None => empty = true,
                    Some(list) if best.is_none_or(|b| list.len() < b.len()) => best = Some(list),
                    Some(_) => {}
                }
            }
        }
        let ids: Box<dyn Iterator<Item = usize> + 'a> = match (empty, best) {
            (true, _) => Box::new(std::iter::empty()),
            (false, Some(list)) => Box::new(list.iter().map(|&i| i as usize)),
            (false, None) => Box::new(0..self.rows.len()),
        };
        ids.map(move |i| &self.rows[i])
            .filter(move |row| row_matches(goal, row))
    }
}

fn row_matches(goal: &Goal, row: &[Sym]) -> bool {
    for (i, t) in goal.args.iter().enumerate() {
        match *t {
            Term::Const(c) if c != row[i] => return false,
            Term::Var(v) => {
                // repeated variables must agree with their first occurrence
                if let Some(j) = goal.args[..i].iter().position(|&u| u == Term::Var(v)) {
                    if row[j] != row[i] {
                        return false;
                    }
                }
            }
            _ => {}
        }
    }
    true
}

/// Indexed ground facts.
#[derive(Clone, Debug, Default)]
pub struct FactIndex {
    tables: HashMap<PredicateKey, Table>,
    entities: Vec<Sym>,
    entity_set: HashSet<Sym>,
    fact_count: usize,
    duplicates: usize,
}

/// Accumulates facts, collapsing duplicates and checking arity per functor.
#[derive(Default)]
pub struct FactIndexBuilder {
    rows: HashMap<PredicateKey, HashSet<Row>>,
    arities: HashMap<Sym, usize>,
    order: Vec<PredicateKey>,
    duplicates: usize,
}

impl FactIndexBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a fact; `line` is only used for error messages.
    pub fn add_at(&mut self, fact: Fact, line: usize) -> Result<()> {
        let arity = fact.args.len();
        match self.arities.get(&fact.functor) {
            Some(&expected) if expected != arity => {
                return Err(Error::ArityMismatch {
                    line,
                    functor: fact.functor.to_string(),
                    expected,
                    found: arity,
                })
            }
            Some(_) => {}
            None => {
                self.arities.insert(fact.functor, arity);
            }
        }
        let key = PredicateKey {
            functor: fact.functor,
            arity,
        };
        let set = self.rows.entry(key).or_insert_with(|| {
            self.order.push(key);
            HashSet::new()
        });
        if !set.insert(fact.args) {
            self.duplicates += 1;
        }
        Ok(())
    }

    pub fn add(&mut self, fact: Fact) -> Result<()> {
        self.add_at(fact, 0)
    }

    pub fn build(self) -> FactIndex {
        let mut tables = HashMap::new();
        let mut entity_set = HashSet::new();
        let mut fact_count = 0;
        for (key, rows) in self.rows {
            fact_count += rows.len();
            for row in &rows {
                entity_set.extend(row.iter().copied());
            }
            tables.insert(key, Table::build(rows.into_iter().collect(), key.arity));
        }
        let mut entities: Vec<Sym> = entity_set.iter().copied().collect();
        entities.sort_by(|a, b| a.cmp_str(*b));
        FactIndex {
            tables,
            entities,
            entity_set,
            fact_count,
            duplicates: self.duplicates,
        }
    }
}

impl FactIndex {
    pub fn from_facts(facts: impl IntoIterator<Item = Fact>) -> Result<FactIndex> {
        let mut b = FactIndexBuilder::new();
        for (i, f) in facts.into_iter().enumerate() {
            b.add_at(f, i + 1)?;
        }
        Ok(b.build())
    }

    pub fn len(&self) -> usize {
        self.fact_count
    }

    pub fn is_empty(&self) -> bool {
        self.fact_count == 0
    }

    /// Number of duplicate facts collapsed while loading.
    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    /// All entities, sorted by name.
    pub fn entities(&self) -> &[Sym] {
        &self.entities
    }

    pub fn contains_entity(&self, e: Sym) -> bool {
        self.entity_set.contains(&e)
    }

    pub fn defines(&self, key: PredicateKey) -> bool {
        self.tables.contains_key(&key)
    }

    /// Predicates present, sorted by name then arity.
    pub fn predicates(&self) -> Vec<PredicateKey> {
        let mut keys: Vec<_> = self.tables.keys().copied().collect();
        keys.sort_by(|a, b| a.functor.cmp_str(b.functor).then(a.arity.cmp(&b.arity)));
        keys
    }

    /// Rows of one predicate in lexicographic order.
    pub fn rows(&self, key: PredicateKey) -> &[Row] {
        self.tables
            .get(&key)
            .map(|t| t.rows.as_slice())
            .unwrap_or(&[])
    }

    /// All facts, grouped by predicate (sorted) and lexicographic within.
    pub fn facts(&self) -> impl Iterator<Item = Fact> + '_ {
        self.predicates().into_iter().flat_map(move |key| {
            self.rows(key).iter().map(move |row| Fact {
                functor: key.functor,
                args: row.clone(),
            })
        })
    }

    /// Fact rows unifying with `goal`, in lexicographic order.
    pub fn matching_rows<'a>(&'a self, goal: &'a Goal) -> impl Iterator<Item = &'a Row> + 'a {
        self.tables
            .get(&goal.key())
            .into_iter()
            .flat_map(move |t| t.candidates(goal))
    }

    /// One substitution per fact unifying with `goal`. The order is
    /// lexicographic in the constants bound to the goal's variables.
    pub fn match_goal(&self, goal: &Goal) -> Vec<Substitution> {
        self.matching_rows(goal)
            .map(|row| {
                Substitution::from_pairs(goal.args.iter().zip(row.iter()).filter_map(|(t, &c)| {
                    match *t {
                        Term::Var(v) => Some((v, Term::Const(c))),
                        Term::Const(_) => None,
                    }
                }))
                .expect("matching row is consistent with the goal")
            })
            .collect()
    }

    /// Number of facts unifying with `goal`; equals `match_goal(goal).len()`.
    pub fn binding_count(&self, goal: &Goal) -> usize {
        self.matching_rows(goal).count()
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for f in self.facts() {
            write!(out, "{}", f.functor)?;
            for a in &f.args {
                write!(out, "\t{a}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Keeps only facts whose arguments all lie in `keep`.
    pub fn project(&self, keep: &HashSet<Sym>) -> FactIndex {
        let mut b = FactIndexBuilder::new();
        for f in self.facts() {
            if f.args.iter().all(|a| keep.contains(a)) {
                b.add(f).expect("arity already consistent");
            }
        }
        b.build()
    }
}

/// Loads tab-separated facts: `functor TAB arg1 [TAB arg2 ...]` per line.
/// Blank lines and lines starting with `#` are skipped.
pub fn load_facts<R: BufRead>(reader: R) -> Result<FactIndex> {
    let mut b = FactIndexBuilder::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let functor = fields.next().unwrap_or_default();
        if functor.is_empty() {
            return Err(Error::Format {
                line: i + 1,
                message: "empty functor".into(),
            });
        }
        let fact = Fact {
            functor: Sym::intern(functor),
            args: fields.map(Sym::intern).collect(),
        };
        b.add_at(fact, i + 1)?;
    }
    if b.duplicates > 0 {
        log::info!("collapsed {} duplicate fact lines", b.duplicates);
    }
    Ok(b.build())
}

/// Untyped random walk with restart over the entity graph: every binary fact
/// is an undirected edge, parallel edges count with multiplicity.
pub fn entity_proximity(idx: &FactIndex, seed: Sym, alpha: f64) -> Result<Vec<(Sym, f64)>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "restart must be in (0,1), got {alpha}"
        )));
    }
    if !idx.contains_entity(seed) {
        return Err(Error::UnknownEntity(seed.to_string()));
    }
    let ents = idx.entities();
    let pos: HashMap<Sym, usize> = ents.iter().enumerate().map(|(i, &e)| (e, i)).collect();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); ents.len()];
    for key in idx.predicates().into_iter().filter(|k| k.arity == 2) {
        for row in idx.rows(key) {
            let (a, b) = (pos[&row[0]], pos[&row[1]]);
            adj[a].push(b);
            if a != b {
                adj[b].push(a);
            }
        }
    }
    let s = pos[&seed];
    let mut x = vec![0.0; ents.len()];
    x[s] = 1.0;
    for _ in 0..10_000 {
        let mut next = vec![0.0; ents.len()];
        next[s] += alpha;
        let mut dangling = 0.0;
        for (u, &mass) in x.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            if adj[u].is_empty() {
                dangling += mass;
                continue;
            }
            let share = (1.0 - alpha) * mass / adj[u].len() as f64;
            for &v in &adj[u] {
                next[v] += share;
            }
        }
        next[s] += (1.0 - alpha) * dangling;
        let diff: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if diff < 1e-13 {
            break;
        }
    }
    Ok(ents.iter().copied().zip(x).collect())
}

/// Projects the KB onto the `m` entities closest to `seed` under an untyped
/// random walk with restart. The seed always ranks first; other ties are
/// broken by entity name.
pub fn kb_subset(idx: &FactIndex, seed: Sym, m: usize, alpha: f64) -> Result<FactIndex> {
    if m == 0 {
        return Err(Error::InvalidParameter(
            "subset size must be positive".into(),
        ));
    }
    let mut scored = entity_proximity(idx, seed, alpha)?;
    scored.sort_by(|a, b| {
        (b.0 == seed)
            .cmp(&(a.0 == seed))
            .then(b.1.total_cmp(&a.1))
            .then_with(|| a.0.cmp_str(b.0))
    });
    let keep: HashSet<Sym> = scored.iter().take(m).map(|&(e, _)| e).collect();
    Ok(idx.project(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::parse_goal;

    fn kb(text: &str) -> FactIndex {
        load_facts(text.as_bytes()).unwrap()
    }

    #[test]
    fn loads_and_collapses_duplicates() {
        let idx = kb("links\ta\tb\nlinks\ta\tb\n\nlinks\tb\tc\n");
        assert_eq!(idx.len(), 2);
        assert_eq!(idx.duplicates(), 1);
        assert_eq!(
            idx.facts().next().unwrap().to_goal().to_string(),
            "links(a,b)"
        );
    }

    #[test]
    fn arity_mismatch_names_line() {
        let err = load_facts("links\ta\tb\nlinks\ta\n".as_bytes()).unwrap_err();
        assert!(matches!(
            err,
            Error::ArityMismatch {
                line: 2,
                expected: 2,
                found: 1,
                ..
            }
        ));
    }

    #[test]
    fn match_orders_lexicographically() {
        let idx = kb("hasWord\ta\tsport\nhasWord\ta\tfashion\nhasWord\tb\tpolitics\n");
        let (g, _) = parse_goal("hasWord(a,W)").unwrap();
        let words: Vec<String> = idx
            .match_goal(&g)
            .iter()
            .map(|s| s.apply(&g).to_string())
            .collect();
        assert_eq!(words, ["hasWord(a,fashion)", "hasWord(a,sport)"]);
        assert_eq!(idx.binding_count(&g), 2);
    }

    #[test]
    fn ground_and_absent_matches() {
        let idx = kb("links\ta\tb\n");
        let (g, _) = parse_goal("links(a,b)").unwrap();
        assert_eq!(idx.match_goal(&g), vec![Substitution::new()]);
        let (g, _) = parse_goal("nope(a,X)").unwrap();
        assert!(idx.match_goal(&g).is_empty());
        let (g, _) = parse_goal("links(X,X)").unwrap();
        assert!(idx.match_goal(&g).is_empty());
    }

    #[test]
    fn subset_edge_cases() {
        let idx = kb("r\ta\tb\nr\tb\tc\nr\tc\td\nt\ta\nt\td\n");
        let all = kb_subset(&idx, Sym::intern("a"), 10, 0.1).unwrap();
        assert_eq!(all.len(), idx.len());
        let one = kb_subset(&idx, Sym::intern("a"), 1, 0.1).unwrap();
        let facts: Vec<String> = one.facts().map(|f| f.to_goal().to_string()).collect();
        assert_eq!(facts, ["t(a)"]);
        assert!(kb_subset(&idx, Sym::intern("zz-absent"), 1, 0.1).is_err());
        assert!(kb_subset(&idx, Sym::intern("a"), 0, 0.1).is_err());
    }

    #[test]
    fn roundtrip_tsv() {
        let idx = kb("links\ta\tb\ntag\tx y\n");
        let mut buf = Vec::new();
        idx.write_tsv(&mut buf).unwrap();
        let again = load_facts(buf.as_slice()).unwrap();
        assert_eq!(
            again.facts().collect::<Vec<_>>(),
            idx.facts().collect::<Vec<_>>()
        );
    }
}
