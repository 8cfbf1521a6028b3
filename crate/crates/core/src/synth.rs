//! Seeded generators for synthetic programs and databases, used by tests
//! and benchmarks.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kb::{Fact, FactIndex, FactIndexBuilder};
use crate::learner::TrainingExample;
use crate::logic::{parse_program, Goal, Program};

/// A program, a database and a query against them.
#[derive(Clone, Debug)]
pub struct Instance {
    pub program: Program,
    pub facts: FactIndex,
    pub query: Goal,
}

/// A small random program over binary relations. Derived predicates
/// `q0..` have one to three clauses chaining relations and, in last body
/// position only, derived predicates, so proof graphs stay finite. Some
/// clauses carry annotations with variable features.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let entities = rng.gen_range(4..=10);
    let relations = rng.gen_range(1..=3);
    let derived = rng.gen_range(1..=3);
    let mut b = FactIndexBuilder::new();
    for r in 0..relations {
        let density = rng.gen_range(0.1..0.4);
        for x in 0..entities {
            for y in 0..entities {
                if rng.gen_bool(density) {
                    b.add(Fact::new(
                        &format!("r{r}"),
                        &[&format!("e{x}"), &format!("e{y}")],
                    ))
                    .unwrap();
                }
            }
        }
    }
    // make sure the query entity has an outgoing edge
    b.add(Fact::new("r0", &["e0", "e1"])).unwrap();
    let mut text = String::new();
    for q in 0..derived {
        for c in 0..rng.gen_range(1..=3) {
            let len = rng.gen_range(1..=3);
            let mut body = Vec::new();
            for i in 0..len {
                let a = if i == 0 {
                    "X".to_string()
                } else {
                    format!("Z{i}")
                };
                let z = if i + 1 == len {
                    "Y".to_string()
                } else {
                    format!("Z{}", i + 1)
                };
                // derived calls only go to later predicates or in last position
                let call_derived = i + 1 == len && rng.gen_bool(0.4);
                let pred = if call_derived {
                    format!("q{}", rng.gen_range(0..derived))
                } else {
                    format!("r{}", rng.gen_range(0..relations))
                };
                body.push(format!("{pred}({a},{z})"));
            }
            let annotation = match rng.gen_range(0..4) {
                0 => String::new(),
                1 => format!(" # f{q}_{c}"),
                2 => " # src(X)".to_string(),
                _ => format!(" # f{q}_{c}, dst(Y)"),
            };
            text.push_str(&format!("q{q}(X,Y) :- {}{annotation}.\n", body.join(", ")));
        }
    }
    let program = parse_program(&text).expect("generated program parses");
    Instance {
        program,
        facts: b.build(),
        query: crate::parse_goal("q0(e0,Y)").unwrap().0,
    }
}

/// `path(X,Y) :- e(X,Z1), ..., e(Z(n-1),Y)` over the single chain
/// `e(n0,n1), ..., e(n(n-1),n(n))`, queried from `n0`. Every non-solution
/// node has exactly one database successor.
pub fn chain_instance(length: usize) -> Instance {
    assert!(length >= 1);
    let vars: Vec<String> = (0..=length)
        .map(|i| match i {
            0 => "X".to_string(),
            _ if i == length => "Y".to_string(),
            _ => format!("Z{i}"),
        })
        .collect();
    let body: Vec<String> = (0..length)
        .map(|i| format!("e({},{})", vars[i], vars[i + 1]))
        .collect();
    let program = parse_program(&format!("path(X,Y) :- {}.", body.join(", "))).unwrap();
    let facts = FactIndex::from_facts(
        (0..length).map(|i| Fact::new("e", &[&format!("n{i}"), &format!("n{}", i + 1)])),
    )
    .unwrap();
    Instance {
        program,
        facts,
        query: crate::parse_goal("path(n0,Y)").unwrap().0,
    }
}

/// Adds `factor - 1` renamed copies of every fact, over fresh entities, so
/// the result is `factor` times larger but nothing new is reachable from
/// the original entities.
pub fn pad_facts(facts: &FactIndex, factor: usize) -> FactIndex {
    let mut b = FactIndexBuilder::new();
    for f in facts.facts() {
        b.add(f).unwrap();
    }
    for k in 1..factor {
        for f in facts.facts() {
            let args: Vec<String> = f.args.iter().map(|a| format!("{a}__pad{k}")).collect();
            let refs: Vec<&str> = args.iter().map(String::as_str).collect();
            b.add(Fact::new(f.functor.as_str(), &refs)).unwrap();
        }
    }
    b.build()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CitationConfig {
    pub papers: usize,
    /// Upper bound on the number of training queries.
    pub queries: usize,
    pub max_citations: usize,
    pub authors: usize,
    pub title_words: usize,
    pub common_words: usize,
    pub venues: usize,
    /// Upper bound on the negatives labelled per query.
    pub negatives: usize,
    pub seed: u64,
}

impl Default for CitationConfig {
    fn default() -> Self {
        CitationConfig {
            papers: 300,
            queries: 50,
            max_citations: 3,
            authors: 300,
            title_words: 600,
            common_words: 10,
            venues: 400,
            negatives: 20,
            seed: 0,
        }
    }
}

/// Citation matching: which citation strings refer to the same paper.
#[derive(Clone, Debug)]
pub struct CitationTask {
    pub program: Program,
    pub facts: FactIndex,
    /// Queries `samebib(c,Y)` for citations whose paper is cited more than
    /// once. Positives are the other citations of the same paper; negatives
    /// are a sample of other papers' citations sharing an author, venue or
    /// rare title word with `c`.
    pub examples: Vec<TrainingExample>,
}

pub const CITATION_PROGRAM: &str = "\
samebib(C1,C2) :- author(C1,W), authorInverse(W,C2), keyAuthorWord(W) # author.
samebib(C1,C2) :- title(C1,W), titleInverse(W,C2), keyTitleWord(W) # title.
samebib(C1,C2) :- venue(C1,W), venueInverse(W,C2), keyVenueWord(W) # venue.
keyAuthorWord(W) :- # authorWord(W).
keyTitleWord(W) :- # titleWord(W).
keyVenueWord(W) :- # venueWord(W).
";

/// Generates a citation task. Author and rare title words identify papers
/// up to noise; common title words and venues are drawn independently of
/// the paper and carry no signal.
pub fn citation_task(config: CitationConfig) -> CitationTask {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut b = FactIndexBuilder::new();
    let mut citations: Vec<(usize, BTreeSet<String>)> = Vec::new();
    let add = |b: &mut FactIndexBuilder, rel: &str, c: &str, w: &str| {
        b.add(Fact::new(rel, &[c, w])).unwrap();
        b.add(Fact::new(&format!("{rel}Inverse"), &[w, c])).unwrap();
    };
    for paper in 0..config.papers {
        let authors: Vec<usize> = (0..rng.gen_range(1..=3))
            .map(|_| rng.gen_range(0..config.authors))
            .collect();
        let title: Vec<usize> = (0..3)
            .map(|_| rng.gen_range(0..config.title_words))
            .collect();
        let count = rng.gen_range(1..=config.max_citations);
        for _ in 0..count {
            let c = format!("c{}", citations.len());
            let mut words = BTreeSet::new();
            for &a in &authors {
                if rng.gen_bool(0.7) {
                    words.insert(format!("a{a}"));
                }
            }
            if words.is_empty() || rng.gen_bool(0.3) {
                words.insert(format!("a{}", rng.gen_range(0..config.authors)));
            }
            for &t in &title {
                if rng.gen_bool(0.6) {
                    words.insert(format!("t{t}"));
                }
            }
            for _ in 0..3.min(config.common_words) {
                words.insert(format!("common{}", rng.gen_range(0..config.common_words)));
            }
            for _ in 0..2.min(config.venues) {
                words.insert(format!("v{}", rng.gen_range(0..config.venues)));
            }
            for w in &words {
                let rel = match w.as_bytes()[0] {
                    b'a' => "author",
                    b'v' => "venue",
                    _ => "title",
                };
                add(&mut b, rel, &c, w);
            }
            citations.push((paper, words));
        }
    }
    let mut examples = Vec::new();
    for (i, (paper, words)) in citations.iter().enumerate() {
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for (j, (other, other_words)) in citations.iter().enumerate() {
            if i == j {
                continue;
            }
            let answer = Goal::ground("samebib", &[&format!("c{i}"), &format!("c{j}")]);
            if other == paper {
                positives.push(answer);
            } else if words
                .intersection(other_words)
                .any(|w| !w.starts_with("common"))
            {
                negatives.push(answer);
            }
        }
        if positives.is_empty() {
            continue;
        }
        negatives.shuffle(&mut rng);
        negatives.truncate(config.negatives);
        negatives.sort_by(|a, b| a.cmp_lexical(b));
        let query = crate::parse_goal(&format!("samebib(c{i},Y)")).unwrap().0;
        examples.push(TrainingExample::new(query, positives, negatives).unwrap());
    }
    examples.shuffle(&mut rng);
    examples.truncate(config.queries);
    CitationTask {
        program: parse_program(CITATION_PROGRAM).unwrap(),
        facts: b.build(),
        examples,
    }
}
