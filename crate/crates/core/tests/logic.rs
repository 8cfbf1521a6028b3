use std::collections::HashMap;

use proppr::logic::{mgu, Goal, Term, VarId};
use proppr::{parse_goal, parse_program, Error, Sym};
use proptest::prelude::*;

const CORPUS: &str = "\
about(X,Z) :- handLabeled(X,Z) # base.
about(X,Z) :- sim(X,Y),about(Y,Z) # prop.
sim(X,Y) :- links(X,Y) # sim,link.
sim(X,Y) :- hasWord(X,W),hasWord(Y,W),linkedBy(X,Y,W) # sim,word.
linkedBy(X,Y,W) :- true # by(W).
predictedClass(Doc,Y) :- possibleClass(Y), hasWord(Doc,W), related(W,Y) # c1.
related(W,Y) :- true, # relatedFeature(W,Y).
predictedClass(Doc,Y) :- similar(Doc,OtherDoc), predictedClass(OtherDoc,Y) # c3.
similar(Doc1,Doc2) :- hasWord(Doc1,W), inDoc(W,Doc2) # c4.
predictedClass(Doc,Y) :- previous(Doc,OtherDoc), predictedClass(OtherDoc,OtherY), transition(OtherY,Y) # c5.
transition(Y1,Y2) :- true, # transitionFeature(Y1,Y2).
samebib(BC1,BC2) :- author(BC1,A1),sameauthor(A1,A2),authorinverse(A2,BC2) # author.
samebib(BC1,BC2) :- title(BC1,A1),sametitle(A1,A2),titleinverse(A2,BC2) # title.
samebib(BC1,BC2) :- venue(BC1,A1),samevenue(A1,A2),venueinverse(A2,BC2) # venue.
samebib(BC1,BC2) :- samebib(BC1,BC3),samebib(BC3,BC2) # tcbib.
sameauthor(A1,A2) :- haswordauthor(A1,W),haswordauthorinverse(W,A2),keyauthorword(W) # authorword.
sameauthor(A1,A2) :- sameauthor(A1,A3),sameauthor(A3,A2) # tcauthor.
sametitle(A1,A2) :- haswordtitle(A1,W),haswordtitleinverse(W,A2),keytitleword(W) # titleword.
sametitle(A1,A2) :- sametitle(A1,A3),sametitle(A3,A2) # tctitle.
samevenue(A1,A2) :- haswordvenue(A1,W),haswordvenueinverse(W,A2),keyvenueword(W) # venueword.
samevenue(A1,A2) :- samevenue(A1,A3),samevenue(A3,A2) # tcvenue.
keyauthorword(W) :- true # authorWord(W).
keytitleword(W) :- true # titleWord(W).
keyvenueword(W) :- true # venueWord(W).
class(X,Y) :- has(X,W), isLabel(Y), related(W,Y).
related(W,Y) :- true # w(W,Y).
teamPlaysSport(T,S) :- factMemberOfConference(T,C),factConferenceHasMember(C,T'),factTeamPlaysSport(T',S).
odd('Quoted Constant', \"x y\", X) :- q(X).
empty(X) :-.
";

#[test]
fn printing_round_trips() {
    let p = parse_program(CORPUS).unwrap();
    assert_eq!(p.len(), 29);
    let printed = p.to_string();
    let again = parse_program(&printed).unwrap();
    assert_eq!(again.to_string(), printed);
    for (a, b) in p.clauses().iter().zip(again.clauses()) {
        assert!(a.is_variant_of(b), "{a} / {b}");
    }
}

#[test]
fn feature_variables_must_be_bound_by_the_head() {
    let err = parse_program("p(X) :- q(X,Y) # f(Y).").unwrap_err();
    assert!(
        matches!(err, Error::UnboundFeatureVariable { line: 1, .. }),
        "{err}"
    );
}

#[test]
fn syntax_errors_carry_positions() {
    let err = parse_program("p(X) :- q(X).\np(X :- q(X).").unwrap_err();
    match err {
        Error::Syntax { line, .. } => assert_eq!(line, 2),
        other => panic!("{other}"),
    }
}

fn term() -> impl Strategy<Value = Term> {
    prop_oneof![
        (0u32..3).prop_map(|v| Term::Var(VarId(v))),
        prop::sample::select(vec!["a", "b", "c"]).prop_map(Term::constant),
    ]
}

fn goal_pair() -> impl Strategy<Value = (Goal, Goal)> {
    (0usize..4).prop_flat_map(|n| {
        (
            prop::collection::vec(term(), n),
            prop::collection::vec(term(), n),
        )
            .prop_map(|(x, y)| {
                let f = Sym::intern("p");
                (Goal::new(f, x), Goal::new(f, y))
            })
    })
}

/// Every assignment of the variables of `a` and `b` to constants.
fn groundings(a: &Goal, b: &Goal) -> Vec<HashMap<VarId, Sym>> {
    let mut vars: Vec<VarId> = a.vars().chain(b.vars()).collect();
    vars.sort();
    vars.dedup();
    let consts = ["a", "b", "c"].map(Sym::intern);
    let mut out = vec![HashMap::new()];
    for v in vars {
        out = out
            .into_iter()
            .flat_map(|m| {
                consts.iter().map(move |&c| {
                    let mut m = m.clone();
                    m.insert(v, c);
                    m
                })
            })
            .collect();
    }
    out
}

fn ground_with(g: &Goal, m: &HashMap<VarId, Sym>) -> Vec<Sym> {
    g.args
        .iter()
        .map(|t| match *t {
            Term::Var(v) => m[&v],
            Term::Const(c) => c,
        })
        .collect()
}

proptest! {
    #[test]
    fn mgu_unifies((a, b) in goal_pair()) {
        if let Some(s) = mgu(&a, &b) {
            prop_assert_eq!(s.apply(&a), s.apply(&b));
        }
    }

    #[test]
    fn mgu_is_most_general((a, b) in goal_pair()) {
        let theta = mgu(&a, &b);
        for m in groundings(&a, &b) {
            let unifies = ground_with(&a, &m) == ground_with(&b, &m);
            match &theta {
                None => prop_assert!(!unifies),
                Some(s) => {
                    // a ground unifier factors through θ exactly when it
                    // agrees with every binding θ makes
                    let factors = s.iter().all(|(v, t)| {
                        let lhs = m[&v];
                        let rhs = match t {
                            Term::Var(w) => m[&w],
                            Term::Const(c) => c,
                        };
                        lhs == rhs
                    });
                    prop_assert_eq!(unifies, factors);
                }
            }
        }
    }

    #[test]
    fn goals_round_trip(name in "[a-z][a-zA-Z0-9_]{0,6}", args in prop::collection::vec("[a-z][a-z0-9]{0,4}|[A-Z][a-z0-9]{0,3}|[a-z ]{1,5}", 0..4)) {
        let text = if args.is_empty() {
            name.clone()
        } else {
            let quoted: Vec<String> = args
                .iter()
                .map(|a| if a.contains(' ') { format!("\"{a}\"") } else { a.clone() })
                .collect();
            format!("{name}({})", quoted.join(","))
        };
        let (g, names) = parse_goal(&text).unwrap();
        let printed = g.display_with(&names).to_string();
        let (again, names2) = parse_goal(&printed).unwrap();
        prop_assert_eq!(again.display_with(&names2).to_string(), printed);
        prop_assert_eq!(g.arity(), args.len());
    }
}
