//! Ranking metrics and negative sampling.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::BufRead;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kb::FactIndex;
use crate::logic::{mgu, Goal};
use crate::symbol::Sym;

/// Answers to one query, best first, with gold labels where known.
#[derive(Clone, Debug)]
pub struct RankedAnswerList {
    pub query: Goal,
    pub answers: Vec<(Goal, f64)>,
    /// `true` for positive, `false` for negative.
    pub labels: HashMap<Goal, bool>,
}

fn by_score(a: &(Goal, f64), b: &(Goal, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp_lexical(&b.0))
}

impl RankedAnswerList {
    /// Sorts `answers` by decreasing score, ties broken lexically.
    pub fn new(query: Goal, mut answers: Vec<(Goal, f64)>, labels: HashMap<Goal, bool>) -> Self {
        answers.sort_by(by_score);
        RankedAnswerList {
            query,
            answers,
            labels,
        }
    }

    pub fn labelled(
        query: Goal,
        answers: Vec<(Goal, f64)>,
        positives: &[Goal],
        negatives: &[Goal],
    ) -> Self {
        let labels = positives
            .iter()
            .map(|g| (g.clone(), true))
            .chain(negatives.iter().map(|g| (g.clone(), false)))
            .collect();
        Self::new(query, answers, labels)
    }

    /// Scores of labelled answers split by label. Labelled answers that were
    /// not retrieved score 0.
    pub fn labelled_scores(&self) -> (Vec<f64>, Vec<f64>) {
        let scored: HashMap<&Goal, f64> = self.answers.iter().map(|(g, s)| (g, *s)).collect();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (g, &label) in &self.labels {
            let s = scored.get(g).copied().unwrap_or(0.0);
            if label {
                pos.push(s);
            } else {
                neg.push(s);
            }
        }
        (pos, neg)
    }
}

/// Probability that a random positive outscores a random negative, ties
/// counting one half.
pub fn auc_roc(positives: &[f64], negatives: &[f64]) -> Result<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return Err(Error::Undefined(
            "AUC needs at least one positive and one negative".into(),
        ));
    }
    let mut neg = negatives.to_vec();
    neg.sort_by(f64::total_cmp);
    let mut wins = 0.0;
    for &p in positives {
        let below = neg.partition_point(|&n| n < p);
        let tied = neg.partition_point(|&n| n <= p) - below;
        wins += below as f64 + 0.5 * tied as f64;
    }
    Ok(wins / (positives.len() as f64 * neg.len() as f64))
}

/// AUC over the pooled labelled answers of all lists.
pub fn auc_micro(lists: &[RankedAnswerList]) -> Result<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for l in lists {
        let (p, n) = l.labelled_scores();
        pos.extend(p);
        neg.extend(n);
    }
    auc_roc(&pos, &neg)
}

/// Mean per-query AUC over the queries with both labels.
pub fn auc_macro(lists: &[RankedAnswerList]) -> Result<f64> {
    let aucs: Vec<f64> = lists
        .iter()
        .filter_map(|l| {
            let (p, n) = l.labelled_scores();
            auc_roc(&p, &n).ok()
        })
        .collect();
    if aucs.is_empty() {
        return Err(Error::Undefined(
            "no query has both positive and negative labels".into(),
        ));
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

/// Average precision of the labelled part of the ranking. Unlabelled
/// answers are ignored; positives that were never retrieved contribute
/// precision 0.
pub fn average_precision(list: &RankedAnswerList) -> Result<f64> {
    let total = list.labels.values().filter(|&&l| l).count();
    if total == 0 {
        return Err(Error::Undefined(format!(
            "{} has no positive labels",
            list.query
        )));
    }
    let mut hits = 0;
    let mut sum = 0.0;
    let mut rank = 0;
    for (g, _) in &list.answers {
        match list.labels.get(g) {
            Some(true) => {
                rank += 1;
                hits += 1;
                sum += hits as f64 / rank as f64;
            }
            Some(false) => rank += 1,
            None => {}
        }
    }
    Ok(sum / total as f64)
}

/// Mean average precision over the queries that have positives.
pub fn mean_avg_precision(lists: &[RankedAnswerList]) -> Result<f64> {
    let aps: Vec<f64> = lists
        .iter()
        .filter_map(|l| average_precision(l).ok())
        .collect();
    if aps.is_empty() {
        return Err(Error::Undefined("no query has positive labels".into()));
    }
    Ok(aps.iter().sum::<f64>() / aps.len() as f64)
}

/// Target relation → relations whose facts cannot hold for the target.
pub type Exclusivity = BTreeMap<String, Vec<Sym>>;

/// Reads `target TAB rel1 TAB rel2 ...` lines.
pub fn read_exclusivity<R: BufRead>(reader: R) -> Result<Exclusivity> {
    let mut out = Exclusivity::new();
    for line in reader.lines() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let mut fields = t.split('\t').map(str::trim).filter(|f| !f.is_empty());
        let target = fields.next().unwrap().to_string();
        out.entry(target)
            .or_default()
            .extend(fields.map(Sym::intern));
    }
    Ok(out)
}

/// Draws up to `count` distinct negatives for `query` from facts of the
/// `exclusive` relations, renamed to the query's predicate. Candidates must
/// unify with the query and must not be positives. The result is sorted.
pub fn sample_negatives<R: Rng>(
    facts: &FactIndex,
    query: &Goal,
    positives: &[Goal],
    exclusive: &[Sym],
    count: usize,
    rng: &mut R,
) -> Vec<Goal> {
    if exclusive.is_empty() {
        log::warn!("no exclusive relations for {}", query.functor);
        return Vec::new();
    }
    let pos: HashSet<&Goal> = positives.iter().collect();
    let mut seen = HashSet::new();
    let mut candidates = Vec::new();
    for &r in exclusive {
        let probe = Goal::new(r, query.args.iter().copied());
        for row in facts.matching_rows(&probe) {
            let g = Goal::new(
                query.functor,
                row.iter().map(|&c| crate::logic::Term::Const(c)),
            );
            if mgu(&g, query).is_some() && !pos.contains(&g) && seen.insert(g.clone()) {
                candidates.push(g);
            }
        }
    }
    candidates.sort_by(|a, b| a.cmp_lexical(b));
    if candidates.is_empty() {
        if count > 0 {
            log::warn!("no negative candidates for {query}");
        }
        return Vec::new();
    }
    let n = count.min(candidates.len());
    let mut picked: Vec<usize> = rand::seq::index::sample(rng, candidates.len(), n).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| candidates[i].clone()).collect()
}
