use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grounder::{ground, GroundingConfig, ParameterVector, Prover};
use crate::kb::FactIndex;
use crate::logic::{Goal, Program};

use super::examples::TrainingExample;
use super::objective::{Compiled, GroundedExample};
use super::Hyperparams;

/// `eta / epoch²` for 1-based `epoch`.
pub fn learning_rate(eta: f64, epoch: usize) -> f64 {
    assert!(epoch >= 1, "epochs are numbered from 1");
    eta / (epoch * epoch) as f64
}

/// Weights read and written without locks. Each load and store is atomic,
/// but a read-modify-write is not, so concurrent updates to one feature may
/// lose an increment.
struct SharedWeights(Vec<AtomicU64>);

impl SharedWeights {
    fn new(values: impl IntoIterator<Item = f64>) -> Self {
        SharedWeights(
            values
                .into_iter()
                .map(|x| AtomicU64::new(x.to_bits()))
                .collect(),
        )
    }

    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self.0[i].load(Ordering::Relaxed))
    }

    fn set(&self, i: usize, x: f64) {
        self.0[i].store(x.to_bits(), Ordering::Relaxed);
    }
}

/// Compiled examples over a shared feature numbering.
struct Problem {
    features: Vec<Goal>,
    examples: Vec<(Compiled, Vec<usize>)>,
}

impl Problem {
    fn new(grounded: &[GroundedExample], extra: impl IntoIterator<Item = Goal>) -> Self {
        let mut features: Vec<Goal> = Vec::new();
        let mut index: HashMap<Goal, usize> = HashMap::new();
        let mut intern = |g: &Goal, features: &mut Vec<Goal>| -> usize {
            *index.entry(g.clone()).or_insert_with(|| {
                features.push(g.clone());
                features.len() - 1
            })
        };
        let examples = grounded
            .iter()
            .map(|ge| {
                let c = Compiled::new(ge);
                let map = c
                    .features
                    .iter()
                    .map(|f| intern(f, &mut features))
                    .collect();
                (c, map)
            })
            .collect();
        for g in extra {
            intern(&g, &mut features);
        }
        Problem { features, examples }
    }

    fn local_weights(&self, i: usize, w: &SharedWeights) -> Vec<f64> {
        self.examples[i].1.iter().map(|&g| w.get(g)).collect()
    }

    /// One SGD step on example `i`. Returns its loss before the step and
    /// whether the step was applied.
    fn step(&self, i: usize, w: &SharedWeights, beta: f64, h: &Hyperparams) -> (f64, bool) {
        let (c, map) = &self.examples[i];
        let local = self.local_weights(i, w);
        let e = c.evaluate(&local, h, true);
        if !e.loss.is_finite() || e.gradient.iter().any(|g| !g.is_finite()) {
            log::warn!("non-finite gradient; skipping update");
            return (e.loss, false);
        }
        for (&g, d) in map.iter().zip(&e.gradient) {
            if *d != 0.0 {
                w.set(g, w.get(g) - beta * d);
            }
        }
        (e.loss, true)
    }

    fn epoch(&self, w: &SharedWeights, order: &[usize], beta: f64, h: &Hyperparams) -> EpochStats {
        let start = Instant::now();
        let threads = h.threads.max(1).min(order.len().max(1));
        let skipped = AtomicUsize::new(0);
        let loss = if threads == 1 {
            let mut total = 0.0;
            for &i in order {
                let (l, ok) = self.step(i, w, beta, h);
                total += l;
                if !ok {
                    skipped.fetch_add(1, Ordering::Relaxed);
                }
            }
            total
        } else {
            let chunk = order.len().div_ceil(threads);
            std::thread::scope(|s| {
                let handles: Vec<_> = order
                    .chunks(chunk)
                    .map(|part| {
                        let skipped = &skipped;
                        s.spawn(move || {
                            let mut total = 0.0;
                            for &i in part {
                                let (l, ok) = self.step(i, w, beta, h);
                                total += l;
                                if !ok {
                                    skipped.fetch_add(1, Ordering::Relaxed);
                                }
                            }
                            total
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("worker panicked"))
                    .sum()
            })
        };
        EpochStats {
            loss,
            skipped: skipped.into_inner(),
            elapsed: start.elapsed(),
        }
    }

    fn total_loss(&self, w: &SharedWeights, h: &Hyperparams) -> f64 {
        (0..self.examples.len())
            .map(|i| {
                self.examples[i]
                    .0
                    .evaluate(&self.local_weights(i, w), h, false)
                    .loss
            })
            .sum()
    }

    fn export(&self, w: &SharedWeights, base: &ParameterVector) -> ParameterVector {
        let mut out = base.clone();
        for (i, f) in self.features.iter().enumerate() {
            out.set(f.clone(), w.get(i));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    /// Sum of per-example losses, each taken just before its update.
    pub loss: f64,
    /// Examples whose update was skipped for a non-finite gradient.
    pub skipped: usize,
    pub elapsed: Duration,
}

/// One pass of SGD over `examples` in an order shuffled with
/// `h.shuffle_seed` and `epoch`, with rate `learning_rate(h.eta, epoch)`.
pub fn sgd_epoch(
    examples: &[GroundedExample],
    w: &mut ParameterVector,
    h: &Hyperparams,
    epoch: usize,
) -> EpochStats {
    let problem = Problem::new(examples, []);
    let shared = SharedWeights::new(problem.features.iter().map(|f| w.get(f)));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(
        h.shuffle_seed ^ (epoch as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15),
    );
    order.shuffle(&mut rng);
    let stats = problem.epoch(&shared, &order, learning_rate(h.eta, epoch), h);
    *w = problem.export(&shared, w);
    stats
}

/// Sum of example losses under `w`.
pub fn training_loss(examples: &[GroundedExample], w: &ParameterVector, h: &Hyperparams) -> f64 {
    let problem = Problem::new(examples, []);
    let shared = SharedWeights::new(problem.features.iter().map(|f| w.get(f)));
    problem.total_loss(&shared, h)
}

/// Starting weights: `warm` where given, otherwise `1 + U[0, jitter)` drawn
/// from `h.init_seed` in feature display order.
pub fn initialize<'a>(
    features: impl IntoIterator<Item = &'a Goal>,
    warm: Option<&ParameterVector>,
    h: &Hyperparams,
) -> ParameterVector {
    let mut names: Vec<(String, &Goal)> =
        features.into_iter().map(|f| (f.to_string(), f)).collect();
    names.sort_by(|a, b| a.0.cmp(&b.0));
    names.dedup_by(|a, b| a.0 == b.0);
    let mut rng = ChaCha8Rng::seed_from_u64(h.init_seed);
    let mut out = warm.cloned().unwrap_or_default();
    for (_, f) in names {
        if warm.is_some_and(|w| w.contains(f)) {
            continue;
        }
        let delta = if h.jitter > 0.0 {
            rng.gen_range(0.0..h.jitter)
        } else {
            0.0
        };
        out.set(f.clone(), 1.0 + delta);
    }
    out
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub params: ParameterVector,
    pub epochs: Vec<EpochStats>,
    /// Total loss over all grounded examples after the last epoch.
    pub final_loss: f64,
    pub grounding_time: Duration,
    pub training_time: Duration,
    /// Examples dropped because their grounding had no solutions.
    pub dropped: usize,
}

/// Runs `h.epochs` epochs of SGD from `init` on already grounded examples.
pub fn train_grounded(
    grounded: &[GroundedExample],
    init: &ParameterVector,
    h: &Hyperparams,
) -> TrainReport {
    let start = Instant::now();
    let problem = Problem::new(grounded, init.sorted().into_iter().map(|(_, g, _)| g));
    let shared = SharedWeights::new(problem.features.iter().map(|f| init.get(f)));
    let mut order: Vec<usize> = (0..grounded.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(h.shuffle_seed);
    let mut epochs = Vec::with_capacity(h.epochs);
    for epoch in 1..=h.epochs {
        order.shuffle(&mut rng);
        let stats = problem.epoch(&shared, &order, learning_rate(h.eta, epoch), h);
        log::info!(
            "epoch {epoch}: loss {:.6} ({} skipped, {:?})",
            stats.loss,
            stats.skipped,
            stats.elapsed
        );
        epochs.push(stats);
    }
    let final_loss = problem.total_loss(&shared, h);
    TrainReport {
        params: problem.export(&shared, init),
        epochs,
        final_loss,
        grounding_time: Duration::ZERO,
        training_time: start.elapsed(),
        dropped: 0,
    }
}

#[derive(Clone, Debug)]
pub struct GroundingReport {
    pub grounded: Vec<GroundedExample>,
    /// Examples whose grounding reached no solution node.
    pub dropped: usize,
    pub elapsed: Duration,
}

/// Grounds every example under `params`, split across `threads` workers.
pub fn ground_examples(
    examples: &[TrainingExample],
    program: &Program,
    facts: &FactIndex,
    params: &ParameterVector,
    grounding: GroundingConfig,
    prover: Prover,
    threads: usize,
) -> GroundingReport {
    let start = Instant::now();
    let one = |ex: &TrainingExample| {
        let g = ground(&ex.query, program, facts, params, grounding, prover);
        if g.graph.solutions.is_empty() {
            None
        } else {
            Some(GroundedExample::new(ex, g.graph.to_ground()))
        }
    };
    let results: Vec<Option<GroundedExample>> = if threads <= 1 || examples.len() < 2 {
        examples.iter().map(one).collect()
    } else {
        let chunk = examples.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = examples
                .chunks(chunk)
                .map(|part| s.spawn(move || part.iter().map(one).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("grounding worker panicked"))
                .collect()
        })
    };
    let dropped = results.iter().filter(|r| r.is_none()).count();
    if dropped > 0 {
        log::warn!("{dropped} examples have no solutions and were dropped");
    }
    GroundingReport {
        grounded: results.into_iter().flatten().collect(),
        dropped,
        elapsed: start.elapsed(),
    }
}

/// Grounds `examples` under the warm-start weights (or unit weights),
/// initializes every feature seen, and runs SGD.
pub fn train(
    examples: &[TrainingExample],
    program: &Program,
    facts: &FactIndex,
    grounding: GroundingConfig,
    prover: Prover,
    h: &Hyperparams,
    warm: Option<&ParameterVector>,
) -> TrainReport {
    let base = warm.cloned().unwrap_or_default();
    let g = ground_examples(
        examples, program, facts, &base, grounding, prover, h.threads,
    );
    let features: Vec<Goal> = g
        .grounded
        .iter()
        .flat_map(GroundedExample::features)
        .collect();
    let init = initialize(&features, warm, h);
    let mut report = train_grounded(&g.grounded, &init, h);
    report.grounding_time = g.elapsed;
    report.dropped = g.dropped;
    report
}
