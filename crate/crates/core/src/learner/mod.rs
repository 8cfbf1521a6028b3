//! Supervised weight learning.
//!
//! Every labelled query is grounded once. SGD then minimizes the log loss of
//! its positive and negative answers, optionally with several threads
//! sharing one weight vector without locks.

mod examples;
mod objective;
mod sgd;

pub use examples::{read_examples, TrainingExample};
pub use objective::{gradient, loss, node_masses, GroundedExample, P_FLOOR};
pub use sgd::{
    ground_examples, initialize, learning_rate, sgd_epoch, train, train_grounded, training_loss,
    EpochStats, GroundingReport, TrainReport,
};

use crate::grounder::Weighting;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparams {
    pub epochs: usize,
    /// Initial learning rate; epoch `k` uses `eta / k²`.
    pub eta: f64,
    /// L2 coefficient.
    pub mu: f64,
    pub threads: usize,
    /// Initial weights are `1 + U[0, jitter)`.
    pub jitter: f64,
    /// Power-iteration steps used for `p` in the loss.
    pub iterations: usize,
    pub weighting: Weighting,
    pub shuffle_seed: u64,
    pub init_seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            epochs: 10,
            eta: 1.0,
            mu: 0.0,
            threads: 1,
            jitter: 0.01,
            iterations: 20,
            weighting: Weighting::Exp,
            shuffle_seed: 0,
            init_seed: 0,
        }
    }
}
