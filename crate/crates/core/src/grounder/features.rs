use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::kb::FactIndex;
use crate::logic::{parse_goal, Clause, Goal, Program, Substitution};

/// Feature on fact-lookup edges.
pub const DB_FEATURE: &str = "db";
/// Feature on restart edges.
pub const RESTART_FEATURE: &str = "defRestart";
/// Feature on the self-loop of a solution node.
pub const SELF_LOOP_FEATURE: &str = "id(trueLoop)";
/// Lower clamp for the linear weighting function.
pub const LINEAR_FLOOR: f64 = 1e-10;

/// Sparse feature vector; names are ground goals, values are nonzero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureVector(Vec<(Goal, f64)>);

impl FeatureVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn unit(feature: Goal) -> Self {
        FeatureVector(vec![(feature, 1.0)])
    }

    /// Sets `feature` to `value`; zero values are dropped.
    pub fn set(&mut self, feature: Goal, value: f64) {
        match self.0.iter_mut().find(|(f, _)| *f == feature) {
            Some(slot) => slot.1 = value,
            None => self.0.push((feature, value)),
        }
        self.0.retain(|(_, v)| *v != 0.0);
    }

    pub fn get(&self, feature: &Goal) -> f64 {
        self.0
            .iter()
            .find_map(|(f, v)| (f == feature).then_some(*v))
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Goal, f64)> {
        self.0.iter().map(|(f, v)| (f, *v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, w: &ParameterVector) -> f64 {
        self.0.iter().map(|(f, v)| w.get(f) * v).sum()
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (name, v)) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{name}:{v}")?;
        }
        Ok(())
    }
}

/// Feature weights. Features that were never set read as 1.0.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParameterVector {
    weights: HashMap<Goal, f64>,
}

impl ParameterVector {
    pub const DEFAULT_WEIGHT: f64 = 1.0;

    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, feature: &Goal) -> f64 {
        self.weights
            .get(feature)
            .copied()
            .unwrap_or(Self::DEFAULT_WEIGHT)
    }

    pub fn contains(&self, feature: &Goal) -> bool {
        self.weights.contains_key(feature)
    }

    pub fn set(&mut self, feature: Goal, weight: f64) {
        assert!(weight.is_finite(), "non-finite weight for {feature}");
        self.weights.insert(feature, weight);
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Explicitly set weights, sorted by feature name.
    pub fn sorted(&self) -> Vec<(String, Goal, f64)> {
        let mut v: Vec<_> = self
            .weights
            .iter()
            .map(|(f, &w)| (f.to_string(), f.clone(), w))
            .collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (name, _, w) in self.sorted() {
            writeln!(out, "{name}\t{w}")?;
        }
        Ok(())
    }

    pub fn read_tsv<R: BufRead>(reader: R) -> Result<Self> {
        let mut w = ParameterVector::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::Format {
                line: i + 1,
                message,
            };
            let (name, value) = line
                .rsplit_once('\t')
                .ok_or_else(|| bad("expected `feature TAB weight`".into()))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|e| bad(format!("bad weight {value:?}: {e}")))?;
            if !value.is_finite() {
                return Err(bad(format!("non-finite weight for {name}")));
            }
            let (feature, _) = parse_goal(name).map_err(|e| bad(e.to_string()))?;
            w.set(feature, value);
        }
        Ok(w)
    }
}

/// How edge scores turn into unnormalized transition weights.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Weighting {
    /// `exp(w·φ)`
    #[default]
    Exp,
    /// `max(w·φ, LINEAR_FLOOR)`
    Linear,
}

impl Weighting {
    pub fn apply(self, score: f64) -> f64 {
        match self {
            Weighting::Exp => score.exp(),
            Weighting::Linear => score.max(LINEAR_FLOOR),
        }
    }
}

impl FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Weighting::Exp),
            "linear" => Ok(Weighting::Linear),
            other => Err(Error::InvalidParameter(format!(
                "unknown weighting {other:?} (expected exp or linear)"
            ))),
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Exp => "exp",
            Weighting::Linear => "linear",
        })
    }
}

/// Normalized transition probabilities for a node's out-edges, aligned with
/// `edges`. Exp mode subtracts the largest score before exponentiating.
pub fn transition_distribution<'a>(
    edges: impl IntoIterator<Item = &'a FeatureVector>,
    w: &ParameterVector,
    mode: Weighting,
) -> Vec<f64> {
    let scores: Vec<f64> = edges.into_iter().map(|phi| phi.dot(w)).collect();
    let raw: Vec<f64> = match mode {
        Weighting::Exp => {
            let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            scores.iter().map(|s| (s - m).exp()).collect()
        }
        Weighting::Linear => scores.iter().map(|&s| Weighting::Linear.apply(s)).collect(),
    };
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

pub(crate) fn feature(name: &str) -> Goal {
    parse_goal(name).expect("built-in feature names parse").0
}

/// `Φ_c(θ)`: the clause's feature templates instantiated by `theta`, or the
/// clause-identity feature `id(n)` when the clause carries no annotation.
/// `clause_number` is the 1-based position of the clause in its program.
pub fn features_of_clause(
    clause: &Clause,
    clause_number: usize,
    theta: &Substitution,
) -> Result<FeatureVector> {
    if clause.features.is_empty() {
        return Ok(FeatureVector::unit(Goal::ground(
            "id",
            &[&clause_number.to_string()],
        )));
    }
    let mut phi = FeatureVector::new();
    for template in &clause.features {
        let f = theta.apply(template);
        if !f.is_ground() {
            return Err(Error::NonGroundFeature(f.to_string()));
        }
        phi.set(f, 1.0);
    }
    Ok(phi)
}

/// `Φ_restart(R)` for the leftmost subgoal `goal`. Fact predicates get
/// `n·α/(1−α)` where `n` is the number of matching facts (at least 1); rule
/// predicates get a unit restart feature.
pub fn restart_feature(
    goal: &Goal,
    program: &Program,
    facts: &FactIndex,
    alpha: f64,
) -> FeatureVector {
    let name = feature(RESTART_FEATURE);
    if program.defines(goal.key()) {
        return FeatureVector::unit(name);
    }
    let n = facts.binding_count(goal).max(1) as f64;
    let mut phi = FeatureVector::new();
    phi.set(name, n * alpha / (1.0 - alpha));
    phi
}
