use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::logic::{parse_goal, Goal};

/// A query with labelled answers.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingExample {
    pub query: Goal,
    pub positives: Vec<Goal>,
    pub negatives: Vec<Goal>,
}

impl TrainingExample {
    pub fn new(query: Goal, positives: Vec<Goal>, negatives: Vec<Goal>) -> Result<Self> {
        let pos: HashSet<&Goal> = positives.iter().collect();
        if let Some(g) = negatives.iter().find(|g| pos.contains(g)) {
            return Err(Error::InvalidParameter(format!(
                "{g} is labelled both positive and negative for {query}"
            )));
        }
        if positives.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "{query} has no positive answers"
            )));
        }
        Ok(TrainingExample {
            query,
            positives,
            negatives,
        })
    }
}

impl fmt::Display for TrainingExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.query)?;
        for p in &self.positives {
            write!(f, "\t+{p}")?;
        }
        for n in &self.negatives {
            write!(f, "\t-{n}")?;
        }
        Ok(())
    }
}

fn goal_at(text: &str, line: usize) -> Result<Goal> {
    parse_goal(text).map(|(g, _)| g).map_err(|e| Error::Format {
        line,
        message: format!("bad goal {text:?}: {e}"),
    })
}

/// Reads `query TAB +answer TAB -answer ...` lines. Blank lines and lines
/// starting with `#` are skipped. Answers must be ground.
pub fn read_examples<R: BufRead>(reader: R) -> Result<Vec<TrainingExample>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split('\t').map(str::trim).filter(|f| !f.is_empty());
        let query = goal_at(fields.next().unwrap(), lineno)?;
        let mut positives = Vec::new();
        let mut negatives = Vec::new();
        for field in fields {
            let (sign, rest) = field.split_at(1);
            let goal = goal_at(rest, lineno)?;
            if !goal.is_ground() {
                return Err(Error::Format {
                    line: lineno,
                    message: format!("answer {rest} is not ground"),
                });
            }
            match sign {
                "+" => positives.push(goal),
                "-" => negatives.push(goal),
                _ => {
                    return Err(Error::Format {
                        line: lineno,
                        message: format!("answer {field:?} must start with + or -"),
                    })
                }
            }
        }
        out.push(
            TrainingExample::new(query, positives, negatives).map_err(|e| Error::Format {
                line: lineno,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}
