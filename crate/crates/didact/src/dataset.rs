//! Task datasets: loading, validation, splitting, and the leakage-avoiding
//! rationale truncation used for math tasks.
//!
//! Files are UTF-8, line-delimited JSON with keys
//! `{id, question, choices?, gold_answer, human_explanation, task_kind}`.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {detail}")]
    Malformed { line: usize, detail: String },
    #[error("line {line}: record '{id}': {detail}")]
    Invalid { line: usize, id: String, detail: String },
    #[error("line {line}: duplicate id '{id}'")]
    DuplicateId { line: usize, id: String },
    #[error("split needs {required} problems but only {available} are available")]
    NotEnoughProblems { required: usize, available: usize },
    #[error("demo count {0} outside the supported range 4..=8")]
    DemoCountOutOfRange(usize),
}

/// The three task shapes the engine understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Yes/no questions with free-text supporting facts.
    Boolean,
    /// Five-way (or k-way) multiple choice with per-choice facts.
    Multichoice,
    /// Word problems whose rationale derives a decimal answer step by step.
    Numeric,
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskKind::Boolean => write!(f, "boolean"),
            TaskKind::Multichoice => write!(f, "multichoice"),
            TaskKind::Numeric => write!(f, "numeric"),
        }
    }
}

/// One task instance: question, optional answer choices, gold answer, and a
/// human-written explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub choices: Option<Vec<String>>,
    pub gold_answer: String,
    pub human_explanation: String,
    pub task_kind: TaskKind,
}

impl Problem {
    /// Checks the record-level invariants, returning a human-readable reason
    /// on the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.id.is_empty() {
            return Err("missing field 'id'".into());
        }
        if self.question.is_empty() {
            return Err("missing field 'question'".into());
        }
        if self.human_explanation.is_empty() {
            return Err("missing field 'human_explanation'".into());
        }
        match (&self.choices, self.task_kind) {
            (Some(choices), TaskKind::Multichoice) => {
                if choices.len() < 2 {
                    return Err("multichoice task needs at least two choices".into());
                }
                if !choices.contains(&self.gold_answer) {
                    return Err(format!(
                        "gold_answer '{}' is not one of the choices",
                        self.gold_answer
                    ));
                }
            }
            (Some(_), kind) => {
                return Err(format!("choices present on a {kind} task"));
            }
            (None, TaskKind::Multichoice) => {
                return Err("multichoice task without choices".into());
            }
            (None, TaskKind::Boolean) => {
                if self.gold_answer != "yes" && self.gold_answer != "no" {
                    return Err(format!(
                        "boolean gold_answer must be 'yes' or 'no', got '{}'",
                        self.gold_answer
                    ));
                }
            }
            (None, TaskKind::Numeric) => {
                if self.gold_answer.trim().parse::<f64>().is_err() {
                    return Err(format!(
                        "numeric gold_answer must be a decimal string, got '{}'",
                        self.gold_answer
                    ));
                }
            }
        }
        Ok(())
    }

    /// 1-based index of the gold answer among the choices, for multichoice.
    pub fn gold_choice_index(&self) -> Option<usize> {
        self.choices
            .as_ref()?
            .iter()
            .position(|c| c == &self.gold_answer)
            .map(|i| i + 1)
    }
}

/// A demos / sim-pool / test partition of one dataset.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    /// Prompt demonstrations shown to every agent (4-8 items).
    pub demos: Vec<Problem>,
    /// Held-out pool the teacher observes the student on.
    pub sim_pool: Vec<Problem>,
    /// Evaluation items.
    pub test: Vec<Problem>,
}

/// Loads a line-delimited JSON dataset, validating every record against the
/// expected task kind. Record order is preserved.
pub fn load_dataset(path: impl AsRef<Path>, task_kind: TaskKind) -> Result<Vec<Problem>, DatasetError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_dataset(&text, task_kind)
}

/// Parses dataset text (one JSON object per non-empty line).
pub fn parse_dataset(text: &str, task_kind: TaskKind) -> Result<Vec<Problem>, DatasetError> {
    let mut problems = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let problem: Problem = serde_json::from_str(line).map_err(|e| DatasetError::Malformed {
            line: line_no,
            detail: e.to_string(),
        })?;
        problem.validate().map_err(|detail| DatasetError::Invalid {
            line: line_no,
            id: problem.id.clone(),
            detail,
        })?;
        if problem.task_kind != task_kind {
            return Err(DatasetError::Invalid {
                line: line_no,
                id: problem.id.clone(),
                detail: format!("expected task_kind {task_kind}, got {}", problem.task_kind),
            });
        }
        if !seen.insert(problem.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_no,
                id: problem.id,
            });
        }
        problems.push(problem);
    }
    Ok(problems)
}

/// Writes problems back out in the load format, one JSON object per line.
pub fn save_dataset(path: impl AsRef<Path>, problems: &[Problem]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for problem in problems {
        let line = serde_json::to_string(problem).expect("problem serializes");
        writeln!(out, "{line}").expect("in-memory write");
    }
    fs::write(path, out).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Result of the first-step rationale truncation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FirstStep {
    pub text: String,
    /// False when no sentence terminator was found and the input was
    /// returned unchanged; surfaced as a flag in traces.
    pub terminated: bool,
}

/// Truncates a multi-step rationale to its first step so that communicating
/// it cannot leak the final answer of a math problem.
///
/// Any trailing answer claim ("So the answer is ...") is dropped first, then
/// the prefix up to and including the first sentence terminator ('.', '!' or
/// '?' followed by whitespace or end of text) is returned. Idempotent.
pub fn first_step_only(explanation: &str) -> FirstStep {
    let body = strip_final_claim(explanation);
    let chars: Vec<char> = body.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if matches!(c, '.' | '!' | '?') {
            let at_end = i + 1 == chars.len();
            let before_space = chars.get(i + 1).is_some_and(|n| n.is_whitespace());
            if at_end || before_space {
                return FirstStep {
                    text: chars[..=i].iter().collect(),
                    terminated: true,
                };
            }
        }
    }
    FirstStep {
        text: body.to_string(),
        terminated: false,
    }
}

/// Drops a trailing "So the answer is ..." / "So the correct choice is ..."
/// claim, returning the leading explanation body trimmed of extra space.
pub fn strip_final_claim(text: &str) -> &str {
    let lower = text.to_lowercase();
    for marker in ["so the answer is", "so the correct choice is"] {
        if let Some(pos) = lower.find(marker) {
            return text[..pos].trim_end();
        }
    }
    text.trim_end()
}

/// Deterministically partitions `problems` into demos / sim pool / test.
pub fn split(
    problems: &[Problem],
    demo_count: usize,
    sim_count: usize,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if !(4..=8).contains(&demo_count) {
        return Err(DatasetError::DemoCountOutOfRange(demo_count));
    }
    let required = demo_count + sim_count;
    if required > problems.len() {
        return Err(DatasetError::NotEnoughProblems {
            required,
            available: problems.len(),
        });
    }
    let mut order: Vec<usize> = (0..problems.len()).collect();
    order.shuffle(&mut rng::stream(seed, &["dataset-split"]));

    let take_sorted = |slice: &[usize]| {
        let mut picked: Vec<usize> = slice.to_vec();
        picked.sort_unstable();
        picked.iter().map(|&i| problems[i].clone()).collect::<Vec<_>>()
    };
    Ok(DatasetSplit {
        demos: take_sorted(&order[..demo_count]),
        sim_pool: take_sorted(&order[demo_count..demo_count + sim_count]),
        test: take_sorted(&order[demo_count + sim_count..]),
    })
}
