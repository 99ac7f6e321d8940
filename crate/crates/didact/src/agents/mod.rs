//! Uniform agent interface for students and teachers.
//!
//! Two backends implement it: simulated agents with exactly specified
//! stochastic behavior (see [`simulated`]) and completion-endpoint agents
//! (see [`endpoint`]). All agents are safe to call from concurrent workers;
//! simulated draws are pure functions of `(profile, seed, conditioning)` so
//! evaluation order never perturbs results.

pub mod endpoint;
pub mod simulated;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Problem, TaskKind};
use crate::mental_model::Phase;
use crate::prompts::{Demonstration, ExplanationSource, PromptError};

pub use endpoint::{Completion, CompletionRequest, ConfidenceMode, TextCompletion, GREEDY_TEMPERATURE};
pub use simulated::{SimProfile, SimulatedStudent, SimulatedTeacher};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("endpoint failure for prompt {prompt_digest}: {detail}")]
    Endpoint {
        prompt_digest: String,
        detail: String,
        retriable: bool,
    },
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("no profile entry for item '{0}'")]
    MissingProfileEntry(String),
    #[error("answer confidence is undefined over an open answer space")]
    OpenAnswerSpace,
    #[error("{0}")]
    Other(String),
}

/// An agent's answer with the confidence it reports and the explanation it
/// conditioned on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub answer: String,
    pub confidence: f64,
    pub explanation_used: String,
    pub raw_output: String,
    /// False when the raw output could not be parsed into an answer; such
    /// predictions count as incorrect.
    pub parseable: bool,
}

/// Probability mass over the enumerable answer options of a problem.
pub type AnswerDistribution = BTreeMap<String, f64>;

/// True when the distribution is a probability distribution up to 1e-6.
pub fn distribution_is_normalized(dist: &AnswerDistribution) -> bool {
    dist.values().all(|&p| (0.0..=1.0 + 1e-9).contains(&p))
        && (dist.values().sum::<f64>() - 1.0).abs() <= 1e-6
}

/// An explanation produced by a teacher, ready to communicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub text: String,
    pub source: ExplanationSource,
    /// Set when the leakage guard tripped twice or a math rationale had no
    /// sentence terminator to truncate at.
    pub flagged: bool,
}

/// How a teacher produces its explanation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeacherMode {
    /// Solve the task with chain-of-thought, keep the reasoning.
    Cot,
    /// Post-hoc rationalization: "The answer is X because Y".
    Rationalize,
    /// Personalized generation conditioned on exclusively helpful
    /// demonstrations.
    Tom,
    /// Misaligned generation conditioned on wrong answers and perturbed
    /// explanations.
    Deceive,
    /// Return the dataset's human explanation verbatim.
    Human,
}

impl TeacherMode {
    pub fn as_source(self) -> ExplanationSource {
        match self {
            TeacherMode::Human => ExplanationSource::Human,
            TeacherMode::Deceive => ExplanationSource::Deceiving,
            _ => ExplanationSource::Teacher,
        }
    }
}

/// A mental-model simulation request: the rendered simulation prompt plus
/// the structured facts the prompt was built from.
pub struct SimQuery<'a> {
    pub problem: &'a Problem,
    pub phase: Phase,
    pub prompt: String,
}

/// The student side of the communication game.
pub trait Student: Send + Sync {
    /// Predicts an answer, explaining itself when no intervention is given
    /// and conditioning on the teacher's explanation when one is.
    fn predict(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<Prediction, AgentError>;

    /// The student's true answer distribution under the same conditioning.
    fn answer_confidence(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<AnswerDistribution, AgentError>;
}

/// The teacher side: explanation generation, its own task competence, and
/// the few-shot mental model of the student.
pub trait Teacher: Send + Sync {
    fn explain(
        &self,
        problem: &Problem,
        mode: TeacherMode,
        demos: &[Demonstration],
    ) -> Result<Explanation, AgentError>;

    fn predict(&self, problem: &Problem, demos: &[Demonstration]) -> Result<Prediction, AgentError>;

    /// The teacher's confidence over the answer options of a problem.
    fn own_confidence(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
    ) -> Result<AnswerDistribution, AgentError>;

    /// Reads the mental model: the answer distribution the teacher expects
    /// the student to produce for a rendered simulation prompt.
    fn simulate_student(&self, query: &SimQuery<'_>) -> Result<AnswerDistribution, AgentError>;

    /// Greedy mental-model rollout for open answer spaces: the single answer
    /// the teacher expects the student to produce.
    fn simulate_student_greedy(&self, query: &SimQuery<'_>) -> Result<String, AgentError>;
}

/// Lowercases, trims, strips wrapping punctuation, and collapses internal
/// whitespace.
pub fn normalize_answer(text: &str) -> String {
    let trimmed = text
        .trim()
        .trim_matches(|c: char| c.is_ascii_punctuation() && c != '-')
        .to_lowercase();
    trimmed.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// The enumerable answer options of a problem, `None` for numeric tasks.
pub fn answer_options(problem: &Problem) -> Option<Vec<String>> {
    match problem.task_kind {
        TaskKind::Boolean => Some(vec!["yes".into(), "no".into()]),
        TaskKind::Multichoice => problem.choices.clone(),
        TaskKind::Numeric => None,
    }
}

/// Whether a prediction matches the gold answer. Numeric answers compare as
/// decimals, everything else after normalization. Unparseable predictions
/// are incorrect.
pub fn is_correct(prediction: &Prediction, problem: &Problem) -> bool {
    if !prediction.parseable {
        return false;
    }
    answers_match(&prediction.answer, &problem.gold_answer, problem.task_kind)
}

pub fn answers_match(candidate: &str, gold: &str, kind: TaskKind) -> bool {
    if kind == TaskKind::Numeric {
        if let (Ok(a), Ok(b)) = (parse_number(candidate), parse_number(gold)) {
            return a == b;
        }
    }
    normalize_answer(candidate) == normalize_answer(gold)
}

fn parse_number(text: &str) -> Result<f64, std::num::ParseFloatError> {
    text.trim()
        .trim_end_matches('.')
        .replace(['$', ','], "")
        .parse::<f64>()
}

/// Extracts a normalized answer from raw chain-of-thought output.
///
/// Looks for the trailing answer claim first, then falls back to the
/// conservative per-task patterns (standalone yes/no, "choice k", last
/// number). Returns `None` when nothing matches.
pub fn parse_prediction(raw: &str, problem: &Problem) -> Option<String> {
    let lower = raw.to_lowercase();
    for marker in ["so the correct choice is", "so the answer is", "the answer is"] {
        if let Some(pos) = lower.rfind(marker) {
            let tail = &raw[pos + marker.len()..];
            if let Some(answer) = match_answer_token(tail, problem) {
                return Some(answer);
            }
        }
    }
    match problem.task_kind {
        TaskKind::Boolean => last_bool_token(&lower),
        TaskKind::Multichoice => {
            if let Some(pos) = lower.rfind("choice") {
                if let Some(answer) = match_answer_token(&raw[pos + "choice".len()..], problem) {
                    return Some(answer);
                }
            }
            match_choice_text(&lower, problem)
        }
        TaskKind::Numeric => last_number_token(raw),
    }
}

fn match_answer_token(tail: &str, problem: &Problem) -> Option<String> {
    let tail = tail.trim_start_matches([' ', ':']);
    let stop = tail
        .find(" because")
        .or_else(|| tail.find('\n'))
        .unwrap_or(tail.len());
    let head = &tail[..stop];
    match problem.task_kind {
        TaskKind::Boolean => {
            let token = normalize_answer(head.split_whitespace().next()?);
            matches!(token.as_str(), "yes" | "no").then_some(token)
        }
        TaskKind::Multichoice => {
            let choices = problem.choices.as_ref()?;
            let token = normalize_answer(head.split_whitespace().next()?);
            if let Ok(index) = token.parse::<usize>() {
                if (1..=choices.len()).contains(&index) {
                    return Some(choices[index - 1].clone());
                }
            }
            let normalized_head = normalize_answer(head);
            choices
                .iter()
                .find(|c| normalized_head.starts_with(&normalize_answer(c)))
                .cloned()
        }
        TaskKind::Numeric => head
            .split_whitespace()
            .find_map(|token| parse_number(token).ok())
            .map(format_number),
    }
}

fn last_bool_token(lower: &str) -> Option<String> {
    lower
        .split(|c: char| !c.is_ascii_alphabetic())
        .rfind(|t| *t == "yes" || *t == "no")
        .map(str::to_string)
}

fn match_choice_text(lower: &str, problem: &Problem) -> Option<String> {
    let choices = problem.choices.as_ref()?;
    let last_line = lower.lines().last()?;
    choices
        .iter()
        .find(|c| last_line.contains(&normalize_answer(c)))
        .cloned()
}

fn last_number_token(raw: &str) -> Option<String> {
    raw.split_whitespace()
        .rev()
        .find_map(|token| {
            let cleaned: String = token
                .chars()
                .filter(|c| c.is_ascii_digit() || *c == '.' || *c == '-')
                .collect();
            parse_number(&cleaned).ok()
        })
        .map(format_number)
}

/// Renders a decimal without a trailing ".0" for whole values.
pub fn format_number(value: f64) -> String {
    if value.fract() == 0.0 && value.abs() < 1e15 {
        format!("{}", value as i64)
    } else {
        format!("{value}")
    }
}

/// Strips any trailing answer claim from a generated explanation and cuts
/// out a residual claim that would still name the gold answer.
///
/// Returns the safe text and `true` when the guard tripped (the text had to
/// be cut beyond the ordinary final-claim strip).
pub fn enforce_leakage_guard(text: &str, problem: &Problem) -> (String, bool) {
    let stripped = crate::dataset::strip_final_claim(text).to_string();
    if problem.task_kind == TaskKind::Numeric {
        return (stripped, false);
    }
    let lower = stripped.to_lowercase();
    let gold = normalize_answer(&problem.gold_answer);
    let gold_index = problem.gold_choice_index().map(|i| i.to_string());
    for marker in ["the answer is", "the correct choice is"] {
        if let Some(pos) = lower.rfind(marker) {
            let tail = normalize_answer(&lower[pos + marker.len()..]);
            let names_gold = tail.starts_with(&gold)
                || gold_index.as_deref().is_some_and(|i| tail.starts_with(i));
            if names_gold {
                return (stripped[..pos].trim_end().to_string(), true);
            }
        }
    }
    (stripped, false)
}

/// Numerically stable softmax over raw scores.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn boolean(gold: &str) -> Problem {
        Problem {
            id: "b1".into(),
            question: "q?".into(),
            choices: None,
            gold_answer: gold.into(),
            human_explanation: "e.".into(),
            task_kind: TaskKind::Boolean,
        }
    }

    fn mcq() -> Problem {
        Problem {
            id: "m1".into(),
            question: "q?".into(),
            choices: Some(vec!["bloody mess".into(), "pleasure".into(), "cake".into()]),
            gold_answer: "bloody mess".into(),
            human_explanation: "e.".into(),
            task_kind: TaskKind::Multichoice,
        }
    }

    fn numeric() -> Problem {
        Problem {
            id: "n1".into(),
            question: "q?".into(),
            choices: None,
            gold_answer: "72".into(),
            human_explanation: "e.".into(),
            task_kind: TaskKind::Numeric,
        }
    }

    #[test]
    fn parses_boolean_claims() {
        let p = boolean("yes");
        assert_eq!(parse_prediction("Some facts. So the answer is yes", &p).unwrap(), "yes");
        assert_eq!(parse_prediction("So the answer is No.", &p).unwrap(), "no");
        assert_eq!(parse_prediction("I think no", &p).unwrap(), "no");
        assert_eq!(parse_prediction("unclear output", &p), None);
    }

    #[test]
    fn parses_choice_claims_by_index_and_text() {
        let p = mcq();
        assert_eq!(
            parse_prediction("Reasoning. So the correct choice is 3", &p).unwrap(),
            "cake"
        );
        assert_eq!(
            parse_prediction("So the answer is bloody mess", &p).unwrap(),
            "bloody mess"
        );
        assert_eq!(parse_prediction("Choice 2 fits best", &p).unwrap(), "pleasure");
    }

    #[test]
    fn parses_numeric_claims_and_falls_back_to_last_number() {
        let p = numeric();
        assert_eq!(parse_prediction("So the answer is 72", &p).unwrap(), "72");
        assert_eq!(parse_prediction("48 + 24 = 72", &p).unwrap(), "72");
        assert_eq!(parse_prediction("So the answer is $1,234.", &p).unwrap(), "1234");
    }

    #[test]
    fn rationalization_answers_stop_at_because() {
        let p = boolean("yes");
        assert_eq!(
            parse_prediction("The answer is yes because Caesar had three children.", &p).unwrap(),
            "yes"
        );
    }

    #[test]
    fn numeric_comparison_is_decimal_not_textual() {
        assert!(answers_match("72.0", "72", TaskKind::Numeric));
        assert!(!answers_match("72.5", "72", TaskKind::Numeric));
    }

    #[test]
    fn softmax_normalizes() {
        let probs = softmax(&[-0.1, -2.4]);
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(probs[0] > probs[1]);
    }
}
