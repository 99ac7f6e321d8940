//! Prompt rendering for every prompt shape in the protocol.
//!
//! Rendering is deterministic and whitespace-stable; integration tests diff
//! each shape byte-for-byte against golden files. Demonstration blocks are
//! separated by one blank line and no prompt carries a trailing newline.
//!
//! Shapes:
//! - student CoT ("Q:" / "A:", answers ending "So the answer is <y>")
//! - student with intervention (test block carries the teacher explanation;
//!   for numeric tasks the explanation is left as an open hint so the model
//!   completes the chain)
//! - teacher CoT and teacher rationalization ("The answer is X because Y")
//! - pre/post student simulation ("Simulate an AI model's answer ..." with
//!   "AI Predicted Answer:" framing)
//! - teacher personalization over exclusively helpful explanations
//!   ("Helpful Explanation:" framing)
//! - deceiving teacher (the CoT template over perturbed demonstrations)

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Problem, TaskKind};

pub const SIMULATION_HEADER: &str = "Simulate an AI model's answer for the given question.";
pub const PERSONALIZATION_HEADER: &str =
    "Generate an explanation for the given question that helps the AI model predict the correct answer.";

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{kind:?} requires a teacher explanation")]
    MissingTeacherExplanation { kind: PromptKind },
    #[error("{kind:?} does not take a teacher explanation")]
    UnexpectedTeacherExplanation { kind: PromptKind },
    #[error("{kind:?} requires at least one demonstration")]
    EmptyDemos { kind: PromptKind },
    #[error("{kind:?}: demonstration '{id}' needs a shown prediction")]
    MissingShownPrediction { kind: PromptKind, id: String },
    #[error("{kind:?}: demonstration '{id}' must not carry a shown prediction")]
    UnexpectedShownPrediction { kind: PromptKind, id: String },
}

/// Where an explanation came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplanationSource {
    Human,
    Student,
    Teacher,
    Deceiving,
    /// Plain QA demonstration with no explanation (multi-round `none` arm).
    Unexplained,
}

/// One in-context demonstration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    pub problem: Problem,
    pub explanation: String,
    pub explanation_source: ExplanationSource,
    /// The prediction shown after the explanation; present exactly when the
    /// demonstration is used in a simulation prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shown_prediction: Option<String>,
}

impl Demonstration {
    pub fn human(problem: &Problem) -> Self {
        Demonstration {
            problem: problem.clone(),
            explanation: problem.human_explanation.clone(),
            explanation_source: ExplanationSource::Human,
            shown_prediction: None,
        }
    }
}

/// The eight prompt shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    StudentNoIntervention,
    StudentWithIntervention,
    TeacherCot,
    TeacherRationalize,
    SimPre,
    SimPost,
    TeacherTom,
    TeacherDeceive,
}

impl PromptKind {
    pub const ALL: [PromptKind; 8] = [
        PromptKind::StudentNoIntervention,
        PromptKind::StudentWithIntervention,
        PromptKind::TeacherCot,
        PromptKind::TeacherRationalize,
        PromptKind::SimPre,
        PromptKind::SimPost,
        PromptKind::TeacherTom,
        PromptKind::TeacherDeceive,
    ];

    fn takes_teacher_explanation(self) -> bool {
        matches!(self, PromptKind::StudentWithIntervention | PromptKind::SimPost)
    }

    fn is_simulation(self) -> bool {
        matches!(self, PromptKind::SimPre | PromptKind::SimPost)
    }

    fn header(self) -> Option<&'static str> {
        match self {
            PromptKind::SimPre | PromptKind::SimPost => Some(SIMULATION_HEADER),
            PromptKind::TeacherTom => Some(PERSONALIZATION_HEADER),
            _ => None,
        }
    }
}

/// The answer-claim phrase for a task: multichoice tasks claim a choice
/// index, everything else claims the answer itself.
pub fn claim_phrase(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Multichoice => "So the correct choice is",
        _ => "So the answer is",
    }
}

/// The value named by the answer claim for a problem's gold answer.
pub fn claim_value(problem: &Problem) -> String {
    match problem.gold_choice_index() {
        Some(index) => index.to_string(),
        None => problem.gold_answer.clone(),
    }
}

/// Renders an arbitrary answer the way a claim names it: multichoice
/// answers become their 1-based choice index, everything else is verbatim.
pub fn rendered_answer(problem: &Problem, answer: &str) -> String {
    problem
        .choices
        .as_ref()
        .and_then(|choices| choices.iter().position(|c| c == answer))
        .map(|i| (i + 1).to_string())
        .unwrap_or_else(|| answer.to_string())
}

fn question_lines(problem: &Problem) -> String {
    let mut out = format!("Q: {}", problem.question);
    if let Some(choices) = &problem.choices {
        out.push_str("\nAnswer Choices:");
        for (i, choice) in choices.iter().enumerate() {
            out.push_str(&format!("\nChoice {}: {}", i + 1, choice));
        }
    }
    out
}

/// Joins non-empty fragments with single spaces; keeps "A:" lines stable
/// when a demonstration has no explanation.
fn join_fragments(fragments: &[&str]) -> String {
    fragments
        .iter()
        .filter(|f| !f.is_empty())
        .copied()
        .collect::<Vec<_>>()
        .join(" ")
}

fn demo_block(kind: PromptKind, demo: &Demonstration) -> Result<String, PromptError> {
    let problem = &demo.problem;
    let claim = format!("{} {}", claim_phrase(problem.task_kind), claim_value(problem));
    if kind.is_simulation() {
        let Some(prediction) = &demo.shown_prediction else {
            return Err(PromptError::MissingShownPrediction { kind, id: problem.id.clone() });
        };
        let shown_claim = format!("{} {}", claim_phrase(problem.task_kind), prediction);
        return Ok(format!(
            "{}\n{}",
            question_lines(problem),
            join_fragments(&["AI Predicted Answer:", &demo.explanation, &shown_claim])
        ));
    }
    if demo.shown_prediction.is_some() {
        return Err(PromptError::UnexpectedShownPrediction { kind, id: problem.id.clone() });
    }
    let answer_line = match kind {
        PromptKind::TeacherRationalize => {
            let lead = format!("A: The answer is {} because", claim_value(problem));
            join_fragments(&[&lead, &demo.explanation])
        }
        PromptKind::TeacherTom => {
            join_fragments(&["Helpful Explanation:", &demo.explanation, &claim])
        }
        _ => join_fragments(&["A:", &demo.explanation, &claim]),
    };
    Ok(format!("{}\n{}", question_lines(problem), answer_line))
}

fn test_block(kind: PromptKind, test: &Problem, teacher_explanation: Option<&str>) -> String {
    let question = question_lines(test);
    let tail = match kind {
        PromptKind::StudentNoIntervention | PromptKind::TeacherCot | PromptKind::TeacherDeceive => {
            "A:".to_string()
        }
        PromptKind::StudentWithIntervention => {
            let explanation = teacher_explanation.unwrap_or_default();
            if test.task_kind == TaskKind::Numeric {
                // Partial hint: the student completes the chain itself.
                join_fragments(&["A:", explanation])
            } else {
                join_fragments(&["A:", explanation, claim_phrase(test.task_kind)])
            }
        }
        PromptKind::TeacherRationalize => "A: The answer is".to_string(),
        PromptKind::SimPre => "AI Predicted Answer:".to_string(),
        PromptKind::SimPost => {
            let explanation = teacher_explanation.unwrap_or_default();
            join_fragments(&["AI Predicted Answer:", explanation, claim_phrase(test.task_kind)])
        }
        PromptKind::TeacherTom => "Helpful Explanation:".to_string(),
    };
    format!("{question}\n{tail}")
}

/// Renders one prompt. `teacher_explanation` must be present exactly for the
/// with-intervention and post-simulation shapes.
pub fn render(
    kind: PromptKind,
    demos: &[Demonstration],
    test: &Problem,
    teacher_explanation: Option<&str>,
) -> Result<String, PromptError> {
    if kind.takes_teacher_explanation() && teacher_explanation.is_none() {
        return Err(PromptError::MissingTeacherExplanation { kind });
    }
    if !kind.takes_teacher_explanation() && teacher_explanation.is_some() {
        return Err(PromptError::UnexpectedTeacherExplanation { kind });
    }
    if demos.is_empty() {
        return Err(PromptError::EmptyDemos { kind });
    }
    let mut blocks = Vec::with_capacity(demos.len() + 2);
    if let Some(header) = kind.header() {
        blocks.push(header.to_string());
    }
    for demo in demos {
        blocks.push(demo_block(kind, demo)?);
    }
    blocks.push(test_block(kind, test, teacher_explanation));
    Ok(blocks.join("\n\n"))
}
