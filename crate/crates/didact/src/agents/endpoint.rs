//! Agents backed by a completion endpoint.
//!
//! The agents only render prompts and parse completions; the transport
//! (HTTP, retries, caching) lives behind the [`TextCompletion`] trait so
//! tests can substitute scripted backends.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{first_step_only, Problem, TaskKind};
use crate::prompts::{self, claim_phrase, Demonstration, ExplanationSource, PromptKind};
use crate::rng;

use super::{
    answer_options, enforce_leakage_guard, normalize_answer, parse_prediction, softmax,
    AgentError, AnswerDistribution, Explanation, Prediction, SimQuery, Student, Teacher,
    TeacherMode,
};

/// Decoding temperature; fixed, never configurable (greedy decoding).
pub const GREEDY_TEMPERATURE: f64 = 0.0;

/// One completion call. Temperature is pinned to [`GREEDY_TEMPERATURE`] by
/// construction and therefore not a field.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub prompt: String,
    pub max_tokens: u32,
    pub stop: Vec<String>,
    pub want_scores: bool,
}

/// A completion plus, when requested and available, raw scores for the
/// first generated token keyed by token text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_scores: Option<BTreeMap<String, f64>>,
}

/// Greedy text completion. Implementations must be shareable across worker
/// threads.
pub trait TextCompletion: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, AgentError>;
}

impl<T: TextCompletion + ?Sized> TextCompletion for Arc<T> {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, AgentError> {
        (**self).complete(request)
    }
}

/// How an endpoint agent turns completions into an answer distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMode {
    /// Normalize next-token scores over the option tokens (default).
    Scores,
    /// Tally parsed answers over k repeated completions. Degenerates to
    /// one-hot against a deterministic greedy endpoint.
    SampleFrequency(u32),
    /// One-hot on a single greedy completion.
    OneHot,
}

fn stop_sequences() -> Vec<String> {
    vec!["\n\nQ:".into()]
}

fn endpoint_error(prompt: &str, detail: String) -> AgentError {
    AgentError::Endpoint {
        prompt_digest: rng::digest_hex(prompt),
        detail,
        retriable: false,
    }
}

/// The single-token spelling of each answer option as it appears after the
/// claim phrase: "yes"/"no" for boolean, the 1-based index for multichoice.
fn option_tokens(problem: &Problem) -> Option<Vec<(String, String)>> {
    let options = answer_options(problem)?;
    let tokens = match problem.task_kind {
        TaskKind::Boolean => options.clone(),
        TaskKind::Multichoice => (1..=options.len()).map(|i| i.to_string()).collect(),
        TaskKind::Numeric => return None,
    };
    Some(options.into_iter().zip(tokens).collect())
}

/// Answer distribution for a problem from a rendered prompt, per the
/// configured confidence mode. Returns the distribution and whether a
/// one-hot fallback had to stand in for real scores.
pub fn confidence_over_prompt<C: TextCompletion>(
    backend: &C,
    problem: &Problem,
    prompt: &str,
    mode: ConfidenceMode,
    max_tokens: u32,
) -> Result<(AnswerDistribution, bool), AgentError> {
    let pairs = option_tokens(problem).ok_or(AgentError::OpenAnswerSpace)?;
    match mode {
        ConfidenceMode::Scores => {
            let completion = backend.complete(&CompletionRequest {
                prompt: prompt.to_string(),
                max_tokens: 1,
                stop: stop_sequences(),
                want_scores: true,
            })?;
            if let Some(scores) = completion.token_scores {
                let normalized: BTreeMap<String, f64> = scores
                    .into_iter()
                    .map(|(token, score)| (normalize_answer(&token), score))
                    .collect();
                let raw: Vec<Option<f64>> = pairs
                    .iter()
                    .map(|(_, token)| normalized.get(&normalize_answer(token)).copied())
                    .collect();
                if raw.iter().any(Option::is_some) {
                    // Unscored options get a floor far below anything real.
                    let filled: Vec<f64> = raw.iter().map(|s| s.unwrap_or(-30.0)).collect();
                    let probs = softmax(&filled);
                    return Ok((
                        pairs.iter().map(|(o, _)| o.clone()).zip(probs).collect(),
                        false,
                    ));
                }
            }
            one_hot_fallback(backend, problem, prompt, max_tokens, &pairs)
        }
        ConfidenceMode::SampleFrequency(k) => {
            let mut counts: BTreeMap<String, u32> = BTreeMap::new();
            let mut parsed_total = 0u32;
            for _ in 0..k.max(1) {
                let completion = backend.complete(&CompletionRequest {
                    prompt: prompt.to_string(),
                    max_tokens,
                    stop: stop_sequences(),
                    want_scores: false,
                })?;
                if let Some(answer) = parse_prediction(&completion.text, problem) {
                    *counts.entry(answer).or_insert(0) += 1;
                    parsed_total += 1;
                }
            }
            if parsed_total == 0 {
                return one_hot_fallback(backend, problem, prompt, max_tokens, &pairs);
            }
            Ok((
                pairs
                    .iter()
                    .map(|(option, _)| {
                        let count = counts.get(option).copied().unwrap_or(0);
                        (option.clone(), count as f64 / parsed_total as f64)
                    })
                    .collect(),
                false,
            ))
        }
        ConfidenceMode::OneHot => one_hot_fallback(backend, problem, prompt, max_tokens, &pairs),
    }
}

fn one_hot_fallback<C: TextCompletion>(
    backend: &C,
    problem: &Problem,
    prompt: &str,
    max_tokens: u32,
    pairs: &[(String, String)],
) -> Result<(AnswerDistribution, bool), AgentError> {
    let completion = backend.complete(&CompletionRequest {
        prompt: prompt.to_string(),
        max_tokens,
        stop: stop_sequences(),
        want_scores: false,
    })?;
    let claim = format!("{} {}", claim_phrase(problem.task_kind), completion.text.trim());
    let parsed = parse_prediction(&claim, problem)
        .or_else(|| parse_prediction(&completion.text, problem));
    let dist = match parsed {
        Some(answer) => pairs
            .iter()
            .map(|(option, _)| {
                let p = if *option == answer { 1.0 } else { 0.0 };
                (option.clone(), p)
            })
            .collect(),
        // Unparseable: no information, spread evenly.
        None => {
            let uniform = 1.0 / pairs.len() as f64;
            pairs.iter().map(|(option, _)| (option.clone(), uniform)).collect()
        }
    };
    Ok((dist, true))
}

// ---------------------------------------------------------------------------
// Student
// ---------------------------------------------------------------------------

pub struct EndpointStudent<C: TextCompletion> {
    backend: C,
    max_tokens: u32,
    confidence_mode: ConfidenceMode,
    score_fallbacks: AtomicUsize,
}

impl<C: TextCompletion> EndpointStudent<C> {
    pub fn new(backend: C, max_tokens: u32, confidence_mode: ConfidenceMode) -> Self {
        EndpointStudent {
            backend,
            max_tokens,
            confidence_mode,
            score_fallbacks: AtomicUsize::new(0),
        }
    }

    /// Times a one-hot distribution had to stand in for real option scores.
    pub fn score_fallbacks(&self) -> usize {
        self.score_fallbacks.load(Ordering::Relaxed)
    }

    fn render(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<String, AgentError> {
        let kind = if intervention.is_some() {
            PromptKind::StudentWithIntervention
        } else {
            PromptKind::StudentNoIntervention
        };
        Ok(prompts::render(kind, demos, problem, intervention.map(|e| e.text.as_str()))?)
    }
}

impl<C: TextCompletion> Student for EndpointStudent<C> {
    fn predict(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<Prediction, AgentError> {
        let prompt = self.render(problem, demos, intervention)?;
        let completion = self.backend.complete(&CompletionRequest {
            prompt: prompt.clone(),
            max_tokens: self.max_tokens,
            stop: stop_sequences(),
            want_scores: false,
        })?;
        let raw = completion.text;
        // Under intervention the prompt already ends with the claim phrase,
        // so the completion is just the answer token(s); re-attach the
        // phrase for uniform parsing.
        let parse_view = if intervention.is_some() && problem.task_kind != TaskKind::Numeric {
            format!("{} {}", claim_phrase(problem.task_kind), raw.trim())
        } else {
            raw.clone()
        };
        let parsed = parse_prediction(&parse_view, problem);
        let explanation_used = match intervention {
            Some(explanation) => explanation.text.clone(),
            None => crate::dataset::strip_final_claim(&raw).trim().to_string(),
        };
        Ok(Prediction {
            answer: parsed.clone().unwrap_or_default(),
            confidence: 1.0,
            explanation_used,
            raw_output: raw,
            parseable: parsed.is_some(),
        })
    }

    fn answer_confidence(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<AnswerDistribution, AgentError> {
        let prompt = self.render(problem, demos, intervention)?;
        let (dist, fallback) = confidence_over_prompt(
            &self.backend,
            problem,
            &prompt,
            self.confidence_mode,
            self.max_tokens,
        )?;
        if fallback {
            self.score_fallbacks.fetch_add(1, Ordering::Relaxed);
        }
        Ok(dist)
    }
}

// ---------------------------------------------------------------------------
// Teacher
// ---------------------------------------------------------------------------

pub struct EndpointTeacher<C: TextCompletion> {
    backend: C,
    max_tokens: u32,
    confidence_mode: ConfidenceMode,
}

impl<C: TextCompletion> EndpointTeacher<C> {
    pub fn new(backend: C, max_tokens: u32, confidence_mode: ConfidenceMode) -> Self {
        EndpointTeacher { backend, max_tokens, confidence_mode }
    }

    fn generate(&self, prompt: &str) -> Result<String, AgentError> {
        let completion = self.backend.complete(&CompletionRequest {
            prompt: prompt.to_string(),
            max_tokens: self.max_tokens,
            stop: stop_sequences(),
            want_scores: false,
        })?;
        Ok(completion.text)
    }

    /// Pulls the explanation body out of a raw generation for a mode.
    fn extract(mode: TeacherMode, raw: &str) -> (String, bool) {
        match mode {
            TeacherMode::Rationalize => {
                // Completion of "A: The answer is" reads "X because Y".
                match raw.split_once(" because ") {
                    Some((_, reason)) => (reason.trim().to_string(), false),
                    None => (raw.trim().to_string(), true),
                }
            }
            _ => (raw.trim().to_string(), false),
        }
    }
}

impl<C: TextCompletion> Teacher for EndpointTeacher<C> {
    fn explain(
        &self,
        problem: &Problem,
        mode: TeacherMode,
        demos: &[Demonstration],
    ) -> Result<Explanation, AgentError> {
        if mode == TeacherMode::Human {
            let mut flagged = false;
            let text = if problem.task_kind == TaskKind::Numeric {
                let step = first_step_only(&problem.human_explanation);
                flagged = !step.terminated;
                step.text
            } else {
                problem.human_explanation.clone()
            };
            return Ok(Explanation { text, source: ExplanationSource::Human, flagged });
        }
        let kind = match mode {
            TeacherMode::Cot => PromptKind::TeacherCot,
            TeacherMode::Rationalize => PromptKind::TeacherRationalize,
            TeacherMode::Tom => PromptKind::TeacherTom,
            TeacherMode::Deceive => PromptKind::TeacherDeceive,
            TeacherMode::Human => unreachable!(),
        };
        let prompt = prompts::render(kind, demos, problem, None)?;

        let mut flagged = false;
        let mut guarded = String::new();
        // One regeneration attempt when the leakage guard trips; a greedy
        // endpoint may well repeat itself, in which case the cut text is
        // kept and the explanation flagged.
        for attempt in 0..2 {
            let raw = self.generate(&prompt)?;
            let (body, extract_flag) = Self::extract(mode, &raw);
            let (text, tripped) = enforce_leakage_guard(&body, problem);
            guarded = text;
            flagged = extract_flag;
            if !tripped {
                break;
            }
            flagged = attempt == 1;
        }
        if problem.task_kind == TaskKind::Numeric {
            let step = first_step_only(&guarded);
            flagged |= !step.terminated;
            guarded = step.text;
        }
        Ok(Explanation { text: guarded, source: mode.as_source(), flagged })
    }

    fn predict(&self, problem: &Problem, demos: &[Demonstration]) -> Result<Prediction, AgentError> {
        let prompt = prompts::render(PromptKind::TeacherCot, demos, problem, None)?;
        let raw = self.generate(&prompt)?;
        let parsed = parse_prediction(&raw, problem);
        Ok(Prediction {
            answer: parsed.clone().unwrap_or_default(),
            confidence: 1.0,
            explanation_used: crate::dataset::strip_final_claim(&raw).trim().to_string(),
            raw_output: raw,
            parseable: parsed.is_some(),
        })
    }

    fn own_confidence(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
    ) -> Result<AnswerDistribution, AgentError> {
        let prompt = prompts::render(PromptKind::TeacherCot, demos, problem, None)?;
        let (dist, _) = confidence_over_prompt(
            &self.backend,
            problem,
            &prompt,
            self.confidence_mode,
            self.max_tokens,
        )?;
        Ok(dist)
    }

    fn simulate_student(&self, query: &SimQuery<'_>) -> Result<AnswerDistribution, AgentError> {
        let (dist, _) = confidence_over_prompt(
            &self.backend,
            query.problem,
            &query.prompt,
            self.confidence_mode,
            self.max_tokens,
        )?;
        Ok(dist)
    }

    fn simulate_student_greedy(&self, query: &SimQuery<'_>) -> Result<String, AgentError> {
        let raw = self.generate(&query.prompt)?;
        let view = format!("{} {}", claim_phrase(query.problem.task_kind), raw.trim());
        parse_prediction(&view, query.problem)
            .or_else(|| parse_prediction(&raw, query.problem))
            .ok_or_else(|| endpoint_error(&query.prompt, "unparseable simulation rollout".into()))
    }
}
