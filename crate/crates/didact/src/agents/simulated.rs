//! Simulated agents with exactly specified stochastic behavior.
//!
//! A [`SimProfile`] fixes, per item, the probability that the student answers
//! correctly with its own explanation (`p_pre`) and with a teacher
//! explanation (`p_post`), plus the teacher's task accuracy. Simulated
//! explanations are ordinary template strings carrying a hidden answer cue
//! (`[[cue:<digest>]]`); students interpret only that cue through their
//! profile, so explanations stay opaque text at the simulation level.
//!
//! Every draw is a pure function of `(profile, run seed, item, conditioning)`.
//! Two calls with identical conditioning return identical results, mirroring
//! greedy decoding, and evaluation order or worker count cannot perturb a
//! run.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::seq::IndexedRandom;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{first_step_only, Problem, TaskKind};
use crate::mental_model::Phase;
use crate::prompts::{claim_phrase, Demonstration, ExplanationSource};
use crate::rng;

use super::{
    answer_options, format_number, normalize_answer, AgentError, AnswerDistribution, Explanation,
    Prediction, SimQuery, Student, Teacher, TeacherMode,
};

/// Ground-truth behavior of the simulated student on one item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemProfile {
    /// Probability of the gold answer with the student's own explanation.
    pub p_pre: f64,
    /// Probability of following a teacher explanation to the answer it
    /// supports.
    pub p_post: f64,
}

/// Additive shift to the student's correctness probability per in-context
/// demonstration, keyed by the demonstration's explanation source. Drives
/// the multi-round teaching dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoGain {
    pub unexplained: f64,
    pub student: f64,
    pub teacher: f64,
    pub human: f64,
}

impl DemoGain {
    fn for_source(&self, source: ExplanationSource) -> f64 {
        match source {
            ExplanationSource::Unexplained => self.unexplained,
            ExplanationSource::Student => self.student,
            ExplanationSource::Teacher | ExplanationSource::Deceiving => self.teacher,
            ExplanationSource::Human => self.human,
        }
    }
}

/// Per-item ground truth for a pair of simulated agents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimProfile {
    pub items: BTreeMap<String, ItemProfile>,
    pub teacher_accuracy: f64,
    /// Probability that a deceiving explanation supports a wrong answer.
    /// Defaults to `teacher_accuracy` (a misaligned teacher misleads as
    /// reliably as an aligned one helps).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deceive_rate: Option<f64>,
    /// Half-width of the uniform noise on confidences the student reports.
    #[serde(default)]
    pub confidence_noise: f64,
    /// Half-width of the uniform noise on the teacher's mental-model
    /// estimates of student confidence.
    #[serde(default)]
    pub mental_noise: f64,
    #[serde(default)]
    pub demo_gain: DemoGain,
}

impl SimProfile {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, AgentError> {
        let text = fs::read_to_string(path.as_ref())
            .map_err(|e| AgentError::Other(format!("cannot read profile: {e}")))?;
        let profile: SimProfile = serde_json::from_str(&text)
            .map_err(|e| AgentError::Other(format!("malformed profile: {e}")))?;
        profile.validate().map_err(AgentError::Other)?;
        Ok(profile)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), AgentError> {
        let text = serde_json::to_string_pretty(self).expect("profile serializes");
        fs::write(path.as_ref(), text)
            .map_err(|e| AgentError::Other(format!("cannot write profile: {e}")))
    }

    pub fn validate(&self) -> Result<(), String> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(format!("{name} must be in [0,1], got {v}"))
            }
        };
        unit("teacher_accuracy", self.teacher_accuracy)?;
        unit("confidence_noise", self.confidence_noise)?;
        unit("mental_noise", self.mental_noise)?;
        if let Some(rate) = self.deceive_rate {
            unit("deceive_rate", rate)?;
        }
        for (id, item) in &self.items {
            unit(&format!("items.{id}.p_pre"), item.p_pre)?;
            unit(&format!("items.{id}.p_post"), item.p_post)?;
        }
        Ok(())
    }

    pub fn item(&self, id: &str) -> Result<&ItemProfile, AgentError> {
        self.items
            .get(id)
            .ok_or_else(|| AgentError::MissingProfileEntry(id.to_string()))
    }

    /// Checks that every id in `problems` has a profile entry.
    pub fn ensure_covers<'a>(
        &self,
        problems: impl IntoIterator<Item = &'a Problem>,
    ) -> Result<(), AgentError> {
        for problem in problems {
            self.item(&problem.id)?;
        }
        Ok(())
    }

    fn deceive_rate(&self) -> f64 {
        self.deceive_rate.unwrap_or(self.teacher_accuracy)
    }

    fn mass(&self, id: &str, phase: Phase) -> Result<f64, AgentError> {
        let item = self.item(id)?;
        Ok(match phase {
            Phase::Pre => item.p_pre,
            Phase::Post => item.p_post,
        })
    }
}

// ---------------------------------------------------------------------------
// Hidden answer cues
// ---------------------------------------------------------------------------

/// The hidden cue a simulated explanation carries for the answer it
/// supports. The digest keeps the literal answer token out of the text.
pub fn answer_cue(answer: &str) -> String {
    format!("[[cue:{}]]", rng::digest_hex(&normalize_answer(answer)))
}

fn cue_digest(text: &str) -> Option<&str> {
    let start = text.rfind("[[cue:")? + "[[cue:".len();
    let end = text[start..].find("]]")? + start;
    Some(&text[start..end])
}

/// Which answer an explanation's cue supports, resolved against a problem's
/// candidates. `None` when the text carries no cue (human or endpoint text,
/// treated as supporting the gold answer).
pub fn cue_target(text: &str, problem: &Problem) -> Option<CueTarget> {
    let digest = cue_digest(text)?;
    let matches = |answer: &str| rng::digest_hex(&normalize_answer(answer)) == digest;
    if matches(&problem.gold_answer) {
        return Some(CueTarget::Gold);
    }
    if let Some(options) = answer_options(problem) {
        for option in options {
            if matches(&option) {
                return Some(CueTarget::Wrong(Some(option)));
            }
        }
    }
    Some(CueTarget::Wrong(None))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CueTarget {
    Gold,
    /// Supports a non-gold answer; carries the option when resolvable.
    Wrong(Option<String>),
}

impl CueTarget {
    fn label(&self) -> String {
        match self {
            CueTarget::Gold => "gold".into(),
            CueTarget::Wrong(Some(option)) => format!("wrong:{option}"),
            CueTarget::Wrong(None) => "wrong:?".into(),
        }
    }
}

// ---------------------------------------------------------------------------
// Simulated student
// ---------------------------------------------------------------------------

pub struct SimulatedStudent {
    profile: Arc<SimProfile>,
    seed: u64,
}

impl SimulatedStudent {
    pub fn new(profile: Arc<SimProfile>, seed: u64) -> Self {
        SimulatedStudent { profile, seed }
    }

    fn stream(&self, label: &str, id: &str, ctx: &str) -> ChaCha8Rng {
        rng::stream(self.seed, &["student", label, id, ctx])
    }

    /// The deterministic self-explanation the student would have produced.
    pub fn self_explanation(problem: &Problem) -> String {
        format!("Working through {} from the facts I recall.", problem.id)
    }

    /// Digest of everything the draw conditions on, so identical
    /// conditioning always reproduces the same greedy-style outcome.
    fn conditioning(demos: &[Demonstration], target: Option<&CueTarget>) -> String {
        let mut counts = BTreeMap::new();
        for demo in demos {
            *counts.entry(format!("{:?}", demo.explanation_source)).or_insert(0u32) += 1;
        }
        let target = target.map(|t| t.label()).unwrap_or_else(|| "none".into());
        rng::digest_hex(&format!("{counts:?}|{target}"))
    }

    fn demo_boost(&self, demos: &[Demonstration]) -> f64 {
        demos
            .iter()
            .map(|d| self.profile.demo_gain.for_source(d.explanation_source))
            .sum()
    }

    /// Probability mass the student puts on the answer the current
    /// conditioning steers it toward, plus that steering target.
    fn steering(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<(f64, Option<CueTarget>), AgentError> {
        let item = self.profile.item(&problem.id)?;
        let target = intervention.map(|e| cue_target(&e.text, problem).unwrap_or(CueTarget::Gold));
        let base = if intervention.is_some() { item.p_post } else { item.p_pre };
        let mass = (base + self.demo_boost(demos)).clamp(0.0, 1.0);
        Ok((mass, target))
    }

    /// Exact answer distribution for enumerable tasks: `mass` on the steered
    /// answer, the remainder spread uniformly.
    fn exact_distribution(
        &self,
        problem: &Problem,
        mass: f64,
        target: &Option<CueTarget>,
    ) -> Result<AnswerDistribution, AgentError> {
        let options = answer_options(problem).ok_or(AgentError::OpenAnswerSpace)?;
        let steered = match target {
            Some(CueTarget::Wrong(Some(option))) => option.clone(),
            Some(CueTarget::Wrong(None)) => options
                .iter()
                .find(|o| !super::answers_match(o, &problem.gold_answer, problem.task_kind))
                .cloned()
                .unwrap_or_else(|| problem.gold_answer.clone()),
            _ => problem.gold_answer.clone(),
        };
        let rest = (1.0 - mass) / (options.len() as f64 - 1.0);
        Ok(options
            .into_iter()
            .map(|option| {
                let p = if option == steered { mass } else { rest };
                (option, p)
            })
            .collect())
    }

    fn noised(&self, dist: &AnswerDistribution, problem: &Problem, ctx: &str) -> AnswerDistribution {
        let noise = self.profile.confidence_noise;
        if noise == 0.0 || dist.len() < 2 {
            return dist.clone();
        }
        let mut stream = self.stream("confidence-noise", &problem.id, ctx);
        let (top_key, top_mass) = dist
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (k.clone(), *v))
            .expect("non-empty distribution");
        let shifted = (top_mass + stream.random_range(-noise..=noise)).clamp(0.0, 1.0);
        let scale = if (1.0 - top_mass).abs() < f64::EPSILON {
            0.0
        } else {
            (1.0 - shifted) / (1.0 - top_mass)
        };
        dist.iter()
            .map(|(k, &v)| {
                let p = if *k == top_key { shifted } else { v * scale };
                (k.clone(), p)
            })
            .collect()
    }
}

/// A wrong answer for a problem: the opposite for boolean, a seeded non-gold
/// choice for multichoice, a nearby offset for numeric.
fn wrong_answer(problem: &Problem, stream: &mut ChaCha8Rng) -> String {
    match problem.task_kind {
        TaskKind::Boolean => {
            if problem.gold_answer == "yes" { "no".into() } else { "yes".into() }
        }
        TaskKind::Multichoice => {
            let choices = problem.choices.as_ref().expect("validated multichoice");
            let wrong: Vec<&String> =
                choices.iter().filter(|c| **c != problem.gold_answer).collect();
            (*wrong.choose(stream).expect("at least one wrong choice")).clone()
        }
        TaskKind::Numeric => {
            let gold: f64 = problem.gold_answer.trim().parse().unwrap_or(0.0);
            format_number(gold + stream.random_range(1..=9) as f64)
        }
    }
}

fn render_raw_output(problem: &Problem, explanation: &str, answer: &str) -> String {
    let shown = match problem.task_kind {
        TaskKind::Multichoice => problem
            .choices
            .as_ref()
            .and_then(|cs| cs.iter().position(|c| c == answer))
            .map(|i| (i + 1).to_string())
            .unwrap_or_else(|| answer.to_string()),
        _ => answer.to_string(),
    };
    format!("{explanation} {} {shown}", claim_phrase(problem.task_kind))
}

impl Student for SimulatedStudent {
    fn predict(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<Prediction, AgentError> {
        let (mass, target) = self.steering(problem, demos, intervention)?;
        let ctx = Self::conditioning(demos, target.as_ref());
        let mut stream = self.stream("predict", &problem.id, &ctx);

        let answer = match answer_options(problem) {
            Some(_) => {
                let dist = self.exact_distribution(problem, mass, &target)?;
                let roll: f64 = stream.random();
                let mut acc = 0.0;
                let mut picked = None;
                for (option, p) in &dist {
                    acc += p;
                    if roll < acc {
                        picked = Some(option.clone());
                        break;
                    }
                }
                picked.unwrap_or_else(|| dist.keys().next_back().expect("options").clone())
            }
            None => {
                // Numeric: follow the steered answer with probability `mass`.
                let steered_wrong = matches!(target, Some(CueTarget::Wrong(_)));
                let follows = stream.random::<f64>() < mass;
                if follows != steered_wrong {
                    problem.gold_answer.clone()
                } else {
                    wrong_answer(problem, &mut stream)
                }
            }
        };

        let confidence = match answer_options(problem) {
            Some(_) => {
                let dist = self.exact_distribution(problem, mass, &target)?;
                *self.noised(&dist, problem, &ctx).get(&answer).unwrap_or(&0.0)
            }
            None => {
                let correct_mass = if matches!(target, Some(CueTarget::Wrong(_))) {
                    1.0 - mass
                } else {
                    mass
                };
                let p = if super::answers_match(&answer, &problem.gold_answer, problem.task_kind) {
                    correct_mass
                } else {
                    1.0 - correct_mass
                };
                let noise = self.profile.confidence_noise;
                if noise == 0.0 {
                    p
                } else {
                    let mut s = self.stream("confidence-noise", &problem.id, &ctx);
                    (p + s.random_range(-noise..=noise)).clamp(0.0, 1.0)
                }
            }
        };

        let explanation_used = intervention
            .map(|e| e.text.clone())
            .unwrap_or_else(|| Self::self_explanation(problem));
        Ok(Prediction {
            raw_output: render_raw_output(problem, &explanation_used, &answer),
            answer,
            confidence,
            explanation_used,
            parseable: true,
        })
    }

    fn answer_confidence(
        &self,
        problem: &Problem,
        demos: &[Demonstration],
        intervention: Option<&Explanation>,
    ) -> Result<AnswerDistribution, AgentError> {
        let (mass, target) = self.steering(problem, demos, intervention)?;
        let dist = self.exact_distribution(problem, mass, &target)?;
        let ctx = Self::conditioning(demos, target.as_ref());
        Ok(self.noised(&dist, problem, &ctx))
    }
}

// ---------------------------------------------------------------------------
// Simulated teacher
// ---------------------------------------------------------------------------

pub struct SimulatedTeacher {
    profile: Arc<SimProfile>,
    seed: u64,
}

impl SimulatedTeacher {
    pub fn new(profile: Arc<SimProfile>, seed: u64) -> Self {
        SimulatedTeacher { profile, seed }
    }

    fn stream(&self, label: &str, id: &str, ctx: &str) -> ChaCha8Rng {
        rng::stream(self.seed, &["teacher", label, id, ctx])
    }

    /// The answer this teacher's explanation will support for an item under
    /// a mode; pure in `(seed, item, mode)`.
    fn explanation_target(&self, problem: &Problem, mode: TeacherMode) -> String {
        let mut stream = self.stream("explain", &problem.id, &format!("{mode:?}"));
        let roll: f64 = stream.random();
        let supports_gold = match mode {
            TeacherMode::Human => true,
            TeacherMode::Deceive => roll >= self.profile.deceive_rate(),
            _ => roll < self.profile.teacher_accuracy,
        };
        if supports_gold {
            problem.gold_answer.clone()
        } else {
            wrong_answer(problem, &mut stream)
        }
    }

    fn own_answer(&self, problem: &Problem) -> String {
        let mut stream = self.stream("answer", &problem.id, "");
        if stream.random::<f64>() < self.profile.teacher_accuracy {
            problem.gold_answer.clone()
        } else {
            wrong_answer(problem, &mut stream)
        }
    }

    fn lead(mode: TeacherMode) -> &'static str {
        match mode {
            TeacherMode::Cot => "Weigh the established facts for this question",
            TeacherMode::Rationalize => "The key evidence points one way",
            TeacherMode::Tom => "Focus on the fact the model keeps missing",
            TeacherMode::Deceive => "Note the detail most people overlook",
            TeacherMode::Human => unreachable!("human mode returns dataset text"),
        }
    }
}

impl Teacher for SimulatedTeacher {
    fn explain(
        &self,
        problem: &Problem,
        mode: TeacherMode,
        _demos: &[Demonstration],
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
        let target = self.explanation_target(problem, mode);
        let text = format!("{} {}.", Self::lead(mode), answer_cue(&target));
        let (text, tripped) = super::enforce_leakage_guard(&text, problem);
        Ok(Explanation {
            text,
            source: mode.as_source(),
            flagged: tripped,
        })
    }

    fn predict(&self, problem: &Problem, _demos: &[Demonstration]) -> Result<Prediction, AgentError> {
        self.profile.item(&problem.id)?;
        let answer = self.own_answer(problem);
        let confidence = self.profile.teacher_accuracy;
        Ok(Prediction {
            raw_output: render_raw_output(problem, "From the facts of the task.", &answer),
            answer,
            confidence,
            explanation_used: String::new(),
            parseable: true,
        })
    }

    fn own_confidence(
        &self,
        problem: &Problem,
        _demos: &[Demonstration],
    ) -> Result<AnswerDistribution, AgentError> {
        let options = answer_options(problem).ok_or(AgentError::OpenAnswerSpace)?;
        let own = self.own_answer(problem);
        let mass = self.profile.teacher_accuracy;
        let rest = (1.0 - mass) / (options.len() as f64 - 1.0);
        Ok(options
            .into_iter()
            .map(|option| {
                let p = if option == own { mass } else { rest };
                (option, p)
            })
            .collect())
    }

    fn simulate_student(&self, query: &SimQuery<'_>) -> Result<AnswerDistribution, AgentError> {
        let problem = query.problem;
        let options = answer_options(problem).ok_or(AgentError::OpenAnswerSpace)?;
        let mass = self.profile.mass(&problem.id, query.phase)?;
        let steered = match query.phase {
            Phase::Pre => problem.gold_answer.clone(),
            Phase::Post => match test_block_cue(&query.prompt, problem) {
                Some(CueTarget::Wrong(Some(option))) => option,
                Some(CueTarget::Wrong(None)) => options
                    .iter()
                    .find(|o| !super::answers_match(o, &problem.gold_answer, problem.task_kind))
                    .cloned()
                    .unwrap_or_else(|| problem.gold_answer.clone()),
                _ => problem.gold_answer.clone(),
            },
        };
        let rest = (1.0 - mass) / (options.len() as f64 - 1.0);
        let exact: AnswerDistribution = options
            .into_iter()
            .map(|option| {
                let p = if option == steered { mass } else { rest };
                (option, p)
            })
            .collect();
        Ok(self.mental_noised(exact, problem, query.phase))
    }

    fn simulate_student_greedy(&self, query: &SimQuery<'_>) -> Result<String, AgentError> {
        let problem = query.problem;
        let mass = self.profile.mass(&problem.id, query.phase)?;
        let target = test_block_cue(&query.prompt, problem);
        let steered_wrong = matches!(target, Some(CueTarget::Wrong(_)));
        let cue_label = target.map(|t| t.label()).unwrap_or_else(|| "none".into());
        let mut stream = self.stream(
            "mental-greedy",
            &problem.id,
            &format!("{:?}|{cue_label}", query.phase),
        );
        let follows = stream.random::<f64>() < mass;
        if follows != steered_wrong {
            Ok(problem.gold_answer.clone())
        } else {
            Ok(wrong_answer(problem, &mut stream))
        }
    }
}

impl SimulatedTeacher {
    fn mental_noised(
        &self,
        dist: AnswerDistribution,
        problem: &Problem,
        phase: Phase,
    ) -> AnswerDistribution {
        let noise = self.profile.mental_noise;
        if noise == 0.0 || dist.len() < 2 {
            return dist;
        }
        let mut stream = self.stream("mental-noise", &problem.id, &format!("{phase:?}"));
        let (top_key, top_mass) = dist
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (k.clone(), *v))
            .expect("non-empty distribution");
        let shifted = (top_mass + stream.random_range(-noise..=noise)).clamp(0.0, 1.0);
        let scale = if (1.0 - top_mass).abs() < f64::EPSILON {
            0.0
        } else {
            (1.0 - shifted) / (1.0 - top_mass)
        };
        dist.into_iter()
            .map(|(k, v)| {
                let p = if k == top_key { shifted } else { v * scale };
                (k, p)
            })
            .collect()
    }
}

/// The cue carried by the test block of a simulation prompt (the text after
/// the last "AI Predicted Answer:" line), ignoring cues inside
/// demonstrations.
fn test_block_cue(prompt: &str, problem: &Problem) -> Option<CueTarget> {
    let marker = "AI Predicted Answer:";
    let start = prompt.rfind(marker)? + marker.len();
    cue_target(&prompt[start..], problem)
}

// ---------------------------------------------------------------------------
// Profile generation
// ---------------------------------------------------------------------------

/// A probability distribution over [0,1] for drawing profile entries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Const(f64),
    Uniform(f64, f64),
    Beta(f64, f64),
}

impl Dist {
    pub fn sample(&self, stream: &mut ChaCha8Rng) -> f64 {
        let value = match *self {
            Dist::Const(v) => v,
            Dist::Uniform(lo, hi) => stream.random_range(lo..=hi),
            Dist::Beta(alpha, beta) => {
                use rand_distr::Distribution;
                rand_distr::Beta::new(alpha, beta)
                    .expect("valid beta parameters")
                    .sample(stream)
            }
        };
        value.clamp(0.0, 1.0)
    }

    /// Parses `const:x`, `uniform:a,b`, or `beta:a,b`.
    pub fn parse(text: &str) -> Result<Dist, String> {
        let (kind, args) = text
            .split_once(':')
            .ok_or_else(|| format!("expected kind:args, got '{text}'"))?;
        let values: Vec<f64> = args
            .split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|e| format!("bad number '{a}': {e}")))
            .collect::<Result<_, _>>()?;
        match (kind, values.as_slice()) {
            ("const", [v]) => Ok(Dist::Const(*v)),
            ("uniform", [a, b]) if a <= b => Ok(Dist::Uniform(*a, *b)),
            ("beta", [a, b]) if *a > 0.0 && *b > 0.0 => Ok(Dist::Beta(*a, *b)),
            _ => Err(format!("unsupported distribution '{text}'")),
        }
    }
}

/// Mixed-sign utility shape: a helpful fraction of items jumps from `low`
/// to `high` under intervention, a harmful fraction falls from `high` to
/// `low`, and the rest stay flat at the midpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedSignSpec {
    pub helpful_fraction: f64,
    pub harmful_fraction: f64,
    pub low: f64,
    pub high: f64,
}

#[derive(Debug, Clone)]
pub struct ProfileSpec {
    pub pre: Dist,
    pub post: Dist,
    pub mixed_sign: Option<MixedSignSpec>,
    pub teacher_accuracy: f64,
    pub confidence_noise: f64,
    pub mental_noise: f64,
    pub demo_gain: DemoGain,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec {
            pre: Dist::Const(0.58),
            post: Dist::Const(0.63),
            mixed_sign: None,
            teacher_accuracy: 1.0,
            confidence_noise: 0.0,
            mental_noise: 0.0,
            demo_gain: DemoGain::default(),
        }
    }
}

/// Draws one i.i.d. profile entry per id.
pub fn generate_profile(ids: &[String], spec: &ProfileSpec, seed: u64) -> SimProfile {
    let items = ids
        .iter()
        .map(|id| {
            let mut stream = rng::stream(seed, &["profile", id]);
            let entry = match spec.mixed_sign {
                Some(mix) => {
                    let roll: f64 = stream.random();
                    if roll < mix.helpful_fraction {
                        ItemProfile { p_pre: mix.low, p_post: mix.high }
                    } else if roll < mix.helpful_fraction + mix.harmful_fraction {
                        ItemProfile { p_pre: mix.high, p_post: mix.low }
                    } else {
                        let mid = (mix.low + mix.high) / 2.0;
                        ItemProfile { p_pre: mid, p_post: mid }
                    }
                }
                None => ItemProfile {
                    p_pre: spec.pre.sample(&mut stream),
                    p_post: spec.post.sample(&mut stream),
                },
            };
            (id.clone(), entry)
        })
        .collect();
    SimProfile {
        items,
        teacher_accuracy: spec.teacher_accuracy,
        deceive_rate: None,
        confidence_noise: spec.confidence_noise,
        mental_noise: spec.mental_noise,
        demo_gain: spec.demo_gain,
    }
}

/// Synthetic boolean problems matching generated profile ids, for runs that
/// need no real dataset.
pub fn synthetic_problems(n: usize, seed: u64) -> Vec<Problem> {
    (0..n)
        .map(|i| {
            let id = format!("item-{i:04}");
            let gold = if rng::stream(seed, &["synthetic-gold", &id]).random::<f64>() < 0.5 {
                "yes"
            } else {
                "no"
            };
            Problem {
                question: format!("Does synthetic scenario {i} hold?"),
                choices: None,
                gold_answer: gold.into(),
                human_explanation: format!(
                    "Scenario {i} rests on one relevant fact. That fact settles the question."
                ),
                task_kind: TaskKind::Boolean,
                id,
            }
        })
        .collect()
}
