//! Experiment orchestration: single-round budget sweeps and the multi-round
//! teaching loop.
//!
//! Per seed, the intervention plan is computed once from the scores before
//! any test-time prediction (static rank-then-intervene). Item-level agent
//! failures are recorded and marked incorrect; a run aborts only when more
//! than 10% of a cell's items fail. Items inside a cell may be evaluated by
//! parallel workers; results reduce deterministically by sorting on
//! (seed, budget, id).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    answer_options, answers_match, is_correct, AgentError, Explanation, Student, Teacher,
    TeacherMode,
};
use crate::dataset::{DatasetSplit, Problem, TaskKind};
use crate::intervention::{self, InterventionPlan, PolicyKind, ScoreContext, TrueConfidence};
use crate::mental_model::{build_sim_demos, build_tom_demos, MentalModel, MentalModelError, SimDemos};
use crate::prompts::{Demonstration, ExplanationSource};

/// Fraction of failed items a (seed, budget) cell tolerates before the run
/// aborts.
pub const FAILURE_CEILING: f64 = 0.10;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    MentalModel(#[from] MentalModelError),
    #[error(transparent)]
    Policy(#[from] crate::intervention::PolicyError),
    #[error("aborted: {failed} of {total} items failed in one cell (ceiling {ceiling:.0}%)")]
    TooManyFailures { failed: usize, total: usize, ceiling: f64 },
    #[error("teaching pool has {available} items, {rounds} rounds x {per_round} needs {needed}")]
    PoolTooSmall { available: usize, rounds: usize, per_round: usize, needed: usize },
    #[error("deceive mode needs a deceiving demonstration set")]
    MissingDeceiveDemos,
    #[error("policy {0} needs an enumerable answer space")]
    PolicyNeedsOptions(PolicyKind),
}

/// Per-item outcome inside one trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemRecord {
    pub id: String,
    pub intervened: bool,
    pub explanation_source: ExplanationSource,
    pub answer: String,
    pub confidence: f64,
    pub correct: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

/// One experiment cell: every item outcome plus the cell accuracy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// Curve key: the policy name for single-round runs, the demonstration
    /// mode for multi-round runs.
    pub arm: String,
    pub policy: PolicyKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub round: Option<usize>,
    pub config_hash: String,
    /// Exactly mean(correct) over the records.
    pub accuracy: f64,
    pub failures: usize,
    /// Multi-round only: ids of the explained demonstrations the student
    /// conditioned on this round, in the order they were added.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_demo_ids: Option<Vec<String>>,
    pub records: Vec<ItemRecord>,
}

/// Knobs shared by the single-round runners.
#[derive(Debug, Clone)]
pub struct SingleRoundConfig {
    pub teacher_mode: TeacherMode,
    pub use_gold: bool,
    /// d: observed demonstrations behind the mental model.
    pub sim_demo_count: usize,
    pub workers: usize,
    pub config_hash: String,
    /// Demonstrations for the deceiving teacher (wrong answers, perturbed
    /// explanations); required for [`TeacherMode::Deceive`].
    pub deceive_demos: Option<Vec<Demonstration>>,
}

impl Default for SingleRoundConfig {
    fn default() -> Self {
        SingleRoundConfig {
            teacher_mode: TeacherMode::Cot,
            use_gold: true,
            sim_demo_count: 8,
            workers: 1,
            config_hash: String::new(),
            deceive_demos: None,
        }
    }
}

/// Multi-round demonstration regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemoMode {
    /// Plain QA pairs.
    None,
    StudentExplained,
    TeacherExplained,
}

impl fmt::Display for DemoMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemoMode::None => write!(f, "none"),
            DemoMode::StudentExplained => write!(f, "student_explained"),
            DemoMode::TeacherExplained => write!(f, "teacher_explained"),
        }
    }
}

impl DemoMode {
    pub fn parse(text: &str) -> Option<DemoMode> {
        match text {
            "none" => Some(DemoMode::None),
            "student_explained" => Some(DemoMode::StudentExplained),
            "teacher_explained" => Some(DemoMode::TeacherExplained),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MultiRoundConfig {
    pub rounds: usize,
    pub samples_per_round: usize,
    pub demo_mode: DemoMode,
    /// Reference source for utility; defaults to the teacher's own answers
    /// since the teaching pool need not be labeled for the teacher.
    pub use_gold: bool,
    pub sim_demo_count: usize,
    pub teacher_mode: TeacherMode,
    pub workers: usize,
    pub config_hash: String,
}

impl Default for MultiRoundConfig {
    fn default() -> Self {
        MultiRoundConfig {
            rounds: 5,
            samples_per_round: 2,
            demo_mode: DemoMode::TeacherExplained,
            use_gold: false,
            sim_demo_count: 8,
            teacher_mode: TeacherMode::Tom,
            workers: 1,
            config_hash: String::new(),
        }
    }
}

/// Evaluates `f` over `items` with up to `workers` threads, preserving item
/// order in the output.
pub fn parallel_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    if workers <= 1 || items.len() <= 1 {
        return items.iter().map(&f).collect();
    }
    let chunk = items.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|slice| scope.spawn(|| slice.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|handle| handle.join().expect("worker panicked"))
            .collect()
    })
}

/// Everything prepared for one test item during the scoring pass.
struct ItemPrep {
    explanation: Option<Explanation>,
    failure: Option<String>,
}

struct ScoringPass {
    context: ScoreContext,
    preps: BTreeMap<String, ItemPrep>,
}

fn teacher_demos_for_mode(
    config_mode: TeacherMode,
    split: &DatasetSplit,
    base_demos: &[Demonstration],
    student: &dyn Student,
    deceive_demos: &Option<Vec<Demonstration>>,
    d: usize,
    seed: u64,
) -> Result<Vec<Demonstration>, ProtocolError> {
    match config_mode {
        TeacherMode::Tom => {
            let demos = build_tom_demos(&split.sim_pool, student, base_demos, d, seed)?;
            // Thin personalization evidence falls back to plain human demos.
            if demos.is_empty() {
                Ok(base_demos.to_vec())
            } else {
                Ok(demos)
            }
        }
        TeacherMode::Deceive => deceive_demos
            .clone()
            .ok_or(ProtocolError::MissingDeceiveDemos),
        _ => Ok(base_demos.to_vec()),
    }
}

fn scoring_pass(
    config: &SingleRoundConfig,
    student: &dyn Student,
    teacher: &dyn Teacher,
    mental_model: &MentalModel,
    split: &DatasetSplit,
    policy: PolicyKind,
    seed: u64,
) -> Result<ScoringPass, ProtocolError> {
    let base_demos: Vec<Demonstration> = split.demos.iter().map(Demonstration::human).collect();
    let teacher_demos = teacher_demos_for_mode(
        config.teacher_mode,
        split,
        &base_demos,
        student,
        &config.deceive_demos,
        config.sim_demo_count,
        seed,
    )?;
    let needs_options = matches!(
        policy,
        PolicyKind::StudentLeastConfidence | PolicyKind::TeacherConfidence
    );
    if needs_options && split.test.iter().any(|p| answer_options(p).is_none()) {
        return Err(ProtocolError::PolicyNeedsOptions(policy));
    }

    let sim_demos = if policy.needs_expected() {
        Some(build_sim_demos(
            &split.sim_pool,
            student,
            teacher,
            &base_demos,
            config.teacher_mode,
            config.sim_demo_count.min(split.sim_pool.len()),
            seed,
        )?)
    } else {
        None
    };

    let mut context = ScoreContext { seed, ..ScoreContext::default() };
    let mut preps = BTreeMap::new();

    type PrepResult = (
        Option<Explanation>,
        Option<crate::mental_model::UtilityEstimate>,
        Option<TrueConfidence>,
        Option<f64>,
        Option<f64>,
    );
    let prep_one = |problem: &Problem| -> Result<PrepResult, AgentOrModelError> {
        let mut estimate = None;
        let explanation = if let Some(sim_demos) = &sim_demos {
            let (utility, explanation) = mental_model.expected_utility(
                problem,
                sim_demos,
                teacher,
                config.teacher_mode,
                &teacher_demos,
                config.use_gold,
            )?;
            estimate = Some(utility);
            explanation
        } else {
            teacher.explain(problem, config.teacher_mode, &teacher_demos)?
        };

        let mut true_confidence = None;
        if policy.needs_true_confidence() {
            let reference = if config.use_gold {
                problem.gold_answer.clone()
            } else {
                teacher.predict(problem, &teacher_demos)?.answer
            };
            true_confidence = Some(measure_true_confidence(
                student,
                problem,
                &split.demos.iter().map(Demonstration::human).collect::<Vec<_>>(),
                &explanation,
                &reference,
            )?);
        }

        let mut teacher_confidence = None;
        if policy == PolicyKind::TeacherConfidence {
            let dist = teacher.own_confidence(problem, &teacher_demos)?;
            teacher_confidence = dist.values().cloned().reduce(f64::max);
        }

        let mut student_max = None;
        if policy == PolicyKind::StudentLeastConfidence {
            let base: Vec<Demonstration> = split.demos.iter().map(Demonstration::human).collect();
            let dist = student.answer_confidence(problem, &base, None)?;
            student_max = dist.values().cloned().reduce(f64::max);
        }

        Ok((explanation.into(), estimate, true_confidence, teacher_confidence, student_max))
    };

    let prepared = parallel_map(&split.test, config.workers, |problem| {
        (problem.id.clone(), prep_one(problem))
    });

    for (id, outcome) in prepared {
        match outcome {
            Ok((explanation, estimate, true_confidence, teacher_confidence, student_max)) => {
                if let Some(estimate) = estimate {
                    context.expected.insert(id.clone(), estimate);
                }
                if let Some(measured) = true_confidence {
                    context.true_confidence.insert(id.clone(), measured);
                }
                if let Some(value) = teacher_confidence {
                    context.teacher_confidence.insert(id.clone(), value);
                }
                if let Some(value) = student_max {
                    context.student_max_confidence.insert(id.clone(), value);
                }
                preps.insert(id, ItemPrep { explanation, failure: None });
            }
            Err(err) => {
                preps.insert(id, ItemPrep { explanation: None, failure: Some(err.to_string()) });
            }
        }
    }
    Ok(ScoringPass { context, preps })
}

#[derive(Debug, Error)]
enum AgentOrModelError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Model(#[from] MentalModelError),
}

/// True student confidence on `reference` before and after intervening with
/// `explanation`. Enumerable tasks read the communicated distribution;
/// numeric tasks use the exact-match indicator of a greedy prediction.
fn measure_true_confidence(
    student: &dyn Student,
    problem: &Problem,
    base_demos: &[Demonstration],
    explanation: &Explanation,
    reference: &str,
) -> Result<TrueConfidence, AgentError> {
    let mass_on_reference = |dist: &crate::agents::AnswerDistribution| {
        dist.iter()
            .find(|(option, _)| answers_match(option, reference, problem.task_kind))
            .map(|(_, &p)| p)
            .unwrap_or(0.0)
    };
    match problem.task_kind {
        TaskKind::Numeric => {
            let pre = student.predict(problem, base_demos, None)?;
            let post = student.predict(problem, base_demos, Some(explanation))?;
            Ok(TrueConfidence {
                c_pre: f64::from(answers_match(&pre.answer, reference, problem.task_kind)),
                c_post: f64::from(answers_match(&post.answer, reference, problem.task_kind)),
            })
        }
        _ => {
            let pre = student.answer_confidence(problem, base_demos, None)?;
            let post = student.answer_confidence(problem, base_demos, Some(explanation))?;
            Ok(TrueConfidence { c_pre: mass_on_reference(&pre), c_post: mass_on_reference(&post) })
        }
    }
}

/// Runs one policy across every (seed, budget) cell.
///
/// Per seed, scores are computed once; each budget is then a prefix of the
/// same ranking. The student answers with the teacher's explanation exactly
/// on selected items and with its own everywhere else.
#[allow(clippy::too_many_arguments)]
pub fn run_single_round(
    config: &SingleRoundConfig,
    student: &dyn Student,
    teacher: &dyn Teacher,
    mental_model: &MentalModel,
    split: &DatasetSplit,
    policy: PolicyKind,
    budgets: &[f64],
    seeds: &[u64],
) -> Result<Vec<Trace>, ProtocolError> {
    let base_demos: Vec<Demonstration> = split.demos.iter().map(Demonstration::human).collect();
    let mut seeds_sorted = seeds.to_vec();
    seeds_sorted.sort_unstable();
    let mut budgets_sorted = budgets.to_vec();
    budgets_sorted.sort_by(f64::total_cmp);

    let mut traces = Vec::new();
    for &seed in &seeds_sorted {
        let pass = scoring_pass(config, student, teacher, mental_model, split, policy, seed)?;
        let scorable: Vec<Problem> = split
            .test
            .iter()
            .filter(|p| pass.preps[&p.id].failure.is_none())
            .cloned()
            .collect();
        let mut scores = intervention::score(policy, &scorable, &pass.context)?;
        for problem in &split.test {
            // Failed items stay in the ranking with a neutral score; they
            // are marked incorrect either way.
            scores.entry(problem.id.clone()).or_insert(0.0);
        }

        for &budget in &budgets_sorted {
            let plan = intervention::select(&scores, policy, budget)?;
            let trace = evaluate_cell(
                config,
                student,
                &base_demos,
                split,
                policy,
                &plan,
                &pass.preps,
                seed,
                budget,
            )?;
            traces.push(trace);
        }
    }
    Ok(traces)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    config: &SingleRoundConfig,
    student: &dyn Student,
    base_demos: &[Demonstration],
    split: &DatasetSplit,
    policy: PolicyKind,
    plan: &InterventionPlan,
    preps: &BTreeMap<String, ItemPrep>,
    seed: u64,
    budget: f64,
) -> Result<Trace, ProtocolError> {
    let records_unsorted = parallel_map(&split.test, config.workers, |problem| {
        let prep = &preps[&problem.id];
        if let Some(reason) = &prep.failure {
            return ItemRecord {
                id: problem.id.clone(),
                intervened: false,
                explanation_source: ExplanationSource::Student,
                answer: String::new(),
                confidence: 0.0,
                correct: false,
                flags: vec![format!("scoring_failed: {reason}")],
            };
        }
        let selected = plan.selected.contains(&problem.id);
        let intervention = if selected { prep.explanation.as_ref() } else { None };
        match student.predict(problem, base_demos, intervention) {
            Ok(prediction) => {
                let mut flags = Vec::new();
                if !prediction.parseable {
                    flags.push("unparseable".into());
                }
                if intervention.is_some_and(|e| e.flagged) {
                    flags.push("explanation_flagged".into());
                }
                ItemRecord {
                    id: problem.id.clone(),
                    intervened: selected,
                    explanation_source: intervention
                        .map(|e| e.source)
                        .unwrap_or(ExplanationSource::Student),
                    correct: is_correct(&prediction, problem),
                    answer: prediction.answer,
                    confidence: prediction.confidence,
                    flags,
                }
            }
            Err(err) => ItemRecord {
                id: problem.id.clone(),
                intervened: selected,
                explanation_source: ExplanationSource::Student,
                answer: String::new(),
                confidence: 0.0,
                correct: false,
                flags: vec![format!("agent_error: {err}")],
            },
        }
    });

    let mut records = records_unsorted;
    records.sort_by(|a, b| a.id.cmp(&b.id));
    let failures = records
        .iter()
        .filter(|r| r.flags.iter().any(|f| f.starts_with("scoring_failed") || f.starts_with("agent_error")))
        .count();
    let total = records.len();
    if (failures as f64) > FAILURE_CEILING * total as f64 {
        return Err(ProtocolError::TooManyFailures { failed: failures, total, ceiling: FAILURE_CEILING });
    }
    let correct = records.iter().filter(|r| r.correct).count();
    Ok(Trace {
        arm: policy.to_string(),
        policy,
        seed,
        budget: Some(budget),
        round: None,
        config_hash: config.config_hash.clone(),
        accuracy: correct as f64 / total as f64,
        failures,
        generated_demo_ids: None,
        records,
    })
}

/// The misaligned variant: rank by ascending expected utility, optionally
/// with a deceiving teacher. A thin delegation kept as its own entry point
/// so configs read naturally.
pub fn run_misaligned_round(
    config: &SingleRoundConfig,
    student: &dyn Student,
    teacher: &dyn Teacher,
    mental_model: &MentalModel,
    split: &DatasetSplit,
    budgets: &[f64],
    seeds: &[u64],
) -> Result<Vec<Trace>, ProtocolError> {
    run_single_round(
        config,
        student,
        teacher,
        mental_model,
        split,
        PolicyKind::NegExpectedUtility,
        budgets,
        seeds,
    )
}

/// Multi-round teaching: each round the teacher explains the
/// highest-expected-utility pool items, the explained demonstrations join
/// the student's prompt, and the student answers every test item with no
/// test-time intervention.
#[allow(clippy::too_many_arguments)]
pub fn run_multi_round(
    config: &MultiRoundConfig,
    student: &dyn Student,
    teacher: &dyn Teacher,
    mental_model: &MentalModel,
    split: &DatasetSplit,
    pool: &[Problem],
    test: &[Problem],
    seeds: &[u64],
) -> Result<Vec<Trace>, ProtocolError> {
    let needed = config.rounds * config.samples_per_round;
    if needed > pool.len() {
        return Err(ProtocolError::PoolTooSmall {
            available: pool.len(),
            rounds: config.rounds,
            per_round: config.samples_per_round,
            needed,
        });
    }
    let base_demos: Vec<Demonstration> = split.demos.iter().map(Demonstration::human).collect();
    let mut seeds_sorted = seeds.to_vec();
    seeds_sorted.sort_unstable();

    let mut traces = Vec::new();
    for &seed in &seeds_sorted {
        let sim_demos = build_sim_demos(
            &split.sim_pool,
            student,
            teacher,
            &base_demos,
            config.teacher_mode,
            config.sim_demo_count.min(split.sim_pool.len()),
            seed,
        )?;
        let teacher_demos = teacher_demos_for_mode(
            config.teacher_mode,
            split,
            &base_demos,
            student,
            &None,
            config.sim_demo_count,
            seed,
        )?;

        let mut remaining: Vec<Problem> = pool.to_vec();
        let mut generated: Vec<Demonstration> = Vec::new();

        for round in 1..=config.rounds {
            let selected_ids = select_for_round(
                config,
                teacher,
                mental_model,
                &sim_demos,
                &teacher_demos,
                &remaining,
            )?;
            let (chosen, rest): (Vec<Problem>, Vec<Problem>) = remaining
                .into_iter()
                .partition(|p| selected_ids.contains(&p.id));
            remaining = rest;

            for problem in &chosen {
                generated.push(explained_demo(
                    config.demo_mode,
                    problem,
                    student,
                    teacher,
                    mental_model,
                    &sim_demos,
                    &teacher_demos,
                    &base_demos,
                    &generated,
                    config.use_gold,
                )?);
            }

            let records_unsorted = parallel_map(test, config.workers, |problem| {
                match student.predict(problem, &generated, None) {
                    Ok(prediction) => ItemRecord {
                        id: problem.id.clone(),
                        intervened: false,
                        explanation_source: ExplanationSource::Student,
                        correct: is_correct(&prediction, problem),
                        answer: prediction.answer,
                        confidence: prediction.confidence,
                        flags: Vec::new(),
                    },
                    Err(err) => ItemRecord {
                        id: problem.id.clone(),
                        intervened: false,
                        explanation_source: ExplanationSource::Student,
                        answer: String::new(),
                        confidence: 0.0,
                        correct: false,
                        flags: vec![format!("agent_error: {err}")],
                    },
                }
            });
            let mut records = records_unsorted;
            records.sort_by(|a, b| a.id.cmp(&b.id));
            let failures = records.iter().filter(|r| !r.flags.is_empty()).count();
            let total = records.len();
            if (failures as f64) > FAILURE_CEILING * total as f64 {
                return Err(ProtocolError::TooManyFailures {
                    failed: failures,
                    total,
                    ceiling: FAILURE_CEILING,
                });
            }
            let correct = records.iter().filter(|r| r.correct).count();
            traces.push(Trace {
                arm: config.demo_mode.to_string(),
                policy: PolicyKind::ExpectedUtility,
                seed,
                budget: None,
                round: Some(round),
                config_hash: config.config_hash.clone(),
                accuracy: correct as f64 / total as f64,
                failures,
                generated_demo_ids: Some(generated.iter().map(|d| d.problem.id.clone()).collect()),
                records,
            });
        }
    }
    Ok(traces)
}

/// The ids the teacher explains this round: top `samples_per_round` of the
/// remaining pool by expected utility. Identical across demo modes since it
/// only consults the teacher and its mental model.
fn select_for_round(
    config: &MultiRoundConfig,
    teacher: &dyn Teacher,
    mental_model: &MentalModel,
    sim_demos: &SimDemos,
    teacher_demos: &[Demonstration],
    remaining: &[Problem],
) -> Result<BTreeSet<String>, ProtocolError> {
    let mut scores = BTreeMap::new();
    for problem in remaining {
        let (estimate, _) = mental_model.expected_utility(
            problem,
            sim_demos,
            teacher,
            config.teacher_mode,
            teacher_demos,
            config.use_gold,
        )?;
        scores.insert(problem.id.clone(), estimate.utility);
    }
    let plan = intervention::select(&scores, PolicyKind::ExpectedUtility, 1.0)?;
    Ok(plan
        .ranking
        .into_iter()
        .take(config.samples_per_round)
        .collect())
}

/// Builds one generated demonstration per the demo mode. Across modes the
/// problem (and its rendered answer) is identical; only the explanation
/// fields differ.
#[allow(clippy::too_many_arguments)]
fn explained_demo(
    mode: DemoMode,
    problem: &Problem,
    student: &dyn Student,
    teacher: &dyn Teacher,
    mental_model: &MentalModel,
    sim_demos: &SimDemos,
    teacher_demos: &[Demonstration],
    base_demos: &[Demonstration],
    generated_so_far: &[Demonstration],
    use_gold: bool,
) -> Result<Demonstration, ProtocolError> {
    let demo = match mode {
        DemoMode::None => Demonstration {
            problem: problem.clone(),
            explanation: String::new(),
            explanation_source: ExplanationSource::Unexplained,
            shown_prediction: None,
        },
        DemoMode::StudentExplained => {
            // The student explains with whatever prompt it currently has.
            let conditioning = if generated_so_far.is_empty() { base_demos } else { generated_so_far };
            let prediction = student.predict(problem, conditioning, None)?;
            Demonstration {
                problem: problem.clone(),
                explanation: prediction.explanation_used,
                explanation_source: ExplanationSource::Student,
                shown_prediction: None,
            }
        }
        DemoMode::TeacherExplained => {
            let (_, explanation) = mental_model.expected_utility(
                problem,
                sim_demos,
                teacher,
                TeacherMode::Tom,
                teacher_demos,
                use_gold,
            )?;
            Demonstration {
                problem: problem.clone(),
                explanation: explanation.text,
                explanation_source: ExplanationSource::Teacher,
                shown_prediction: None,
            }
        }
    };
    Ok(demo)
}

/// Expected accuracy of a plan over simulated agents: selected items answer
/// correctly with `p_post`, the rest with `p_pre`. Summed in ascending id
/// order so equal selections always produce bit-identical values.
pub fn expected_accuracy(
    profile: &crate::agents::SimProfile,
    test: &[Problem],
    selected: &BTreeSet<String>,
) -> f64 {
    let mut ordered: Vec<&Problem> = test.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));
    let total: f64 = ordered
        .iter()
        .map(|p| {
            let item = profile.items.get(&p.id).expect("profile covers test items");
            if selected.contains(&p.id) { item.p_post } else { item.p_pre }
        })
        .sum();
    total / test.len() as f64
}
