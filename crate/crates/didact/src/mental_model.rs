//! The teacher's few-shot mental model of the student.
//!
//! From a handful of observed demonstrations of student behavior with and
//! without intervention, the teacher estimates the student's confidence on a
//! reference answer before and after an intervention. The difference of the
//! two estimates is the expected utility of intervening on that item.
//!
//! Two backends: the production path renders pre/post simulation prompts and
//! reads the teacher agent's answer distribution; the oracle backend reads a
//! simulated profile directly (test-only, it makes expected utility coincide
//! with true utility by construction).

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{
    answer_options, answers_match, AgentError, Explanation, SimQuery, Student, Teacher,
    TeacherMode,
};
use crate::dataset::{first_step_only, Problem, TaskKind};
use crate::prompts::{self, rendered_answer, Demonstration, ExplanationSource, PromptKind};
use crate::rng;

#[derive(Debug, Error)]
pub enum MentalModelError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Prompt(#[from] crate::prompts::PromptError),
    #[error("confidence estimation needs an enumerable answer space; numeric tasks go through the greedy utility route")]
    NumericUnsupported,
    #[error("post-phase estimation requires a teacher explanation")]
    MissingTeacherExplanation,
    #[error("needed {needed} observation items but only {usable} were usable")]
    PoolExhausted { needed: usize, usable: usize },
}

/// Before or after intervention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Pre,
    Post,
}

/// One observed demonstration of student behavior: its own explanation and
/// prediction, and its prediction under the teacher's explanation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDemoEntry {
    pub problem: Problem,
    pub student_explanation: String,
    pub teacher_explanation: String,
    /// Rendered prediction with the student's own explanation.
    pub pred_pre: String,
    /// Rendered prediction with the teacher's explanation.
    pub pred_post: String,
}

/// The d observed demonstrations the mental model conditions on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimDemos {
    pub entries: Vec<SimDemoEntry>,
    /// Pool items skipped after agent failures, with the failure text.
    pub skipped: Vec<(String, String)>,
}

impl SimDemos {
    /// Projection onto the pre-intervention fields {x, y, e_S, pred_pre}.
    pub fn pre_demos(&self) -> Vec<Demonstration> {
        self.entries
            .iter()
            .map(|entry| Demonstration {
                problem: entry.problem.clone(),
                explanation: entry.student_explanation.clone(),
                explanation_source: ExplanationSource::Student,
                shown_prediction: Some(entry.pred_pre.clone()),
            })
            .collect()
    }

    /// Projection onto the post-intervention fields {x, y, e_T, pred_post}.
    pub fn post_demos(&self) -> Vec<Demonstration> {
        self.entries
            .iter()
            .map(|entry| Demonstration {
                problem: entry.problem.clone(),
                explanation: entry.teacher_explanation.clone(),
                explanation_source: ExplanationSource::Teacher,
                shown_prediction: Some(entry.pred_post.clone()),
            })
            .collect()
    }
}

/// Which answer the utility is computed against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceSource {
    Gold,
    Teacher,
}

/// Estimated pre/post confidence and their difference for one test item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityEstimate {
    pub c_pre: f64,
    pub c_post: f64,
    /// Exactly `c_post - c_pre`.
    pub utility: f64,
    pub reference_answer: String,
    pub reference_source: ReferenceSource,
}

/// Observes the student on `d` pool items: once with its own explanation,
/// once with the teacher's. Items where either agent fails are skipped and
/// replaced from the remaining pool.
pub fn build_sim_demos(
    sim_pool: &[Problem],
    student: &dyn Student,
    teacher: &dyn Teacher,
    base_demos: &[Demonstration],
    teacher_mode: TeacherMode,
    d: usize,
    seed: u64,
) -> Result<SimDemos, MentalModelError> {
    let mut order: Vec<usize> = (0..sim_pool.len()).collect();
    order.shuffle(&mut rng::stream(seed, &["sim-demos"]));

    let mut entries = Vec::with_capacity(d);
    let mut skipped = Vec::new();
    for &index in &order {
        if entries.len() == d {
            break;
        }
        let problem = &sim_pool[index];
        let observed = (|| -> Result<SimDemoEntry, AgentError> {
            let pre = student.predict(problem, base_demos, None)?;
            let explanation = teacher.explain(problem, teacher_mode, base_demos)?;
            let post = student.predict(problem, base_demos, Some(&explanation))?;
            Ok(SimDemoEntry {
                problem: problem.clone(),
                student_explanation: pre.explanation_used.clone(),
                teacher_explanation: explanation.text,
                pred_pre: rendered_answer(problem, &pre.answer),
                pred_post: rendered_answer(problem, &post.answer),
            })
        })();
        match observed {
            Ok(entry) => entries.push(entry),
            Err(err) => skipped.push((problem.id.clone(), err.to_string())),
        }
    }
    if entries.len() < d {
        return Err(MentalModelError::PoolExhausted { needed: d, usable: entries.len() });
    }
    Ok(SimDemos { entries, skipped })
}

/// Collects up to `d` demonstrations whose human explanation flips the
/// student's answer from incorrect to correct; these exclusively helpful
/// demonstrations steer the personalized teacher prompt.
pub fn build_tom_demos(
    sim_pool: &[Problem],
    student: &dyn Student,
    base_demos: &[Demonstration],
    d: usize,
    seed: u64,
) -> Result<Vec<Demonstration>, MentalModelError> {
    let mut order: Vec<usize> = (0..sim_pool.len()).collect();
    order.shuffle(&mut rng::stream(seed, &["tom-demos"]));

    let mut demos = Vec::new();
    for &index in &order {
        if demos.len() == d {
            break;
        }
        let problem = &sim_pool[index];
        let human = human_explanation_for(problem);
        let pre = student.predict(problem, base_demos, None)?;
        let post = student.predict(problem, base_demos, Some(&human))?;
        let flips = !crate::agents::is_correct(&pre, problem) && crate::agents::is_correct(&post, problem);
        if flips {
            demos.push(Demonstration::human(problem));
        }
    }
    Ok(demos)
}

fn human_explanation_for(problem: &Problem) -> Explanation {
    let text = if problem.task_kind == TaskKind::Numeric {
        first_step_only(&problem.human_explanation).text
    } else {
        problem.human_explanation.clone()
    };
    Explanation { text, source: ExplanationSource::Human, flagged: false }
}

enum Backend {
    /// Render simulation prompts and read the teacher's answer distribution.
    Prompted(Arc<dyn Teacher>),
    /// Read the simulated profile directly (testing only).
    Oracle {
        profile: Arc<crate::agents::SimProfile>,
        noise: f64,
        seed: u64,
    },
}

/// The mental model itself: estimates student confidence pre/post
/// intervention and the expected utility of intervening.
pub struct MentalModel {
    backend: Backend,
}

impl MentalModel {
    pub fn prompted(teacher: Arc<dyn Teacher>) -> Self {
        MentalModel { backend: Backend::Prompted(teacher) }
    }

    pub fn oracle(profile: Arc<crate::agents::SimProfile>) -> Self {
        Self::oracle_noised(profile, 0.0, 0)
    }

    pub fn oracle_noised(profile: Arc<crate::agents::SimProfile>, noise: f64, seed: u64) -> Self {
        MentalModel { backend: Backend::Oracle { profile, noise, seed } }
    }

    /// Probability mass the model expects the student to put on
    /// `reference_answer` in the given phase.
    pub fn estimate_confidence(
        &self,
        test: &Problem,
        demos: &SimDemos,
        phase: Phase,
        teacher_explanation: Option<&Explanation>,
        reference_answer: &str,
    ) -> Result<f64, MentalModelError> {
        if test.task_kind == TaskKind::Numeric {
            return Err(MentalModelError::NumericUnsupported);
        }
        if phase == Phase::Post && teacher_explanation.is_none() {
            return Err(MentalModelError::MissingTeacherExplanation);
        }
        match &self.backend {
            Backend::Oracle { profile, noise, seed } => {
                let gold_mass = self.oracle_gold_mass(profile, *noise, *seed, test, phase)?;
                let options = answer_options(test).ok_or(MentalModelError::NumericUnsupported)?;
                let mass = if answers_match(reference_answer, &test.gold_answer, test.task_kind) {
                    gold_mass
                } else {
                    (1.0 - gold_mass) / (options.len() as f64 - 1.0)
                };
                Ok(mass)
            }
            Backend::Prompted(teacher) => {
                let prompt = render_simulation_prompt(test, demos, phase, teacher_explanation)?;
                let dist = teacher.simulate_student(&SimQuery { problem: test, phase, prompt })?;
                Ok(dist
                    .iter()
                    .find(|(option, _)| answers_match(option, reference_answer, test.task_kind))
                    .map(|(_, &p)| p)
                    .unwrap_or(0.0))
            }
        }
    }

    fn oracle_gold_mass(
        &self,
        profile: &crate::agents::SimProfile,
        noise: f64,
        seed: u64,
        test: &Problem,
        phase: Phase,
    ) -> Result<f64, MentalModelError> {
        let item = profile.item(&test.id)?;
        let mass = match phase {
            Phase::Pre => item.p_pre,
            Phase::Post => item.p_post,
        };
        if noise == 0.0 {
            return Ok(mass);
        }
        let mut stream = rng::stream(seed, &["oracle-noise", &test.id, &format!("{phase:?}")]);
        Ok((mass + stream.random_range(-noise..=noise)).clamp(0.0, 1.0))
    }

    /// Expected utility of intervening on `test`: generates the teacher's
    /// explanation, picks the reference answer (gold, or the teacher's own
    /// answer when gold access is disabled), and differences the two
    /// confidence estimates. Returns the explanation so callers can reuse it
    /// for the intervention itself.
    pub fn expected_utility(
        &self,
        test: &Problem,
        demos: &SimDemos,
        teacher: &dyn Teacher,
        teacher_mode: TeacherMode,
        teacher_demos: &[Demonstration],
        use_gold: bool,
    ) -> Result<(UtilityEstimate, Explanation), MentalModelError> {
        let explanation = teacher.explain(test, teacher_mode, teacher_demos)?;
        let (reference_answer, reference_source) = if use_gold {
            (test.gold_answer.clone(), ReferenceSource::Gold)
        } else {
            let own = teacher.predict(test, teacher_demos)?;
            (own.answer, ReferenceSource::Teacher)
        };
        let estimate = self.expected_utility_with(
            test,
            demos,
            &explanation,
            reference_answer,
            reference_source,
        )?;
        Ok((estimate, explanation))
    }

    /// Utility against an already generated explanation and reference.
    pub fn expected_utility_with(
        &self,
        test: &Problem,
        demos: &SimDemos,
        explanation: &Explanation,
        reference_answer: String,
        reference_source: ReferenceSource,
    ) -> Result<UtilityEstimate, MentalModelError> {
        let (c_pre, c_post) = if test.task_kind == TaskKind::Numeric {
            self.greedy_confidences(test, demos, explanation, &reference_answer)?
        } else {
            let c_pre = self.estimate_confidence(test, demos, Phase::Pre, None, &reference_answer)?;
            let c_post = self.estimate_confidence(
                test,
                demos,
                Phase::Post,
                Some(explanation),
                &reference_answer,
            )?;
            (c_pre, c_post)
        };
        Ok(UtilityEstimate {
            c_pre,
            c_post,
            utility: c_post - c_pre,
            reference_answer,
            reference_source,
        })
    }

    /// Numeric tasks: a distribution over all decimals is intractable, so
    /// confidence is the exact-match indicator of one greedy mental rollout
    /// (the oracle backend keeps the exact probability).
    fn greedy_confidences(
        &self,
        test: &Problem,
        demos: &SimDemos,
        explanation: &Explanation,
        reference_answer: &str,
    ) -> Result<(f64, f64), MentalModelError> {
        match &self.backend {
            Backend::Oracle { profile, noise, seed } => {
                let is_gold = answers_match(reference_answer, &test.gold_answer, test.task_kind);
                let pre = self.oracle_gold_mass(profile, *noise, *seed, test, Phase::Pre)?;
                let post = self.oracle_gold_mass(profile, *noise, *seed, test, Phase::Post)?;
                let project = |p: f64| if is_gold { p } else { 1.0 - p };
                Ok((project(pre), project(post)))
            }
            Backend::Prompted(teacher) => {
                let mut confidences = [0.0; 2];
                for (slot, phase) in [(0, Phase::Pre), (1, Phase::Post)] {
                    let prompt =
                        render_simulation_prompt(test, demos, phase, Some(explanation))?;
                    let rollout =
                        teacher.simulate_student_greedy(&SimQuery { problem: test, phase, prompt })?;
                    confidences[slot] =
                        f64::from(answers_match(&rollout, reference_answer, test.task_kind));
                }
                Ok((confidences[0], confidences[1]))
            }
        }
    }
}

/// Renders the phase-appropriate simulation prompt from the projected
/// demonstrations.
pub fn render_simulation_prompt(
    test: &Problem,
    demos: &SimDemos,
    phase: Phase,
    teacher_explanation: Option<&Explanation>,
) -> Result<String, MentalModelError> {
    let (kind, projected, explanation) = match phase {
        Phase::Pre => (PromptKind::SimPre, demos.pre_demos(), None),
        Phase::Post => (
            PromptKind::SimPost,
            demos.post_demos(),
            Some(
                teacher_explanation
                    .ok_or(MentalModelError::MissingTeacherExplanation)?
                    .text
                    .as_str(),
            ),
        ),
    };
    Ok(prompts::render(kind, &projected, test, explanation)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::simulated::{generate_profile, Dist, ProfileSpec};
    use crate::agents::{SimulatedStudent, SimulatedTeacher};

    fn problem(id: &str, gold: &str) -> Problem {
        Problem {
            id: id.into(),
            question: format!("Question {id}?"),
            choices: None,
            gold_answer: gold.into(),
            human_explanation: "A relevant fact. A second fact.".into(),
            task_kind: TaskKind::Boolean,
        }
    }

    fn fixtures(
        p_pre: f64,
        p_post: f64,
        n: usize,
    ) -> (Arc<crate::agents::SimProfile>, Vec<Problem>) {
        let problems: Vec<Problem> = (0..n)
            .map(|i| problem(&format!("item-{i:04}"), if i % 2 == 0 { "yes" } else { "no" }))
            .collect();
        let ids: Vec<String> = problems.iter().map(|p| p.id.clone()).collect();
        let profile = generate_profile(
            &ids,
            &ProfileSpec {
                pre: Dist::Const(p_pre),
                post: Dist::Const(p_post),
                ..ProfileSpec::default()
            },
            0,
        );
        (Arc::new(profile), problems)
    }

    #[test]
    fn oracle_returns_the_profile_probabilities_exactly() {
        let (profile, problems) = fixtures(0.2, 0.8, 4);
        let model = MentalModel::oracle(profile.clone());
        let demos = SimDemos { entries: vec![], skipped: vec![] };
        let test = &problems[0];
        let explanation = Explanation {
            text: "hint".into(),
            source: ExplanationSource::Teacher,
            flagged: false,
        };
        let c_pre = model
            .estimate_confidence(test, &demos, Phase::Pre, None, &test.gold_answer)
            .unwrap();
        let c_post = model
            .estimate_confidence(test, &demos, Phase::Post, Some(&explanation), &test.gold_answer)
            .unwrap();
        assert_eq!(c_pre, 0.2);
        assert_eq!(c_post, 0.8);

        let estimate = model
            .expected_utility_with(
                test,
                &demos,
                &explanation,
                test.gold_answer.clone(),
                ReferenceSource::Gold,
            )
            .unwrap();
        assert_eq!(estimate.utility, 0.8 - 0.2);
        assert_eq!(estimate.utility, estimate.c_post - estimate.c_pre);
    }

    #[test]
    fn boolean_estimates_normalize() {
        let (profile, problems) = fixtures(0.35, 0.9, 2);
        let model = MentalModel::oracle(profile);
        let demos = SimDemos { entries: vec![], skipped: vec![] };
        let test = &problems[0];
        let yes = model
            .estimate_confidence(test, &demos, Phase::Pre, None, "yes")
            .unwrap();
        let no = model
            .estimate_confidence(test, &demos, Phase::Pre, None, "no")
            .unwrap();
        assert!((yes + no - 1.0).abs() < 1e-6);
    }

    #[test]
    fn equal_estimates_give_zero_utility() {
        let (profile, problems) = fixtures(0.5, 0.5, 2);
        let model = MentalModel::oracle(profile);
        let demos = SimDemos { entries: vec![], skipped: vec![] };
        let test = &problems[0];
        let explanation = Explanation {
            text: "hint".into(),
            source: ExplanationSource::Teacher,
            flagged: false,
        };
        let estimate = model
            .expected_utility_with(test, &demos, &explanation, "yes".into(), ReferenceSource::Gold)
            .unwrap();
        assert_eq!(estimate.utility, 0.0);
        assert!((-1.0..=1.0).contains(&estimate.utility));
    }

    #[test]
    fn numeric_confidence_estimation_is_rejected() {
        let (profile, _) = fixtures(0.5, 0.5, 1);
        let model = MentalModel::oracle(profile);
        let demos = SimDemos { entries: vec![], skipped: vec![] };
        let numeric = Problem {
            id: "item-0000".into(),
            question: "How many?".into(),
            choices: None,
            gold_answer: "72".into(),
            human_explanation: "Step one. Step two.".into(),
            task_kind: TaskKind::Numeric,
        };
        let err = model
            .estimate_confidence(&numeric, &demos, Phase::Pre, None, "72")
            .unwrap_err();
        assert!(matches!(err, MentalModelError::NumericUnsupported));
    }

    #[test]
    fn prompted_simulated_teacher_matches_the_oracle() {
        let (profile, problems) = fixtures(0.3, 0.85, 12);
        let student = SimulatedStudent::new(profile.clone(), 5);
        let teacher = SimulatedTeacher::new(profile.clone(), 5);
        let base_demos: Vec<Demonstration> =
            problems[..4].iter().map(Demonstration::human).collect();
        let demos = build_sim_demos(
            &problems[4..10],
            &student,
            &teacher,
            &base_demos,
            TeacherMode::Cot,
            4,
            9,
        )
        .unwrap();

        let prompted = MentalModel::prompted(Arc::new(SimulatedTeacher::new(profile.clone(), 5)));
        let oracle = MentalModel::oracle(profile);
        let test = &problems[11];
        let explanation = teacher.explain(test, TeacherMode::Cot, &base_demos).unwrap();
        for phase in [Phase::Pre, Phase::Post] {
            let te = (phase == Phase::Post).then_some(&explanation);
            let a = prompted
                .estimate_confidence(test, &demos, phase, te, &test.gold_answer)
                .unwrap();
            let b = oracle
                .estimate_confidence(test, &demos, phase, te, &test.gold_answer)
                .unwrap();
            assert_eq!(a, b, "phase {phase:?}");
        }
    }

    #[test]
    fn teacher_reference_equals_gold_for_a_perfect_teacher() {
        let (profile, problems) = fixtures(0.4, 0.9, 10);
        assert_eq!(profile.teacher_accuracy, 1.0);
        let student = SimulatedStudent::new(profile.clone(), 2);
        let teacher = SimulatedTeacher::new(profile.clone(), 2);
        let base_demos: Vec<Demonstration> =
            problems[..4].iter().map(Demonstration::human).collect();
        let demos = build_sim_demos(
            &problems[4..9],
            &student,
            &teacher,
            &base_demos,
            TeacherMode::Cot,
            4,
            1,
        )
        .unwrap();
        let model = MentalModel::prompted(Arc::new(SimulatedTeacher::new(profile, 2)));
        let test = &problems[9];
        let (with_gold, _) = model
            .expected_utility(test, &demos, &teacher, TeacherMode::Cot, &base_demos, true)
            .unwrap();
        let (with_teacher, _) = model
            .expected_utility(test, &demos, &teacher, TeacherMode::Cot, &base_demos, false)
            .unwrap();
        assert_eq!(with_gold.utility, with_teacher.utility);
        assert_eq!(with_teacher.reference_source, ReferenceSource::Teacher);
        assert_eq!(with_teacher.reference_answer, test.gold_answer);
    }

    #[test]
    fn sim_demo_construction_is_sized_and_deterministic() {
        let (profile, problems) = fixtures(0.0, 1.0, 12);
        let student = SimulatedStudent::new(profile.clone(), 3);
        let teacher = SimulatedTeacher::new(profile, 3);
        let base_demos: Vec<Demonstration> =
            problems[..4].iter().map(Demonstration::human).collect();
        let pool = &problems[4..];
        let a = build_sim_demos(pool, &student, &teacher, &base_demos, TeacherMode::Cot, 8, 0)
            .unwrap();
        let b = build_sim_demos(pool, &student, &teacher, &base_demos, TeacherMode::Cot, 8, 0)
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries.len(), 8);
        // p_pre = 0 makes every pre prediction incorrect.
        for entry in &a.entries {
            assert_ne!(entry.pred_pre, entry.problem.gold_answer);
            assert_eq!(entry.pred_post, entry.problem.gold_answer);
        }
    }

    #[test]
    fn flip_rate_tracks_the_profile() {
        let (profile, problems) = fixtures(0.3, 0.9, 2000);
        let student = SimulatedStudent::new(profile.clone(), 7);
        let teacher = SimulatedTeacher::new(profile, 7);
        let base_demos: Vec<Demonstration> =
            problems[..4].iter().map(Demonstration::human).collect();
        let demos = build_sim_demos(
            &problems[4..],
            &student,
            &teacher,
            &base_demos,
            TeacherMode::Cot,
            1996,
            0,
        )
        .unwrap();
        let flips = demos
            .entries
            .iter()
            .filter(|e| {
                e.pred_pre != e.problem.gold_answer && e.pred_post == e.problem.gold_answer
            })
            .count();
        let rate = flips as f64 / demos.entries.len() as f64;
        // Independent draws: P(pre wrong) * P(post right) = 0.7 * 0.9.
        assert!((rate - 0.63).abs() < 0.035, "got {rate}");
    }

    #[test]
    fn tom_demos_contain_only_flipping_items() {
        let (profile, problems) = fixtures(0.0, 1.0, 20);
        let student = SimulatedStudent::new(profile.clone(), 1);
        let base_demos: Vec<Demonstration> =
            problems[..4].iter().map(Demonstration::human).collect();
        let demos = build_tom_demos(&problems[4..], &student, &base_demos, 6, 2).unwrap();
        assert_eq!(demos.len(), 6);
        for demo in &demos {
            assert_eq!(demo.explanation_source, ExplanationSource::Human);
            assert_eq!(demo.explanation, demo.problem.human_explanation);
        }
    }
}
