//! Intervention policies: scoring, ranking, and budget application.
//!
//! A policy produces a score per test item; items are ranked in the policy's
//! fixed direction (ties broken by ascending id) and the teacher intervenes
//! on the leading `round_half_down(budget * N)` of the ranking. Selections
//! are therefore nested across budgets and invariant under strictly
//! increasing transforms of the scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::RngExt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Problem;
use crate::mental_model::UtilityEstimate;
use crate::rng;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("policy {policy} needs {input} for item '{id}'")]
    MissingInput {
        policy: PolicyKind,
        input: &'static str,
        id: String,
    },
    #[error("budget fraction {0} outside [0,1]")]
    BadBudget(f64),
}

/// Ranking direction; fixed per policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortDirection {
    Ascending,
    Descending,
}

/// Every intervention policy. Expected quantities come from the teacher's
/// mental model; true quantities from confidences the student communicated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Random,
    /// Intervene where the teacher itself is most confident.
    TeacherConfidence,
    /// Intervene where the student's best option is weakest.
    StudentLeastConfidence,
    ExpectedPre,
    ExpectedPost,
    ExpectedUtility,
    TruePre,
    TruePost,
    TrueUtility,
    /// Misaligned mirror: intervene where expected utility is lowest.
    NegExpectedUtility,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 10] = [
        PolicyKind::Random,
        PolicyKind::TeacherConfidence,
        PolicyKind::StudentLeastConfidence,
        PolicyKind::ExpectedPre,
        PolicyKind::ExpectedPost,
        PolicyKind::ExpectedUtility,
        PolicyKind::TruePre,
        PolicyKind::TruePost,
        PolicyKind::TrueUtility,
        PolicyKind::NegExpectedUtility,
    ];

    pub fn direction(self) -> SortDirection {
        match self {
            PolicyKind::ExpectedPre
            | PolicyKind::TruePre
            | PolicyKind::StudentLeastConfidence
            | PolicyKind::NegExpectedUtility => SortDirection::Ascending,
            _ => SortDirection::Descending,
        }
    }

    /// Whether scoring needs mental-model estimates.
    pub fn needs_expected(self) -> bool {
        matches!(
            self,
            PolicyKind::ExpectedPre
                | PolicyKind::ExpectedPost
                | PolicyKind::ExpectedUtility
                | PolicyKind::NegExpectedUtility
        )
    }

    /// Whether scoring needs confidences measured from the student.
    pub fn needs_true_confidence(self) -> bool {
        matches!(self, PolicyKind::TruePre | PolicyKind::TruePost | PolicyKind::TrueUtility)
    }

    pub fn parse(text: &str) -> Option<PolicyKind> {
        PolicyKind::ALL.into_iter().find(|k| k.to_string() == text)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            PolicyKind::Random => "random",
            PolicyKind::TeacherConfidence => "teacher_confidence",
            PolicyKind::StudentLeastConfidence => "student_least_confidence",
            PolicyKind::ExpectedPre => "expected_pre",
            PolicyKind::ExpectedPost => "expected_post",
            PolicyKind::ExpectedUtility => "expected_utility",
            PolicyKind::TruePre => "true_pre",
            PolicyKind::TruePost => "true_post",
            PolicyKind::TrueUtility => "true_utility",
            PolicyKind::NegExpectedUtility => "neg_expected_utility",
        };
        write!(f, "{name}")
    }
}

/// Confidences the student actually communicated for one item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueConfidence {
    pub c_pre: f64,
    pub c_post: f64,
}

/// Everything any policy might score from, keyed by item id.
#[derive(Debug, Default)]
pub struct ScoreContext {
    pub seed: u64,
    pub expected: BTreeMap<String, UtilityEstimate>,
    pub true_confidence: BTreeMap<String, TrueConfidence>,
    /// Teacher's max-option mass on its own answer.
    pub teacher_confidence: BTreeMap<String, f64>,
    /// Student's max-option mass without intervention.
    pub student_max_confidence: BTreeMap<String, f64>,
}

/// Scores every item under a policy. The map is total over `items`; a
/// missing context quantity is an error naming the policy and the input.
pub fn score(
    policy: PolicyKind,
    items: &[Problem],
    context: &ScoreContext,
) -> Result<BTreeMap<String, f64>, PolicyError> {
    let mut scores = BTreeMap::new();
    for item in items {
        let id = &item.id;
        let missing = |input: &'static str| PolicyError::MissingInput {
            policy,
            input,
            id: id.clone(),
        };
        let value = match policy {
            PolicyKind::Random => rng::stream(context.seed, &["policy-random", id]).random(),
            PolicyKind::TeacherConfidence => *context
                .teacher_confidence
                .get(id)
                .ok_or_else(|| missing("teacher confidence"))?,
            PolicyKind::StudentLeastConfidence => *context
                .student_max_confidence
                .get(id)
                .ok_or_else(|| missing("student max-option confidence"))?,
            PolicyKind::ExpectedPre | PolicyKind::ExpectedPost | PolicyKind::ExpectedUtility
            | PolicyKind::NegExpectedUtility => {
                let estimate = context
                    .expected
                    .get(id)
                    .ok_or_else(|| missing("mental-model estimate"))?;
                match policy {
                    PolicyKind::ExpectedPre => estimate.c_pre,
                    PolicyKind::ExpectedPost => estimate.c_post,
                    _ => estimate.utility,
                }
            }
            PolicyKind::TruePre | PolicyKind::TruePost | PolicyKind::TrueUtility => {
                let measured = context
                    .true_confidence
                    .get(id)
                    .ok_or_else(|| missing("measured student confidence"))?;
                match policy {
                    PolicyKind::TruePre => measured.c_pre,
                    PolicyKind::TruePost => measured.c_post,
                    _ => measured.c_post - measured.c_pre,
                }
            }
        };
        scores.insert(id.clone(), value);
    }
    Ok(scores)
}

/// A scored ranking plus the subset selected at one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionPlan {
    pub scores: BTreeMap<String, f64>,
    pub ranking: Vec<String>,
    pub budget_fraction: f64,
    pub selected: BTreeSet<String>,
}

/// Number of interventions a budget buys over `n` items: round to nearest,
/// halves down.
pub fn budget_count(budget_fraction: f64, n: usize) -> usize {
    let raw = budget_fraction * n as f64;
    let count = (raw - 0.5 - 1e-9).ceil().max(0.0) as usize;
    count.min(n)
}

/// Ranks the scored items in the policy's direction (ties by ascending id)
/// and selects the within-budget prefix.
pub fn select(
    scores: &BTreeMap<String, f64>,
    policy: PolicyKind,
    budget_fraction: f64,
) -> Result<InterventionPlan, PolicyError> {
    if !(0.0..=1.0).contains(&budget_fraction) {
        return Err(PolicyError::BadBudget(budget_fraction));
    }
    let mut ranking: Vec<String> = scores.keys().cloned().collect();
    ranking.sort_by(|a, b| {
        let (sa, sb) = (scores[a], scores[b]);
        let by_score = match policy.direction() {
            SortDirection::Ascending => sa.total_cmp(&sb),
            SortDirection::Descending => sb.total_cmp(&sa),
        };
        by_score.then_with(|| a.cmp(b))
    });
    let count = budget_count(budget_fraction, ranking.len());
    let selected = ranking.iter().take(count).cloned().collect();
    Ok(InterventionPlan {
        scores: scores.clone(),
        ranking,
        budget_fraction,
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::TaskKind;

    fn items(n: usize) -> Vec<Problem> {
        (0..n)
            .map(|i| Problem {
                id: format!("{i}"),
                question: "q?".into(),
                choices: None,
                gold_answer: "yes".into(),
                human_explanation: "e.".into(),
                task_kind: TaskKind::Boolean,
            })
            .collect()
    }

    fn utility(c_pre: f64, c_post: f64) -> UtilityEstimate {
        UtilityEstimate {
            c_pre,
            c_post,
            utility: c_post - c_pre,
            reference_answer: "yes".into(),
            reference_source: crate::mental_model::ReferenceSource::Gold,
        }
    }

    #[test]
    fn expected_utility_scores_pass_through() {
        let items = items(3);
        let mut context = ScoreContext::default();
        for (id, (pre, post)) in [("0", (0.0, 0.5)), ("1", (0.4, 0.2)), ("2", (0.3, 0.3))] {
            context.expected.insert(id.into(), utility(pre, post));
        }
        let scores = score(PolicyKind::ExpectedUtility, &items, &context).unwrap();
        assert_eq!(scores["0"], 0.5);
        assert_eq!(scores["1"], -0.2);
        assert_eq!(scores["2"], 0.0);
    }

    #[test]
    fn random_scores_are_seed_deterministic() {
        let items = items(20);
        let context = ScoreContext { seed: 9, ..ScoreContext::default() };
        let a = score(PolicyKind::Random, &items, &context).unwrap();
        let b = score(PolicyKind::Random, &items, &context).unwrap();
        assert_eq!(a, b);
        let other = ScoreContext { seed: 10, ..ScoreContext::default() };
        assert_ne!(a, score(PolicyKind::Random, &items, &other).unwrap());
    }

    #[test]
    fn missing_context_names_policy_and_input() {
        let items = items(1);
        let err = score(PolicyKind::TrueUtility, &items, &ScoreContext::default()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("true_utility"), "{text}");
        assert!(text.contains("measured student confidence"), "{text}");
    }

    #[test]
    fn descending_selection_takes_the_top() {
        let scores: BTreeMap<String, f64> =
            (0..10).map(|i| (i.to_string(), 9.0 - i as f64)).collect();
        let plan = select(&scores, PolicyKind::ExpectedUtility, 0.2).unwrap();
        assert_eq!(plan.selected, BTreeSet::from(["0".to_string(), "1".to_string()]));
    }

    #[test]
    fn budget_endpoints() {
        let scores: BTreeMap<String, f64> =
            (0..10).map(|i| (i.to_string(), i as f64)).collect();
        let empty = select(&scores, PolicyKind::Random, 0.0).unwrap();
        assert!(empty.selected.is_empty());
        let all = select(&scores, PolicyKind::Random, 1.0).unwrap();
        assert_eq!(all.selected.len(), 10);
    }

    #[test]
    fn ties_break_by_ascending_id() {
        let mut scores = BTreeMap::new();
        for i in 0..10 {
            scores.insert(i.to_string(), 0.0);
        }
        scores.insert("3".into(), 1.0);
        scores.insert("7".into(), 1.0);
        let plan = select(&scores, PolicyKind::ExpectedUtility, 0.1).unwrap();
        assert_eq!(plan.selected, BTreeSet::from(["3".to_string()]));
    }

    #[test]
    fn budget_count_rounds_halves_down() {
        assert_eq!(budget_count(0.2, 229), 46);
        assert_eq!(budget_count(0.25, 10), 2); // 2.5 rounds down
        assert_eq!(budget_count(0.15, 10), 1); // 1.5 rounds down
        assert_eq!(budget_count(0.26, 10), 3);
        assert_eq!(budget_count(0.0, 10), 0);
        assert_eq!(budget_count(1.0, 10), 10);
    }

    #[test]
    fn selections_nest_across_budgets() {
        let scores: BTreeMap<String, f64> = (0..17)
            .map(|i| (format!("{i:02}"), ((i * 7) % 13) as f64))
            .collect();
        let budgets = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];
        let mut previous: BTreeSet<String> = BTreeSet::new();
        for budget in budgets {
            let plan = select(&scores, PolicyKind::TrueUtility, budget).unwrap();
            assert!(previous.is_subset(&plan.selected), "budget {budget}");
            previous = plan.selected;
        }
    }

    #[test]
    fn monotone_transforms_preserve_ranking() {
        let scores: BTreeMap<String, f64> = (0..50)
            .map(|i| (format!("{i:02}"), ((i * 31 + 7) % 17) as f64 / 17.0 - 0.4))
            .collect();
        let transformed: BTreeMap<String, f64> = scores
            .iter()
            .map(|(k, &v)| (k.clone(), 3.0 * v + 11.0))
            .collect();
        for policy in [PolicyKind::ExpectedUtility, PolicyKind::NegExpectedUtility] {
            let base = select(&scores, policy, 0.4).unwrap();
            let shifted = select(&transformed, policy, 0.4).unwrap();
            assert_eq!(base.ranking, shifted.ranking);
            assert_eq!(base.selected, shifted.selected);
        }
    }

    #[test]
    fn out_of_range_budget_is_rejected() {
        let scores: BTreeMap<String, f64> = BTreeMap::from([("a".to_string(), 0.0)]);
        assert!(select(&scores, PolicyKind::Random, 1.2).is_err());
    }
}
