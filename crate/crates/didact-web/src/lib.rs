//! Browser demo: the fully simulated engine compiled to wasm, driving three
//! interactive operations from a static page.
//!
//! - budget sweeps: accuracy-vs-budget curves for a chosen set of policies
//!   over a synthetic student profile;
//! - teaching rounds: multi-round accuracy for the three demonstration
//!   regimes;
//! - prompt rendering: every prompt shape over bundled example items.
//!
//! Every entry point takes and returns JSON strings so the page needs no
//! generated bindings beyond the wasm loader.

use std::sync::Arc;

use didact::agents::simulated::{generate_profile, synthetic_problems, Dist, ProfileSpec, SimProfile};
use didact::agents::{SimulatedStudent, SimulatedTeacher, TeacherMode};
use didact::dataset::{split, DatasetSplit, Problem, TaskKind};
use didact::intervention::PolicyKind;
use didact::mental_model::MentalModel;
use didact::metrics::aggregate;
use didact::prompts::{render, rendered_answer, Demonstration, ExplanationSource, PromptKind};
use didact::protocol::{
    run_multi_round, run_single_round, DemoMode, MultiRoundConfig, SingleRoundConfig, Trace,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const BUDGETS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct SweepParams {
    pub n_items: usize,
    pub seeds: u64,
    pub p_pre_low: f64,
    pub p_pre_high: f64,
    pub p_post_low: f64,
    pub p_post_high: f64,
    /// Fraction of items where intervention backfires (p_pre/p_post swapped).
    pub harmful_fraction: f64,
    pub teacher_accuracy: f64,
    pub mental_noise: f64,
    pub policies: Vec<String>,
    pub misaligned_teacher: bool,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            n_items: 220,
            seeds: 3,
            p_pre_low: 0.35,
            p_pre_high: 0.75,
            p_post_low: 0.5,
            p_post_high: 0.95,
            harmful_fraction: 0.0,
            teacher_accuracy: 1.0,
            mental_noise: 0.0,
            policies: vec!["random".into(), "expected_utility".into(), "true_utility".into()],
            misaligned_teacher: false,
        }
    }
}

#[derive(Debug, Serialize)]
struct CurvePointOut {
    x: f64,
    mean: f64,
    std: f64,
}

#[derive(Debug, Serialize)]
struct CurveOut {
    arm: String,
    points: Vec<CurvePointOut>,
}

#[derive(Debug, Serialize)]
struct CurvesOut {
    curves: Vec<CurveOut>,
}

fn curves_json(traces: &[Trace]) -> Result<String, String> {
    let curves = aggregate(traces).map_err(|e| e.to_string())?;
    let out = CurvesOut {
        curves: curves
            .into_iter()
            .map(|curve| CurveOut {
                arm: curve.arm,
                points: curve
                    .points
                    .into_iter()
                    .map(|p| CurvePointOut { x: p.budget, mean: p.mean_accuracy, std: p.std })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

fn build_world(params: &SweepParams, seed_offset: u64) -> (Arc<SimProfile>, Vec<Problem>, DatasetSplit) {
    let problems = synthetic_problems(params.n_items.clamp(30, 3000), seed_offset);
    let ids: Vec<String> = problems.iter().map(|p| p.id.clone()).collect();
    let mut profile = generate_profile(
        &ids,
        &ProfileSpec {
            pre: Dist::Uniform(params.p_pre_low.min(params.p_pre_high), params.p_pre_high),
            post: Dist::Uniform(params.p_post_low.min(params.p_post_high), params.p_post_high),
            teacher_accuracy: params.teacher_accuracy.clamp(0.0, 1.0),
            mental_noise: params.mental_noise.clamp(0.0, 1.0),
            ..ProfileSpec::default()
        },
        seed_offset,
    );
    // Swap pre/post on a leading fraction of items to make interventions
    // backfire there (mixed-sign utilities).
    let harmful = ((params.harmful_fraction.clamp(0.0, 1.0)) * ids.len() as f64) as usize;
    for id in ids.iter().take(harmful) {
        let entry = profile.items.get_mut(id).expect("generated id");
        std::mem::swap(&mut entry.p_pre, &mut entry.p_post);
    }
    let split = split(&problems, 6, 8, seed_offset).expect("enough synthetic items");
    (Arc::new(profile), problems, split)
}

fn deceive_demos(split: &DatasetSplit) -> Vec<Demonstration> {
    split
        .demos
        .iter()
        .map(|problem| Demonstration {
            problem: problem.clone(),
            explanation: problem.human_explanation.clone(),
            explanation_source: ExplanationSource::Deceiving,
            shown_prediction: None,
        })
        .collect()
}

fn sweep_curves_inner(params_json: &str) -> Result<String, String> {
    let params: SweepParams = if params_json.trim().is_empty() {
        SweepParams::default()
    } else {
        serde_json::from_str(params_json).map_err(|e| e.to_string())?
    };
    let policies: Vec<PolicyKind> = params
        .policies
        .iter()
        .map(|name| PolicyKind::parse(name).ok_or_else(|| format!("unknown policy '{name}'")))
        .collect::<Result<_, _>>()?;
    let (profile, _, split) = build_world(&params, 0);

    let teacher_mode = if params.misaligned_teacher { TeacherMode::Deceive } else { TeacherMode::Cot };
    let config = SingleRoundConfig {
        teacher_mode,
        deceive_demos: params.misaligned_teacher.then(|| deceive_demos(&split)),
        config_hash: "web".into(),
        ..Default::default()
    };

    let mut traces = Vec::new();
    for &policy in &policies {
        for seed in 0..params.seeds.clamp(1, 10) {
            let student = SimulatedStudent::new(profile.clone(), seed);
            let teacher = SimulatedTeacher::new(profile.clone(), seed);
            let model = MentalModel::prompted(Arc::new(SimulatedTeacher::new(profile.clone(), seed)));
            traces.extend(
                run_single_round(
                    &config, &student, &teacher, &model, &split, policy, &BUDGETS, &[seed],
                )
                .map_err(|e| e.to_string())?,
            );
        }
    }
    curves_json(&traces)
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct TeachingParams {
    pub n_items: usize,
    pub seeds: u64,
    pub p_pre: f64,
    pub p_post: f64,
    pub rounds: usize,
    pub samples_per_round: usize,
    /// Accuracy shift per in-context demonstration, by its source.
    pub teacher_demo_gain: f64,
    pub student_demo_gain: f64,
}

impl Default for TeachingParams {
    fn default() -> Self {
        TeachingParams {
            n_items: 300,
            seeds: 3,
            p_pre: 0.5,
            p_post: 0.85,
            rounds: 5,
            samples_per_round: 2,
            teacher_demo_gain: 0.03,
            student_demo_gain: -0.01,
        }
    }
}

fn teaching_curves_inner(params_json: &str) -> Result<String, String> {
    let params: TeachingParams = if params_json.trim().is_empty() {
        TeachingParams::default()
    } else {
        serde_json::from_str(params_json).map_err(|e| e.to_string())?
    };
    let problems = synthetic_problems(params.n_items.clamp(60, 3000), 1);
    let ids: Vec<String> = problems.iter().map(|p| p.id.clone()).collect();
    let mut profile = generate_profile(
        &ids,
        &ProfileSpec {
            pre: Dist::Const(params.p_pre.clamp(0.0, 1.0)),
            post: Dist::Const(params.p_post.clamp(0.0, 1.0)),
            ..ProfileSpec::default()
        },
        1,
    );
    profile.demo_gain.teacher = params.teacher_demo_gain.clamp(-0.2, 0.2);
    profile.demo_gain.student = params.student_demo_gain.clamp(-0.2, 0.2);
    let profile = Arc::new(profile);
    let split = split(&problems, 6, 8, 1).expect("enough synthetic items");
    let rounds = params.rounds.clamp(1, 8);
    let per_round = params.samples_per_round.clamp(1, 4);
    let pool_size = (rounds * per_round).min(split.test.len() / 2);
    let pool: Vec<Problem> = split.test[..pool_size].to_vec();
    let test: Vec<Problem> = split.test[pool_size..].to_vec();

    let mut traces = Vec::new();
    for mode in [DemoMode::None, DemoMode::StudentExplained, DemoMode::TeacherExplained] {
        let config = MultiRoundConfig {
            rounds,
            samples_per_round: per_round,
            demo_mode: mode,
            config_hash: "web".into(),
            ..Default::default()
        };
        for seed in 0..params.seeds.clamp(1, 10) {
            let student = SimulatedStudent::new(profile.clone(), seed);
            let teacher = SimulatedTeacher::new(profile.clone(), seed);
            let model = MentalModel::prompted(Arc::new(SimulatedTeacher::new(profile.clone(), seed)));
            traces.extend(
                run_multi_round(&config, &student, &teacher, &model, &split, &pool, &test, &[seed])
                    .map_err(|e| e.to_string())?,
            );
        }
    }
    curves_json(&traces)
}

fn demo_problems(task: TaskKind) -> (Problem, Problem) {
    match task {
        TaskKind::Boolean => {
            let demo = Problem {
                id: "web-khan".into(),
                question: "Are more people today related to Genghis Khan than Julius Caesar?".into(),
                choices: None,
                gold_answer: "yes".into(),
                human_explanation: "Julius Caesar had three children. Genghis Khan had sixteen \
                                    children. Modern geneticists have determined that 1 out of \
                                    every 200 men today has DNA that can be traced to Genghis Khan."
                    .into(),
                task_kind: TaskKind::Boolean,
            };
            let test = Problem {
                id: "web-albany".into(),
                question: "Will the Albany in Georgia reach a hundred thousand occupants before \
                           the one in New York?"
                    .into(),
                choices: None,
                gold_answer: "no".into(),
                human_explanation: "Albany, Georgia has a population of 59,058. The Albany in \
                                    New York has a population of 328,058."
                    .into(),
                task_kind: TaskKind::Boolean,
            };
            (demo, test)
        }
        TaskKind::Multichoice => {
            let demo = Problem {
                id: "web-killing".into(),
                question: "What might a person see at the scene of a brutal killing?".into(),
                choices: Some(vec![
                    "bloody mess".into(),
                    "pleasure".into(),
                    "being imprisoned".into(),
                    "feeling of guilt".into(),
                    "cake".into(),
                ]),
                gold_answer: "bloody mess".into(),
                human_explanation: "Bloody mess is covered or stained with blood. A person might \
                                    see a bloody mess at the scene of a brutal killing."
                    .into(),
                task_kind: TaskKind::Multichoice,
            };
            let test = Problem {
                id: "web-work".into(),
                question: "What do people aim to do at work?".into(),
                choices: Some(vec![
                    "complete job".into(),
                    "learn from each other".into(),
                    "kill animals".into(),
                    "wear hats".into(),
                    "talk to each other".into(),
                ]),
                gold_answer: "complete job".into(),
                human_explanation: "People try to complete the tasks their job requires.".into(),
                task_kind: TaskKind::Multichoice,
            };
            (demo, test)
        }
        TaskKind::Numeric => {
            let demo = Problem {
                id: "web-natalia".into(),
                question: "Natalia sold clips to 48 of her friends in April, and then she sold \
                           half as many clips in May. How many clips did Natalia sell altogether \
                           in April and May?"
                    .into(),
                choices: None,
                gold_answer: "72".into(),
                human_explanation: "Natalia sold 48/2 = 24 clips in May. Natalia sold 48+24 = 72 \
                                    clips altogether in April and May."
                    .into(),
                task_kind: TaskKind::Numeric,
            };
            let test = Problem {
                id: "web-weng".into(),
                question: "Weng earns $12 an hour for babysitting. Yesterday, she just did 50 \
                           minutes of babysitting. How much did she earn?"
                    .into(),
                choices: None,
                gold_answer: "10".into(),
                human_explanation: "Weng earns 12/60 = $0.2 per minute. Working 50 minutes, she \
                                    earned 0.2 x 50 = $10."
                    .into(),
                task_kind: TaskKind::Numeric,
            };
            (demo, test)
        }
    }
}

fn render_prompt_inner(kind: &str, task: &str) -> Result<String, String> {
    let kind: PromptKind =
        serde_json::from_value(serde_json::Value::String(kind.to_string()))
            .map_err(|_| format!("unknown prompt kind '{kind}'"))?;
    let task: TaskKind = serde_json::from_value(serde_json::Value::String(task.to_string()))
        .map_err(|_| format!("unknown task kind '{task}'"))?;
    let (demo_problem, test) = demo_problems(task);
    let simulation = matches!(kind, PromptKind::SimPre | PromptKind::SimPost);
    let demo = Demonstration {
        shown_prediction: simulation
            .then(|| rendered_answer(&demo_problem, &demo_problem.gold_answer)),
        ..Demonstration::human(&demo_problem)
    };
    let explanation = matches!(kind, PromptKind::StudentWithIntervention | PromptKind::SimPost)
        .then(|| {
            if task == TaskKind::Numeric {
                didact::dataset::first_step_only(&test.human_explanation).text
            } else {
                test.human_explanation.clone()
            }
        });
    render(kind, &[demo], &test, explanation.as_deref()).map_err(|e| e.to_string())
}

/// Accuracy-vs-budget curves for a synthetic profile; `params_json` may be
/// empty for defaults.
#[wasm_bindgen]
pub fn sweep_curves(params_json: &str) -> Result<String, JsValue> {
    sweep_curves_inner(params_json).map_err(|e| JsValue::from_str(&e))
}

/// Multi-round teaching curves for the three demonstration regimes.
#[wasm_bindgen]
pub fn teaching_curves(params_json: &str) -> Result<String, JsValue> {
    teaching_curves_inner(params_json).map_err(|e| JsValue::from_str(&e))
}

/// Renders one prompt shape over bundled example items.
#[wasm_bindgen]
pub fn render_prompt(kind: &str, task: &str) -> Result<String, JsValue> {
    render_prompt_inner(kind, task).map_err(|e| JsValue::from_str(&e))
}

/// The bundled published reference curves, for overlay plotting.
#[wasm_bindgen]
pub fn reference_curves() -> String {
    let curves: Vec<CurveOut> = didact::reference::SINGLE_ROUND_CURVES
        .iter()
        .map(|curve| CurveOut {
            arm: format!("published {}", curve.label),
            points: didact::reference::BUDGETS
                .iter()
                .zip(curve.mean.iter().zip(curve.std.iter()))
                .map(|(&x, (&mean, &std))| CurvePointOut { x, mean: mean / 100.0, std: std / 100.0 })
                .collect(),
        })
        .collect();
    serde_json::to_string(&CurvesOut { curves }).expect("reference serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_defaults_produce_full_curves() {
        let json = sweep_curves_inner("").unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let curves = value["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 3);
        for curve in curves {
            assert_eq!(curve["points"].as_array().unwrap().len(), BUDGETS.len());
        }
    }

    #[test]
    fn harmful_fraction_swaps_pre_and_post_per_item() {
        let json = sweep_curves_inner(
            r#"{"harmful_fraction": 1.0, "policies": ["random"], "seeds": 2, "n_items": 150,
                "p_pre_low": 0.8, "p_pre_high": 0.9, "p_post_low": 0.2, "p_post_high": 0.3}"#,
        )
        .unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let points = value["curves"][0]["points"].as_array().unwrap();
        let first = points[0]["mean"].as_f64().unwrap();
        let last = points[points.len() - 1]["mean"].as_f64().unwrap();
        // Everything swapped: the strong probabilities now sit on p_post,
        // so full intervention beats none.
        assert!(last > first, "expected rising curve, got {first} -> {last}");
    }

    #[test]
    fn teaching_defaults_produce_three_arms() {
        let json = teaching_curves_inner("").unwrap();
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        let curves = value["curves"].as_array().unwrap();
        assert_eq!(curves.len(), 3);
        let arms: Vec<&str> = curves.iter().map(|c| c["arm"].as_str().unwrap()).collect();
        assert!(arms.contains(&"none"));
        assert!(arms.contains(&"student_explained"));
        assert!(arms.contains(&"teacher_explained"));
    }

    #[test]
    fn prompt_rendering_covers_kinds_and_tasks() {
        let text = render_prompt_inner("sim_pre", "boolean").unwrap();
        assert!(text.starts_with("Simulate an AI model's answer for the given question."));
        let text = render_prompt_inner("student_no_intervention", "multichoice").unwrap();
        assert!(text.contains("Choice 5: talk to each other"));
        let text = render_prompt_inner("student_with_intervention", "numeric").unwrap();
        assert!(text.ends_with("A: Weng earns 12/60 = $0.2 per minute."));
        assert!(render_prompt_inner("nonsense", "boolean").is_err());
    }

    #[test]
    fn reference_overlay_is_percent_scaled_down() {
        let value: serde_json::Value = serde_json::from_str(&reference_curves()).unwrap();
        let random = &value["curves"][0];
        assert_eq!(random["arm"], "published random");
        let first = random["points"][0]["mean"].as_f64().unwrap();
        assert!((first - 0.5851).abs() < 1e-12);
    }
}
