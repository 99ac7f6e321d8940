//! Byte-for-byte golden checks for every prompt shape.
//!
//! The fixtures under `tests/fixtures/prompts/` were transcribed once and
//! are frozen; any rendering drift fails here with a readable diff.

mod common;

use std::fs;
use std::path::PathBuf;

use didact::dataset::first_step_only;
use didact::prompts::{render, Demonstration, ExplanationSource, PromptKind};

use common::*;

fn golden(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "fixtures", "prompts", name]
        .iter()
        .collect();
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()))
}

fn assert_matches_golden(rendered: &str, name: &str) {
    let expected = golden(name);
    if rendered != expected {
        let diff_at = rendered
            .bytes()
            .zip(expected.bytes())
            .position(|(a, b)| a != b)
            .unwrap_or_else(|| rendered.len().min(expected.len()));
        panic!(
            "golden mismatch for {name} at byte {diff_at}\n--- rendered ---\n{rendered}\n--- expected ---\n{expected}\n"
        );
    }
}

#[test]
fn golden_student_no_intervention() {
    let rendered = render(
        PromptKind::StudentNoIntervention,
        &[Demonstration::human(&khan())],
        &albany(),
        None,
    )
    .unwrap();
    assert_matches_golden(&rendered, "student_no_intervention.txt");
}

#[test]
fn golden_student_with_intervention() {
    let rendered = render(
        PromptKind::StudentWithIntervention,
        &[Demonstration::human(&khan())],
        &albany(),
        Some(&albany().human_explanation),
    )
    .unwrap();
    assert_matches_golden(&rendered, "student_with_intervention.txt");
}

#[test]
fn golden_teacher_cot() {
    let rendered = render(
        PromptKind::TeacherCot,
        &[Demonstration::human(&khan())],
        &albany(),
        None,
    )
    .unwrap();
    assert_matches_golden(&rendered, "teacher_cot.txt");
}

#[test]
fn golden_teacher_rationalize() {
    let rendered = render(
        PromptKind::TeacherRationalize,
        &[Demonstration::human(&khan())],
        &albany(),
        None,
    )
    .unwrap();
    assert_matches_golden(&rendered, "teacher_rationalize.txt");
}

#[test]
fn golden_sim_pre() {
    let demo = Demonstration {
        problem: albany(),
        explanation: albany_student_explanation(),
        explanation_source: ExplanationSource::Student,
        shown_prediction: Some("no".into()),
    };
    let rendered = render(PromptKind::SimPre, &[demo], &khan(), None).unwrap();
    assert_matches_golden(&rendered, "sim_pre.txt");
}

#[test]
fn golden_sim_post() {
    let demo = Demonstration {
        problem: albany(),
        explanation: albany().human_explanation,
        explanation_source: ExplanationSource::Teacher,
        shown_prediction: Some("no".into()),
    };
    let rendered = render(
        PromptKind::SimPost,
        &[demo],
        &khan(),
        Some(&khan().human_explanation),
    )
    .unwrap();
    assert_matches_golden(&rendered, "sim_post.txt");
}

#[test]
fn golden_teacher_tom() {
    let demo = Demonstration::human(&albany());
    let rendered = render(PromptKind::TeacherTom, &[demo], &khan(), None).unwrap();
    assert_matches_golden(&rendered, "teacher_tom.txt");
}

#[test]
fn golden_teacher_deceive() {
    let rendered = render(
        PromptKind::TeacherDeceive,
        &[Demonstration::human(&strawberries_deceiving())],
        &khan(),
        None,
    )
    .unwrap();
    assert_matches_golden(&rendered, "teacher_deceive.txt");
}

#[test]
fn golden_multichoice_student() {
    let rendered = render(
        PromptKind::StudentNoIntervention,
        &[Demonstration::human(&brutal_killing())],
        &work_aims(),
        None,
    )
    .unwrap();
    assert_matches_golden(&rendered, "student_no_intervention_multichoice.txt");
}

#[test]
fn golden_numeric_intervention_hint() {
    let hint = first_step_only(&weng().human_explanation);
    assert!(hint.terminated);
    let rendered = render(
        PromptKind::StudentWithIntervention,
        &[Demonstration::human(&natalia())],
        &weng(),
        Some(&hint.text),
    )
    .unwrap();
    assert_matches_golden(&rendered, "student_with_intervention_numeric.txt");
}

#[test]
fn all_eight_kinds_have_goldens() {
    let files = [
        "student_no_intervention.txt",
        "student_with_intervention.txt",
        "teacher_cot.txt",
        "teacher_rationalize.txt",
        "sim_pre.txt",
        "sim_post.txt",
        "teacher_tom.txt",
        "teacher_deceive.txt",
    ];
    assert_eq!(files.len(), PromptKind::ALL.len());
    for file in files {
        assert!(!golden(file).is_empty());
    }
}
