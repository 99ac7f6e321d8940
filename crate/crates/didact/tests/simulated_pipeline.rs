//! End-to-end simulated runs: sweep, persist, reload, aggregate.

use std::sync::Arc;

use didact::agents::simulated::{generate_profile, synthetic_problems, Dist, ProfileSpec};
use didact::agents::{SimulatedStudent, SimulatedTeacher};
use didact::dataset::split;
use didact::intervention::PolicyKind;
use didact::mental_model::MentalModel;
use didact::metrics::{aggregate, read_traces, write_run};
use didact::protocol::{run_multi_round, run_single_round, DemoMode, MultiRoundConfig, SingleRoundConfig};

const BUDGETS: [f64; 6] = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0];

#[test]
fn sweep_persist_reload_aggregate() {
    let problems = synthetic_problems(120, 0);
    let ids: Vec<String> = problems.iter().map(|p| p.id.clone()).collect();
    let profile = Arc::new(generate_profile(
        &ids,
        &ProfileSpec {
            pre: Dist::Uniform(0.3, 0.7),
            post: Dist::Uniform(0.4, 0.9),
            ..ProfileSpec::default()
        },
        7,
    ));
    let split = split(&problems, 6, 8, 0).unwrap();
    let student = SimulatedStudent::new(profile.clone(), 0);
    let teacher = SimulatedTeacher::new(profile.clone(), 0);
    let model = MentalModel::prompted(Arc::new(SimulatedTeacher::new(profile.clone(), 0)));
    let config = SingleRoundConfig { config_hash: "pipeline".into(), ..SingleRoundConfig::default() };

    let mut traces = Vec::new();
    for policy in [PolicyKind::Random, PolicyKind::ExpectedUtility, PolicyKind::TrueUtility] {
        traces.extend(
            run_single_round(
                &config,
                &student,
                &teacher,
                &model,
                &split,
                policy,
                &BUDGETS,
                &[0, 1, 2],
            )
            .unwrap(),
        );
    }
    assert_eq!(traces.len(), 3 * 3 * BUDGETS.len());

    let dir = tempfile::tempdir().unwrap();
    let run_dir = write_run(dir.path(), "pipeline", "snapshot", &traces).unwrap();
    let reloaded = read_traces(&run_dir.join("traces.jsonl")).unwrap();
    assert_eq!(traces, reloaded);

    let curves = aggregate(&reloaded).unwrap();
    assert_eq!(curves.len(), 3);
    for curve in &curves {
        assert_eq!(curve.points.len(), BUDGETS.len());
        let budgets: Vec<f64> = curve.points.iter().map(|p| p.budget).collect();
        assert_eq!(budgets, BUDGETS);
        for point in &curve.points {
            assert_eq!(point.n_seeds, 3);
            assert!((0.0..=1.0).contains(&point.mean_accuracy));
            assert!(point.std >= 0.0);
        }
    }

    // Budget endpoints are shared across policies: all curves agree there.
    let endpoint = |arm: &str, idx: usize| {
        curves
            .iter()
            .find(|c| c.arm == arm)
            .map(|c| c.points[idx].mean_accuracy)
            .unwrap()
    };
    for idx in [0, BUDGETS.len() - 1] {
        assert_eq!(endpoint("random", idx), endpoint("expected_utility", idx));
        assert_eq!(endpoint("random", idx), endpoint("true_utility", idx));
    }
}

#[test]
fn measured_accuracy_matches_the_plan_expectation() {
    // Any plan over simulated agents has expected accuracy
    // (sum p_post over selected + sum p_pre over the rest) / N; Monte Carlo
    // over >= 10k item-draws must agree within 3 standard errors.
    let problems = synthetic_problems(2514, 9); // 2500 test items
    let ids: Vec<String> = problems.iter().map(|p| p.id.clone()).collect();
    let profile = Arc::new(generate_profile(
        &ids,
        &ProfileSpec {
            pre: Dist::Uniform(0.2, 0.8),
            post: Dist::Uniform(0.3, 0.95),
            ..ProfileSpec::default()
        },
        9,
    ));
    let split = split(&problems, 6, 8, 2).unwrap();
    let seeds: Vec<u64> = (0..4).collect(); // 4 x 2500 = 10k draws
    let config = SingleRoundConfig { config_hash: "mc".into(), ..SingleRoundConfig::default() };

    let mut accuracies = Vec::new();
    let mut selected = None;
    for &seed in &seeds {
        let student = SimulatedStudent::new(profile.clone(), seed);
        let teacher = SimulatedTeacher::new(profile.clone(), seed);
        let model = MentalModel::oracle(profile.clone());
        let traces = run_single_round(
            &config,
            &student,
            &teacher,
            &model,
            &split,
            PolicyKind::ExpectedUtility,
            &[0.4],
            &[seed],
        )
        .unwrap();
        accuracies.push(traces[0].accuracy);
        let ids: std::collections::BTreeSet<String> = traces[0]
            .records
            .iter()
            .filter(|r| r.intervened)
            .map(|r| r.id.clone())
            .collect();
        // The oracle plan is seed-independent; every seed selects the same set.
        if let Some(previous) = &selected {
            assert_eq!(previous, &ids);
        }
        selected = Some(ids);
    }
    let selected = selected.unwrap();
    let expectation = didact::protocol::expected_accuracy(&profile, &split.test, &selected);
    let measured = accuracies.iter().sum::<f64>() / accuracies.len() as f64;
    // Variance of the mean over independent Bernoulli draws.
    let n = split.test.len() as f64;
    let variance_sum: f64 = split
        .test
        .iter()
        .map(|p| {
            let item = profile.items[&p.id];
            let q = if selected.contains(&p.id) { item.p_post } else { item.p_pre };
            q * (1.0 - q)
        })
        .sum();
    let se = (variance_sum / (n * n * accuracies.len() as f64)).sqrt();
    assert!(
        (measured - expectation).abs() <= 3.0 * se,
        "measured {measured:.5} vs expected {expectation:.5}, 3SE {:.5}",
        3.0 * se
    );
}

#[test]
fn teaching_rounds_separate_by_demo_gain() {
    let problems = synthetic_problems(400, 3);
    let ids: Vec<String> = problems.iter().map(|p| p.id.clone()).collect();
    let mut profile = generate_profile(
        &ids,
        &ProfileSpec {
            pre: Dist::Const(0.5),
            post: Dist::Const(0.8),
            ..ProfileSpec::default()
        },
        3,
    );
    // Each teacher-explained demonstration lifts the student by 2 points.
    profile.demo_gain.teacher = 0.02;
    let profile = Arc::new(profile);

    let split = split(&problems, 6, 8, 1).unwrap();
    let pool: Vec<_> = split.test[..20].to_vec();
    let test: Vec<_> = split.test[20..].to_vec();
    let student = SimulatedStudent::new(profile.clone(), 1);
    let teacher = SimulatedTeacher::new(profile.clone(), 1);
    let model = MentalModel::oracle(profile.clone());

    let run = |mode: DemoMode| {
        let config = MultiRoundConfig {
            demo_mode: mode,
            config_hash: "rounds".into(),
            ..MultiRoundConfig::default()
        };
        run_multi_round(&config, &student, &teacher, &model, &split, &pool, &test, &[0, 1])
            .unwrap()
    };
    let unexplained = run(DemoMode::None);
    let taught = run(DemoMode::TeacherExplained);

    let curve = |traces: &[didact::Trace]| {
        let curves = aggregate(traces).unwrap();
        curves[0]
            .points
            .iter()
            .map(|p| p.mean_accuracy)
            .collect::<Vec<f64>>()
    };
    let flat = curve(&unexplained);
    let rising = curve(&taught);
    assert_eq!(flat.len(), 5);
    // After round r the taught arm carries 2r demos at +0.02 each.
    for round in 1..=5usize {
        let expected_gap = 0.02 * 2.0 * round as f64;
        let gap = rising[round - 1] - flat[round - 1];
        assert!(
            (gap - expected_gap).abs() < 0.06,
            "round {round}: gap {gap:.3}, expected about {expected_gap:.3}"
        );
    }
}
