//! End-to-end behaviour of the analysis pipeline on the bundled scenarios.

use fuzzy_evolve::analysis::{model_compare, ModelSpec};
use fuzzy_evolve::report::{ReportBody, ReportDocument};
use fuzzy_evolve::{bundled, evaluate, EnsembleOptions, Model, Scenario, ScenarioFile, Thresholds};

fn scenario(name: &str) -> Scenario {
    bundled::scenario_file(name)
        .unwrap()
        .to_scenario(0)
        .unwrap()
}

fn opts() -> EnsembleOptions {
    EnsembleOptions::default()
}

fn chosen(s: &Scenario) -> Vec<usize> {
    evaluate(s, "x", &opts())
        .unwrap()
        .chosen_per_agent()
        .iter()
        .map(|t| t.index())
        .collect()
}

#[test]
fn hohk_extremes_stay_isolated_in_every_trial() {
    let out = evaluate(&scenario("example2"), "hohk", &opts()).unwrap();
    let c = &out.clusters;
    assert_eq!(c.frozen_agents, vec![10, 11]);
    assert!(c.modal_partition.contains(&vec![10]));
    assert!(c.modal_partition.contains(&vec![11]));
    for p in &c.partitions {
        assert!(p.contains(&vec![10]) && p.contains(&vec![11]));
    }
    assert_eq!(c.cluster_counts.values().sum::<usize>(), 1000);
}

#[test]
fn classic_hk_freezes_at_small_threshold_but_prrlem_keeps_mixing() {
    let base = scenario("example2");
    let classic = evaluate(
        &base
            .clone()
            .with_model(Model::ClassicHk, Some(Thresholds::Homogeneous(0.15)))
            .unwrap(),
        "classic",
        &opts(),
    )
    .unwrap();
    assert_eq!(classic.clusters.frozen_agents, (0..15).collect::<Vec<_>>());
    assert_eq!(classic.clusters.echo_chamber_trials, 1000);

    let prrlem = evaluate(
        &base
            .with_model(Model::PrrlemHohk, Some(Thresholds::Homogeneous(0.15)))
            .unwrap(),
        "prrlem",
        &opts(),
    )
    .unwrap();
    assert!(prrlem.clusters.frozen_agents.len() < 15);
}

/// 14 agents on one term, e12 alone at h6.
fn consensus_but_e12(c: &[usize]) -> Option<usize> {
    let t = c[0];
    let ok = c[11] == 6 && c.iter().enumerate().all(|(i, &x)| i == 11 || x == t);
    ok.then_some(t)
}

#[test]
fn raising_one_heterogeneous_threshold() {
    let base = scenario("example3");
    let classic = base.clone().with_model(Model::ClassicHk, None).unwrap();
    let classic_moved = classic.clone().with_agent_threshold(5, 0.2).unwrap();
    assert_ne!(chosen(&classic), chosen(&classic_moved));

    // The random-leader model keeps its consensus structure, though the
    // consensus term itself moves from h3 to h2.
    let before = consensus_but_e12(&chosen(&base));
    let after = consensus_but_e12(&chosen(&base.clone().with_agent_threshold(5, 0.2).unwrap()));
    assert_eq!(before, Some(3));
    assert_eq!(after, Some(2));
}

#[test]
fn space_scenario_runs_three_models() {
    let scenarios = bundled::scenario_file("space")
        .unwrap()
        .to_scenarios(0)
        .unwrap();
    let models: Vec<Model> = scenarios.iter().map(|s| s.model()).collect();
    assert_eq!(
        models,
        [Model::PrrlemDegroot, Model::PrrlemHohk, Model::PrrlemHehk]
    );
    for s in &scenarios {
        let out = evaluate(s, "space", &opts()).unwrap();
        assert_eq!(out.agents.len(), 10);
        assert_eq!(out.global.sample_size, 10_000);
    }
}

#[test]
fn same_seed_same_report_different_seed_different_report() {
    let s = scenario("example1").with_trials(200).unwrap();
    let a = evaluate(&s, "a", &opts()).unwrap();
    let b = evaluate(
        &s,
        "a",
        &EnsembleOptions {
            workers: Some(1),
            keep_traces: false,
        },
    )
    .unwrap();
    assert_eq!(a, b);
    let c = evaluate(&s.with_seed(2).unwrap(), "a", &opts()).unwrap();
    assert_ne!(a.global.counts, c.global.counts);
}

#[test]
fn embedded_scenario_reproduces_the_report() {
    let base = scenario("example2").with_trials(300).unwrap();
    let specs = [
        ModelSpec::new(Model::PrrlemHohk),
        ModelSpec::with_eps(Model::ClassicHk, 0.3),
    ];
    let report = model_compare(&base, &specs, &opts()).unwrap();
    let doc = ReportDocument::new(
        "compare",
        base.to_file(),
        ReportBody::Compare(report.clone()),
    );

    let json: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
    let embedded = ScenarioFile::from_json(&json["scenario"].to_string()).unwrap();
    let again = model_compare(&embedded.to_scenario(999).unwrap(), &specs, &opts()).unwrap();
    assert_eq!(report, again);
}

#[test]
fn traces_are_kept_only_on_request() {
    let s = scenario("example1").with_trials(3).unwrap();
    assert!(evaluate(&s, "x", &opts()).unwrap().traces.is_none());
    let kept = evaluate(
        &s,
        "x",
        &EnsembleOptions {
            workers: None,
            keep_traces: true,
        },
    )
    .unwrap();
    let traces = kept.traces.unwrap();
    assert_eq!(traces.len(), 3);
    for t in &traces {
        assert_eq!(t.snapshots.len(), 10);
        assert_eq!(t.leaders.len(), 9);
        assert_eq!(t.snapshots[0], s.initial_opinions());
    }
}
