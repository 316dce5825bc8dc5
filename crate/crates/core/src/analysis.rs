//! Experiment procedures built on ensembles: per-model decisions, cluster
//! summaries, model comparison and perturbation (robustness) studies.
//!
//! Agents are 0-based in the API. Serialized output names them `e1, e2, ..`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Serialize, Serializer};

use crate::dynamics::TrialTrace;
use crate::error::{Error, Result};
use crate::grrv::{rank, Interval, RankedDecision};
use crate::montecarlo::{
    confidence_interval, leader_frequency, run_ensemble_with, tally, ConfidenceInterval,
    EnsembleOptions, EnsembleResult, LeaderFrequency, TallyMode,
};
use crate::scale::LinguisticTerm;
use crate::scenario::{Model, Scenario, Thresholds};

pub fn agent_label(agent: usize) -> String {
    format!("e{}", agent + 1)
}

fn ser_agent<S: Serializer>(agent: &usize, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&agent_label(*agent))
}

fn ser_agents<S: Serializer>(agents: &[usize], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(agents.iter().map(|&a| agent_label(a)))
}

fn ser_partition<S: Serializer>(blocks: &[Vec<usize>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(
        blocks
            .iter()
            .map(|b| b.iter().map(|&a| agent_label(a)).collect::<Vec<_>>()),
    )
}

/// Tally row → proportions → intervals → ranking.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TermDecision {
    pub counts: Vec<u64>,
    pub sample_size: u64,
    pub proportions: Vec<f64>,
    pub intervals: Vec<ConfidenceInterval>,
    pub ranking: RankedDecision,
}

pub fn decide(counts: &[u64], sample_size: u64, z: f64) -> Result<TermDecision> {
    if sample_size == 0 {
        return Err(Error::Configuration("empty sample".into()));
    }
    let proportions: Vec<f64> = counts
        .iter()
        .map(|&q| q as f64 / sample_size as f64)
        .collect();
    let intervals: Vec<ConfidenceInterval> = proportions
        .iter()
        .map(|&p| confidence_interval(p, sample_size, z))
        .collect();
    let ivs = intervals
        .iter()
        .map(Interval::try_from)
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<LinguisticTerm> = (0..counts.len()).map(LinguisticTerm::new).collect();
    Ok(TermDecision {
        counts: counts.to_vec(),
        sample_size,
        proportions,
        intervals,
        ranking: rank(&ivs, &labels)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentDecision {
    #[serde(serialize_with = "ser_agent")]
    pub agent: usize,
    #[serde(flatten)]
    pub decision: TermDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub trials: usize,
    /// Per trial, agents grouped by final term; blocks ordered by term.
    #[serde(skip)]
    pub partitions: Vec<Vec<Vec<usize>>>,
    /// Number of distinct final opinions → number of trials.
    pub cluster_counts: BTreeMap<usize, usize>,
    /// Most frequent partition (blocks ordered by smallest member), ties to
    /// the earliest trial.
    #[serde(serialize_with = "ser_partition")]
    pub modal_partition: Vec<Vec<usize>>,
    pub modal_frequency: usize,
    /// Agents whose opinion never changed in any round of any trial.
    #[serde(serialize_with = "ser_agents")]
    pub frozen_agents: Vec<usize>,
    pub echo_chamber_trials: usize,
}

fn partition_by_term(finals: &[LinguisticTerm]) -> Vec<Vec<usize>> {
    let mut blocks: BTreeMap<LinguisticTerm, Vec<usize>> = BTreeMap::new();
    for (i, &t) in finals.iter().enumerate() {
        blocks.entry(t).or_default().push(i);
    }
    blocks.into_values().collect()
}

pub fn cluster_summary(ensemble: &EnsembleResult) -> ClusterSummary {
    let n = ensemble.scenario.agents();
    let partitions: Vec<Vec<Vec<usize>>> = ensemble.finals().map(partition_by_term).collect();

    let mut cluster_counts = BTreeMap::new();
    let mut seen: BTreeMap<Vec<Vec<usize>>, (usize, usize)> = BTreeMap::new();
    for (k, p) in partitions.iter().enumerate() {
        *cluster_counts.entry(p.len()).or_insert(0) += 1;
        let mut canonical = p.clone();
        canonical.sort();
        seen.entry(canonical).or_insert((0, k)).0 += 1;
    }
    let (modal_partition, (modal_frequency, _)) = seen
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .unwrap_or_default();

    let frozen_agents = (0..n)
        .filter(|&i| ensemble.trials.iter().all(|t| !t.moved[i]))
        .collect();

    ClusterSummary {
        trials: ensemble.trials.len(),
        partitions,
        cluster_counts,
        modal_partition,
        modal_frequency,
        frozen_agents,
        echo_chamber_trials: ensemble.trials.iter().filter(|t| t.echo_chamber).count(),
    }
}

/// Everything reported for one model run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelOutcome {
    pub label: String,
    pub model: Model,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    /// Which decision the model's pipeline reports: one system-wide term
    /// (DeGroot family) or one term per agent (HK family).
    pub decision_mode: TallyMode,
    pub global: TermDecision,
    pub agents: Vec<AgentDecision>,
    pub leader_frequency: LeaderFrequency,
    pub clusters: ClusterSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traces: Option<Vec<TrialTrace>>,
}

impl ModelOutcome {
    pub fn chosen_per_agent(&self) -> Vec<LinguisticTerm> {
        self.agents
            .iter()
            .map(|a| a.decision.ranking.chosen)
            .collect()
    }

    pub fn global_chosen(&self) -> LinguisticTerm {
        self.global.ranking.chosen
    }
}

pub fn decision_mode(model: Model) -> TallyMode {
    if model.is_hk() {
        TallyMode::PerAgent
    } else {
        TallyMode::Global
    }
}

pub fn evaluate(scenario: &Scenario, label: &str, opts: &EnsembleOptions) -> Result<ModelOutcome> {
    let ensemble = run_ensemble_with(scenario, opts)?;
    outcome_from_ensemble(&ensemble, label)
}

pub fn outcome_from_ensemble(ensemble: &EnsembleResult, label: &str) -> Result<ModelOutcome> {
    let s = &ensemble.scenario;
    let z = s.z_value();
    let g = tally(ensemble, TallyMode::Global);
    let pa = tally(ensemble, TallyMode::PerAgent);
    let agents = (0..s.agents())
        .map(|i| {
            Ok(AgentDecision {
                agent: i,
                decision: decide(pa.row(i), pa.sample_size, z)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let traces = ensemble
        .trials
        .iter()
        .map(|t| t.trace.clone())
        .collect::<Option<Vec<_>>>();
    Ok(ModelOutcome {
        label: label.to_string(),
        model: s.model(),
        thresholds: s.thresholds().cloned(),
        decision_mode: decision_mode(s.model()),
        global: decide(g.row(0), g.sample_size, z)?,
        agents,
        leader_frequency: leader_frequency(ensemble),
        clusters: cluster_summary(ensemble),
        traces,
    })
}

/// A model to run on a base scenario's data, optionally with its own
/// thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub model: Model,
    pub thresholds: Option<Thresholds>,
}

impl ModelSpec {
    pub fn new(model: Model) -> Self {
        ModelSpec {
            model,
            thresholds: None,
        }
    }

    pub fn with_eps(model: Model, eps: f64) -> Self {
        ModelSpec {
            model,
            thresholds: Some(Thresholds::Homogeneous(eps)),
        }
    }

    pub fn label(&self) -> String {
        match &self.thresholds {
            None => self.model.name().to_string(),
            Some(Thresholds::Homogeneous(eps)) => format!("{}@eps={eps}", self.model),
            Some(Thresholds::Heterogeneous(_)) => format!("{}@eps=custom", self.model),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepDelta {
    pub column: String,
    /// `Rep(column) - Rep(first column)` for the global decision.
    pub global: Vec<f64>,
    pub global_max_abs: f64,
    pub per_agent_max_abs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub columns: Vec<ModelOutcome>,
    /// `agreement[a][b]`: fraction of agents whose chosen terms agree.
    pub agreement: Vec<Vec<f64>>,
    /// Each column against the first.
    pub rep_deltas: Vec<RepDelta>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn compare_outcomes(columns: Vec<ModelOutcome>) -> ComparisonReport {
    let chosen: Vec<Vec<LinguisticTerm>> = columns.iter().map(|c| c.chosen_per_agent()).collect();
    let agreement = chosen
        .iter()
        .map(|a| {
            chosen
                .iter()
                .map(|b| {
                    let same = a.iter().zip(b).filter(|(x, y)| x == y).count();
                    same as f64 / a.len().max(1) as f64
                })
                .collect()
        })
        .collect();
    let rep_deltas = match columns.first() {
        None => Vec::new(),
        Some(base) => columns
            .iter()
            .map(|c| {
                let global = sub(&c.global.ranking.reps, &base.global.ranking.reps);
                RepDelta {
                    column: c.label.clone(),
                    global_max_abs: max_abs(&global),
                    global,
                    per_agent_max_abs: c
                        .agents
                        .iter()
                        .zip(&base.agents)
                        .map(|(x, y)| {
                            max_abs(&sub(&x.decision.ranking.reps, &y.decision.ranking.reps))
                        })
                        .collect(),
                }
            })
            .collect(),
    };
    ComparisonReport {
        columns,
        agreement,
        rep_deltas,
    }
}

/// Runs each spec on the base scenario's data and seed.
pub fn model_compare(
    base: &Scenario,
    specs: &[ModelSpec],
    opts: &EnsembleOptions,
) -> Result<ComparisonReport> {
    let columns = specs
        .iter()
        .map(|spec| {
            let scenario = base
                .clone()
                .with_model(spec.model, spec.thresholds.clone())?;
            evaluate(&scenario, &spec.label(), opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(compare_outcomes(columns))
}

/// Homogeneous-threshold sweep of one model.
pub fn eps_sweep(
    base: &Scenario,
    model: Model,
    grid: &[f64],
    opts: &EnsembleOptions,
) -> Result<ComparisonReport> {
    if !model.is_hk() {
        return Err(Error::Configuration(format!(
            "{model} has no threshold to sweep"
        )));
    }
    let specs: Vec<ModelSpec> = grid
        .iter()
        .map(|&e| ModelSpec::with_eps(model, e))
        .collect();
    model_compare(base, &specs, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "value")]
pub enum PerturbationKind {
    ReplaceInitialOpinion(LinguisticTerm),
    ReplaceThreshold(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Perturbation {
    #[serde(serialize_with = "ser_agent")]
    pub agent: usize,
    #[serde(flatten)]
    pub kind: PerturbationKind,
}

impl Perturbation {
    pub fn opinion(agent: usize, term: LinguisticTerm) -> Self {
        Perturbation {
            agent,
            kind: PerturbationKind::ReplaceInitialOpinion(term),
        }
    }

    pub fn threshold(agent: usize, eps: f64) -> Self {
        Perturbation {
            agent,
            kind: PerturbationKind::ReplaceThreshold(eps),
        }
    }
}

/// Applies perturbations in order. Seeds and everything else stay as they
/// were.
pub fn apply_perturbations(
    scenario: &Scenario,
    perturbations: &[Perturbation],
) -> Result<Scenario> {
    let mut s = scenario.clone();
    for p in perturbations {
        if p.agent >= s.agents() {
            return Err(Error::InvalidPerturbation(format!(
                "agent {} does not exist (scenario has {} agents)",
                agent_label(p.agent),
                s.agents()
            )));
        }
        s = match p.kind {
            PerturbationKind::ReplaceInitialOpinion(term) => {
                s.scale()
                    .check(term)
                    .map_err(|e| Error::InvalidPerturbation(e.to_string()))?;
                s.with_initial_opinion(p.agent, term)
            }
            PerturbationKind::ReplaceThreshold(eps) => {
                if !s.model().is_hk() {
                    return Err(Error::InvalidPerturbation(format!(
                        "model {} has no thresholds",
                        s.model()
                    )));
                }
                s.with_agent_threshold(p.agent, eps)
            }
        }
        .map_err(|e| Error::InvalidPerturbation(e.to_string()))?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionDelta {
    pub baseline_chosen: LinguisticTerm,
    pub perturbed_chosen: LinguisticTerm,
    pub baseline_winners: Vec<LinguisticTerm>,
    pub perturbed_winners: Vec<LinguisticTerm>,
    pub rep_delta: Vec<f64>,
}

impl DecisionDelta {
    fn between(base: &RankedDecision, pert: &RankedDecision) -> Self {
        DecisionDelta {
            baseline_chosen: base.chosen,
            perturbed_chosen: pert.chosen,
            baseline_winners: base.winners.clone(),
            perturbed_winners: pert.winners.clone(),
            rep_delta: sub(&pert.reps, &base.reps),
        }
    }

    pub fn unchanged(&self) -> bool {
        self.baseline_chosen == self.perturbed_chosen
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentDelta {
    #[serde(serialize_with = "ser_agent")]
    pub agent: usize,
    pub targeted: bool,
    #[serde(flatten)]
    pub delta: DecisionDelta,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessVerdict {
    pub global_unchanged: bool,
    pub untouched_agents_unchanged: bool,
    pub term_set_unchanged: bool,
    /// Global decision for DeGroot-family models; untouched agents and the
    /// set of chosen terms for HK-family models.
    pub unchanged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessReport {
    pub perturbations: Vec<Perturbation>,
    pub comparison: ComparisonReport,
    pub global: DecisionDelta,
    pub agents: Vec<AgentDelta>,
    /// Terms chosen by some agent after, but by none before.
    pub terms_added: Vec<LinguisticTerm>,
    pub terms_removed: Vec<LinguisticTerm>,
    pub verdict: RobustnessVerdict,
}

/// Baseline against perturbed ensemble, both on the baseline master seed.
pub fn robustness_compare(
    scenario: &Scenario,
    perturbations: &[Perturbation],
    opts: &EnsembleOptions,
) -> Result<RobustnessReport> {
    let perturbed = apply_perturbations(scenario, perturbations)?;
    let base = evaluate(scenario, "baseline", opts)?;
    let pert = evaluate(&perturbed, "perturbed", opts)?;

    let targets: BTreeSet<usize> = perturbations.iter().map(|p| p.agent).collect();
    let agents: Vec<AgentDelta> = base
        .agents
        .iter()
        .zip(&pert.agents)
        .map(|(b, p)| AgentDelta {
            agent: b.agent,
            targeted: targets.contains(&b.agent),
            delta: DecisionDelta::between(&b.decision.ranking, &p.decision.ranking),
        })
        .collect();
    let global = DecisionDelta::between(&base.global.ranking, &pert.global.ranking);

    let before: BTreeSet<LinguisticTerm> = base.chosen_per_agent().into_iter().collect();
    let after: BTreeSet<LinguisticTerm> = pert.chosen_per_agent().into_iter().collect();
    let terms_added: Vec<_> = after.difference(&before).copied().collect();
    let terms_removed: Vec<_> = before.difference(&after).copied().collect();

    let global_unchanged = global.unchanged();
    let untouched_agents_unchanged = agents
        .iter()
        .filter(|a| !a.targeted)
        .all(|a| a.delta.unchanged());
    let term_set_unchanged = terms_added.is_empty() && terms_removed.is_empty();
    let unchanged = match base.decision_mode {
        TallyMode::Global => global_unchanged,
        TallyMode::PerAgent => untouched_agents_unchanged && term_set_unchanged,
    };

    Ok(RobustnessReport {
        perturbations: perturbations.to_vec(),
        comparison: compare_outcomes(vec![base, pert]),
        global,
        agents,
        terms_added,
        terms_removed,
        verdict: RobustnessVerdict {
            global_unchanged,
            untouched_agents_unchanged,
            term_set_unchanged,
            unchanged,
        },
    })
}
