//! Linguistic fuzzy opinion dynamics with a per-round random leader.
//!
//! Agents hold opinions on a balanced linguistic scale ([`scale`]). Each
//! round one agent (or one agent per confidence set, for bounded-confidence
//! models) is drawn as a temporary leader with a random weight, everyone
//! updates, and opinions are quantised back onto the scale ([`dynamics`]).
//! Ensembles of independent trials ([`montecarlo`]) give per-term
//! proportions and confidence intervals, which are ranked by their
//! golden-rule representative value ([`grrv`]). [`analysis`] wraps that
//! pipeline into model comparisons and perturbation studies; [`report`]
//! serializes the results.

pub mod analysis;
pub mod bundled;
pub mod dynamics;
pub mod error;
pub mod grrv;
pub mod montecarlo;
pub mod report;
pub mod rng;
pub mod scale;
pub mod scenario;

pub use analysis::{
    cluster_summary, evaluate, model_compare, robustness_compare, ComparisonReport, ModelOutcome,
    ModelSpec, Perturbation, RobustnessReport,
};
pub use dynamics::{run_trial, TrialTrace};
pub use error::{Error, Result};
pub use grrv::{golden_rule_system, rank, rep, tsk_evaluate, Interval, RankedDecision};
pub use montecarlo::{
    confidence_interval, leader_frequency, run_ensemble, run_ensemble_with, tally,
    ConfidenceInterval, EnsembleOptions, EnsembleResult, TallyMode, TallyTable,
};
pub use report::{ReportBody, ReportDocument};
pub use scale::{LinguisticTerm, LinguisticTermSet, NumericOpinion};
pub use scenario::{Model, Scenario, ScenarioFile, Thresholds};
