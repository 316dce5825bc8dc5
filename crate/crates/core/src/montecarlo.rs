//! Ensembles of independent trials and their aggregate statistics.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{confidence_sets, run_trial, TrialState, TrialTrace};
use crate::error::{Error, Result};
use crate::scale::LinguisticTerm;
use crate::scenario::Scenario;

#[derive(Debug, Clone, Default)]
pub struct EnsembleOptions {
    /// Worker threads; `None` uses every available core.
    pub workers: Option<usize>,
    /// Keep every trial's full trace.
    pub keep_traces: bool,
}

/// What survives of one trial after aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub final_opinions: Vec<LinguisticTerm>,
    /// Whether each agent's opinion changed in any round.
    pub moved: Vec<bool>,
    /// HK models only: sets stable over the last round with more than one
    /// distinct opinion left.
    pub echo_chamber: bool,
    pub trace: Option<TrialTrace>,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub scenario: Scenario,
    pub trials: Vec<TrialOutcome>,
    pub leader_counts: Vec<u64>,
    pub elapsed: Duration,
}

impl EnsembleResult {
    pub fn finals(&self) -> impl Iterator<Item = &[LinguisticTerm]> {
        self.trials.iter().map(|t| t.final_opinions.as_slice())
    }
}

fn summarise(scenario: &Scenario, trace: TrialTrace, keep: bool) -> (TrialOutcome, Vec<u64>) {
    let n = scenario.agents();
    let first = &trace.snapshots[0];
    let moved = (0..n)
        .map(|i| trace.snapshots.iter().any(|s| s[i] != first[i]))
        .collect();

    let echo_chamber = match scenario.agent_thresholds() {
        Some(eps) if scenario.model().is_hk() => {
            let k = trace.snapshots.len();
            let sets = |snap: &Vec<LinguisticTerm>| {
                confidence_sets(scenario.scale(), &TrialState::initial(snap.clone()), &eps)
            };
            let mut distinct = trace.final_opinions.clone();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.len() > 1 && sets(&trace.snapshots[k - 2]) == sets(&trace.snapshots[k - 1])
        }
        _ => false,
    };

    let mut leaders = vec![0u64; n];
    for ev in &trace.leaders {
        leaders[ev.leader] += 1;
    }
    let outcome = TrialOutcome {
        final_opinions: trace.final_opinions.clone(),
        moved,
        echo_chamber,
        trace: keep.then_some(trace),
    };
    (outcome, leaders)
}

pub fn run_ensemble(scenario: &Scenario) -> Result<EnsembleResult> {
    run_ensemble_with(scenario, &EnsembleOptions::default())
}

/// Runs trials `0..M`. Results are collected in trial order, so the output
/// does not depend on the worker count.
pub fn run_ensemble_with(scenario: &Scenario, opts: &EnsembleOptions) -> Result<EnsembleResult> {
    let start = Instant::now();
    let work = || -> Result<Vec<(TrialOutcome, Vec<u64>)>> {
        (0..scenario.trials() as u64)
            .into_par_iter()
            .map(|k| run_trial(scenario, k).map(|t| summarise(scenario, t, opts.keep_traces)))
            .collect()
    };
    let per_trial = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };

    let n = scenario.agents();
    let mut leader_counts = vec![0u64; n];
    let mut trials = Vec::with_capacity(per_trial.len());
    for (outcome, leaders) in per_trial {
        leader_counts
            .iter_mut()
            .zip(leaders)
            .for_each(|(a, b)| *a += b);
        trials.push(outcome);
    }
    Ok(EnsembleResult {
        scenario: scenario.clone(),
        trials,
        leader_counts,
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TallyMode {
    /// One row over all agents of all trials, sample size `M·N`.
    Global,
    /// One row per agent, sample size `M`.
    PerAgent,
}

/// Occurrence counts of final terms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyTable {
    pub mode: TallyMode,
    pub terms: usize,
    pub sample_size: u64,
    /// Row-major, `rows() × terms`.
    pub counts: Vec<u64>,
}

impl TallyTable {
    pub fn empty(mode: TallyMode, agents: usize, terms: usize) -> Self {
        let rows = match mode {
            TallyMode::Global => 1,
            TallyMode::PerAgent => agents,
        };
        TallyTable {
            mode,
            terms,
            sample_size: 0,
            counts: vec![0; rows * terms],
        }
    }

    pub fn rows(&self) -> usize {
        self.counts.len() / self.terms
    }

    pub fn row(&self, r: usize) -> &[u64] {
        &self.counts[r * self.terms..(r + 1) * self.terms]
    }

    pub fn proportions(&self, r: usize) -> Vec<f64> {
        self.row(r)
            .iter()
            .map(|&q| {
                if self.sample_size == 0 {
                    0.0
                } else {
                    q as f64 / self.sample_size as f64
                }
            })
            .collect()
    }

    /// Adds one trial's final opinions.
    pub fn record(&mut self, finals: &[LinguisticTerm]) {
        match self.mode {
            TallyMode::Global => {
                for t in finals {
                    self.counts[t.index()] += 1;
                }
                self.sample_size += finals.len() as u64;
            }
            TallyMode::PerAgent => {
                for (i, t) in finals.iter().enumerate() {
                    self.counts[i * self.terms + t.index()] += 1;
                }
                self.sample_size += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &TallyTable) -> Result<()> {
        if self.mode != other.mode
            || self.terms != other.terms
            || self.counts.len() != other.counts.len()
        {
            return Err(Error::Internal("merging tallies of different shape".into()));
        }
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        self.sample_size += other.sample_size;
        Ok(())
    }
}

pub fn tally(results: &EnsembleResult, mode: TallyMode) -> TallyTable {
    let s = &results.scenario;
    let mut table = TallyTable::empty(mode, s.agents(), s.scale().cardinality());
    for finals in results.finals() {
        table.record(finals);
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub point: f64,
    pub z: f64,
}

/// Normal-approximation interval `p ± z·sqrt(p(1-p)/n)`, clamped to `[0, 1]`.
pub fn confidence_interval(p: f64, n: u64, z: f64) -> ConfidenceInterval {
    let half = z * (p * (1.0 - p) / n as f64).sqrt();
    ConfidenceInterval {
        lo: (p - half).clamp(0.0, 1.0),
        hi: (p + half).clamp(0.0, 1.0),
        point: p,
        z,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson statistic of `counts` against a uniform expectation.
pub fn chi_square_uniform(counts: &[u64]) -> Option<ChiSquareTest> {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return None;
    }
    let expected = total as f64 / counts.len() as f64;
    let statistic = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = counts.len() - 1;
    let p_value = ChiSquared::new(dof as f64).ok()?.sf(statistic);
    Some(ChiSquareTest {
        statistic,
        dof,
        p_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderFrequency {
    pub applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub counts: Vec<u64>,
    pub percentages: Vec<f64>,
    pub total: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniformity: Option<ChiSquareTest>,
}

pub fn leader_frequency(results: &EnsembleResult) -> LeaderFrequency {
    let model = results.scenario.model();
    if !model.is_prrlem() {
        return LeaderFrequency {
            applicable: false,
            note: Some(format!("model {model} has no leader election")),
            counts: Vec::new(),
            percentages: Vec::new(),
            total: 0,
            uniformity: None,
        };
    }
    let counts = results.leader_counts.clone();
    let total: u64 = counts.iter().sum();
    let percentages = counts
        .iter()
        .map(|&c| {
            if total == 0 {
                0.0
            } else {
                100.0 * c as f64 / total as f64
            }
        })
        .collect();
    LeaderFrequency {
        applicable: true,
        note: None,
        uniformity: chi_square_uniform(&counts),
        counts,
        percentages,
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::LinguisticTermSet;
    use crate::scenario::{Model, Thresholds};
    use proptest::prelude::*;

    const EXAMPLE1: [usize; 15] = [1, 4, 1, 2, 1, 3, 4, 1, 5, 1, 0, 6, 3, 2, 5];

    fn scenario(model: Model, trials: usize, thresholds: Option<Thresholds>) -> Scenario {
        Scenario::new(
            model,
            trials,
            9,
            LinguisticTermSet::new(3, 1.37).unwrap(),
            1.96,
            EXAMPLE1.iter().map(|&i| LinguisticTerm::new(i)).collect(),
            thresholds,
            42,
        )
        .unwrap()
    }

    fn r3(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    #[test]
    fn interval_examples() {
        let ci = confidence_interval(285.0 / 15000.0, 15000, 1.96);
        assert_eq!((r3(ci.lo), r3(ci.hi)), (0.017, 0.021));
        let ci = confidence_interval(5220.0 / 15000.0, 15000, 1.96);
        assert_eq!((r3(ci.lo), r3(ci.hi)), (0.340, 0.356));
        for n in [1, 10, 15000] {
            let zero = confidence_interval(0.0, n, 1.96);
            assert_eq!((zero.lo, zero.hi), (0.0, 0.0));
            let one = confidence_interval(1.0, n, 1.96);
            assert_eq!((one.lo, one.hi), (1.0, 1.0));
        }
        // tiny samples clamp instead of leaving [0, 1]
        let ci = confidence_interval(0.1, 2, 1.96);
        assert_eq!(ci.lo, 0.0);
    }

    proptest! {
        #[test]
        fn interval_ordering_and_width(p in 0.0f64..=1.0, n in 1u64..100_000, z in 0.1f64..4.0) {
            let ci = confidence_interval(p, n, z);
            prop_assert!(0.0 <= ci.lo && ci.lo <= ci.point && ci.point <= ci.hi && ci.hi <= 1.0);
            let wider = confidence_interval(p, n, z);
            let narrower = confidence_interval(p, n + 1, z);
            prop_assert!(narrower.hi - narrower.lo <= wider.hi - wider.lo + 1e-15);
            prop_assert_eq!(ci.hi - ci.lo == 0.0, p == 0.0 || p == 1.0);
        }

        #[test]
        fn tally_merge_is_partition_invariant(cut in 0usize..40, seed in 0u64..4) {
            let s = scenario(Model::PrrlemHohk, 40, Some(Thresholds::Homogeneous(0.25)))
                .with_seed(seed).unwrap();
            let ens = run_ensemble(&s).unwrap();
            for mode in [TallyMode::Global, TallyMode::PerAgent] {
                let whole = tally(&ens, mode);
                let mut left = TallyTable::empty(mode, 15, 7);
                let mut right = TallyTable::empty(mode, 15, 7);
                for (k, f) in ens.finals().enumerate() {
                    if k < cut { left.record(f) } else { right.record(f) }
                }
                let mut lr = left.clone();
                lr.merge(&right).unwrap();
                let mut rl = right;
                rl.merge(&left).unwrap();
                prop_assert_eq!(&lr, &whole);
                prop_assert_eq!(&rl, &whole);
            }
        }
    }

    #[test]
    fn single_trial_ensemble() {
        let e = run_ensemble(&scenario(Model::PrrlemDegroot, 1, None)).unwrap();
        assert_eq!(e.trials.len(), 1);
        assert_eq!(e.leader_counts.iter().sum::<u64>(), 9);
    }

    #[test]
    fn tallies_sum_to_sample_sizes() {
        let e = run_ensemble(&scenario(Model::PrrlemDegroot, 200, None)).unwrap();
        let g = tally(&e, TallyMode::Global);
        assert_eq!(g.sample_size, 3000);
        assert_eq!(g.counts.iter().sum::<u64>(), 3000);
        let pa = tally(&e, TallyMode::PerAgent);
        assert_eq!(pa.sample_size, 200);
        for r in 0..15 {
            assert_eq!(pa.row(r).iter().sum::<u64>(), 200);
            // forced consensus: every agent row is identical
            assert_eq!(pa.row(r), pa.row(0));
        }
    }

    #[test]
    fn consensus_tally_example() {
        let mut t = TallyTable::empty(TallyMode::Global, 15, 7);
        for _ in 0..1000 {
            t.record(&[LinguisticTerm::new(2); 15]);
        }
        assert_eq!(t.row(0), &[0, 0, 15000, 0, 0, 0, 0]);
        assert_eq!(t.proportions(0)[2], 1.0);
    }

    #[test]
    fn ensemble_is_deterministic_across_workers() {
        let s = scenario(
            Model::PrrlemHehk,
            64,
            Some(Thresholds::Heterogeneous(vec![0.3; 15])),
        );
        let one = run_ensemble_with(
            &s,
            &EnsembleOptions {
                workers: Some(1),
                keep_traces: true,
            },
        )
        .unwrap();
        let many = run_ensemble_with(
            &s,
            &EnsembleOptions {
                workers: Some(4),
                keep_traces: true,
            },
        )
        .unwrap();
        assert_eq!(one.trials, many.trials);
        assert_eq!(one.leader_counts, many.leader_counts);
    }

    #[test]
    fn leader_frequency_reports() {
        let tiny = Scenario::new(
            Model::PrrlemDegroot,
            1,
            1,
            LinguisticTermSet::new(3, 1.37).unwrap(),
            1.96,
            vec![LinguisticTerm::new(0), LinguisticTerm::new(6)],
            None,
            0,
        )
        .unwrap();
        let lf = leader_frequency(&run_ensemble(&tiny).unwrap());
        assert_eq!(lf.total, 1);

        let e = run_ensemble(&scenario(Model::PrrlemDegroot, 100, None)).unwrap();
        let lf = leader_frequency(&e);
        assert_eq!(lf.total, 900);
        assert!((lf.percentages.iter().sum::<f64>() - 100.0).abs() < 1e-9);

        let classic = run_ensemble(&scenario(Model::ClassicDegrootEqual, 3, None)).unwrap();
        let lf = leader_frequency(&classic);
        assert!(!lf.applicable);
        assert!(lf.note.is_some());
        assert!(lf.counts.is_empty());
    }

    #[test]
    fn chi_square_known_values() {
        let flat = chi_square_uniform(&[100; 10]).unwrap();
        assert_eq!(flat.statistic, 0.0);
        assert!((flat.p_value - 1.0).abs() < 1e-12);
        // 2 cells, (60-50)^2/50 * 2 = 4, P(chi2_1 > 4) = 0.0455
        let skew = chi_square_uniform(&[60, 40]).unwrap();
        assert!((skew.statistic - 4.0).abs() < 1e-12);
        assert!((skew.p_value - 0.045_500_263_9).abs() < 1e-6);
    }

    #[test]
    fn classic_models_have_no_trial_variance() {
        let e = run_ensemble(&scenario(
            Model::ClassicHk,
            20,
            Some(Thresholds::Homogeneous(0.2)),
        ))
        .unwrap();
        assert!(e.trials.windows(2).all(|w| w[0] == w[1]));
    }
}
