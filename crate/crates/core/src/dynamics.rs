//! One trial of each opinion model.
//!
//! Opinions are carried as linguistic terms between rounds. Each round
//! converts them to numbers, applies the model's update and quantises the
//! result back onto the scale.
//!
//! Random draws within a round are consumed in a fixed order: for every
//! leader draw, the leader index first and then its weight. HK rounds draw
//! once per distinct confidence set, sets taken in lexicographic order of
//! their sorted member lists.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::trial_stream;
use crate::scale::{LinguisticTerm, LinguisticTermSet};
use crate::scenario::{Model, Scenario};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialState {
    /// 1-based round counter; the initial state is round 1.
    pub round: usize,
    pub opinions: Vec<LinguisticTerm>,
}

impl TrialState {
    pub fn initial(opinions: Vec<LinguisticTerm>) -> Self {
        TrialState { round: 1, opinions }
    }

    pub fn numeric(&self, scale: &LinguisticTermSet) -> Vec<f64> {
        self.opinions.iter().map(|&t| scale.theta(t)).collect()
    }

    fn advance(&self, opinions: Vec<LinguisticTerm>) -> TrialState {
        TrialState {
            round: self.round + 1,
            opinions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderDraw {
    pub leader: usize,
    pub weight: f64,
}

/// Agents within `ε_i` of agent `i`, sorted ascending. Always contains `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ConfidenceSet {
    pub owner: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeaderEvent {
    pub round: usize,
    pub leader: usize,
    pub weight: f64,
    pub group_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub trial_index: u64,
    /// `T + 1` snapshots, the first being the initial opinions.
    pub snapshots: Vec<Vec<LinguisticTerm>>,
    pub leaders: Vec<LeaderEvent>,
    pub final_opinions: Vec<LinguisticTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// `ω = 1/N` for everyone.
    Equal,
    /// `ω_j ∝ exp(-|y_i - y_j|)`, normalised per updating agent.
    Distance,
}

/// Picks a leader uniformly from `candidates`, then its weight from
/// `U[0, 1)`. A lone candidate gets weight 1 and no weight draw.
pub fn draw_leader<R: Rng + ?Sized>(rng: &mut R, candidates: &[usize]) -> Result<LeaderDraw> {
    if candidates.is_empty() {
        return Err(Error::Internal("leader drawn from an empty group".into()));
    }
    let leader = candidates[rng.gen_range(0..candidates.len())];
    let weight = if candidates.len() == 1 {
        1.0
    } else {
        rng.gen::<f64>()
    };
    Ok(LeaderDraw { leader, weight })
}

/// Weights aligned with `members`: the leader keeps `ω_j`, the others
/// split `1 - ω_j` evenly.
pub fn follower_weights(draw: &LeaderDraw, members: &[usize]) -> Vec<f64> {
    if members.len() == 1 {
        return vec![1.0];
    }
    let follower = (1.0 - draw.weight) / (members.len() - 1) as f64;
    members
        .iter()
        .map(|&k| {
            if k == draw.leader {
                draw.weight
            } else {
                follower
            }
        })
        .collect()
}

fn pooled_value(numeric: &[f64], members: &[usize], draw: &LeaderDraw) -> f64 {
    follower_weights(draw, members)
        .iter()
        .zip(members)
        .map(|(w, &k)| w * numeric[k])
        .sum()
}

fn members_within(numeric: &[f64], i: usize, eps: f64) -> Vec<usize> {
    let yi = numeric[i];
    (0..numeric.len())
        .filter(|&j| (yi - numeric[j]).abs() <= eps)
        .collect()
}

pub fn confidence_set(
    scale: &LinguisticTermSet,
    state: &TrialState,
    i: usize,
    eps: f64,
) -> ConfidenceSet {
    ConfidenceSet {
        owner: i,
        members: members_within(&state.numeric(scale), i, eps),
    }
}

/// All agents' confidence sets for the state, in agent order.
pub fn confidence_sets(
    scale: &LinguisticTermSet,
    state: &TrialState,
    thresholds: &[f64],
) -> Vec<ConfidenceSet> {
    let numeric = state.numeric(scale);
    thresholds
        .iter()
        .enumerate()
        .map(|(i, &eps)| ConfidenceSet {
            owner: i,
            members: members_within(&numeric, i, eps),
        })
        .collect()
}

/// One shared leader for the whole population: every agent moves to the
/// same pooled value.
pub fn prrlem_degroot_round(
    scale: &LinguisticTermSet,
    state: &TrialState,
    draw: &LeaderDraw,
) -> Result<TrialState> {
    let numeric = state.numeric(scale);
    let everyone: Vec<usize> = (0..numeric.len()).collect();
    if draw.leader >= numeric.len() {
        return Err(Error::Internal(format!(
            "leader {} not an agent",
            draw.leader
        )));
    }
    let term = scale.to_linguistic(pooled_value(&numeric, &everyone, draw))?;
    Ok(state.advance(vec![term; numeric.len()]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    pub state: TrialState,
    /// One draw per distinct confidence set, with that set's size.
    pub draws: Vec<(LeaderDraw, usize)>,
}

/// Bounded-confidence round with a random leader per distinct confidence
/// set. Agents sharing a set share its draw and so its update value.
pub fn prrlem_hk_round<R: Rng + ?Sized>(
    scale: &LinguisticTermSet,
    state: &TrialState,
    thresholds: &[f64],
    rng: &mut R,
) -> Result<RoundOutcome> {
    let numeric = state.numeric(scale);
    let sets: Vec<Vec<usize>> = thresholds
        .iter()
        .enumerate()
        .map(|(i, &eps)| members_within(&numeric, i, eps))
        .collect();

    let mut pooled: BTreeMap<&[usize], f64> = sets.iter().map(|s| (s.as_slice(), 0.0)).collect();
    let mut draws = Vec::with_capacity(pooled.len());
    for (members, value) in pooled.iter_mut() {
        let draw = draw_leader(rng, members)?;
        *value = pooled_value(&numeric, members, &draw);
        draws.push((draw, members.len()));
    }

    let opinions = sets
        .iter()
        .map(|s| scale.to_linguistic(pooled[s.as_slice()]))
        .collect::<Result<Vec<_>>>()?;
    Ok(RoundOutcome {
        state: state.advance(opinions),
        draws,
    })
}

pub fn classic_degroot_round(
    scale: &LinguisticTermSet,
    state: &TrialState,
    mode: WeightMode,
) -> Result<TrialState> {
    let numeric = state.numeric(scale);
    let n = numeric.len() as f64;
    let opinions = numeric
        .iter()
        .map(|&yi| {
            let value = match mode {
                WeightMode::Equal => numeric.iter().sum::<f64>() / n,
                WeightMode::Distance => {
                    let weights: Vec<f64> =
                        numeric.iter().map(|&yj| (-(yi - yj).abs()).exp()).collect();
                    let total: f64 = weights.iter().sum();
                    weights
                        .iter()
                        .zip(&numeric)
                        .map(|(w, y)| w * y)
                        .sum::<f64>()
                        / total
                }
            };
            scale.to_linguistic(value)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(state.advance(opinions))
}

/// Standard HK: each agent takes the plain mean over its confidence set.
pub fn classic_hk_round(
    scale: &LinguisticTermSet,
    state: &TrialState,
    thresholds: &[f64],
) -> Result<TrialState> {
    let numeric = state.numeric(scale);
    let opinions = thresholds
        .iter()
        .enumerate()
        .map(|(i, &eps)| {
            let members = members_within(&numeric, i, eps);
            let mean = members.iter().map(|&k| numeric[k]).sum::<f64>() / members.len() as f64;
            scale.to_linguistic(mean)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(state.advance(opinions))
}

/// Runs `T` rounds of the scenario's model on the trial's own random stream.
pub fn run_trial(scenario: &Scenario, trial_index: u64) -> Result<TrialTrace> {
    let scale = scenario.scale();
    let n = scenario.agents();
    let thresholds = scenario.agent_thresholds();
    let everyone: Vec<usize> = (0..n).collect();
    let mut rng = trial_stream(scenario.master_seed(), trial_index);

    let mut state = TrialState::initial(scenario.initial_opinions().to_vec());
    let mut snapshots = Vec::with_capacity(scenario.iterations() + 1);
    snapshots.push(state.opinions.clone());
    let mut leaders = Vec::new();

    let hk_thresholds = || {
        thresholds
            .as_deref()
            .ok_or_else(|| Error::Internal("HK model without thresholds".into()))
    };

    for _ in 0..scenario.iterations() {
        let round = state.round;
        state = match scenario.model() {
            Model::PrrlemDegroot => {
                let draw = draw_leader(&mut rng, &everyone)?;
                leaders.push(LeaderEvent {
                    round,
                    leader: draw.leader,
                    weight: draw.weight,
                    group_size: n,
                });
                prrlem_degroot_round(scale, &state, &draw)?
            }
            Model::PrrlemHohk | Model::PrrlemHehk => {
                let out = prrlem_hk_round(scale, &state, hk_thresholds()?, &mut rng)?;
                leaders.extend(out.draws.iter().map(|(d, size)| LeaderEvent {
                    round,
                    leader: d.leader,
                    weight: d.weight,
                    group_size: *size,
                }));
                out.state
            }
            Model::ClassicDegrootEqual => classic_degroot_round(scale, &state, WeightMode::Equal)?,
            Model::ClassicDegrootDistance => {
                classic_degroot_round(scale, &state, WeightMode::Distance)?
            }
            Model::ClassicHk => classic_hk_round(scale, &state, hk_thresholds()?)?,
        };
        snapshots.push(state.opinions.clone());
    }

    Ok(TrialTrace {
        trial_index,
        final_opinions: state.opinions,
        snapshots,
        leaders,
    })
}
