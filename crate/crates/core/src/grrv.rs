//! Interval ranking by golden-rule representative value.
//!
//! An interval `[a, b] ⊂ [0, 1]` is summarised by its mean `m` and range
//! `r`, and scored by a four-rule Takagi–Sugeno–Kang system over `(m, r)`
//! with `large(y) = y` and `small(y) = 1 - y`:
//!
//! | mean  | range | Rep |
//! |-------|-------|-----|
//! | large | small | 1   |
//! | large | large | 1/2 |
//! | small | large | 1/2 |
//! | small | small | 0   |
//!
//! The system reduces to `Rep = m + (1/2 - m)·r`. [`rep`] uses that closed
//! form; [`tsk_evaluate`] on [`golden_rule_system`] computes the same value
//! by inference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::ConfidenceInterval;
use crate::scale::LinguisticTerm;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(Error::InvalidInterval { lo, hi });
        }
        Ok(Interval { lo, hi })
    }

    pub fn degenerate(x: f64) -> Result<Self> {
        Interval::new(x, x)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }
    pub fn hi(&self) -> f64 {
        self.hi
    }
    pub fn mean(&self) -> f64 {
        (self.lo + self.hi) / 2.0
    }
    pub fn range(&self) -> f64 {
        self.hi - self.lo
    }
}

impl TryFrom<&ConfidenceInterval> for Interval {
    type Error = Error;

    fn try_from(ci: &ConfidenceInterval) -> Result<Self> {
        Interval::new(ci.lo, ci.hi)
    }
}

/// Membership functions over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Membership {
    /// `L(y) = y`
    Large,
    /// `S(y) = 1 - y`
    Small,
    Constant {
        value: f64,
    },
    Triangular {
        left: f64,
        peak: f64,
        right: f64,
    },
}

impl Membership {
    pub fn degree(&self, x: f64) -> f64 {
        match *self {
            Membership::Large => x,
            Membership::Small => 1.0 - x,
            Membership::Constant { value } => value,
            Membership::Triangular { left, peak, right } => {
                if x <= left || x >= right {
                    if x == peak {
                        1.0
                    } else {
                        0.0
                    }
                } else if x <= peak {
                    (x - left) / (peak - left)
                } else {
                    (right - x) / (right - peak)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TskRule {
    pub antecedents: Vec<Membership>,
    /// `p_0, p_1, .., p_d`: output `p_0 + Σ p_j q_j`.
    pub consequent: Vec<f64>,
}

impl TskRule {
    pub fn constant(antecedents: Vec<Membership>, value: f64) -> Self {
        let mut consequent = vec![0.0; antecedents.len() + 1];
        consequent[0] = value;
        TskRule {
            antecedents,
            consequent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TskSystem {
    inputs: usize,
    rules: Vec<TskRule>,
}

impl TskSystem {
    pub fn new(inputs: usize, rules: Vec<TskRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::Configuration(
                "TSK system needs at least one rule".into(),
            ));
        }
        for (k, rule) in rules.iter().enumerate() {
            if rule.antecedents.len() != inputs || rule.consequent.len() != inputs + 1 {
                return Err(Error::Configuration(format!(
                    "rule {k}: expected {inputs} antecedents and {} consequent terms",
                    inputs + 1
                )));
            }
        }
        Ok(TskSystem { inputs, rules })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn rules(&self) -> &[TskRule] {
        &self.rules
    }
}

/// Product-inference TSK output: firing-strength-weighted mean of the rule
/// consequents.
pub fn tsk_evaluate(system: &TskSystem, inputs: &[f64]) -> Result<f64> {
    if inputs.len() != system.inputs {
        return Err(Error::InputDimension {
            expected: system.inputs,
            got: inputs.len(),
        });
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for rule in &system.rules {
        let firing: f64 = rule
            .antecedents
            .iter()
            .zip(inputs)
            .map(|(a, &q)| a.degree(q))
            .product();
        let output = rule.consequent[0]
            + rule.consequent[1..]
                .iter()
                .zip(inputs)
                .map(|(p, q)| p * q)
                .sum::<f64>();
        num += firing * output;
        den += firing;
    }
    if den <= 0.0 {
        return Err(Error::DegenerateInput(den));
    }
    Ok(num / den)
}

/// The four golden rules over inputs `(mean, range)`.
pub fn golden_rule_system() -> TskSystem {
    use Membership::{Large, Small};
    TskSystem::new(
        2,
        vec![
            TskRule::constant(vec![Large, Small], 1.0),
            TskRule::constant(vec![Large, Large], 0.5),
            TskRule::constant(vec![Small, Large], 0.5),
            TskRule::constant(vec![Small, Small], 0.0),
        ],
    )
    .expect("golden rule system is well formed")
}

/// Representative value `m + (1/2 - m)·r`.
pub fn rep(x: &Interval) -> f64 {
    let m = x.mean();
    m + (0.5 - m) * x.range()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedDecision {
    /// Rep value per input, in input order.
    pub reps: Vec<f64>,
    pub labels: Vec<LinguisticTerm>,
    /// Labels by descending Rep; equal Reps keep ascending label order.
    pub ordering: Vec<LinguisticTerm>,
    /// Every label attaining the maximum Rep, ascending.
    pub winners: Vec<LinguisticTerm>,
    /// Lowest-index winner.
    pub chosen: LinguisticTerm,
}

pub fn rank(intervals: &[Interval], labels: &[LinguisticTerm]) -> Result<RankedDecision> {
    if intervals.len() != labels.len() {
        return Err(Error::Configuration(format!(
            "{} intervals but {} labels",
            intervals.len(),
            labels.len()
        )));
    }
    if intervals.is_empty() {
        return Err(Error::Configuration("nothing to rank".into()));
    }
    let reps: Vec<f64> = intervals.iter().map(rep).collect();
    let mut order: Vec<usize> = (0..reps.len()).collect();
    order.sort_by(|&a, &b| {
        reps[b]
            .total_cmp(&reps[a])
            .then_with(|| labels[a].cmp(&labels[b]))
    });
    let best = reps[order[0]];
    let mut winners: Vec<LinguisticTerm> = order
        .iter()
        .filter(|&&k| reps[k] == best)
        .map(|&k| labels[k])
        .collect();
    winners.sort_unstable();
    Ok(RankedDecision {
        chosen: winners[0],
        ordering: order.iter().map(|&k| labels[k]).collect(),
        winners,
        labels: labels.to_vec(),
        reps,
    })
}
