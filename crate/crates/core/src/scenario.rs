//! Experiment descriptions: the validated [`Scenario`] and its on-disk JSON
//! form [`ScenarioFile`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scale::{LinguisticTerm, LinguisticTermSet, DEFAULT_BASE};

pub const DEFAULT_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Model {
    PrrlemDegroot,
    PrrlemHohk,
    PrrlemHehk,
    ClassicDegrootEqual,
    ClassicDegrootDistance,
    ClassicHk,
}

impl Model {
    pub const ALL: [Model; 6] = [
        Model::PrrlemDegroot,
        Model::PrrlemHohk,
        Model::PrrlemHehk,
        Model::ClassicDegrootEqual,
        Model::ClassicDegrootDistance,
        Model::ClassicHk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Model::PrrlemDegroot => "prrlem-degroot",
            Model::PrrlemHohk => "prrlem-hohk",
            Model::PrrlemHehk => "prrlem-hehk",
            Model::ClassicDegrootEqual => "classic-degroot-equal",
            Model::ClassicDegrootDistance => "classic-degroot-distance",
            Model::ClassicHk => "classic-hk",
        }
    }

    /// Bounded-confidence models, which need thresholds.
    pub fn is_hk(self) -> bool {
        matches!(
            self,
            Model::PrrlemHohk | Model::PrrlemHehk | Model::ClassicHk
        )
    }

    /// Models with a random leader draw each round.
    pub fn is_prrlem(self) -> bool {
        matches!(
            self,
            Model::PrrlemDegroot | Model::PrrlemHohk | Model::PrrlemHehk
        )
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Model::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Model::ALL.iter().map(|m| m.name()).collect();
                Error::Configuration(format!("unknown model `{s}` (known: {})", known.join(", ")))
            })
    }
}

/// Confidence thresholds: one shared `ε` or one `ε_i` per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Thresholds {
    Homogeneous(f64),
    Heterogeneous(Vec<f64>),
}

impl Thresholds {
    pub fn per_agent(&self, agents: usize) -> Vec<f64> {
        match self {
            Thresholds::Homogeneous(eps) => vec![*eps; agents],
            Thresholds::Heterogeneous(list) => list.clone(),
        }
    }

    fn validate(&self, agents: usize, field: &str) -> Result<()> {
        let check = |eps: f64| -> Result<()> {
            if (0.0..=1.0).contains(&eps) {
                Ok(())
            } else {
                Err(Error::scenario(
                    field,
                    format!("threshold {eps} outside [0, 1]"),
                ))
            }
        };
        match self {
            Thresholds::Homogeneous(eps) => check(*eps),
            Thresholds::Heterogeneous(list) => {
                if list.len() != agents {
                    return Err(Error::scenario(
                        field,
                        format!("expected {agents} thresholds, got {}", list.len()),
                    ));
                }
                list.iter().try_for_each(|&e| check(e))
            }
        }
    }
}

/// A validated, immutable experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    model: Model,
    trials: usize,
    iterations: usize,
    scale: LinguisticTermSet,
    z_value: f64,
    initial_opinions: Vec<LinguisticTerm>,
    thresholds: Option<Thresholds>,
    master_seed: u64,
}

impl Scenario {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        model: Model,
        trials: usize,
        iterations: usize,
        scale: LinguisticTermSet,
        z_value: f64,
        initial_opinions: Vec<LinguisticTerm>,
        thresholds: Option<Thresholds>,
        master_seed: u64,
    ) -> Result<Self> {
        let agents = initial_opinions.len();
        if agents < 2 {
            return Err(Error::scenario(
                "initial_opinions",
                "need at least 2 agents",
            ));
        }
        if trials == 0 {
            return Err(Error::scenario("trials", "must be positive"));
        }
        if iterations == 0 {
            return Err(Error::scenario("iterations", "must be positive"));
        }
        if !(z_value.is_finite() && z_value > 0.0) {
            return Err(Error::scenario(
                "z_value",
                format!("must be > 0, got {z_value}"),
            ));
        }
        for (i, &t) in initial_opinions.iter().enumerate() {
            scale
                .check(t)
                .map_err(|e| Error::scenario(format!("initial_opinions[{i}]"), e.to_string()))?;
        }
        match (&thresholds, model.is_hk()) {
            (Some(th), true) => th.validate(agents, "thresholds")?,
            (None, true) => {
                return Err(Error::scenario(
                    "thresholds",
                    format!("required for model {model}"),
                ))
            }
            (Some(_), false) => {
                return Err(Error::scenario(
                    "thresholds",
                    format!("not used by model {model}; remove it"),
                ))
            }
            (None, false) => {}
        }
        Ok(Scenario {
            model,
            trials,
            iterations,
            scale,
            z_value,
            initial_opinions,
            thresholds,
            master_seed,
        })
    }

    pub fn model(&self) -> Model {
        self.model
    }
    pub fn agents(&self) -> usize {
        self.initial_opinions.len()
    }
    pub fn trials(&self) -> usize {
        self.trials
    }
    pub fn iterations(&self) -> usize {
        self.iterations
    }
    pub fn scale(&self) -> &LinguisticTermSet {
        &self.scale
    }
    pub fn z_value(&self) -> f64 {
        self.z_value
    }
    pub fn initial_opinions(&self) -> &[LinguisticTerm] {
        &self.initial_opinions
    }
    pub fn thresholds(&self) -> Option<&Thresholds> {
        self.thresholds.as_ref()
    }
    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Per-agent thresholds, if the model uses them.
    pub fn agent_thresholds(&self) -> Option<Vec<f64>> {
        self.thresholds.as_ref().map(|t| t.per_agent(self.agents()))
    }

    fn rebuild(self) -> Result<Self> {
        Scenario::new(
            self.model,
            self.trials,
            self.iterations,
            self.scale,
            self.z_value,
            self.initial_opinions,
            self.thresholds,
            self.master_seed,
        )
    }

    pub fn with_trials(mut self, trials: usize) -> Result<Self> {
        self.trials = trials;
        self.rebuild()
    }

    pub fn with_iterations(mut self, iterations: usize) -> Result<Self> {
        self.iterations = iterations;
        self.rebuild()
    }

    pub fn with_seed(mut self, seed: u64) -> Result<Self> {
        self.master_seed = seed;
        self.rebuild()
    }

    pub fn with_z(mut self, z: f64) -> Result<Self> {
        self.z_value = z;
        self.rebuild()
    }

    /// Switches model; thresholds are kept for HK models and dropped
    /// otherwise, unless `thresholds` overrides them.
    pub fn with_model(mut self, model: Model, thresholds: Option<Thresholds>) -> Result<Self> {
        self.model = model;
        self.thresholds = if model.is_hk() {
            thresholds.or(self.thresholds)
        } else {
            None
        };
        if model.is_hk() && self.thresholds.is_none() {
            return Err(Error::Configuration(format!(
                "model {model} needs thresholds but the scenario has none"
            )));
        }
        self.rebuild()
    }

    pub fn with_initial_opinion(mut self, agent: usize, term: LinguisticTerm) -> Result<Self> {
        let slot = self
            .initial_opinions
            .get_mut(agent)
            .ok_or_else(|| Error::scenario("initial_opinions", format!("no agent {agent}")))?;
        *slot = term;
        self.rebuild()
    }

    pub fn with_agent_threshold(mut self, agent: usize, eps: f64) -> Result<Self> {
        let n = self.agents();
        let mut list = self
            .thresholds
            .as_ref()
            .ok_or_else(|| Error::scenario("thresholds", "scenario has no thresholds"))?
            .per_agent(n);
        let slot = list
            .get_mut(agent)
            .ok_or_else(|| Error::scenario("thresholds", format!("no agent {agent}")))?;
        *slot = eps;
        self.thresholds = Some(Thresholds::Heterogeneous(list));
        self.rebuild()
    }

    /// The file form of this scenario, with every default made explicit.
    pub fn to_file(&self) -> ScenarioFile {
        ScenarioFile {
            name: None,
            model: self.model,
            agents: self.agents(),
            trials: self.trials,
            iterations: self.iterations,
            phi: self.scale.phi(),
            base_a: self.scale.base(),
            z_value: self.z_value,
            initial_opinions: self.initial_opinions.iter().map(|t| t.index()).collect(),
            thresholds: self.thresholds.clone(),
            master_seed: Some(self.master_seed),
            variants: Vec::new(),
        }
    }
}

fn default_base() -> f64 {
    DEFAULT_BASE
}

fn default_z() -> f64 {
    DEFAULT_Z
}

/// An extra model run alongside the primary one, on the same data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Variant {
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
}

/// JSON scenario document. Term indices are integers `0..=2Φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub model: Model,
    pub agents: usize,
    pub trials: usize,
    pub iterations: usize,
    pub phi: usize,
    #[serde(default = "default_base")]
    pub base_a: f64,
    #[serde(default = "default_z")]
    pub z_value: f64,
    pub initial_opinions: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Thresholds>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variants: Vec<Variant>,
}

impl ScenarioFile {
    /// Parses JSON; syntax and type errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Builds the primary scenario. `fallback_seed` is used when the file
    /// has no `master_seed`.
    pub fn to_scenario(&self, fallback_seed: u64) -> Result<Scenario> {
        if self.agents != self.initial_opinions.len() {
            return Err(Error::scenario(
                "agents",
                format!(
                    "declares {} agents but initial_opinions has {}",
                    self.agents,
                    self.initial_opinions.len()
                ),
            ));
        }
        let scale = LinguisticTermSet::new(self.phi, self.base_a)
            .map_err(|e| Error::scenario("phi/base_a", e.to_string()))?;
        let initial = self
            .initial_opinions
            .iter()
            .map(|&i| LinguisticTerm::new(i))
            .collect();
        Scenario::new(
            self.model,
            self.trials,
            self.iterations,
            scale,
            self.z_value,
            initial,
            self.thresholds.clone(),
            self.master_seed.unwrap_or(fallback_seed),
        )
    }

    /// The primary scenario followed by one scenario per variant.
    pub fn to_scenarios(&self, fallback_seed: u64) -> Result<Vec<Scenario>> {
        let primary = self.to_scenario(fallback_seed)?;
        let mut out = vec![primary.clone()];
        for (k, v) in self.variants.iter().enumerate() {
            let s = primary
                .clone()
                .with_model(v.model, v.thresholds.clone())
                .map_err(|e| Error::scenario(format!("variants[{k}]"), e.to_string()))?;
            out.push(s);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(model: &str, thresholds: &str) -> String {
        format!(
            r#"{{"model":"{model}","agents":3,"trials":10,"iterations":2,"phi":3,
                "initial_opinions":[0,3,6]{thresholds},"master_seed":7}}"#
        )
    }

    #[test]
    fn parses_with_defaults() {
        let f = ScenarioFile::from_json(&file("prrlem-degroot", "")).unwrap();
        assert_eq!(f.base_a, 1.37);
        assert_eq!(f.z_value, 1.96);
        let s = f.to_scenario(0).unwrap();
        assert_eq!(s.agents(), 3);
        assert_eq!(s.master_seed(), 7);
        assert_eq!(s.model(), Model::PrrlemDegroot);
    }

    #[test]
    fn threshold_forms() {
        let s = ScenarioFile::from_json(&file("prrlem-hohk", r#","thresholds":0.2"#))
            .unwrap()
            .to_scenario(0)
            .unwrap();
        assert_eq!(s.agent_thresholds().unwrap(), vec![0.2; 3]);
        let s = ScenarioFile::from_json(&file("classic-hk", r#","thresholds":[0.1,0.2,0.3]"#))
            .unwrap()
            .to_scenario(0)
            .unwrap();
        assert_eq!(s.agent_thresholds().unwrap(), vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn field_addressed_errors() {
        let missing = ScenarioFile::from_json(&file("prrlem-hehk", ""))
            .unwrap()
            .to_scenario(0)
            .unwrap_err();
        assert!(
            matches!(missing, Error::InvalidScenario { ref field, .. } if field == "thresholds")
        );

        let extra = ScenarioFile::from_json(&file("prrlem-degroot", r#","thresholds":0.2"#))
            .unwrap()
            .to_scenario(0)
            .unwrap_err();
        assert!(matches!(extra, Error::InvalidScenario { ref field, .. } if field == "thresholds"));

        let short = ScenarioFile::from_json(&file("classic-hk", r#","thresholds":[0.1]"#))
            .unwrap()
            .to_scenario(0)
            .unwrap_err();
        assert!(short.to_string().contains("expected 3 thresholds"));

        let bad_term = ScenarioFile::from_json(&file("prrlem-degroot", "").replace("6]", "7]"))
            .unwrap()
            .to_scenario(0)
            .unwrap_err();
        assert!(
            bad_term.to_string().starts_with("initial_opinions[2]"),
            "{bad_term}"
        );

        let syntax = ScenarioFile::from_json("{\n\"model\": \"prrlem-degroot\",\n\"agents\": x}")
            .unwrap_err();
        assert!(syntax.to_string().contains("line 3"), "{syntax}");

        let unknown =
            ScenarioFile::from_json(&file("prrlem-degroot", r#","colour":1"#)).unwrap_err();
        assert!(unknown.to_string().contains("colour"));
    }

    #[test]
    fn zero_iterations_or_single_agent_rejected() {
        let scale = LinguisticTermSet::new(3, 1.37).unwrap();
        let two = vec![LinguisticTerm::new(0), LinguisticTerm::new(1)];
        let ok = Scenario::new(
            Model::PrrlemDegroot,
            1,
            1,
            scale.clone(),
            1.96,
            two.clone(),
            None,
            0,
        );
        assert!(ok.is_ok());
        assert!(Scenario::new(
            Model::PrrlemDegroot,
            1,
            0,
            scale.clone(),
            1.96,
            two.clone(),
            None,
            0
        )
        .is_err());
        assert!(Scenario::new(
            Model::PrrlemDegroot,
            0,
            1,
            scale.clone(),
            1.96,
            two,
            None,
            0
        )
        .is_err());
        assert!(Scenario::new(
            Model::PrrlemDegroot,
            1,
            1,
            scale,
            1.96,
            vec![LinguisticTerm::new(0)],
            None,
            0
        )
        .is_err());
    }

    #[test]
    fn agent_threshold_override_goes_heterogeneous() {
        let s = ScenarioFile::from_json(&file("prrlem-hohk", r#","thresholds":0.2"#))
            .unwrap()
            .to_scenario(0)
            .unwrap()
            .with_agent_threshold(1, 0.9)
            .unwrap();
        assert_eq!(
            s.thresholds(),
            Some(&Thresholds::Heterogeneous(vec![0.2, 0.9, 0.2]))
        );
        assert!(s.clone().with_agent_threshold(1, 1.5).is_err());
        assert!(s.with_agent_threshold(3, 0.5).is_err());
    }

    #[test]
    fn file_round_trip_preserves_scenario() {
        let s = ScenarioFile::from_json(&file("classic-hk", r#","thresholds":[0.1,0.2,0.3]"#))
            .unwrap()
            .to_scenario(0)
            .unwrap();
        let again = ScenarioFile::from_json(&s.to_file().to_json())
            .unwrap()
            .to_scenario(99)
            .unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn model_names_parse() {
        for m in Model::ALL {
            assert_eq!(m.name().parse::<Model>().unwrap(), m);
        }
        assert!("hk".parse::<Model>().is_err());
    }
}
