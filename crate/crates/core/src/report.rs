//! Machine-readable report documents in JSON or sectioned CSV.
//!
//! CSV output is a sequence of tables. Each table starts with a line
//! `# <section>` followed by a header row. Reals are written at full
//! precision in both formats.

use serde::Serialize;

use crate::analysis::{
    agent_label, ComparisonReport, ModelOutcome, RobustnessReport, TermDecision,
};
use crate::error::{Error, Result};
use crate::scenario::ScenarioFile;

pub const TOOL: &str = "fuzzy-evolve";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ReportBody {
    Run { models: Vec<ModelOutcome> },
    Compare(ComparisonReport),
    Robustness(RobustnessReport),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportDocument {
    pub provenance: Provenance,
    /// The effective scenario, overrides applied. Re-running it reproduces
    /// every number in the report.
    pub scenario: ScenarioFile,
    pub report: ReportBody,
}

impl ReportDocument {
    pub fn new(command: &str, scenario: ScenarioFile, report: ReportBody) -> Self {
        ReportDocument {
            provenance: Provenance {
                tool: TOOL.into(),
                version: VERSION.into(),
                command: command.into(),
                master_seed: scenario.master_seed.unwrap_or_default(),
            },
            scenario,
            report,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = CsvSink::default();
        out.provenance(self)?;
        match &self.report {
            ReportBody::Run { models } => {
                for m in models {
                    out.model(m)?;
                }
            }
            ReportBody::Compare(c) => out.comparison(c)?,
            ReportBody::Robustness(r) => out.robustness(r)?,
        }
        Ok(out.buf)
    }
}

#[derive(Default)]
struct CsvSink {
    buf: String,
}

fn csv_err(e: impl std::fmt::Display) -> Error {
    Error::Internal(format!("csv: {e}"))
}

fn join_terms(ts: &[crate::scale::LinguisticTerm]) -> String {
    ts.iter()
        .map(|t| t.index().to_string())
        .collect::<Vec<_>>()
        .join(";")
}

impl CsvSink {
    fn table<I, R>(&mut self, section: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r.into_iter().collect::<Vec<_>>())
                .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(csv_err)?;
        self.buf.push_str("# ");
        self.buf.push_str(section);
        self.buf.push('\n');
        self.buf
            .push_str(&String::from_utf8(bytes).map_err(csv_err)?);
        self.buf.push('\n');
        Ok(())
    }

    fn provenance(&mut self, doc: &ReportDocument) -> Result<()> {
        let s = &doc.scenario;
        let p = &doc.provenance;
        let rows = [
            ("tool", p.tool.clone()),
            ("version", p.version.clone()),
            ("command", p.command.clone()),
            ("master_seed", p.master_seed.to_string()),
            ("model", s.model.to_string()),
            ("agents", s.agents.to_string()),
            ("trials", s.trials.to_string()),
            ("iterations", s.iterations.to_string()),
            ("phi", s.phi.to_string()),
            ("base_a", s.base_a.to_string()),
            ("z_value", s.z_value.to_string()),
        ];
        self.table(
            "provenance",
            &["key", "value"],
            rows.into_iter().map(|(k, v)| [k.to_string(), v]),
        )
    }

    fn decision_rows(who: &str, d: &TermDecision) -> Vec<Vec<String>> {
        (0..d.counts.len())
            .map(|xi| {
                vec![
                    who.to_string(),
                    xi.to_string(),
                    d.counts[xi].to_string(),
                    d.sample_size.to_string(),
                    d.proportions[xi].to_string(),
                    d.intervals[xi].lo.to_string(),
                    d.intervals[xi].hi.to_string(),
                    d.ranking.reps[xi].to_string(),
                ]
            })
            .collect()
    }

    fn model(&mut self, m: &ModelOutcome) -> Result<()> {
        let label = &m.label;
        let header = [
            "who",
            "term",
            "count",
            "sample_size",
            "proportion",
            "ci_lo",
            "ci_hi",
            "rep",
        ];
        let mut rows = Self::decision_rows("system", &m.global);
        for a in &m.agents {
            rows.extend(Self::decision_rows(&agent_label(a.agent), &a.decision));
        }
        self.table(&format!("{label}/tally"), &header, rows)?;

        let mut rows = vec![vec![
            "system".to_string(),
            m.global.ranking.chosen.index().to_string(),
            join_terms(&m.global.ranking.winners),
            join_terms(&m.global.ranking.ordering),
        ]];
        rows.extend(m.agents.iter().map(|a| {
            vec![
                agent_label(a.agent),
                a.decision.ranking.chosen.index().to_string(),
                join_terms(&a.decision.ranking.winners),
                join_terms(&a.decision.ranking.ordering),
            ]
        }));
        self.table(
            &format!("{label}/decision"),
            &["who", "chosen", "winners", "ordering"],
            rows,
        )?;

        let lf = &m.leader_frequency;
        if lf.applicable {
            self.table(
                &format!("{label}/leader_frequency"),
                &["agent", "count", "percentage"],
                lf.counts
                    .iter()
                    .zip(&lf.percentages)
                    .enumerate()
                    .map(|(i, (c, p))| [agent_label(i), c.to_string(), p.to_string()]),
            )?;
        }

        let c = &m.clusters;
        self.table(
            &format!("{label}/cluster_counts"),
            &["clusters", "trials"],
            c.cluster_counts
                .iter()
                .map(|(k, v)| [k.to_string(), v.to_string()]),
        )?;
        let modal = c
            .modal_partition
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&a| agent_label(a))
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect::<Vec<_>>()
            .join(" | ");
        let frozen = c
            .frozen_agents
            .iter()
            .map(|&a| agent_label(a))
            .collect::<Vec<_>>()
            .join(" ");
        self.table(
            &format!("{label}/cluster_summary"),
            &["key", "value"],
            [
                ["modal_partition".to_string(), modal],
                ["modal_frequency".to_string(), c.modal_frequency.to_string()],
                ["frozen_agents".to_string(), frozen],
                [
                    "echo_chamber_trials".to_string(),
                    c.echo_chamber_trials.to_string(),
                ],
            ],
        )?;

        if let Some(traces) = &m.traces {
            let mut rows = Vec::new();
            for t in traces {
                for (round, snap) in t.snapshots.iter().enumerate() {
                    for (i, term) in snap.iter().enumerate() {
                        rows.push([
                            t.trial_index.to_string(),
                            (round + 1).to_string(),
                            agent_label(i),
                            term.index().to_string(),
                        ]);
                    }
                }
            }
            self.table(
                &format!("{label}/trace"),
                &["trial", "round", "agent", "term"],
                rows,
            )?;
        }
        Ok(())
    }

    fn comparison(&mut self, c: &ComparisonReport) -> Result<()> {
        for m in &c.columns {
            self.model(m)?;
        }
        let mut header = vec!["column".to_string()];
        header.extend(c.columns.iter().map(|m| m.label.clone()));
        let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
        self.table(
            "comparison/agreement",
            &header_refs,
            c.columns.iter().zip(&c.agreement).map(|(m, row)| {
                std::iter::once(m.label.clone()).chain(row.iter().map(|x| x.to_string()))
            }),
        )?;
        self.table(
            "comparison/rep_delta",
            &["column", "who", "max_abs_rep_delta"],
            c.rep_deltas.iter().flat_map(|d| {
                std::iter::once([
                    d.column.clone(),
                    "system".into(),
                    d.global_max_abs.to_string(),
                ])
                .chain(
                    d.per_agent_max_abs
                        .iter()
                        .enumerate()
                        .map(|(i, x)| [d.column.clone(), agent_label(i), x.to_string()]),
                )
            }),
        )
    }

    fn robustness(&mut self, r: &RobustnessReport) -> Result<()> {
        self.comparison(&r.comparison)?;
        self.table(
            "robustness/perturbations",
            &["agent", "kind", "value"],
            r.perturbations.iter().map(|p| {
                let (kind, value) = match p.kind {
                    crate::analysis::PerturbationKind::ReplaceInitialOpinion(t) => {
                        ("replace-initial-opinion", t.index().to_string())
                    }
                    crate::analysis::PerturbationKind::ReplaceThreshold(e) => {
                        ("replace-threshold", e.to_string())
                    }
                };
                [agent_label(p.agent), kind.to_string(), value]
            }),
        )?;
        let row = |who: String, targeted: bool, d: &crate::analysis::DecisionDelta| {
            vec![
                who,
                targeted.to_string(),
                d.baseline_chosen.index().to_string(),
                d.perturbed_chosen.index().to_string(),
                join_terms(&d.baseline_winners),
                join_terms(&d.perturbed_winners),
                d.rep_delta
                    .iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(";"),
            ]
        };
        let mut rows = vec![row("system".into(), false, &r.global)];
        rows.extend(
            r.agents
                .iter()
                .map(|a| row(agent_label(a.agent), a.targeted, &a.delta)),
        );
        self.table(
            "robustness/deltas",
            &[
                "who",
                "targeted",
                "baseline_chosen",
                "perturbed_chosen",
                "baseline_winners",
                "perturbed_winners",
                "rep_delta",
            ],
            rows,
        )?;
        let v = &r.verdict;
        self.table(
            "robustness/verdict",
            &["key", "value"],
            [
                ["unchanged".to_string(), v.unchanged.to_string()],
                [
                    "global_unchanged".to_string(),
                    v.global_unchanged.to_string(),
                ],
                [
                    "untouched_agents_unchanged".to_string(),
                    v.untouched_agents_unchanged.to_string(),
                ],
                [
                    "term_set_unchanged".to_string(),
                    v.term_set_unchanged.to_string(),
                ],
                ["terms_added".to_string(), join_terms(&r.terms_added)],
                ["terms_removed".to_string(), join_terms(&r.terms_removed)],
            ],
        )
    }
}

/// Human-readable digest, three decimals.
pub fn summary(doc: &ReportDocument) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let model = |m: &ModelOutcome, out: &mut String| {
        let reps = |d: &TermDecision| {
            d.ranking
                .reps
                .iter()
                .map(|r| format!("{r:.3}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let _ = writeln!(out, "[{}]", m.label);
        match m.decision_mode {
            crate::montecarlo::TallyMode::Global => {
                let _ = writeln!(
                    out,
                    "  system: {}  Rep = {}",
                    m.global.ranking.chosen,
                    reps(&m.global)
                );
            }
            crate::montecarlo::TallyMode::PerAgent => {
                for a in &m.agents {
                    let _ = writeln!(
                        out,
                        "  {:>4}: {}  Rep = {}",
                        agent_label(a.agent),
                        a.decision.ranking.chosen,
                        reps(&a.decision)
                    );
                }
            }
        }
        let lf = &m.leader_frequency;
        if let Some(u) = lf.uniformity.filter(|_| lf.applicable) {
            let _ = writeln!(
                out,
                "  leaders: {} events, chi2 = {:.3} (dof {}), p = {:.3}",
                lf.total, u.statistic, u.dof, u.p_value
            );
        }
    };
    match &doc.report {
        ReportBody::Run { models } => models.iter().for_each(|m| model(m, &mut out)),
        ReportBody::Compare(c) => c.columns.iter().for_each(|m| model(m, &mut out)),
        ReportBody::Robustness(r) => {
            r.comparison.columns.iter().for_each(|m| model(m, &mut out));
            let _ = writeln!(
                out,
                "verdict: {}{}",
                if r.verdict.unchanged {
                    "unchanged"
                } else {
                    "changed"
                },
                if r.terms_added.is_empty() && r.terms_removed.is_empty() {
                    String::new()
                } else {
                    format!(
                        " (terms added: [{}], removed: [{}])",
                        join_terms(&r.terms_added),
                        join_terms(&r.terms_removed)
                    )
                }
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::evaluate;
    use crate::bundled;
    use crate::montecarlo::EnsembleOptions;

    fn small_run() -> ReportDocument {
        let file = bundled::scenario_file("example2").unwrap();
        let s = file.to_scenario(0).unwrap().with_trials(30).unwrap();
        let m = evaluate(&s, "prrlem-hohk", &EnsembleOptions::default()).unwrap();
        ReportDocument::new("run", s.to_file(), ReportBody::Run { models: vec![m] })
    }

    #[test]
    fn csv_sections_are_marked() {
        let csv = small_run().to_csv().unwrap();
        let sections: Vec<&str> = csv.lines().filter(|l| l.starts_with("# ")).collect();
        assert_eq!(sections[0], "# provenance");
        assert!(sections.contains(&"# prrlem-hohk/tally"));
        assert!(sections.contains(&"# prrlem-hohk/decision"));
        assert!(sections.contains(&"# prrlem-hohk/leader_frequency"));
    }

    #[test]
    fn csv_and_json_carry_the_same_numbers() {
        let doc = small_run();
        let json: serde_json::Value = serde_json::from_str(&doc.to_json()).unwrap();
        let csv = doc.to_csv().unwrap();
        let block: Vec<&str> = csv
            .split("# prrlem-hohk/tally\n")
            .nth(1)
            .unwrap()
            .split("\n\n")
            .next()
            .unwrap()
            .lines()
            .skip(1)
            .collect();
        let model = &json["report"]["models"][0];
        let mut checked = 0;
        for line in block {
            let f: Vec<&str> = line.split(',').collect();
            let xi: usize = f[1].parse().unwrap();
            let d = if f[0] == "system" {
                &model["global"]
            } else {
                let i: usize = f[0][1..].parse::<usize>().unwrap() - 1;
                &model["agents"][i]
            };
            let csv_rep: f64 = f[7].parse().unwrap();
            let csv_lo: f64 = f[5].parse().unwrap();
            assert_eq!(csv_rep, d["ranking"]["reps"][xi].as_f64().unwrap());
            assert_eq!(csv_lo, d["intervals"][xi]["lo"].as_f64().unwrap());
            assert_eq!(
                f[2].parse::<u64>().unwrap(),
                d["counts"][xi].as_u64().unwrap()
            );
            checked += 1;
        }
        assert_eq!(checked, 16 * 7);
    }

    #[test]
    fn summary_rounds_to_three_places() {
        let s = summary(&small_run());
        assert!(s.contains("[prrlem-hohk]"));
        assert!(s.contains("e11: h_0  Rep = 1.000 0.000"));
    }
}
