//! `fuzzy-evolve`: run, compare and stress-test linguistic opinion dynamics
//! scenarios from the command line.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fuzzy_evolve::analysis::{
    eps_sweep, model_compare, robustness_compare, ModelSpec, Perturbation,
};
use fuzzy_evolve::report::{summary, ReportBody, ReportDocument};
use fuzzy_evolve::{
    bundled, evaluate, EnsembleOptions, LinguisticTerm, Model, Scenario, ScenarioFile,
};

const SEED_ENV: &str = "FUZZY_EVOLVE_SEED";

#[derive(Parser)]
#[command(name = "fuzzy-evolve", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario's model and any variants it declares.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Run several models, or a threshold grid, on one scenario's data.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Comma-separated model names.
        #[arg(long, value_delimiter = ',')]
        models: Vec<Model>,
        /// Comma-separated homogeneous thresholds applied to every HK model
        /// (prrlem-hohk when --models is absent).
        #[arg(long, value_delimiter = ',')]
        eps_grid: Vec<f64>,
    },
    /// Compare a scenario against a perturbed copy of itself.
    Robustness {
        #[command(flatten)]
        common: Common,
        /// `agent=<i>,opinion=<term>` or `agent=<i>,eps=<v>`; agents count
        /// from 1. Repeatable.
        #[arg(long = "perturb", value_parser = parse_perturbation)]
        perturb: Vec<Perturbation>,
    },
    /// List bundled scenarios, or print one.
    Scenarios { name: Option<String> },
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file, or the name of a bundled scenario.
    scenario: String,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    /// Master seed; overrides the file and the FUZZY_EVOLVE_SEED variable.
    #[arg(long)]
    seed: Option<u64>,
    /// Normal quantile for the confidence intervals.
    #[arg(long)]
    z: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Embed every trial's round-by-round trace.
    #[arg(long)]
    trace: bool,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

enum Failure {
    Input(String),
    Io(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Input(m) | Failure::Io(m) => f.write_str(m),
        }
    }
}

impl From<fuzzy_evolve::Error> for Failure {
    fn from(e: fuzzy_evolve::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn parse_perturbation(spec: &str) -> Result<Perturbation, String> {
    let mut agent = None;
    let mut opinion = None;
    let mut eps = None;
    for part in spec.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got `{part}`"))?;
        let value = value.trim();
        match key.trim() {
            "agent" => {
                let i: usize = value.parse().map_err(|_| format!("bad agent `{value}`"))?;
                if i == 0 {
                    return Err("agents are numbered from 1".into());
                }
                agent = Some(i - 1);
            }
            "opinion" => {
                let digits = value.trim_start_matches("h_").trim_start_matches('h');
                let t: usize = digits
                    .parse()
                    .map_err(|_| format!("bad opinion `{value}`"))?;
                opinion = Some(LinguisticTerm::new(t));
            }
            "eps" => {
                let e: f64 = value.parse().map_err(|_| format!("bad eps `{value}`"))?;
                eps = Some(e);
            }
            other => return Err(format!("unknown key `{other}`")),
        }
    }
    let agent = agent.ok_or("missing agent=<i>")?;
    match (opinion, eps) {
        (Some(t), None) => Ok(Perturbation::opinion(agent, t)),
        (None, Some(e)) => Ok(Perturbation::threshold(agent, e)),
        _ => Err("give exactly one of opinion=<term> or eps=<v>".into()),
    }
}

fn load(source: &str) -> Result<ScenarioFile, Failure> {
    let path = Path::new(source);
    if !path.exists() {
        if let Some(text) = bundled::source(source) {
            return Ok(ScenarioFile::from_json(text)?);
        }
    }
    let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{source}: {e}")))?;
    ScenarioFile::from_json(&text).map_err(|e| Failure::Input(format!("{source}: {e}")))
}

fn env_seed() -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{SEED_ENV}: not an unsigned integer: `{v}`"))),
        Err(_) => Ok(0),
    }
}

impl Common {
    fn options(&self) -> EnsembleOptions {
        EnsembleOptions {
            workers: self.workers,
            keep_traces: self.trace,
        }
    }

    /// The scenario file with every override applied, and its scenarios.
    fn scenarios(&self) -> Result<(ScenarioFile, Vec<Scenario>), Failure> {
        if self.workers == Some(0) {
            return Err(Failure::Input("--workers must be at least 1".into()));
        }
        let file = load(&self.scenario)?;
        let mut primary = file.to_scenario(env_seed()?)?;
        if let Some(t) = self.trials {
            primary = primary.with_trials(t)?;
        }
        if let Some(t) = self.iterations {
            primary = primary.with_iterations(t)?;
        }
        if let Some(s) = self.seed {
            primary = primary.with_seed(s)?;
        }
        if let Some(z) = self.z {
            primary = primary.with_z(z)?;
        }
        let mut effective = primary.to_file();
        effective.name = file.name.clone();
        effective.variants = file.variants.clone();
        let scenarios = effective.to_scenarios(primary.master_seed())?;
        Ok((effective, scenarios))
    }

    fn emit(&self, doc: &ReportDocument) -> Result<(), Failure> {
        let text = match self.format {
            Format::Json => doc.to_json() + "\n",
            Format::Csv => doc.to_csv()?,
        };
        match &self.out {
            Some(path) => fs::write(path, text)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?,
            None => print!("{text}"),
        }
        eprint!("{}", summary(doc));
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { common } => {
            let (file, scenarios) = common.scenarios()?;
            let opts = common.options();
            let models = scenarios
                .iter()
                .map(|s| {
                    let label = match s.thresholds() {
                        Some(t) if scenarios.len() > 1 => ModelSpec {
                            model: s.model(),
                            thresholds: Some(t.clone()),
                        }
                        .label(),
                        _ => s.model().name().to_string(),
                    };
                    evaluate(s, &label, &opts)
                })
                .collect::<Result<Vec<_>, _>>()?;
            common.emit(&ReportDocument::new(
                "run",
                file,
                ReportBody::Run { models },
            ))
        }
        Command::Compare {
            common,
            models,
            eps_grid,
        } => {
            let (mut file, scenarios) = common.scenarios()?;
            file.variants.clear();
            let base = &scenarios[0];
            let opts = common.options();
            let report = if eps_grid.is_empty() {
                if models.is_empty() {
                    return Err(Failure::Input(
                        "compare needs --models or --eps-grid".into(),
                    ));
                }
                let specs: Vec<ModelSpec> = models.into_iter().map(ModelSpec::new).collect();
                model_compare(base, &specs, &opts)?
            } else if models.is_empty() {
                eps_sweep(base, Model::PrrlemHohk, &eps_grid, &opts)?
            } else {
                let specs: Vec<ModelSpec> = models
                    .into_iter()
                    .flat_map(|m| {
                        if m.is_hk() {
                            eps_grid
                                .iter()
                                .map(|&e| ModelSpec::with_eps(m, e))
                                .collect()
                        } else {
                            vec![ModelSpec::new(m)]
                        }
                    })
                    .collect();
                model_compare(base, &specs, &opts)?
            };
            common.emit(&ReportDocument::new(
                "compare",
                file,
                ReportBody::Compare(report),
            ))
        }
        Command::Robustness { common, perturb } => {
            if perturb.is_empty() {
                return Err(Failure::Input(
                    "robustness needs at least one --perturb".into(),
                ));
            }
            let (mut file, scenarios) = common.scenarios()?;
            file.variants.clear();
            let report = robustness_compare(&scenarios[0], &perturb, &common.options())?;
            common.emit(&ReportDocument::new(
                "robustness",
                file,
                ReportBody::Robustness(report),
            ))
        }
        Command::Scenarios { name: None } => {
            for name in bundled::names() {
                println!("{name}");
            }
            Ok(())
        }
        Command::Scenarios { name: Some(name) } => {
            let text = bundled::source(&name)
                .ok_or_else(|| Failure::Input(format!("no bundled scenario named `{name}`")))?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Failure::Input(_) => ExitCode::from(2),
                Failure::Io(_) => ExitCode::from(3),
            }
        }
    }
}
