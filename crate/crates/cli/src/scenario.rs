//! Scenario files: JSON documents describing one experiment on one formation.

use std::path::{Path, PathBuf};

use formation_core::dynamics::Eq1Sign;
use formation_core::rigidity::{Framework, LengthConvention};
use formation_core::{builtin_law, FormationGraph, RealBundle, RealFramework, TargetLengths};
use serde::Deserialize;

use crate::error::CliError;

pub const FORMAT: u32 = 1;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub format: u32,
    pub graph: GraphSpec,
    pub lengths: LengthsSpec,
    pub law: LawSpec,
    pub experiment: Experiment,
    #[serde(default)]
    pub seed: u64,
    /// Base name of the written artifacts; defaults to the scenario file stem.
    #[serde(default)]
    pub output: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub vertices: usize,
    /// Directed edges `[origin, target]`, 1-based.
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ConventionSpec {
    Squared,
    Plain,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LengthsSpec {
    pub values: Vec<f64>,
    pub convention: ConventionSpec,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SignSpec {
    Printed,
    Corrected,
}

fn unit_gain() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LawSpec {
    pub name: String,
    #[serde(default = "unit_gain")]
    pub gain: f64,
    #[serde(default)]
    pub sign: Option<SignSpec>,
}

fn default_eps() -> f64 {
    0.2
}

fn default_samples() -> usize {
    21
}

fn default_step() -> f64 {
    1e-3
}

fn default_sample_every() -> usize {
    10
}

pub type Positions = Vec<[f64; 2]>;

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    Census {
        #[serde(default)]
        grid: Option<usize>,
        #[serde(default)]
        n_random: Option<usize>,
        #[serde(default)]
        n_collinear: Option<usize>,
    },
    /// Gauge-fixed spectra at the given equilibrium, or at every design
    /// framework when no positions are given.
    Spectrum {
        #[serde(default)]
        positions: Option<Positions>,
    },
    Sweep {
        #[serde(default = "default_eps")]
        eps: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    Sotomayor {
        #[serde(default)]
        positions: Option<Positions>,
    },
    Simulate {
        positions: Positions,
        t_end: f64,
        #[serde(default = "default_step")]
        step: f64,
        #[serde(default = "default_sample_every")]
        sample_every: usize,
    },
    Rigidity {
        #[serde(default)]
        positions: Option<Positions>,
    },
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Census { .. } => "census",
            Experiment::Spectrum { .. } => "spectrum",
            Experiment::Sweep { .. } => "sweep",
            Experiment::Sotomayor { .. } => "sotomayor",
            Experiment::Simulate { .. } => "simulate",
            Experiment::Rigidity { .. } => "rigidity",
        }
    }
}

/// A parsed scenario with its graph, lengths and law validated.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub scenario: Scenario,
    pub source: PathBuf,
    pub bundle: RealBundle,
}

impl Loaded {
    pub fn output_name(&self) -> String {
        self.scenario.output.clone().unwrap_or_else(|| {
            self.source
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scenario".into())
        })
    }

    pub fn graph(&self) -> &FormationGraph {
        self.bundle.graph()
    }

    pub fn framework(&self, positions: &Positions) -> Result<RealFramework, CliError> {
        let flat: Vec<f64> = positions.iter().flatten().copied().collect();
        Ok(Framework::from_flat(self.graph().clone(), &flat)?)
    }
}

pub fn parse(text: &str, source: &Path) -> Result<Scenario, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Parse {
        path: source.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    validate(parse(&text, path)?, path)
}

pub fn validate(scenario: Scenario, source: &Path) -> Result<Loaded, CliError> {
    if scenario.format != FORMAT {
        return Err(CliError::Format(scenario.format));
    }
    let edges: Vec<(usize, usize)> = scenario.graph.edges.iter().map(|e| (e[0], e[1])).collect();
    let graph = FormationGraph::from_one_indexed(scenario.graph.vertices, &edges)?;
    let convention = match scenario.lengths.convention {
        ConventionSpec::Squared => LengthConvention::Squared,
        ConventionSpec::Plain => LengthConvention::Plain,
    };
    let lengths = TargetLengths::new(scenario.lengths.values.clone(), convention)?;
    let sign = scenario.law.sign.map(|s| match s {
        SignSpec::Printed => Eq1Sign::Printed,
        SignSpec::Corrected => Eq1Sign::Corrected,
    });
    if sign.is_some() && scenario.law.name != "eq1_plain" {
        return Err(CliError::Invalid(format!(
            "law '{}' takes no sign option (only eq1_plain does)",
            scenario.law.name
        )));
    }
    let law = builtin_law(&scenario.law.name, scenario.law.gain, sign)?;
    let bundle = RealBundle::with_builtin(graph, lengths, law)?;
    check_experiment(&scenario.experiment, bundle.graph().n())?;
    Ok(Loaded {
        scenario,
        source: source.to_path_buf(),
        bundle,
    })
}

fn check_positions(p: &Positions, n: usize) -> Result<(), CliError> {
    if p.len() != n {
        return Err(CliError::Invalid(format!(
            "{} positions given for {n} vertices",
            p.len()
        )));
    }
    if p.iter().flatten().any(|v| !v.is_finite()) {
        return Err(CliError::Invalid("positions must be finite".into()));
    }
    Ok(())
}

fn check_experiment(e: &Experiment, n: usize) -> Result<(), CliError> {
    match e {
        Experiment::Census { grid, .. } => {
            if *grid == Some(0) {
                return Err(CliError::Invalid("census grid must be at least 1".into()));
            }
        }
        Experiment::Spectrum { positions } | Experiment::Sotomayor { positions } | Experiment::Rigidity { positions } => {
            if let Some(p) = positions {
                check_positions(p, n)?;
            }
        }
        Experiment::Sweep { eps, .. } => {
            if !(eps.is_finite() && *eps > 0.0) {
                return Err(CliError::Invalid(format!("sweep eps must be positive, got {eps}")));
            }
        }
        Experiment::Simulate {
            positions,
            t_end,
            step,
            sample_every,
        } => {
            check_positions(positions, n)?;
            if !(t_end.is_finite() && *t_end > 0.0) {
                return Err(CliError::Invalid(format!("t_end must be positive, got {t_end}")));
            }
            if !(step.is_finite() && *step > 0.0) {
                return Err(CliError::Invalid(format!("step must be positive, got {step}")));
            }
            if *sample_every == 0 {
                return Err(CliError::Invalid("sample_every must be at least 1".into()));
            }
        }
    }
    Ok(())
}
