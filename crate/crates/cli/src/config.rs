//! Experiment configuration files.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hinge_penalty::oracles::InstanceDocument;
use hinge_penalty::penalty::PenaltyKind;
use hinge_penalty::solver::{ScheduleBatches, ScheduleMultipliers, ScheduleSetting};
use hinge_penalty::{ConstrainedProblem, InstanceSpec, ProxControls, SolverConfig};
use serde::{Deserialize, Serialize};

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSolver {
    pub name: String,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub betas: Vec<f64>,
    #[serde(default = "both_kinds")]
    pub kinds: Vec<PenaltyKind>,
    /// Share one stream family across all cells.
    #[serde(default = "yes")]
    pub paired: bool,
    /// Template; `beta` and `penalty` are overwritten per cell.
    pub solver: SolverConfig,
}

fn both_kinds() -> Vec<PenaltyKind> {
    vec![PenaltyKind::Hinge, PenaltyKind::SquaredHinge]
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub setting: ScheduleSetting,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<ScheduleMultipliers>,
    pub batches: ScheduleBatches,
    /// Runs stop after this many iterations even if the schedule asks for more.
    #[serde(default)]
    pub iteration_cap: Option<u64>,
    /// Template; γ, η and T come from the schedule.
    pub solver: SolverConfig,
}

fn default_multipliers() -> Vec<ScheduleMultipliers> {
    vec![ScheduleMultipliers::default()]
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub prox: ProxControls,
    /// Certify every `stride`-th stored snapshot.
    #[serde(default)]
    pub stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub instance: Option<InstanceSpec>,
    /// Instance document path, relative to the config file.
    #[serde(default)]
    pub instance_file: Option<PathBuf>,
    #[serde(default)]
    pub runs: Vec<NamedSolver>,
    #[serde(default)]
    pub compare: Option<CompareConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "one")]
    pub workers: usize,
    /// Iterations per epoch in plots.
    #[serde(default = "default_epoch")]
    pub epoch: u64,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn default_epoch() -> u64 {
    400
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg = Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    /// Parses and validates; serde errors carry the line and column.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.schema_version != CONFIG_SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                cfg.schema_version
            );
        }
        if cfg.instance.is_some() == cfg.instance_file.is_some() {
            bail!("exactly one of `instance` and `instance_file` must be given");
        }
        let mut names = HashSet::new();
        for r in &cfg.runs {
            if !names.insert(r.name.as_str()) {
                bail!("duplicate run name `{}`", r.name);
            }
            if r.name.is_empty() || r.name.contains(['/', '\\']) || r.name.starts_with('.') {
                bail!("run name `{}` is not a plain directory name", r.name);
            }
            r.solver.validate().with_context(|| format!("run `{}`", r.name))?;
        }
        if cfg.workers == 0 {
            bail!("workers must be at least 1");
        }
        if cfg.epoch == 0 {
            bail!("epoch must be at least 1");
        }
        Ok(cfg)
    }

    pub fn instance_spec(&self) -> Result<InstanceSpec> {
        match (&self.instance, &self.instance_file) {
            (Some(spec), _) => Ok(spec.clone()),
            (None, Some(file)) => {
                let path = self.base_dir.join(file);
                let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                Ok(InstanceDocument::from_json(&text)
                    .with_context(|| format!("instance document {}", path.display()))?
                    .instance)
            }
            (None, None) => bail!("no instance given"),
        }
    }

    pub fn build_instance(&self) -> Result<(ConstrainedProblem, InstanceDocument)> {
        let problem = self.instance_spec()?.build()?;
        let doc = InstanceDocument::from_problem(&problem)?;
        Ok((problem, doc))
    }

    pub fn output_dir(&self, overridden: Option<&Path>) -> PathBuf {
        match (overridden, &self.output_dir) {
            (Some(p), _) => p.to_path_buf(),
            (None, Some(p)) => self.base_dir.join(p),
            (None, None) => PathBuf::from("out"),
        }
    }
}
