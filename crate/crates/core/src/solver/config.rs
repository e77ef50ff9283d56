use serde::{Deserialize, Serialize};

use super::schedule::Schedule;
use crate::certify::ProxControls;
use crate::penalty::PenaltyKind;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputRule {
    #[default]
    UniformRandom,
    BestDiagnostic,
    Final,
}

/// Which tracker values feed the penalty and chain-rule factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerOrder {
    /// u^t, before the iteration's tracker update.
    #[default]
    PreUpdate,
    /// u^{t+1}, after the update on the same batch.
    PostUpdate,
}

/// Step-size multiplier applied from iteration `at` onwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Milestone {
    pub at: u64,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub beta: f64,
    pub eta: f64,
    #[serde(default)]
    pub penalty: PenaltyKind,
    /// γ₂ for the constraint tracker.
    pub gamma_constraints: f64,
    #[serde(default)]
    pub gamma_prime_constraints: Option<f64>,
    /// γ₁ for the inner-function tracker (compositional objectives).
    #[serde(default = "default_gamma")]
    pub gamma_inner: f64,
    #[serde(default)]
    pub gamma_prime_inner: Option<f64>,
    #[serde(default)]
    pub allow_large_gamma: bool,
    /// |B|: objective samples, or the outer block for compositional objectives.
    #[serde(default = "one")]
    pub batch_objective: usize,
    /// |B_c|; `None` means all constraints.
    #[serde(default)]
    pub batch_constraint_block: Option<usize>,
    /// |B_{1,i}|.
    #[serde(default = "one")]
    pub batch_inner: usize,
    /// |B_{2,k}|.
    #[serde(default = "one")]
    pub batch_constraint: usize,
    pub iterations: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_rule: OutputRule,
    #[serde(default)]
    pub tracker_order: TrackerOrder,
    #[serde(default)]
    pub milestones: Vec<Milestone>,
    /// Snapshot stride; `None` uses max(1, T/1000).
    #[serde(default)]
    pub stride: Option<u64>,
    /// Prox controls for the `best_diagnostic` rule.
    #[serde(default = "diagnostic_prox")]
    pub diagnostic_prox: ProxControls,
    /// Keep the list of stream keys of every drawn batch.
    #[serde(default)]
    pub record_draws: bool,
}

fn one() -> usize {
    1
}

fn default_gamma() -> f64 {
    0.1
}

fn diagnostic_prox() -> ProxControls {
    ProxControls {
        iterations: 2000,
        ..ProxControls::default()
    }
}

impl SolverConfig {
    /// Minimal configuration; everything else takes its default.
    pub fn new(beta: f64, eta: f64, gamma: f64, iterations: u64, seed: u64) -> Self {
        Self {
            beta,
            eta,
            penalty: PenaltyKind::Hinge,
            gamma_constraints: gamma,
            gamma_prime_constraints: None,
            gamma_inner: gamma,
            gamma_prime_inner: None,
            allow_large_gamma: false,
            batch_objective: 1,
            batch_constraint_block: None,
            batch_inner: 1,
            batch_constraint: 1,
            iterations,
            seed,
            output_rule: OutputRule::default(),
            tracker_order: TrackerOrder::default(),
            milestones: Vec::new(),
            stride: None,
            diagnostic_prox: diagnostic_prox(),
            record_draws: false,
        }
    }

    pub fn with_schedule(mut self, s: &Schedule) -> Self {
        self.gamma_constraints = s.gamma_constraints;
        if let Some(g) = s.gamma_inner {
            self.gamma_inner = g;
        }
        self.eta = s.eta;
        self.iterations = s.iterations;
        self
    }

    pub fn stride(&self) -> u64 {
        self.stride.unwrap_or(self.iterations / 1000).max(1)
    }

    /// Step size in effect at iteration t.
    pub fn eta_at(&self, t: u64) -> f64 {
        self.milestones
            .iter()
            .filter(|m| m.at <= t)
            .fold(self.eta, |eta, m| eta * m.factor)
    }

    pub fn constraint_block(&self, m: usize) -> usize {
        self.batch_constraint_block.unwrap_or(m)
    }

    /// Shape-independent checks; block sizes are checked against the problem
    /// at solve time.
    pub fn validate(&self) -> Result<()> {
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid("beta", "must be finite and nonnegative"));
        }
        if !(self.eta > 0.0) || !self.eta.is_finite() {
            return Err(Error::invalid("eta", "must be finite and positive"));
        }
        if self.batch_objective == 0
            || self.batch_inner == 0
            || self.batch_constraint == 0
            || self.batch_constraint_block == Some(0)
        {
            return Err(Error::EmptyBatch);
        }
        if let Some(m) = self.milestones.iter().find(|m| !(m.factor > 0.0)) {
            return Err(Error::invalid(
                "milestones",
                format!("factor at {} must be positive", m.at),
            ));
        }
        Ok(())
    }
}
