//! Parameter schedules with the order expressions of the convergence
//! theorems, each O(·) replaced by a multiplier times the expression.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleSetting {
    /// Plain stochastic objective.
    One,
    /// Compositional objective with monotone outer functions.
    TwoMonotone,
    /// Compositional objective with smooth outer functions.
    TwoSmooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleMultipliers {
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub eta: f64,
    #[serde(default = "one")]
    pub iterations: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ScheduleMultipliers {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            eta: 1.0,
            iterations: 1.0,
        }
    }
}

/// Batch sizes entering the schedule. `outer`/`inner` are ignored in the
/// plain setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleBatches {
    /// |B|: outer block size.
    #[serde(default = "one_usize")]
    pub outer: usize,
    /// |B_c|.
    pub constraint_block: usize,
    /// |B_{1,i}|.
    #[serde(default = "one_usize")]
    pub inner: usize,
    /// |B_{2,k}|.
    pub constraint: usize,
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    /// γ₁, absent in the plain setting.
    pub gamma_inner: Option<f64>,
    pub gamma_constraints: f64,
    pub eta: f64,
    pub iterations: u64,
    /// T before rounding up.
    pub iterations_raw: f64,
    pub gamma_clamped: bool,
}

/// Derives (γ₁, γ₂, η, T) for target accuracy ε and penalty β.
#[allow(clippy::too_many_arguments)]
pub fn schedule_from_theorem(
    setting: ScheduleSetting,
    epsilon: f64,
    beta: f64,
    batches: ScheduleBatches,
    m: usize,
    n: usize,
    multipliers: ScheduleMultipliers,
) -> Result<Schedule> {
    if !(epsilon > 0.0) {
        return Err(Error::invalid("epsilon", "must be positive"));
    }
    if !(beta > 0.0) {
        return Err(Error::invalid("beta", "must be positive"));
    }
    if m == 0 || n == 0 {
        return Err(Error::invalid("m, n", "must be positive"));
    }
    let b = batches.outer as f64;
    let bc = batches.constraint_block as f64;
    let b1 = batches.inner as f64;
    let b2 = batches.constraint as f64;
    let (m, n) = (m as f64, n as f64);
    let e2 = epsilon * epsilon;
    let e4 = e2 * e2;
    let e6 = e4 * e2;

    let (gamma, eta, t, has_inner) = match setting {
        ScheduleSetting::One => (
            b2 * e4 / beta.powi(4),
            bc * b2.sqrt() * e4 / (beta.powi(5) * m),
            beta.powi(6) * m / (bc * b2.sqrt() * e6),
            false,
        ),
        ScheduleSetting::TwoMonotone => (
            b1.min(b2 / (beta * beta)) * e4 / (beta * beta),
            (b / n).min(bc / (beta * m)) * b1.sqrt().min(b2.sqrt() / beta) * e4 / beta.powi(3),
            (beta / b1.sqrt()).max(beta * beta / b2.sqrt()).max(1.0 / b1) * (n / b).max(beta * m / bc) * beta.powi(3)
                / e6,
            true,
        ),
        ScheduleSetting::TwoSmooth => (
            (b2 * e4 / beta.powi(4)).min(b1 * e2 / beta),
            (b * b1.sqrt() * e2 / (n * beta * beta)).min(bc * b2.sqrt() * e4 / (beta.powi(5) * m)),
            (m * beta.powi(6) / (b2.sqrt() * bc * e6))
                .max(n * beta.powi(3) / (b * b1.sqrt() * e4))
                .max(n * beta * beta / (b * b1 * e4)),
            true,
        ),
    };
    let mut gamma = multipliers.gamma * gamma;
    let eta = multipliers.eta * eta;
    let iterations_raw = multipliers.iterations * t;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(Error::invalid("gamma", format!("schedule produced {gamma}")));
    }
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::invalid("eta", format!("schedule produced {eta}")));
    }
    let gamma_clamped = gamma > 0.5;
    if gamma_clamped {
        gamma = 0.5;
    }
    Ok(Schedule {
        gamma_inner: has_inner.then_some(gamma),
        gamma_constraints: gamma,
        eta,
        iterations: iterations_raw.ceil().max(1.0) as u64,
        iterations_raw,
        gamma_clamped,
    })
}
