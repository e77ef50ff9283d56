//! MSVR tracking of many expectations with constant mini-batches.
//!
//! For each tracked index k in the sampled block,
//!
//! ```text
//! u_k ← (1−γ) u_k + γ v_k(x_t) + γ′ (v_k(x_t) − v_k(x_{t−1}))
//! ```
//!
//! where both values come from the same mini-batch. Indices outside the block
//! carry over unchanged.

use serde::{Deserialize, Serialize};

use crate::stream::StreamKey;
use crate::{Error, Result, Vector};

/// (N − B)/(B(1−γ)) + 1 − γ.
pub fn msvr_gamma_prime(n_total: usize, block: usize, gamma: f64) -> Result<f64> {
    if block == 0 || block > n_total {
        return Err(Error::BlockTooLarge { block, total: n_total });
    }
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", format!("must lie in (0, 1), got {gamma}")));
    }
    Ok((n_total - block) as f64 / (block as f64 * (1.0 - gamma)) + 1.0 - gamma)
}

/// One tracked-value estimate and the stream it was drawn from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedDraw {
    pub index: usize,
    pub key: StreamKey,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TrackingError {
    pub mean_abs: f64,
    pub mean_sq: f64,
}

impl TrackingError {
    pub fn between(estimates: &[f64], exact: &[f64]) -> Self {
        assert_eq!(estimates.len(), exact.len());
        let n = estimates.len().max(1) as f64;
        let (mut a, mut s) = (0.0, 0.0);
        for (u, h) in estimates.iter().zip(exact) {
            let d = u - h;
            a += d.abs();
            s += d * d;
        }
        Self {
            mean_abs: a / n,
            mean_sq: s / n,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MsvrState {
    u: Vec<f64>,
    gamma: f64,
    gamma_prime: f64,
    gamma_prime_overridden: bool,
    prev_point: Vector,
    block: usize,
}

impl MsvrState {
    /// `gamma_prime = None` uses the closed form. γ above 1/2 needs
    /// `allow_large_gamma`.
    pub fn new(
        values: Vec<f64>,
        x0: Vector,
        gamma: f64,
        gamma_prime: Option<f64>,
        block: usize,
        allow_large_gamma: bool,
    ) -> Result<Self> {
        let closed = msvr_gamma_prime(values.len(), block, gamma)?;
        if gamma > 0.5 && !allow_large_gamma {
            return Err(Error::invalid(
                "gamma",
                format!("{gamma} exceeds 1/2; set allow_large_gamma to override"),
            ));
        }
        if let Some(g) = gamma_prime {
            if !g.is_finite() {
                return Err(Error::invalid("gamma_prime", "must be finite"));
            }
        }
        Ok(Self {
            u: values,
            gamma,
            gamma_prime: gamma_prime.unwrap_or(closed),
            gamma_prime_overridden: gamma_prime.is_some_and(|g| g != closed),
            prev_point: x0,
            block,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn gamma_prime(&self) -> f64 {
        self.gamma_prime
    }

    pub fn gamma_prime_overridden(&self) -> bool {
        self.gamma_prime_overridden
    }

    pub fn block(&self) -> usize {
        self.block
    }

    /// x_{t−1}: the point at which correction values must be evaluated.
    pub fn prev_point(&self) -> &Vector {
        &self.prev_point
    }

    /// Applies one update. `current[j]` and `previous[j]` must refer to the
    /// same index and the same stream key.
    pub fn update(&mut self, current: &[TrackedDraw], previous: &[TrackedDraw], x_t: &Vector) -> Result<()> {
        if current.len() != previous.len() {
            return Err(Error::DimensionMismatch {
                expected: current.len(),
                actual: previous.len(),
            });
        }
        let n = self.u.len();
        for (c, p) in current.iter().zip(previous) {
            if c.index >= n {
                return Err(Error::IndexOutOfRange { index: c.index, len: n });
            }
            if c.index != p.index || c.key != p.key {
                return Err(Error::BatchProvenance { index: c.index });
            }
        }
        for (c, p) in current.iter().zip(previous) {
            let u = &mut self.u[c.index];
            *u = (1.0 - self.gamma) * *u + self.gamma * c.value + self.gamma_prime * (c.value - p.value);
        }
        self.prev_point.clone_from(x_t);
        Ok(())
    }

    pub fn tracking_error(&self, exact: &[f64]) -> TrackingError {
        TrackingError::between(&self.u, exact)
    }
}

/// Baseline tracker: u_k is the latest batch value.
#[derive(Debug, Clone, PartialEq)]
pub struct PlugInTracker {
    u: Vec<f64>,
}

impl PlugInTracker {
    pub fn new(values: Vec<f64>) -> Self {
        Self { u: values }
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn update(&mut self, current: &[TrackedDraw]) -> Result<()> {
        for c in current {
            let len = self.u.len();
            *self
                .u
                .get_mut(c.index)
                .ok_or(Error::IndexOutOfRange { index: c.index, len })? = c.value;
        }
        Ok(())
    }

    pub fn tracking_error(&self, exact: &[f64]) -> TrackingError {
        TrackingError::between(&self.u, exact)
    }
}
