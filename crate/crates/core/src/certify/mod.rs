//! Ground-truth certification on exact evaluators: proximal reference points,
//! multipliers, nearly-ε-KKT residuals and regularity diagnostics.

mod prox;
mod regularity;
mod slack;

use serde::{Deserialize, Serialize};

use crate::numeric::bounded_least_squares;
use crate::oracles::exact_full_eval;
use crate::penalty::{PenaltyKind, PenaltyObjective};
use crate::{Result, Vector};

pub use prox::{moreau_envelope, moreau_grad, prox_solve, ProxControls, ProxResult};
pub use regularity::{frvp_min_singular, grid_1d, grid_box, pl_regularity_estimate, FrvpReport, PlEstimate};
pub use slack::{slack_demo, SlackReport};

/// |h| ≤ ACTIVATION·(1 + |h|) counts as exactly active.
pub const ACTIVATION: f64 = 1e-5;

fn is_active(h: f64) -> bool {
    h.abs() <= ACTIVATION * (1.0 + h.abs())
}

/// λ_k = βξ_k/m. Strictly violated constraints take the penalty derivative,
/// strictly inactive ones zero, and exactly active ones the ξ ∈ [0, 1] that
/// minimises the stationarity residual.
pub fn extract_multipliers(phi: &PenaltyObjective, x_bar: &Vector) -> Result<Vec<f64>> {
    let fe = exact_full_eval(phi.problem, x_bar)?;
    let scale = phi.beta / phi.problem.m() as f64;
    let mut lambda = vec![0.0; phi.problem.m()];
    let mut base = fe.objective_grad.clone();
    let mut active = Vec::new();
    for (k, &h) in fe.constraints.iter().enumerate() {
        if is_active(h) && phi.kind == PenaltyKind::Hinge {
            active.push(k);
        } else if h > 0.0 {
            lambda[k] = scale * phi.kind.deriv(h);
            base.axpy(lambda[k], &fe.jacobian.row(k).transpose(), 1.0);
        }
    }
    if !active.is_empty() && scale > 0.0 {
        let dirs: Vec<Vector> = active.iter().map(|&k| fe.jacobian.row(k).transpose() * scale).collect();
        let xi = bounded_least_squares(&base, &dirs, 1.0);
        for (&k, x) in active.iter().zip(xi) {
            lambda[k] = scale * x;
        }
    }
    Ok(lambda)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktCertificate {
    pub x: Vector,
    pub x_bar: Vector,
    pub lambda: Vec<f64>,
    /// ‖∂F(x̄) + Σ λ_k ∂h_k(x̄)‖.
    pub stationarity: f64,
    /// max_k h_k(x̄).
    pub feasibility: f64,
    pub complementarity: f64,
    /// max(stationarity, [feasibility]_+, complementarity).
    pub epsilon: f64,
    /// ‖x − x̄‖.
    pub displacement: f64,
    /// displacement / ε, when ε > 0.
    pub displacement_ratio: Option<f64>,
    pub theta: f64,
    pub moreau_grad_norm: f64,
    pub prox_converged: bool,
    pub prox_suboptimality: f64,
}

/// Nearly-ε-KKT certificate of `x` with reference point x̄ = prox_θΦ(x).
/// `theta = None` uses 1/(2C).
pub fn kkt_certificate(
    phi: &PenaltyObjective,
    x: &Vector,
    theta: Option<f64>,
    controls: &ProxControls,
) -> Result<KktCertificate> {
    let theta = theta.unwrap_or_else(|| phi.derived_constants().theta_default);
    let (grad, prox) = moreau_grad(phi, x, theta, controls)?;
    let x_bar = prox.point.clone();
    let lambda = extract_multipliers(phi, &x_bar)?;
    let fe = exact_full_eval(phi.problem, &x_bar)?;
    let mut r = fe.objective_grad.clone();
    let mut complementarity: f64 = 0.0;
    for (k, (&l, &h)) in lambda.iter().zip(&fe.constraints).enumerate() {
        if l != 0.0 {
            r.axpy(l, &fe.jacobian.row(k).transpose(), 1.0);
        }
        let c = if h > 0.0 {
            l * h
        } else if h < 0.0 && !is_active(h) {
            l
        } else {
            0.0
        };
        complementarity = complementarity.max(c);
    }
    let stationarity = r.norm();
    let feasibility = fe.max_violation();
    let epsilon = stationarity.max(feasibility.max(0.0)).max(complementarity);
    let displacement = (x - &x_bar).norm();
    Ok(KktCertificate {
        x: x.clone(),
        x_bar,
        lambda,
        stationarity,
        feasibility,
        complementarity,
        epsilon,
        displacement,
        displacement_ratio: (epsilon > 0.0).then(|| displacement / epsilon),
        theta,
        moreau_grad_norm: grad.norm(),
        prox_converged: prox.converged,
        prox_suboptimality: prox.suboptimality_bound,
    })
}
