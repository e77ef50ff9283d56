//! Slack-variable reformulation counterexample.
//!
//! min x s.t. x ≤ 1, −x ≤ 1, rewritten with slacks as x + s₁² = 1,
//! −x + s₂² = 1. The point (1, 0, √2) is stationary for the reformulation with
//! multipliers (−1, 0) but x = 1 is not a KKT point of the original problem.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlackReport {
    /// (x, s₁, s₂).
    pub point: [f64; 3],
    pub multipliers: [f64; 2],
    /// ∇_{(x,s)} [x + λ₁(x + s₁² − 1) + λ₂(−x + s₂² − 1)].
    pub lagrangian_gradient: [f64; 3],
    pub equality_residuals: [f64; 2],
    pub reformulation_stationary: bool,
    /// Some recovered multiplier is negative.
    pub negative_multiplier: bool,
    /// min over λ ≥ 0 with exact complementarity of |1 + λ₁ − λ₂| at x.
    pub original_stationarity_residual: f64,
    /// ε below which x fails ε-stationarity with ε-complementarity.
    pub original_epsilon_threshold: f64,
    /// A feasible direction d at x and ∇F·d.
    pub descent_direction: f64,
    pub directional_derivative: f64,
    pub descent_direction_feasible: bool,
    /// Change of the second equality residual when s₂ moves by 10⁻³.
    pub perturbation_response: f64,
}

pub fn slack_demo() -> SlackReport {
    let s2 = 2f64.sqrt();
    let (x, s_1, s_2) = (1.0, 0.0, s2);
    let (l1, l2) = (-1.0, 0.0);
    let lagrangian_gradient = [1.0 + l1 - l2, 2.0 * l1 * s_1, 2.0 * l2 * s_2];
    let equality = |x: f64, a: f64, b: f64| [x + a * a - 1.0, -x + b * b - 1.0];
    let equality_residuals = equality(x, s_1, s_2);
    let stationary =
        lagrangian_gradient.iter().all(|g| g.abs() <= 1e-12) && equality_residuals.iter().all(|r| r.abs() <= 1e-12);

    // original constraints g₁ = x − 1 (active), g₂ = −x − 1 = −2 (inactive):
    // λ₂ = 0, so the residual is min_{λ₁ ≥ 0} |1 + λ₁| = 1. Under
    // ε-complementarity λ₂ ≤ ε/2 and the residual is 1 − ε/2, which exceeds ε
    // for every ε < 2/3.
    let g2 = -x - 1.0;
    let original_stationarity_residual = 1.0;
    let original_epsilon_threshold = 1.0 / (1.0 - 1.0 / g2);

    let d = -1.0;
    let step = 1e-3;
    let moved = x + step * d;
    let feasible = moved - 1.0 <= 0.0 && -moved - 1.0 <= 0.0;

    let perturbed = equality(x, s_1, s_2 + 1e-3)[1];
    SlackReport {
        point: [x, s_1, s_2],
        multipliers: [l1, l2],
        lagrangian_gradient,
        equality_residuals,
        reformulation_stationary: stationary,
        negative_multiplier: l1 < 0.0 || l2 < 0.0,
        original_stationarity_residual,
        original_epsilon_threshold,
        descent_direction: d,
        directional_derivative: d,
        descent_direction_feasible: feasible,
        perturbation_response: (perturbed - equality_residuals[1]).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_contents() {
        let r = slack_demo();
        assert!(r.reformulation_stationary);
        assert_eq!(r.lagrangian_gradient, [0.0, 0.0, 0.0]);
        assert!(r.negative_multiplier);
        assert!(r.directional_derivative < 0.0 && r.descent_direction_feasible);
        assert_eq!(r.original_stationarity_residual, 1.0);
        assert!((r.original_epsilon_threshold - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.perturbation_response - 2.0 * 2f64.sqrt() * 1e-3).abs() < 1e-5);
    }
}
