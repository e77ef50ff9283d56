//! Hinge and squared-hinge penalty calculus.
//!
//! Φ(x) = F(x) + (β/m) Σ_k p(h_k(x)) with p = [·]_+ or [·]_+².

use serde::{Deserialize, Serialize};

use crate::numeric::bounded_least_squares;
use crate::oracles::{exact_full_eval, ConstrainedProblem, ProblemConstants};
use crate::{Error, Result, Vector};

/// max(0, z).
pub fn hinge(z: f64) -> f64 {
    z.max(0.0)
}

/// Element of ∂[z]_+: 1 above zero, 0 at or below.
pub fn hinge_subgrad(z: f64) -> f64 {
    if z > 0.0 {
        1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    #[default]
    Hinge,
    SquaredHinge,
}

impl PenaltyKind {
    pub fn value(self, z: f64) -> f64 {
        match self {
            PenaltyKind::Hinge => hinge(z),
            PenaltyKind::SquaredHinge => hinge(z).powi(2),
        }
    }

    /// ξ, the derivative of the penalty with respect to the constraint value.
    pub fn deriv(self, z: f64) -> f64 {
        match self {
            PenaltyKind::Hinge => hinge_subgrad(z),
            PenaltyKind::SquaredHinge => 2.0 * hinge(z),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PenaltyKind::Hinge => "hinge",
            PenaltyKind::SquaredHinge => "squared_hinge",
        }
    }
}

/// Weak-convexity and Lipschitz constants of Φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    /// C = ρ₀ + βρ₁.
    pub weak_convexity: f64,
    /// L = L_F + βL_h; reported for the hinge kind only.
    pub lipschitz: Option<f64>,
    pub theta_default: f64,
    /// Set when C = 0 and θ fell back to 1.
    pub theta_fallback: bool,
}

impl DerivedConstants {
    pub fn compute(constants: &ProblemConstants, beta: f64, kind: PenaltyKind) -> Self {
        let c = constants.rho_objective + beta * constants.rho_constraints;
        let lipschitz = match kind {
            PenaltyKind::Hinge => Some(constants.lipschitz_objective + beta * constants.lipschitz_constraints),
            PenaltyKind::SquaredHinge => None,
        };
        let (theta_default, theta_fallback) = if c > 0.0 { (0.5 / c, false) } else { (1.0, true) };
        Self {
            weak_convexity: c,
            lipschitz,
            theta_default,
            theta_fallback,
        }
    }
}

/// (ε + L_F)/δ: any β strictly above it makes the hinge penalty exact.
pub fn beta_lower_bound(epsilon: f64, lipschitz_objective: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    Ok((epsilon + lipschitz_objective) / delta)
}

/// Exact Φ, one subgradient, and the per-constraint pieces behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyEvaluation {
    pub value: f64,
    pub objective: f64,
    pub constraints: Vec<f64>,
    pub subgrad: Vector,
    /// λ_k = βξ_k/m.
    pub weights: Vec<f64>,
}

/// The penalised objective Φ for a fixed problem, β and penalty kind.
#[derive(Debug, Clone, Copy)]
pub struct PenaltyObjective<'a> {
    pub problem: &'a ConstrainedProblem,
    pub beta: f64,
    pub kind: PenaltyKind,
}

impl<'a> PenaltyObjective<'a> {
    /// β = 0 is accepted and yields Φ = F.
    pub fn new(problem: &'a ConstrainedProblem, beta: f64, kind: PenaltyKind) -> Result<Self> {
        if !(beta >= 0.0) || !beta.is_finite() {
            return Err(Error::invalid(
                "beta",
                format!("must be finite and nonnegative, got {beta}"),
            ));
        }
        if !problem.has_exact() {
            return Err(Error::MissingExactEvaluator(problem.name.clone()));
        }
        Ok(Self { problem, beta, kind })
    }

    fn scale(&self) -> f64 {
        self.beta / self.problem.m() as f64
    }

    pub fn evaluate_exact(&self, x: &Vector) -> Result<PenaltyEvaluation> {
        let fe = exact_full_eval(self.problem, x)?;
        let s = self.scale();
        let mut value = fe.objective;
        let mut subgrad = fe.objective_grad.clone();
        let mut weights = Vec::with_capacity(self.problem.m());
        for (k, &h) in fe.constraints.iter().enumerate() {
            value += s * self.kind.value(h);
            let w = s * self.kind.deriv(h);
            if w != 0.0 {
                subgrad += fe.jacobian.row(k).transpose() * w;
            }
            weights.push(w);
        }
        Ok(PenaltyEvaluation {
            value,
            objective: fe.objective,
            constraints: fe.constraints,
            subgrad,
            weights,
        })
    }

    pub fn value_exact(&self, x: &Vector) -> Result<f64> {
        Ok(self.evaluate_exact(x)?.value)
    }

    pub fn subgrad_exact(&self, x: &Vector) -> Result<Vector> {
        Ok(self.evaluate_exact(x)?.subgrad)
    }

    /// Smallest-norm element of ∂Φ(x) over the hinge kinks of constraints
    /// with |h_k| ≤ `tol`; other terms use the default subgradient.
    pub fn min_norm_subgrad(&self, x: &Vector, tol: f64) -> Result<Vector> {
        self.min_norm_subgrad_shifted(x, tol, &Vector::zeros(x.len()))
    }

    /// Smallest-norm element of `shift` + ∂Φ(x).
    pub fn min_norm_subgrad_shifted(&self, x: &Vector, tol: f64, shift: &Vector) -> Result<Vector> {
        let fe = exact_full_eval(self.problem, x)?;
        let s = self.scale();
        let mut base = &fe.objective_grad + shift;
        let mut dirs = Vec::new();
        for (k, &h) in fe.constraints.iter().enumerate() {
            let row = fe.jacobian.row(k).transpose();
            if self.kind == PenaltyKind::Hinge && h.abs() <= tol {
                dirs.push(row * s);
            } else {
                let w = s * self.kind.deriv(h);
                if w != 0.0 {
                    base += row * w;
                }
            }
        }
        if dirs.is_empty() {
            return Ok(base);
        }
        let xi = bounded_least_squares(&base, &dirs, 1.0);
        for (d, c) in dirs.iter().zip(xi) {
            base.axpy(c, d, 1.0);
        }
        Ok(base)
    }

    pub fn derived_constants(&self) -> DerivedConstants {
        DerivedConstants::compute(&self.problem.constants, self.beta, self.kind)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{make_exemplar_1d, make_quadratic_instance};
    use crate::vector;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn hinge_examples() {
        assert_eq!((hinge(-1.0), hinge_subgrad(-1.0)), (0.0, 0.0));
        assert_eq!((hinge(2.0), hinge_subgrad(2.0)), (2.0, 1.0));
        assert_eq!((hinge(0.0), hinge_subgrad(0.0)), (0.0, 0.0));
    }

    #[test]
    fn exemplar_values_and_subgradients() {
        let p = make_exemplar_1d(0.0);
        let phi = PenaltyObjective::new(&p, 4.0, PenaltyKind::Hinge).unwrap();
        assert_eq!(phi.value_exact(&vector(&[0.0])).unwrap(), 0.0);
        assert_eq!(phi.value_exact(&vector(&[2.0])).unwrap(), 10.0);
        assert_eq!(phi.subgrad_exact(&vector(&[2.0])).unwrap()[0], 17.0);
        assert_eq!(phi.subgrad_exact(&vector(&[0.0])).unwrap()[0], 1.0);
        let sq = PenaltyObjective::new(&p, 4.0, PenaltyKind::SquaredHinge).unwrap();
        assert_eq!(sq.value_exact(&vector(&[2.0])).unwrap(), 18.0);
        assert_eq!(sq.subgrad_exact(&vector(&[2.0])).unwrap()[0], 65.0);
    }

    #[test]
    fn derived_constants_examples() {
        let p = make_exemplar_1d(0.0);
        let d = PenaltyObjective::new(&p, 4.0, PenaltyKind::Hinge)
            .unwrap()
            .derived_constants();
        assert_eq!(d.weak_convexity, 8.0);
        assert_eq!(d.theta_default, 1.0 / 16.0);
        assert!(!d.theta_fallback);

        let mut c = p.constants;
        c.lipschitz_constraints = 2.0 * 2f64.sqrt();
        let d = DerivedConstants::compute(&c, 4.0, PenaltyKind::Hinge);
        assert_relative_eq!(d.lipschitz.unwrap(), 1.0 + 8.0 * 2f64.sqrt(), epsilon = 1e-12);
        let d2 = DerivedConstants::compute(&c, 8.0, PenaltyKind::Hinge);
        assert_eq!(
            d2.weak_convexity - c.rho_objective,
            2.0 * (d.weak_convexity - c.rho_objective)
        );
        assert_relative_eq!(
            d2.lipschitz.unwrap() - 1.0,
            2.0 * (d.lipschitz.unwrap() - 1.0),
            epsilon = 1e-12
        );

        c.rho_objective = 0.0;
        c.rho_constraints = 0.0;
        let d = DerivedConstants::compute(&c, 4.0, PenaltyKind::Hinge);
        assert!(d.theta_fallback);
        assert_eq!(d.theta_default, 1.0);
    }

    #[test]
    fn beta_bound() {
        assert_relative_eq!(beta_lower_bound(0.1, 1.0, 2.0).unwrap(), 0.55);
        assert_eq!(beta_lower_bound(0.0, 0.0, 1.0).unwrap(), 0.0);
        assert!(4.0 > beta_lower_bound(0.1, 1.0, 2.0).unwrap());
        assert!(beta_lower_bound(0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn rejects_negative_beta() {
        let p = make_exemplar_1d(0.0);
        assert!(PenaltyObjective::new(&p, -1.0, PenaltyKind::Hinge).is_err());
        assert!(PenaltyObjective::new(&p, f64::NAN, PenaltyKind::Hinge).is_err());
    }

    #[test]
    fn min_norm_at_exemplar_solution() {
        let p = make_exemplar_1d(0.0);
        let phi = PenaltyObjective::new(&p, 4.0, PenaltyKind::Hinge).unwrap();
        let g = phi.min_norm_subgrad(&vector(&[-(2f64.sqrt())]), 1e-9).unwrap();
        assert!(g[0].abs() < 1e-12);
    }

    fn box_point(r: f64) -> impl Strategy<Value = f64> {
        -r..r
    }

    proptest! {
        #[test]
        fn weak_convexity_and_lipschitz_exemplar(x in box_point(3.0), y in box_point(3.0), beta in 0.0f64..20.0) {
            let p = make_exemplar_1d(0.0);
            let phi = PenaltyObjective::new(&p, beta, PenaltyKind::Hinge).unwrap();
            let d = phi.derived_constants();
            let (vx, vy) = (vector(&[x]), vector(&[y]));
            let ey = phi.evaluate_exact(&vy).unwrap();
            let fx = phi.value_exact(&vx).unwrap();
            let lower = ey.value + ey.subgrad[0] * (x - y) - 0.5 * d.weak_convexity * (x - y).powi(2);
            prop_assert!(fx >= lower - 1e-9);
            prop_assert!((fx - ey.value).abs() <= d.lipschitz.unwrap() * (x - y).abs() + 1e-9);
        }

        #[test]
        fn weak_convexity_quadratic(seed in 0u64..6, a in prop::collection::vec(-1.0f64..1.0, 2), b in prop::collection::vec(-1.0f64..1.0, 2)) {
            let p = make_quadratic_instance(2, 3, seed).unwrap();
            let phi = PenaltyObjective::new(&p, 3.0, PenaltyKind::Hinge).unwrap();
            let d = phi.derived_constants();
            let r = p.constants.region_radius;
            let x = Vector::from_iterator(2, a.iter().map(|v| v * r));
            let y = Vector::from_iterator(2, b.iter().map(|v| v * r));
            let ey = phi.evaluate_exact(&y).unwrap();
            let fx = phi.value_exact(&x).unwrap();
            let diff = &x - &y;
            prop_assert!(fx >= ey.value + ey.subgrad.dot(&diff) - 0.5 * d.weak_convexity * diff.norm_squared() - 1e-9);
            prop_assert!((fx - ey.value).abs() <= d.lipschitz.unwrap() * diff.norm() + 1e-9);
        }

        #[test]
        fn exact_on_feasible_set(seed in 0u64..6, a in prop::collection::vec(-1.0f64..1.0, 2), beta in 0.0f64..50.0) {
            let p = make_quadratic_instance(2, 2, seed).unwrap();
            let x = Vector::from_iterator(2, a.iter().map(|v| v * 3.0));
            for kind in [PenaltyKind::Hinge, PenaltyKind::SquaredHinge] {
                let phi = PenaltyObjective::new(&p, beta, kind).unwrap();
                let e = phi.evaluate_exact(&x).unwrap();
                if e.constraints.iter().all(|&h| h < 0.0) {
                    prop_assert_eq!(e.value, e.objective);
                    prop_assert_eq!(&e.subgrad, &p.exact_objective(&x).unwrap().grad);
                }
                for (w, h) in e.weights.iter().zip(&e.constraints) {
                    prop_assert!(*w >= 0.0);
                    if *h < 0.0 {
                        prop_assert_eq!(*w, 0.0);
                    }
                }
            }
        }
    }
}
