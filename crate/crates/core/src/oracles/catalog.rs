//! Synthetic instances with exact evaluators.

use std::sync::Arc;

use nalgebra::SymmetricEigen;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    abs_with_subgrad, ConstrainedProblem, Constraint, Evaluation, FccoCondition, FccoConstants, FccoObjective,
    InstanceSpec, KnownSolution, NoisyOracle, Objective, Oracle, OuterFunction, OuterKind, ProblemConstants,
};
use crate::numeric::bounded_least_squares;
use crate::stream::splitmix64;
use crate::{vector, Error, Matrix, Result, Vector};

const REGION_RADIUS: f64 = 3.0;
const MAX_ATTEMPTS: usize = 10;

/// F(x) = x subject to h(x) = |x² − 1| − 1 ≤ 0.
///
/// The feasible set is [−√2, √2]; the minimiser −√2 has multiplier 1/(2√2).
pub fn make_exemplar_1d(noise: f64) -> ConstrainedProblem {
    let objective = NoisyOracle::new("x", 1, noise, |x: &Vector| Evaluation::new(x[0], vector(&[1.0])));
    let constraint = NoisyOracle::new("|x^2-1|-1", 1, noise, |x: &Vector| {
        let (a, s) = abs_with_subgrad(x[0] * x[0] - 1.0);
        Evaluation::new(a - 1.0, vector(&[s * 2.0 * x[0]]))
    });
    let constants = ProblemConstants {
        rho_objective: 0.0,
        rho_constraints: 2.0,
        lipschitz_objective: 1.0,
        lipschitz_constraints: 2.0 * REGION_RADIUS,
        region_radius: REGION_RADIUS,
        noise_objective: noise,
        noise_constraints: noise,
        regularity_delta: Some(2.0),
        fcco: None,
    };
    let s2 = 2f64.sqrt();
    let mut p = ConstrainedProblem::new(
        "exemplar_1d",
        Objective::Plain(Arc::new(objective)),
        vec![Constraint::Plain(Arc::new(constraint))],
        constants,
        vector(&[2.0]),
    )
    .expect("exemplar is well formed")
    .with_known_solution(vector(&[-s2]), vec![1.0 / (2.0 * s2)]);
    p.spec = Some(InstanceSpec::Exemplar1d { noise });
    p
}

/// Parameters of [`make_quadratic_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSpec {
    pub dim: usize,
    pub m: usize,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise_objective: f64,
    #[serde(default = "default_noise")]
    pub noise_constraints: f64,
}

fn default_noise() -> f64 {
    0.1
}

impl QuadraticSpec {
    pub fn new(dim: usize, m: usize, seed: u64) -> Self {
        Self {
            dim,
            m,
            seed,
            noise_objective: default_noise(),
            noise_constraints: default_noise(),
        }
    }

    pub fn build(&self) -> Result<ConstrainedProblem> {
        if self.dim == 0 || self.m == 0 {
            return Err(Error::invalid("dim/m", "both must be at least 1"));
        }
        let mut last = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = attempt_rng(self.seed, attempt);
            let anchor = uniform_point(&mut rng, self.dim, 0.5);
            let shells = random_shells(&mut rng, self.dim, self.m, &anchor);
            let p_mat = random_pd(&mut rng, self.dim, 0.5);
            let dir = unit_direction(&mut rng, self.dim);
            let mut target = &anchor + &dir * 2.5;
            while shells.iter().all(|s| s.value(&target) <= 0.0) && target.amax() < REGION_RADIUS * 2.0 {
                target = &anchor + (&target - &anchor) * 1.5;
            }
            let rn = REGION_RADIUS * (self.dim as f64).sqrt();
            let p_norm = spectral_norm(&p_mat);
            let constants = ProblemConstants {
                rho_objective: 0.0,
                rho_constraints: shells.iter().map(|s| s.norm).fold(0.0, f64::max),
                lipschitz_objective: p_norm * (rn + target.norm()),
                lipschitz_constraints: shells.iter().map(|s| s.lipschitz(rn)).fold(0.0, f64::max),
                region_radius: REGION_RADIUS,
                noise_objective: self.noise_objective,
                noise_constraints: self.noise_constraints,
                regularity_delta: (self.m == 1).then(|| shells[0].violation_gradient_floor()),
                fcco: None,
            };
            let objective = NoisyOracle::new("quadratic", self.dim, self.noise_objective, {
                let (p_mat, target) = (p_mat.clone(), target.clone());
                move |x: &Vector| {
                    let d = x - &target;
                    let g = &p_mat * &d;
                    Evaluation::new(0.5 * d.dot(&g), g)
                }
            });
            let constraints = shells
                .iter()
                .map(|s| s.clone().into_constraint(self.noise_constraints))
                .collect();
            let problem = ConstrainedProblem::new(
                "quadratic",
                Objective::Plain(Arc::new(objective)),
                constraints,
                constants,
                anchor.clone(),
            )?;
            match attach_reference_solution(problem, &anchor) {
                Ok(mut p) => {
                    p.spec = Some(InstanceSpec::Quadratic(self.clone()));
                    return Ok(p);
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::GenerationFailed {
            attempts: MAX_ATTEMPTS,
            reason: last,
        })
    }
}

/// Convex quadratic objective with `m` constraints |q_k(x)| − c_k ≤ 0.
pub fn make_quadratic_instance(dim: usize, m: usize, seed: u64) -> Result<ConstrainedProblem> {
    QuadraticSpec::new(dim, m, seed).build()
}

/// Parameters of [`make_fcco_instance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FccoSpec {
    pub n: usize,
    pub dim: usize,
    #[serde(default = "default_m")]
    pub m: usize,
    pub condition: FccoCondition,
    pub seed: u64,
    #[serde(default = "default_noise")]
    pub noise_inner: f64,
    #[serde(default = "default_noise")]
    pub noise_constraints: f64,
}

fn default_m() -> usize {
    1
}

impl FccoSpec {
    pub fn new(n: usize, dim: usize, condition: FccoCondition, seed: u64) -> Self {
        Self {
            n,
            dim,
            m: 1,
            condition,
            seed,
            noise_inner: default_noise(),
            noise_constraints: default_noise(),
        }
    }

    pub fn build(&self) -> Result<ConstrainedProblem> {
        if self.n < 2 {
            return Err(Error::invalid("n", "FCCO instances need n >= 2"));
        }
        if self.dim == 0 || self.m == 0 {
            return Err(Error::invalid("dim/m", "both must be at least 1"));
        }
        let mut last = String::new();
        for attempt in 0..MAX_ATTEMPTS {
            let mut rng = attempt_rng(self.seed ^ 0xfcc0, attempt);
            let anchor = uniform_point(&mut rng, self.dim, 0.5);
            let shells = random_shells(&mut rng, self.dim, self.m, &anchor);
            let rn = REGION_RADIUS * (self.dim as f64).sqrt();
            let (fcco, fc, lipschitz_objective, rho_objective) = match self.condition {
                FccoCondition::Monotone => self.monotone_parts(&mut rng)?,
                FccoCondition::Smooth => self.smooth_parts(&mut rng, rn)?,
            };
            let constants = ProblemConstants {
                rho_objective,
                rho_constraints: shells.iter().map(|s| s.norm).fold(0.0, f64::max),
                lipschitz_objective,
                lipschitz_constraints: shells.iter().map(|s| s.lipschitz(rn)).fold(0.0, f64::max),
                region_radius: REGION_RADIUS,
                noise_objective: self.noise_inner,
                noise_constraints: self.noise_constraints,
                regularity_delta: (self.m == 1).then(|| shells[0].violation_gradient_floor()),
                fcco: Some(fc),
            };
            let constraints = shells
                .iter()
                .map(|s| s.clone().into_constraint(self.noise_constraints))
                .collect();
            let problem =
                ConstrainedProblem::new("fcco", Objective::Fcco(fcco), constraints, constants, anchor.clone())?;
            match attach_reference_solution(problem, &anchor) {
                Ok(mut p) => {
                    p.spec = Some(InstanceSpec::Fcco(self.clone()));
                    return Ok(p);
                }
                Err(e) => last = e.to_string(),
            }
        }
        Err(Error::GenerationFailed {
            attempts: MAX_ATTEMPTS,
            reason: last,
        })
    }

    /// softplus ∘ affine, with slopes sharing a common descent direction so
    /// the constraint is active at the solution.
    fn monotone_parts(&self, rng: &mut ChaCha8Rng) -> Result<(FccoObjective, FccoConstants, f64, f64)> {
        let drift = unit_direction(rng, self.dim);
        let mut inner: Vec<Arc<dyn Oracle>> = Vec::with_capacity(self.n);
        let mut lg: f64 = 0.0;
        for i in 0..self.n {
            let a = -&drift + normal_vector(rng, self.dim) * 0.5;
            let b: f64 = 0.5 * rng.sample::<f64, _>(StandardNormal);
            lg = lg.max(a.norm());
            inner.push(Arc::new(affine_inner(format!("g{i}"), a, b, self.noise_inner)));
        }
        let objective = FccoObjective::new(vec![OuterFunction::of(OuterKind::Softplus); self.n], inner)?;
        let fc = FccoConstants {
            lipschitz_outer: 1.0,
            lipschitz_inner: lg,
            noise_inner: self.noise_inner,
            curvature_outer: 0.0,
            curvature_inner: 0.0,
        };
        Ok((objective, fc, lg, 0.0))
    }

    /// (quadratic)² with positive-definite inner curvature.
    fn smooth_parts(&self, rng: &mut ChaCha8Rng, rn: f64) -> Result<(FccoObjective, FccoConstants, f64, f64)> {
        let mut inner: Vec<Arc<dyn Oracle>> = Vec::with_capacity(self.n);
        let (mut lg, mut a_max, mut g_max): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for i in 0..self.n {
            let a = random_pd(rng, self.dim, 0.1) * 0.5;
            let b = normal_vector(rng, self.dim) * 0.5;
            let c: f64 = 0.5 * rng.sample::<f64, _>(StandardNormal) - 0.5;
            let an = spectral_norm(&a);
            a_max = a_max.max(an);
            lg = lg.max(an * rn + b.norm());
            g_max = g_max.max(0.5 * an * rn * rn + b.norm() * rn + c.abs());
            let noise = self.noise_inner;
            let dim = self.dim;
            inner.push(Arc::new(NoisyOracle::new(
                format!("g{i}"),
                dim,
                noise,
                move |x: &Vector| {
                    let ax = &a * x;
                    Evaluation::new(0.5 * x.dot(&ax) + b.dot(x) + c, ax + &b)
                },
            )));
        }
        let objective = FccoObjective::new(vec![OuterFunction::of(OuterKind::Square); self.n], inner)?;
        let fc = FccoConstants {
            lipschitz_outer: 2.0 * g_max,
            lipschitz_inner: lg,
            noise_inner: self.noise_inner,
            curvature_outer: 2.0,
            curvature_inner: a_max,
        };
        Ok((objective, fc, 2.0 * g_max * lg, 2.0 * g_max * a_max))
    }
}

/// Setting-II instance: softplus∘affine (monotone) or square∘quadratic (smooth)
/// with one weakly convex shell constraint.
pub fn make_fcco_instance(n: usize, dim: usize, condition: FccoCondition, seed: u64) -> Result<ConstrainedProblem> {
    FccoSpec::new(n, dim, condition, seed).build()
}

/// Affine inner function g(x) = aᵀx + b with additive Gaussian noise.
pub fn affine_inner(label: String, a: Vector, b: f64, noise: f64) -> NoisyOracle {
    let dim = a.len();
    NoisyOracle::new(label, dim, noise, move |x: &Vector| {
        Evaluation::new(a.dot(x) + b, a.clone())
    })
}

/// h(x) = |½(x − z)ᵀA(x − z) − r| − c with c ≥ r, so the feasible set is the
/// ellipsoid ½(x − z)ᵀA(x − z) ≤ r + c.
#[derive(Debug, Clone)]
struct Shell {
    a: Matrix,
    center: Vector,
    radius: f64,
    slack: f64,
    norm: f64,
    min_eig: f64,
}

impl Shell {
    fn eval(&self, x: &Vector) -> Evaluation {
        let d = x - &self.center;
        let ad = &self.a * &d;
        let (abs, s) = abs_with_subgrad(0.5 * d.dot(&ad) - self.radius);
        Evaluation::new(abs - self.slack, ad * s)
    }

    fn value(&self, x: &Vector) -> f64 {
        self.eval(x).value
    }

    fn lipschitz(&self, rn: f64) -> f64 {
        self.norm * (rn + self.center.norm())
    }

    /// Lower bound on ‖∇h‖ where h > 0 (outside the ellipsoid).
    fn violation_gradient_floor(&self) -> f64 {
        self.min_eig * (2.0 * (self.radius + self.slack) / self.norm).sqrt()
    }

    fn into_constraint(self, noise: f64) -> Constraint {
        let dim = self.center.len();
        Constraint::Plain(Arc::new(NoisyOracle::new("shell", dim, noise, move |x: &Vector| {
            self.eval(x)
        })))
    }
}

fn random_shells(rng: &mut ChaCha8Rng, dim: usize, m: usize, anchor: &Vector) -> Vec<Shell> {
    (0..m)
        .map(|_| {
            let a = random_pd(rng, dim, 0.5);
            let center = anchor + normal_vector(rng, dim) * 0.5;
            let radius = rng.random_range(0.2..1.0);
            let d = anchor - &center;
            let q0 = 0.5 * d.dot(&(&a * &d)) - radius;
            let slack = radius.max(q0.abs()) + rng.random_range(0.3..1.0);
            let eig = SymmetricEigen::new(a.clone()).eigenvalues;
            Shell {
                norm: eig.max(),
                min_eig: eig.min(),
                a,
                center,
                radius,
                slack,
            }
        })
        .collect()
}

fn attempt_rng(seed: u64, attempt: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed.wrapping_add(attempt as u64)))
}

fn uniform_point(rng: &mut ChaCha8Rng, dim: usize, half_width: f64) -> Vector {
    Vector::from_fn(dim, |_, _| rng.random_range(-half_width..half_width))
}

fn normal_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    Vector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> Vector {
    loop {
        let v = normal_vector(rng, dim);
        let n = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

/// MᵀM/d + shift·I for a Gaussian M.
fn random_pd(rng: &mut ChaCha8Rng, dim: usize, shift: f64) -> Matrix {
    let m = Matrix::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    m.transpose() * &m / dim as f64 + Matrix::identity(dim, dim) * shift
}

fn spectral_norm(a: &Matrix) -> f64 {
    SymmetricEigen::new(a.clone())
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Controls of the generation-time reference solver.
#[derive(Debug, Clone, Copy)]
pub struct ReferenceSolverControls {
    pub iterations: usize,
    /// Step at iteration t is `step_scale / √t` along the normalised subgradient.
    pub step_scale: f64,
    pub feasibility_tol: f64,
}

impl Default for ReferenceSolverControls {
    fn default() -> Self {
        Self {
            iterations: 100_000,
            step_scale: 0.1 * REGION_RADIUS,
            feasibility_tol: 1e-6,
        }
    }
}

/// Switching subgradient method on the exact evaluators, projected onto the
/// instance box. Steps on the most violated constraint when infeasible and on
/// the objective otherwise; returns the best feasible iterate together with
/// nonnegative least-squares multipliers on its nearly active constraints.
pub fn switching_subgradient_solution(
    problem: &ConstrainedProblem,
    start: &Vector,
    controls: ReferenceSolverControls,
) -> Result<KnownSolution> {
    let r = problem.constants.region_radius;
    let mut x = start.clone();
    let mut best: Option<(f64, Vector)> = None;
    for t in 1..=controls.iterations {
        let hs = problem.exact_constraints(&x)?;
        let (k_max, h_max) = hs
            .iter()
            .enumerate()
            .map(|(k, h)| (k, h.value))
            .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
        let g = if h_max > 0.0 {
            hs[k_max].grad.clone()
        } else {
            let f = problem.exact_objective(&x)?;
            if best.as_ref().is_none_or(|(v, _)| f.value < *v) {
                best = Some((f.value, x.clone()));
            }
            f.grad
        };
        let gn = g.norm();
        if gn == 0.0 {
            if h_max <= 0.0 {
                break;
            }
            continue;
        }
        x -= g * (controls.step_scale / (t as f64).sqrt() / gn);
        x.apply(|v| *v = v.clamp(-r, r));
    }
    let (_, point) = best.ok_or_else(|| Error::GenerationFailed {
        attempts: 1,
        reason: "reference solver never reached the feasible set".into(),
    })?;
    let full = super::exact_full_eval(problem, &point)?;
    if full.max_violation() > controls.feasibility_tol {
        return Err(Error::GenerationFailed {
            attempts: 1,
            reason: format!("reference point violates constraints by {}", full.max_violation()),
        });
    }
    let active: Vec<usize> = (0..problem.m())
        .filter(|&k| full.constraints[k].abs() <= 1e-3)
        .collect();
    let dirs: Vec<Vector> = active.iter().map(|&k| full.jacobian.row(k).transpose()).collect();
    let coef = bounded_least_squares(&full.objective_grad, &dirs, f64::INFINITY);
    let mut multipliers = vec![0.0; problem.m()];
    for (&k, c) in active.iter().zip(coef) {
        multipliers[k] = c;
    }
    Ok(KnownSolution { point, multipliers })
}

fn attach_reference_solution(problem: ConstrainedProblem, anchor: &Vector) -> Result<ConstrainedProblem> {
    if problem.max_violation(anchor)? >= 0.0 {
        return Err(Error::GenerationFailed {
            attempts: 1,
            reason: "anchor is not strictly feasible".into(),
        });
    }
    let ks = switching_subgradient_solution(&problem, anchor, ReferenceSolverControls::default())?;
    Ok(problem.with_known_solution(ks.point, ks.multipliers))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exemplar_shape() {
        let p = make_exemplar_1d(0.0);
        assert_eq!(p.m(), 1);
        assert_eq!(p.max_violation(&vector(&[1.0])).unwrap(), -1.0);
        let ks = p.known_solution.unwrap();
        assert!((ks.point[0] + std::f64::consts::SQRT_2).abs() < 1e-5);
        assert_eq!(p.constants.rho_constraints, 2.0);
        assert_eq!(p.constants.regularity_delta, Some(2.0));
    }

    #[test]
    fn exemplar_minimiser_by_enumeration() {
        let p = make_exemplar_1d(0.0);
        let best = (0..=600_000)
            .map(|i| -3.0 + i as f64 * 1e-5)
            .filter(|&x| p.max_violation(&vector(&[x])).unwrap() <= 0.0)
            .fold(f64::INFINITY, f64::min);
        assert!((best + 2f64.sqrt()).abs() < 1e-5);
    }

    #[test]
    fn quadratic_strictly_feasible_start() {
        let p = make_quadratic_instance(1, 1, 0).unwrap();
        assert!(p.max_violation(&p.initial_point).unwrap() < 0.0);
    }

    #[test]
    fn quadratic_known_solution_feasible() {
        let p = make_quadratic_instance(2, 3, 7).unwrap();
        let ks = p.known_solution.as_ref().unwrap();
        assert!(p.max_violation(&ks.point).unwrap() <= 1e-6);
        assert!(ks.multipliers.iter().all(|&l| l >= 0.0));
    }

    #[test]
    fn quadratic_is_deterministic() {
        let a = make_quadratic_instance(3, 2, 11).unwrap();
        let b = make_quadratic_instance(3, 2, 11).unwrap();
        assert_eq!(a.constants, b.constants);
        assert_eq!(a.known_solution, b.known_solution);
        let x = vector(&[0.3, -0.2, 1.1]);
        assert_eq!(
            super::super::exact_full_eval(&a, &x).unwrap(),
            super::super::exact_full_eval(&b, &x).unwrap()
        );
    }

    #[test]
    fn fcco_zero_inner_is_zero() {
        let zero: Arc<dyn Oracle> = Arc::new(NoisyOracle::new("0", 2, 0.0, |_: &Vector| {
            Evaluation::new(0.0, Vector::zeros(2))
        }));
        let f = FccoObjective::new(vec![OuterFunction::of(OuterKind::Square); 3], vec![zero; 3]).unwrap();
        assert_eq!(f.condition, FccoCondition::Smooth);
        let e = f.exact(&vector(&[0.7, -1.2])).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.grad.norm(), 0.0);
    }

    #[test]
    fn fcco_deterministic_and_valid() {
        for cond in [FccoCondition::Monotone, FccoCondition::Smooth] {
            let a = make_fcco_instance(4, 2, cond, 3).unwrap();
            let b = make_fcco_instance(4, 2, cond, 3).unwrap();
            assert_eq!(a.constants, b.constants);
            assert_eq!(a.known_solution, b.known_solution);
            let Objective::Fcco(f) = &a.objective else { panic!() };
            assert_eq!(f.condition, cond);
        }
        assert!(make_fcco_instance(1, 2, FccoCondition::Monotone, 0).is_err());
    }
}
