//! Stochastic oracle contract and synthetic constrained problems.
//!
//! An [`Oracle`] maps `(point, sample id)` to a value and a subgradient.
//! Averaging over sample ids recovers the exact function, which the
//! synthetic instances also expose directly for certification.

mod catalog;
mod document;
mod fairness;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::stream::{Batch, SampleId, StreamKey};
use crate::{Error, Matrix, Result, Vector};

pub use catalog::{
    affine_inner, make_exemplar_1d, make_fcco_instance, make_quadratic_instance, switching_subgradient_solution,
    FccoSpec, QuadraticSpec, ReferenceSolverControls,
};
pub use document::{InstanceDocument, InstanceSpec, INSTANCE_SCHEMA_VERSION};
pub use fairness::{auc_surrogate, make_fairness_instance, FairnessData, FairnessSpec};

/// One value/subgradient pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad: Vector,
}

impl Evaluation {
    pub fn new(value: f64, grad: Vector) -> Self {
        Self { value, grad }
    }
}

/// Stochastic first-order oracle for a scalar function of `x`.
///
/// Implementations must be pure in `(x, sample)`.
pub trait Oracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    /// Standard deviation of a single-sample value estimate.
    fn noise_level(&self) -> f64;

    fn sample(&self, x: &Vector, sample: SampleId) -> Evaluation;

    /// Noise-free evaluation, when the instance knows it.
    fn exact(&self, x: &Vector) -> Option<Evaluation>;

    fn has_exact(&self) -> bool {
        true
    }
}

pub type ExactFn = Arc<dyn Fn(&Vector) -> Evaluation + Send + Sync>;
pub type TermFn = Arc<dyn Fn(usize, &Vector) -> Evaluation + Send + Sync>;

/// Exact function plus additive Gaussian noise.
///
/// Value noise has variance `noise²`; subgradient noise is isotropic with
/// total variance `noise²` (each coordinate `noise²/dim`).
#[derive(Clone)]
pub struct NoisyOracle {
    label: String,
    dim: usize,
    noise: f64,
    f: ExactFn,
}

impl NoisyOracle {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        noise: f64,
        f: impl Fn(&Vector) -> Evaluation + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            dim,
            noise,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for NoisyOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NoisyOracle")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("noise", &self.noise)
            .finish()
    }
}

impl Oracle for NoisyOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_level(&self) -> f64 {
        self.noise
    }

    fn sample(&self, x: &Vector, sample: SampleId) -> Evaluation {
        let mut e = (self.f)(x);
        if self.noise > 0.0 {
            let mut rng = sample.rng();
            let z: f64 = rng.sample(StandardNormal);
            e.value += self.noise * z;
            let scale = self.noise / (self.dim as f64).sqrt();
            for g in e.grad.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *g += scale * z;
            }
        }
        e
    }

    fn exact(&self, x: &Vector) -> Option<Evaluation> {
        Some((self.f)(x))
    }
}

/// Uniform average of `n_terms` deterministic terms; a sample picks one term.
#[derive(Clone)]
pub struct FiniteSumOracle {
    label: String,
    dim: usize,
    n_terms: usize,
    noise: f64,
    term: TermFn,
}

impl FiniteSumOracle {
    /// `noise` is the recorded (empirical) standard deviation of one term.
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        n_terms: usize,
        noise: f64,
        term: impl Fn(usize, &Vector) -> Evaluation + Send + Sync + 'static,
    ) -> Self {
        assert!(n_terms > 0, "finite sum needs at least one term");
        Self {
            label: label.into(),
            dim,
            n_terms,
            noise,
            term: Arc::new(term),
        }
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn term(&self, i: usize, x: &Vector) -> Evaluation {
        (self.term)(i, x)
    }
}

impl fmt::Debug for FiniteSumOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteSumOracle")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("n_terms", &self.n_terms)
            .finish()
    }
}

impl Oracle for FiniteSumOracle {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_level(&self) -> f64 {
        self.noise
    }

    fn sample(&self, x: &Vector, sample: SampleId) -> Evaluation {
        let i = sample.rng().random_range(0..self.n_terms);
        (self.term)(i, x)
    }

    fn exact(&self, x: &Vector) -> Option<Evaluation> {
        let mut value = 0.0;
        let mut grad = Vector::zeros(self.dim);
        for i in 0..self.n_terms {
            let e = (self.term)(i, x);
            value += e.value;
            grad += e.grad;
        }
        let n = self.n_terms as f64;
        Some(Evaluation::new(value / n, grad / n))
    }
}

fn check_dim(expected: usize, x: &Vector) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: x.len(),
        });
    }
    Ok(())
}

/// Mini-batch mean of value and subgradient over a drawn batch.
pub fn eval_batch(oracle: &dyn Oracle, x: &Vector, batch: &Batch) -> Result<Evaluation> {
    check_dim(oracle.dim(), x)?;
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let mut value = 0.0;
    let mut grad = Vector::zeros(oracle.dim());
    for &s in &batch.samples {
        let e = oracle.sample(x, s);
        value += e.value;
        grad += e.grad;
    }
    let b = batch.len() as f64;
    Ok(Evaluation::new(value / b, grad / b))
}

/// Draws a batch of `batch_size` samples from `key` and returns its mean.
pub fn eval(oracle: &dyn Oracle, x: &Vector, batch_size: usize, key: StreamKey) -> Result<Evaluation> {
    if batch_size == 0 {
        return Err(Error::EmptyBatch);
    }
    eval_batch(oracle, x, &Batch::draw(key, batch_size))
}

/// |u| with the tie-break ∂|0| = 0.
pub(crate) fn abs_with_subgrad(u: f64) -> (f64, f64) {
    (u.abs(), sign(u))
}

/// sign with sign(0) = 0.
pub fn sign(u: f64) -> f64 {
    if u > 0.0 {
        1.0
    } else if u < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Constraint of the form |E[first] − E[second]| − κ ≤ 0, where both inner
/// means are tracked separately by the solver.
#[derive(Debug, Clone)]
pub struct NestedAbsHingeConstraint {
    pub label: String,
    pub first: Arc<dyn Oracle>,
    pub second: Arc<dyn Oracle>,
    pub kappa: f64,
}

impl NestedAbsHingeConstraint {
    /// Value from (estimates of) the two inner means.
    pub fn value_from(&self, first: f64, second: f64) -> f64 {
        (first - second).abs() - self.kappa
    }
}

/// One inequality constraint h_k(x) ≤ 0.
#[derive(Debug, Clone)]
pub enum Constraint {
    Plain(Arc<dyn Oracle>),
    NestedAbs(NestedAbsHingeConstraint),
}

impl Constraint {
    /// Number of scalar quantities the solver tracks for this constraint.
    pub fn arity(&self) -> usize {
        match self {
            Constraint::Plain(_) => 1,
            Constraint::NestedAbs(_) => 2,
        }
    }

    pub fn tracked_oracle(&self, j: usize) -> &Arc<dyn Oracle> {
        match (self, j) {
            (Constraint::Plain(o), 0) => o,
            (Constraint::NestedAbs(c), 0) => &c.first,
            (Constraint::NestedAbs(c), 1) => &c.second,
            _ => panic!("tracked index {j} out of range"),
        }
    }

    pub fn dim(&self) -> usize {
        self.tracked_oracle(0).dim()
    }

    pub fn has_exact(&self) -> bool {
        (0..self.arity()).all(|j| self.tracked_oracle(j).has_exact())
    }

    /// Constraint estimate from tracked values, and the weights with which
    /// each tracked subgradient enters the chain rule.
    pub fn compose(&self, tracked: &[f64]) -> (f64, [f64; 2]) {
        match self {
            Constraint::Plain(_) => (tracked[0], [1.0, 0.0]),
            Constraint::NestedAbs(c) => {
                let d = tracked[0] - tracked[1];
                let s = sign(d);
                (c.value_from(tracked[0], tracked[1]), [s, -s])
            }
        }
    }

    pub fn exact(&self, x: &Vector) -> Option<Evaluation> {
        match self {
            Constraint::Plain(o) => o.exact(x),
            Constraint::NestedAbs(c) => {
                let a = c.first.exact(x)?;
                let b = c.second.exact(x)?;
                let (v, w) = self.compose(&[a.value, b.value]);
                Some(Evaluation::new(v, a.grad * w[0] + b.grad * w[1]))
            }
        }
    }
}

/// Deterministic scalar outer function of an FCCO objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterKind {
    Identity,
    Softplus,
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterFunction {
    pub kind: OuterKind,
    pub monotone: bool,
    pub smooth: bool,
}

impl OuterFunction {
    /// Outer function with its natural tags.
    pub fn of(kind: OuterKind) -> Self {
        match kind {
            OuterKind::Identity | OuterKind::Softplus => Self {
                kind,
                monotone: true,
                smooth: true,
            },
            OuterKind::Square => Self {
                kind,
                monotone: false,
                smooth: true,
            },
        }
    }

    pub fn value(&self, u: f64) -> f64 {
        match self.kind {
            OuterKind::Identity => u,
            OuterKind::Softplus => softplus(u),
            OuterKind::Square => u * u,
        }
    }

    pub fn deriv(&self, u: f64) -> f64 {
        match self.kind {
            OuterKind::Identity => 1.0,
            OuterKind::Softplus => sigmoid(u),
            OuterKind::Square => 2.0 * u,
        }
    }

    pub fn lipschitz(&self, u_bound: f64) -> f64 {
        match self.kind {
            OuterKind::Identity | OuterKind::Softplus => 1.0,
            OuterKind::Square => 2.0 * u_bound,
        }
    }

    pub fn smoothness(&self) -> f64 {
        match self.kind {
            OuterKind::Identity => 0.0,
            OuterKind::Softplus => 0.25,
            OuterKind::Square => 2.0,
        }
    }
}

pub fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

pub fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

/// Which regularity regime of the outer functions the objective satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FccoCondition {
    /// Monotone non-decreasing, weakly convex outer functions.
    Monotone,
    /// Smooth outer functions.
    Smooth,
}

/// F(x) = (1/n) Σ_i f_i(E[g_i(x, ζ)]).
#[derive(Debug, Clone)]
pub struct FccoObjective {
    pub outer: Vec<OuterFunction>,
    pub inner: Vec<Arc<dyn Oracle>>,
    pub condition: FccoCondition,
}

impl FccoObjective {
    /// Validates tagging: every outer function must be monotone, or every one
    /// must be smooth. Monotone wins when both hold.
    pub fn new(outer: Vec<OuterFunction>, inner: Vec<Arc<dyn Oracle>>) -> Result<Self> {
        if outer.is_empty() || outer.len() != inner.len() {
            return Err(Error::invalid(
                "outer",
                format!("{} outer vs {} inner functions", outer.len(), inner.len()),
            ));
        }
        let dim = inner[0].dim();
        if let Some(bad) = inner.iter().find(|o| o.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: bad.dim(),
            });
        }
        let condition = if outer.iter().all(|f| f.monotone) {
            FccoCondition::Monotone
        } else if outer.iter().all(|f| f.smooth) {
            FccoCondition::Smooth
        } else {
            let index = outer.iter().position(|f| !f.smooth).unwrap_or(0);
            return Err(Error::MixedOuterTagging {
                index,
                expected: "smooth (the others are not all monotone)",
            });
        };
        Ok(Self {
            outer,
            inner,
            condition,
        })
    }

    pub fn n(&self) -> usize {
        self.outer.len()
    }

    pub fn dim(&self) -> usize {
        self.inner[0].dim()
    }

    pub fn has_exact(&self) -> bool {
        self.inner.iter().all(|g| g.has_exact())
    }

    pub fn exact(&self, x: &Vector) -> Option<Evaluation> {
        let mut value = 0.0;
        let mut grad = Vector::zeros(self.dim());
        for (f, g) in self.outer.iter().zip(&self.inner) {
            let e = g.exact(x)?;
            value += f.value(e.value);
            grad.axpy(f.deriv(e.value), &e.grad, 1.0);
        }
        let n = self.n() as f64;
        Some(Evaluation::new(value / n, grad / n))
    }
}

#[derive(Debug, Clone)]
pub enum Objective {
    Plain(Arc<dyn Oracle>),
    Fcco(FccoObjective),
}

impl Objective {
    pub fn dim(&self) -> usize {
        match self {
            Objective::Plain(o) => o.dim(),
            Objective::Fcco(f) => f.dim(),
        }
    }

    pub fn exact(&self, x: &Vector) -> Option<Evaluation> {
        match self {
            Objective::Plain(o) => o.exact(x),
            Objective::Fcco(f) => f.exact(x),
        }
    }

    pub fn has_exact(&self) -> bool {
        match self {
            Objective::Plain(o) => o.has_exact(),
            Objective::Fcco(f) => f.has_exact(),
        }
    }
}

/// Constants of the FCCO objective, recorded on the box region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FccoConstants {
    pub lipschitz_outer: f64,
    pub lipschitz_inner: f64,
    pub noise_inner: f64,
    /// ρ_f (condition i) or L_∇f (condition ii).
    pub curvature_outer: f64,
    /// ρ_g (condition i) or L_∇g (condition ii).
    pub curvature_inner: f64,
}

/// Weak-convexity, Lipschitz and noise constants, valid on the box
/// ‖x‖_∞ ≤ `region_radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConstants {
    pub rho_objective: f64,
    pub rho_constraints: f64,
    pub lipschitz_objective: f64,
    pub lipschitz_constraints: f64,
    pub region_radius: f64,
    pub noise_objective: f64,
    pub noise_constraints: f64,
    /// δ of the penalty regularity condition, when known analytically.
    pub regularity_delta: Option<f64>,
    pub fcco: Option<FccoConstants>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnownSolution {
    pub point: Vector,
    pub multipliers: Vec<f64>,
}

/// Objective, m constraints, and metadata.
#[derive(Debug, Clone)]
pub struct ConstrainedProblem {
    pub name: String,
    pub objective: Objective,
    pub constraints: Vec<Constraint>,
    pub constants: ProblemConstants,
    pub initial_point: Vector,
    pub known_solution: Option<KnownSolution>,
    pub spec: Option<InstanceSpec>,
}

/// Noise-free values and one subgradient per function.
#[derive(Debug, Clone, PartialEq)]
pub struct FullEvaluation {
    pub objective: f64,
    pub constraints: Vec<f64>,
    pub objective_grad: Vector,
    /// m × dim, row k is the chosen subgradient of h_k.
    pub jacobian: Matrix,
}

impl FullEvaluation {
    pub fn max_violation(&self) -> f64 {
        self.constraints.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl ConstrainedProblem {
    pub fn new(
        name: impl Into<String>,
        objective: Objective,
        constraints: Vec<Constraint>,
        constants: ProblemConstants,
        initial_point: Vector,
    ) -> Result<Self> {
        if constraints.is_empty() {
            return Err(Error::invalid("constraints", "at least one constraint is required"));
        }
        let dim = objective.dim();
        for c in &constraints {
            for j in 0..c.arity() {
                check_dim(dim, &Vector::zeros(c.tracked_oracle(j).dim()))?;
            }
        }
        check_dim(dim, &initial_point)?;
        Ok(Self {
            name: name.into(),
            objective,
            constraints,
            constants,
            initial_point,
            known_solution: None,
            spec: None,
        })
    }

    pub fn with_known_solution(mut self, point: Vector, multipliers: Vec<f64>) -> Self {
        self.known_solution = Some(KnownSolution { point, multipliers });
        self
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn m(&self) -> usize {
        self.constraints.len()
    }

    /// Total number of scalar quantities tracked for the constraints.
    pub fn tracked_constraint_count(&self) -> usize {
        self.constraints.iter().map(Constraint::arity).sum()
    }

    pub fn has_exact(&self) -> bool {
        self.objective.has_exact() && self.constraints.iter().all(Constraint::has_exact)
    }

    fn missing(&self) -> Error {
        Error::MissingExactEvaluator(self.name.clone())
    }

    pub fn exact_objective(&self, x: &Vector) -> Result<Evaluation> {
        check_dim(self.dim(), x)?;
        self.objective.exact(x).ok_or_else(|| self.missing())
    }

    pub fn exact_constraint(&self, k: usize, x: &Vector) -> Result<Evaluation> {
        check_dim(self.dim(), x)?;
        self.constraints[k].exact(x).ok_or_else(|| self.missing())
    }

    pub fn exact_constraints(&self, x: &Vector) -> Result<Vec<Evaluation>> {
        (0..self.m()).map(|k| self.exact_constraint(k, x)).collect()
    }

    /// Maximum exact constraint value.
    pub fn max_violation(&self, x: &Vector) -> Result<f64> {
        Ok(self
            .exact_constraints(x)?
            .iter()
            .map(|e| e.value)
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

/// Deterministic F, h, ∂F and constraint Jacobian at `x`.
pub fn exact_full_eval(problem: &ConstrainedProblem, x: &Vector) -> Result<FullEvaluation> {
    let f = problem.exact_objective(x)?;
    let hs = problem.exact_constraints(x)?;
    let mut jacobian = Matrix::zeros(problem.m(), problem.dim());
    for (k, h) in hs.iter().enumerate() {
        jacobian.set_row(k, &h.grad.transpose());
    }
    Ok(FullEvaluation {
        objective: f.value,
        constraints: hs.iter().map(|h| h.value).collect(),
        objective_grad: f.grad,
        jacobian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream::Role;
    use crate::vector;

    #[test]
    fn exemplar_constraint_at_two() {
        let p = make_exemplar_1d(0.0);
        let Constraint::Plain(h) = &p.constraints[0] else {
            panic!()
        };
        for b in [1, 7] {
            let e = eval(h.as_ref(), &vector(&[2.0]), b, StreamKey::new(0, Role::Ad, 0, 0)).unwrap();
            assert_eq!(e.value, 2.0);
            assert_eq!(e.grad[0], 4.0);
        }
    }

    #[test]
    fn noise_free_known_solution_is_exact() {
        let p = make_exemplar_1d(0.0);
        let ks = p.known_solution.clone().unwrap();
        let Constraint::Plain(h) = &p.constraints[0] else {
            panic!()
        };
        let stoch = eval(h.as_ref(), &ks.point, 3, StreamKey::new(1, Role::Ad, 0, 0)).unwrap();
        assert_eq!(stoch, h.exact(&ks.point).unwrap());
    }

    #[test]
    fn noisy_batch_mean_concentrates() {
        let p = make_exemplar_1d(0.1);
        let Constraint::Plain(h) = &p.constraints[0] else {
            panic!()
        };
        let x = vector(&[2.0]);
        let draws = 100;
        let mean: f64 = (0..draws)
            .map(|i| {
                eval(h.as_ref(), &x, 10_000, StreamKey::new(5, Role::Ad, 0, i))
                    .unwrap()
                    .value
            })
            .sum::<f64>()
            / draws as f64;
        assert!((mean - 2.0).abs() <= 3.0 * 0.1 / 100.0, "mean {mean}");
    }

    #[test]
    fn eval_errors() {
        let p = make_exemplar_1d(0.0);
        let Constraint::Plain(h) = &p.constraints[0] else {
            panic!()
        };
        let key = StreamKey::new(0, Role::Ad, 0, 0);
        assert!(matches!(
            eval(h.as_ref(), &vector(&[1.0, 2.0]), 1, key),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        ));
        assert!(matches!(
            eval(h.as_ref(), &vector(&[1.0]), 0, key),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn full_eval_exemplar() {
        let p = make_exemplar_1d(0.0);
        let s2 = 2f64.sqrt();
        let fe = exact_full_eval(&p, &vector(&[-s2])).unwrap();
        assert_eq!(fe.objective, -s2);
        assert!(fe.constraints[0].abs() < 1e-15);
        assert_eq!(fe.objective_grad[0], 1.0);
        assert!((fe.jacobian[(0, 0)] + 2.0 * s2).abs() < 1e-15);

        let fe = exact_full_eval(&p, &vector(&[0.0])).unwrap();
        assert_eq!(fe.constraints[0], 0.0);
        assert_eq!(fe.jacobian[(0, 0)], 0.0);

        // |u| at u = 0 takes subgradient 0
        let fe = exact_full_eval(&p, &vector(&[1.0])).unwrap();
        assert_eq!(fe.constraints[0], -1.0);
        assert_eq!(fe.jacobian[(0, 0)], 0.0);
    }

    #[test]
    fn missing_exact_is_an_error() {
        #[derive(Debug)]
        struct Blind;
        impl Oracle for Blind {
            fn dim(&self) -> usize {
                1
            }
            fn noise_level(&self) -> f64 {
                0.0
            }
            fn sample(&self, x: &Vector, _: SampleId) -> Evaluation {
                Evaluation::new(x[0], vector(&[1.0]))
            }
            fn exact(&self, _: &Vector) -> Option<Evaluation> {
                None
            }
            fn has_exact(&self) -> bool {
                false
            }
        }
        let base = make_exemplar_1d(0.0);
        let p = ConstrainedProblem::new(
            "blind",
            Objective::Plain(Arc::new(Blind)),
            base.constraints.clone(),
            base.constants,
            vector(&[0.0]),
        )
        .unwrap();
        assert!(!p.has_exact());
        assert!(matches!(
            exact_full_eval(&p, &vector(&[0.0])),
            Err(Error::MissingExactEvaluator(_))
        ));
    }

    #[test]
    fn fcco_tagging() {
        let g: Arc<dyn Oracle> = Arc::new(NoisyOracle::new("g", 1, 0.0, |x: &Vector| {
            Evaluation::new(x[0], vector(&[1.0]))
        }));
        let ok = FccoObjective::new(
            vec![OuterFunction::of(OuterKind::Softplus); 2],
            vec![g.clone(), g.clone()],
        )
        .unwrap();
        assert_eq!(ok.condition, FccoCondition::Monotone);
        let e = ok.exact(&vector(&[0.0])).unwrap();
        assert!((e.value - 2f64.ln()).abs() < 1e-15);
        assert_eq!(e.grad[0], 0.5);

        let smooth = FccoObjective::new(
            vec![
                OuterFunction::of(OuterKind::Softplus),
                OuterFunction::of(OuterKind::Square),
            ],
            vec![g.clone(), g.clone()],
        )
        .unwrap();
        assert_eq!(smooth.condition, FccoCondition::Smooth);

        let hinge_like = OuterFunction {
            kind: OuterKind::Identity,
            monotone: true,
            smooth: false,
        };
        let err = FccoObjective::new(
            vec![hinge_like, OuterFunction::of(OuterKind::Square)],
            vec![g.clone(), g],
        );
        assert!(matches!(err, Err(Error::MixedOuterTagging { index: 0, .. })));
    }
}
