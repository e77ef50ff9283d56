//! Proximal point of the penalised objective and the Moreau envelope.

use serde::{Deserialize, Serialize};

use crate::oracles::exact_full_eval;
use crate::penalty::{PenaltyKind, PenaltyObjective};
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProxControls {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Target bound on subproblem suboptimality.
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_iterations() -> usize {
    10_000
}

fn default_tol() -> f64 {
    1e-6
}

impl Default for ProxControls {
    fn default() -> Self {
        Self {
            iterations: default_iterations(),
            tol: default_tol(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProxResult {
    pub point: Vector,
    /// Subproblem value Φ(x̄) + ‖x̄ − x‖²/(2θ), i.e. the Moreau envelope.
    pub value: f64,
    /// ‖g‖²/(2μ) for the smallest subgradient g found at x̄.
    pub suboptimality_bound: f64,
    pub converged: bool,
    pub iterations: usize,
}

const CHECK_EVERY: usize = 250;
const SNAP: f64 = 1e-2;
const KINK_TOL: f64 = 1e-10;
const POLISH_STEPS: usize = 60;

struct Subproblem<'a, 'p> {
    phi: &'a PenaltyObjective<'p>,
    x: &'a Vector,
    theta: f64,
    mu: f64,
}

impl Subproblem<'_, '_> {
    fn eval(&self, y: &Vector) -> Result<(f64, Vector)> {
        let e = self.phi.evaluate_exact(y)?;
        let d = y - self.x;
        Ok((
            e.value + d.norm_squared() / (2.0 * self.theta),
            e.subgrad + d / self.theta,
        ))
    }

    fn value(&self, y: &Vector) -> Result<f64> {
        Ok(self.phi.value_exact(y)? + (y - self.x).norm_squared() / (2.0 * self.theta))
    }

    /// Smallest subgradient over hinge kinks at y and the bound it certifies.
    fn certificate(&self, y: &Vector) -> Result<(Vector, f64)> {
        let g = self
            .phi
            .min_norm_subgrad_shifted(y, KINK_TOL, &((y - self.x) / self.theta))?;
        let b = g.norm_squared() / (2.0 * self.mu);
        Ok((g, b))
    }

    /// Gauss–Newton projection onto {h_k = 0, k ∈ set}.
    fn project(&self, y: &Vector, set: &[usize]) -> Result<Vector> {
        let mut z = y.clone();
        for _ in 0..30 {
            let fe = exact_full_eval(self.phi.problem, &z)?;
            let h = Vector::from_iterator(set.len(), set.iter().map(|&k| fe.constraints[k]));
            if h.amax() <= 1e-14 {
                break;
            }
            let j = Matrix::from_fn(set.len(), z.len(), |r, c| fe.jacobian[(set[r], c)]);
            let Ok(pinv) = (&j * j.transpose()).pseudo_inverse(1e-12) else {
                break;
            };
            let step = j.transpose() * (pinv * h);
            if !step.iter().all(|v| v.is_finite()) || step.norm() > 10.0 * SNAP {
                return Ok(y.clone());
            }
            z -= step;
        }
        Ok(z)
    }

    /// Moves a rough minimiser onto nearby hinge kinks and descends along
    /// them (plain descent where there are none), returning the point with the best certificate.
    fn polish(&self, start: &Vector) -> Result<(Vector, f64)> {
        let (_, b0) = self.certificate(start)?;
        let mut best = (start.clone(), b0);
        let kinks = self.phi.kind == PenaltyKind::Hinge && self.phi.beta > 0.0;
        let mut released = vec![!kinks; self.phi.problem.m()];
        let mut y = start.clone();
        for _ in 0..POLISH_STEPS {
            let fe = exact_full_eval(self.phi.problem, &y)?;
            let set: Vec<usize> = (0..fe.constraints.len())
                .filter(|&k| !released[k] && fe.constraints[k].abs() <= SNAP)
                .collect();
            let z = if set.is_empty() {
                y.clone()
            } else {
                self.project(&y, &set)?
            };
            let (g, b) = self.certificate(&z)?;
            if b < best.1 {
                best = (z.clone(), b);
            }
            if b <= f64::EPSILON {
                break;
            }
            // constraints whose multiplier sits at a bound leave the kink set
            let fz = exact_full_eval(self.phi.problem, &z)?;
            let scale = self.phi.beta / self.phi.problem.m() as f64;
            let gd = -&g;
            for &k in &set {
                let slope = fz.jacobian.row(k).transpose().dot(&gd) * scale;
                if fz.constraints[k].abs() > KINK_TOL || slope.abs() > 1e-9 * (1.0 + g.norm()) {
                    released[k] = true;
                }
            }
            let v0 = self.value(&z)?;
            let gn2 = g.norm_squared();
            let mut alpha = self.theta;
            let mut next = None;
            for _ in 0..40 {
                let cand = &z - &g * alpha;
                if self.value(&cand)? <= v0 - 0.25 * alpha * gn2 {
                    next = Some(cand);
                    break;
                }
                alpha *= 0.5;
            }
            match next {
                Some(n) => y = n,
                None => break,
            }
        }
        Ok(best)
    }
}

/// argmin_y Φ(y) + ‖y − x‖²/(2θ), by weighted-average subgradient descent on
/// the (1/θ − C)-strongly convex subproblem followed by a kink polish.
pub fn prox_solve(phi: &PenaltyObjective, x: &Vector, theta: f64, controls: &ProxControls) -> Result<ProxResult> {
    let c = phi.derived_constants().weak_convexity;
    if !(theta > 0.0) {
        return Err(Error::invalid("theta", "must be positive"));
    }
    if c > 0.0 && theta >= 1.0 / c {
        return Err(Error::ThetaTooLarge { theta, limit: 1.0 / c });
    }
    let sub = Subproblem {
        phi,
        x,
        theta,
        mu: 1.0 / theta - c,
    };
    let mut y = x.clone();
    let mut avg = Vector::zeros(x.len());
    let mut weight = 0.0;
    let mut best_iterate = (f64::INFINITY, x.clone());
    let mut best = (x.clone(), f64::INFINITY);
    let mut done = 0;
    for j in 0..controls.iterations {
        let (v, s) = sub.eval(&y)?;
        if v < best_iterate.0 {
            best_iterate = (v, y.clone());
        }
        let w = (j + 1) as f64;
        avg.axpy(w, &y, 1.0);
        weight += w;
        y.axpy(-2.0 / (sub.mu * (j + 2) as f64), &s, 1.0);
        done = j + 1;
        if done % CHECK_EVERY == 0 || done == controls.iterations {
            let mean = &avg / weight;
            for cand in [&mean, &best_iterate.1] {
                let polished = sub.polish(cand)?;
                if polished.1 < best.1 {
                    best = polished;
                }
            }
            if best.1 <= controls.tol {
                break;
            }
        }
    }
    if controls.iterations == 0 {
        best = sub.polish(x)?;
    }
    let value = sub.value(&best.0)?;
    Ok(ProxResult {
        point: best.0,
        value,
        suboptimality_bound: best.1,
        converged: best.1 <= controls.tol,
        iterations: done,
    })
}

/// ∇Φ_θ(x) = (x − prox_θΦ(x))/θ, with the prox result.
pub fn moreau_grad(
    phi: &PenaltyObjective,
    x: &Vector,
    theta: f64,
    controls: &ProxControls,
) -> Result<(Vector, ProxResult)> {
    let prox = prox_solve(phi, x, theta, controls)?;
    Ok(((x - &prox.point) / theta, prox))
}

/// Φ_θ(x).
pub fn moreau_envelope(phi: &PenaltyObjective, x: &Vector, theta: f64, controls: &ProxControls) -> Result<f64> {
    Ok(prox_solve(phi, x, theta, controls)?.value)
}
