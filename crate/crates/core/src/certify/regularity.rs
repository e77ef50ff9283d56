//! Constraint-qualification diagnostics on exact evaluators.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::oracles::{exact_full_eval, ConstrainedProblem};
use crate::{Error, Matrix, Result, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrvpReport {
    pub violating: Vec<usize>,
    /// Smallest singular value of the violating rows of the Jacobian.
    pub sigma_min: Option<f64>,
    /// σ_min / m.
    pub delta: Option<f64>,
    /// σ_min fell below the configured floor.
    pub below_floor: bool,
}

/// Full-rank check of the Jacobian rows of violated constraints at `x`, via
/// the eigenvalues of the Gram matrix J Jᵀ.
pub fn frvp_min_singular(problem: &ConstrainedProblem, x: &Vector, floor: f64) -> Result<FrvpReport> {
    let fe = exact_full_eval(problem, x)?;
    let violating: Vec<usize> = (0..problem.m()).filter(|&k| fe.constraints[k] > 0.0).collect();
    if violating.is_empty() {
        return Ok(FrvpReport {
            violating,
            sigma_min: None,
            delta: None,
            below_floor: false,
        });
    }
    let j = Matrix::from_fn(violating.len(), problem.dim(), |r, c| fe.jacobian[(violating[r], c)]);
    let gram = &j * j.transpose();
    let lambda_min = SymmetricEigen::new(gram).eigenvalues.min().max(0.0);
    let sigma = lambda_min.sqrt();
    Ok(FrvpReport {
        violating,
        sigma_min: Some(sigma),
        delta: Some(sigma / problem.m() as f64),
        below_floor: sigma < floor,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlEstimate {
    /// Depth ĉ = −min h over the grid.
    pub c: f64,
    /// min over violating points of ‖∂h‖²/(2(h − min h)); `None` when no
    /// grid point violates the constraint.
    pub mu: Option<f64>,
    /// √(2μ̂ĉ).
    pub delta: Option<f64>,
    /// No violating grid points: the condition holds trivially.
    pub vacuous: bool,
    /// ĉ ≤ 0: the constraint is never strictly satisfied on the grid.
    pub depth_flagged: bool,
}

/// Empirical PL constant and depth of a single constraint over sample points.
pub fn pl_regularity_estimate(problem: &ConstrainedProblem, points: &[Vector]) -> Result<PlEstimate> {
    if problem.m() != 1 {
        return Err(Error::invalid(
            "problem",
            format!("needs exactly one constraint, has {}", problem.m()),
        ));
    }
    if points.is_empty() {
        return Err(Error::invalid("points", "sample grid is empty"));
    }
    let evals = points
        .iter()
        .map(|x| problem.exact_constraint(0, x))
        .collect::<Result<Vec<_>>>()?;
    let h_min = evals.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let c = -h_min;
    let mu = evals
        .iter()
        .filter(|e| e.value > 0.0)
        .map(|e| e.grad.norm_squared() / (2.0 * (e.value - h_min)))
        .reduce(f64::min);
    let delta = match mu {
        Some(mu) if c > 0.0 => Some((2.0 * mu * c).sqrt()),
        _ => None,
    };
    Ok(PlEstimate {
        c,
        mu,
        delta,
        vacuous: mu.is_none(),
        depth_flagged: !(c > 0.0),
    })
}

/// Points lo, lo + step, …, hi (inclusive up to rounding).
pub fn grid_1d(lo: f64, hi: f64, step: f64) -> Vec<Vector> {
    assert!(step > 0.0 && hi >= lo);
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|i| Vector::from_element(1, lo + i as f64 * step)).collect()
}

/// Tensor grid with `per_axis` points on [−r, r] in each of `dim` axes.
pub fn grid_box(dim: usize, r: f64, per_axis: usize) -> Vec<Vector> {
    assert!(per_axis >= 2);
    let step = 2.0 * r / (per_axis - 1) as f64;
    let total = per_axis.pow(dim as u32);
    (0..total)
        .map(|mut idx| {
            Vector::from_fn(dim, |_, _| {
                let i = idx % per_axis;
                idx /= per_axis;
                -r + i as f64 * step
            })
        })
        .collect()
}
