//! Stochastic gradient estimators G₁ (objective) and G₂ (penalty).
//!
//! Every mini-batch is drawn once, evaluated at both x_t and x_{t−1}, and the
//! pair is handed to the tracker update.

use crate::estimator::{MsvrState, TrackedDraw};
use crate::oracles::{
    eval_batch, sign, ConstrainedProblem, Constraint, FccoCondition, FccoObjective, NestedAbsHingeConstraint, Oracle,
};
use crate::penalty::PenaltyKind;
use crate::stream::{sample_block, Batch, Role, StreamKey};
use crate::{Error, Result, Vector};

/// Offsets of each constraint's tracked quantities in the tracker vector.
pub fn tracked_offsets(problem: &ConstrainedProblem) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(problem.m());
    let mut next = 0;
    for c in &problem.constraints {
        offsets.push(next);
        next += c.arity();
    }
    offsets
}

/// Batches drawn for one group of tracked quantities at one iteration.
#[derive(Debug, Clone, Default)]
pub struct TrackedBatches {
    /// Sampled outer indices (constraints or inner functions).
    pub block: Vec<usize>,
    pub current: Vec<TrackedDraw>,
    pub previous: Vec<TrackedDraw>,
    /// Mini-batch subgradient at x_t, aligned with `current`.
    pub grads: Vec<Vector>,
    pub keys: Vec<StreamKey>,
}

fn draw_tracked(
    oracle: &dyn Oracle,
    index: usize,
    key: StreamKey,
    batch_size: usize,
    x_t: &Vector,
    x_prev: &Vector,
    out: &mut TrackedBatches,
) -> Result<()> {
    let batch = Batch::draw(key, batch_size);
    let now = eval_batch(oracle, x_t, &batch)?;
    let before = if x_prev == x_t {
        now.value
    } else {
        eval_batch(oracle, x_prev, &batch)?.value
    };
    out.current.push(TrackedDraw {
        index,
        key,
        value: now.value,
    });
    out.previous.push(TrackedDraw {
        index,
        key,
        value: before,
    });
    out.grads.push(now.grad);
    out.keys.push(key);
    Ok(())
}

/// Samples B_c and one batch B_{2,k} per tracked quantity of each sampled
/// constraint, evaluated at x_t and at the tracker's previous point.
pub fn draw_constraint_batches(
    problem: &ConstrainedProblem,
    tracker: &MsvrState,
    x_t: &Vector,
    block_size: usize,
    batch_size: usize,
    seed: u64,
    t: u64,
) -> Result<TrackedBatches> {
    let m = problem.m();
    if block_size > m {
        return Err(Error::BlockTooLarge {
            block: block_size,
            total: m,
        });
    }
    if block_size == 0 || batch_size == 0 {
        return Err(Error::EmptyBatch);
    }
    let offsets = tracked_offsets(problem);
    let mut out = TrackedBatches {
        block: sample_block(StreamKey::new(seed, Role::ConstraintBlock, 0, t), m, block_size),
        ..Default::default()
    };
    if block_size < m {
        out.keys.push(StreamKey::new(seed, Role::ConstraintBlock, 0, t));
    }
    for &k in &out.block.clone() {
        let c = &problem.constraints[k];
        for j in 0..c.arity() {
            let q = offsets[k] + j;
            let key = StreamKey::new(seed, Role::Constraint, q as u64, t);
            draw_tracked(
                c.tracked_oracle(j).as_ref(),
                q,
                key,
                batch_size,
                x_t,
                tracker.prev_point(),
                &mut out,
            )?;
        }
    }
    Ok(out)
}

/// Chain rule through |u₁ − u₂| − κ: p′(|u₁−u₂|−κ)·sign(u₁−u₂)·(∇₁ − ∇₂).
pub fn nested_constraint_grad(
    constraint: &NestedAbsHingeConstraint,
    u1: f64,
    u2: f64,
    grad1: &Vector,
    grad2: &Vector,
    kind: PenaltyKind,
) -> Vector {
    let factor = kind.deriv(constraint.value_from(u1, u2)) * sign(u1 - u2);
    if factor == 0.0 {
        return Vector::zeros(grad1.len());
    }
    (grad1 - grad2) * factor
}

/// G₂ = (β/|B_c|) Σ_{k∈B_c} p′(ĥ_k(u)) ∂h_k(x_t; B_{2,k}), with ĥ_k the
/// constraint estimate composed from the tracked values `u`.
pub fn penalty_grad_from(
    problem: &ConstrainedProblem,
    batches: &TrackedBatches,
    u: &[f64],
    beta: f64,
    kind: PenaltyKind,
) -> Vector {
    let mut g = Vector::zeros(problem.dim());
    if batches.block.is_empty() || beta == 0.0 {
        return g;
    }
    let offsets = tracked_offsets(problem);
    let mut cursor = 0;
    for &k in &batches.block {
        let q = offsets[k];
        match &problem.constraints[k] {
            Constraint::Plain(_) => {
                let xi = kind.deriv(u[q]);
                if xi != 0.0 {
                    g.axpy(xi, &batches.grads[cursor], 1.0);
                }
                cursor += 1;
            }
            Constraint::NestedAbs(c) => {
                g += nested_constraint_grad(
                    c,
                    u[q],
                    u[q + 1],
                    &batches.grads[cursor],
                    &batches.grads[cursor + 1],
                    kind,
                );
                cursor += 2;
            }
        }
    }
    g * (beta / batches.block.len() as f64)
}

/// Draws the constraint batches and forms G₂ on the tracker's current values.
#[allow(clippy::too_many_arguments)]
pub fn penalty_grad_estimate(
    problem: &ConstrainedProblem,
    tracker: &MsvrState,
    x_t: &Vector,
    beta: f64,
    kind: PenaltyKind,
    block_size: usize,
    batch_size: usize,
    seed: u64,
    t: u64,
) -> Result<(Vector, TrackedBatches)> {
    let batches = draw_constraint_batches(problem, tracker, x_t, block_size, batch_size, seed, t)?;
    let g = penalty_grad_from(problem, &batches, tracker.values(), beta, kind);
    Ok((g, batches))
}

/// G₁ = (1/|B|) Σ_ζ ∂f(x_t; ζ) for a plain objective.
pub fn objective_grad_setting1(
    objective: &dyn Oracle,
    x_t: &Vector,
    batch_size: usize,
    seed: u64,
    t: u64,
) -> Result<(Vector, StreamKey)> {
    if batch_size == 0 {
        return Err(Error::EmptyBatch);
    }
    let key = StreamKey::new(seed, Role::Objective, 0, t);
    Ok((eval_batch(objective, x_t, &Batch::draw(key, batch_size))?.grad, key))
}

/// Samples the outer block B and one inner batch B_{1,i} per sampled index.
#[allow(clippy::too_many_arguments)]
pub fn draw_inner_batches(
    fcco: &FccoObjective,
    tracker: &MsvrState,
    x_t: &Vector,
    block_size: usize,
    batch_size: usize,
    seed: u64,
    t: u64,
) -> Result<TrackedBatches> {
    let n = fcco.n();
    if block_size > n {
        return Err(Error::BlockTooLarge {
            block: block_size,
            total: n,
        });
    }
    if block_size == 0 || batch_size == 0 {
        return Err(Error::EmptyBatch);
    }
    let block_key = StreamKey::new(seed, Role::OuterBlock, 0, t);
    let mut out = TrackedBatches {
        block: sample_block(block_key, n, block_size),
        ..Default::default()
    };
    if block_size < n {
        out.keys.push(block_key);
    }
    for &i in &out.block.clone() {
        let key = StreamKey::new(seed, Role::Inner, i as u64, t);
        draw_tracked(
            fcco.inner[i].as_ref(),
            i,
            key,
            batch_size,
            x_t,
            tracker.prev_point(),
            &mut out,
        )?;
    }
    Ok(out)
}

/// G₁ = (1/|B|) Σ_{i∈B} ∂g_i(x_t; B_{1,i}) f_i′(u_i).
pub fn objective_grad_from(fcco: &FccoObjective, batches: &TrackedBatches, u: &[f64]) -> Result<Vector> {
    let mut g = Vector::zeros(fcco.dim());
    for (pos, &i) in batches.block.iter().enumerate() {
        let slope = fcco.outer[i].deriv(u[i]);
        if fcco.condition == FccoCondition::Monotone && slope < 0.0 {
            return Err(Error::MonotonicityViolated {
                index: i,
                slope,
                at: u[i],
            });
        }
        g.axpy(slope, &batches.grads[pos], 1.0);
    }
    Ok(g / batches.block.len() as f64)
}

/// Draws inner batches and forms G₁ on the tracker's current values.
#[allow(clippy::too_many_arguments)]
pub fn objective_grad_setting2(
    fcco: &FccoObjective,
    tracker: &MsvrState,
    x_t: &Vector,
    block_size: usize,
    batch_size: usize,
    seed: u64,
    t: u64,
) -> Result<(Vector, TrackedBatches)> {
    let batches = draw_inner_batches(fcco, tracker, x_t, block_size, batch_size, seed, t)?;
    let g = objective_grad_from(fcco, &batches, tracker.values())?;
    Ok((g, batches))
}
