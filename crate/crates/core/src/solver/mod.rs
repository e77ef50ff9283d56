//! Single-loop penalty solvers for plain (Setting I) and compositional
//! (Setting II) objectives.
//!
//! Each iteration draws its mini-batches once, forms the objective and
//! penalty gradient estimates from the tracked values, updates the MSVR
//! trackers on the same batches and takes a plain subgradient step.

mod config;
mod estimators;
mod record;
mod schedule;

use std::time::Instant;

use rand::Rng;

pub use config::{Milestone, OutputRule, SolverConfig, TrackerOrder};
pub use estimators::{
    draw_constraint_batches, draw_inner_batches, nested_constraint_grad, objective_grad_from, objective_grad_setting1,
    objective_grad_setting2, penalty_grad_estimate, penalty_grad_from, tracked_offsets, TrackedBatches,
};
pub use record::{
    read_trajectory_csv, write_trajectory_csv, OutputIterate, RunResult, RunStatus, TrajectoryRecord,
    RUN_SCHEMA_VERSION,
};
pub use schedule::{schedule_from_theorem, Schedule, ScheduleBatches, ScheduleMultipliers, ScheduleSetting};

use crate::certify::{moreau_grad, ProxControls};
use crate::estimator::{MsvrState, TrackingError};
use crate::oracles::{eval_batch, ConstrainedProblem, FccoObjective, InstanceDocument, Objective, Oracle};
use crate::penalty::{beta_lower_bound, PenaltyObjective};
use crate::stream::{Batch, Role, StreamKey, INIT_ITERATION};
use crate::{Error, Result, Vector};

/// Runs the plain or the compositional solver depending on the objective type.
pub fn solve(problem: &ConstrainedProblem, config: &SolverConfig) -> Result<RunResult> {
    match &problem.objective {
        Objective::Plain(_) => solve_setting1(problem, config),
        Objective::Fcco(_) => solve_setting2(problem, config),
    }
}

pub fn solve_setting1(problem: &ConstrainedProblem, config: &SolverConfig) -> Result<RunResult> {
    let Objective::Plain(f) = &problem.objective else {
        return Err(Error::invalid("objective", "Setting I needs a plain objective"));
    };
    Runner::new(problem, config, Part::Plain(f.as_ref()))?.run()
}

pub fn solve_setting2(problem: &ConstrainedProblem, config: &SolverConfig) -> Result<RunResult> {
    let Objective::Fcco(f) = &problem.objective else {
        return Err(Error::invalid(
            "objective",
            "Setting II needs a compositional objective",
        ));
    };
    if config.batch_objective > f.n() {
        return Err(Error::BlockTooLarge {
            block: config.batch_objective,
            total: f.n(),
        });
    }
    Runner::new(problem, config, Part::Fcco(f))?.run()
}

enum Part<'a> {
    Plain(&'a dyn Oracle),
    Fcco(&'a FccoObjective),
}

struct Runner<'a> {
    problem: &'a ConstrainedProblem,
    config: &'a SolverConfig,
    objective: Part<'a>,
    phi: Option<PenaltyObjective<'a>>,
    constraints: MsvrState,
    inner: Option<MsvrState>,
    draws: Vec<StreamKey>,
    warnings: Vec<String>,
}

fn init_draw(oracle: &dyn Oracle, key: StreamKey, batch: usize, x: &Vector) -> Result<f64> {
    Ok(eval_batch(oracle, x, &Batch::draw(key, batch))?.value)
}

/// Exact values of every tracked constraint quantity.
fn exact_tracked(problem: &ConstrainedProblem, x: &Vector) -> Option<Vec<f64>> {
    let mut out = Vec::with_capacity(problem.tracked_constraint_count());
    for c in &problem.constraints {
        for j in 0..c.arity() {
            out.push(c.tracked_oracle(j).exact(x)?.value);
        }
    }
    Some(out)
}

fn exact_inner(f: &FccoObjective, x: &Vector) -> Option<Vec<f64>> {
    f.inner.iter().map(|g| g.exact(x).map(|e| e.value)).collect()
}

impl<'a> Runner<'a> {
    fn new(problem: &'a ConstrainedProblem, config: &'a SolverConfig, objective: Part<'a>) -> Result<Self> {
        config.validate()?;
        let m = problem.m();
        let block = config.constraint_block(m);
        if block > m {
            return Err(Error::BlockTooLarge { block, total: m });
        }
        let x0 = &problem.initial_point;
        let seed = config.seed;
        let mut draws = Vec::new();

        let mut values = Vec::with_capacity(problem.tracked_constraint_count());
        let mut q = 0u64;
        for c in &problem.constraints {
            for j in 0..c.arity() {
                let key = StreamKey::new(seed, Role::Constraint, q, INIT_ITERATION);
                values.push(init_draw(
                    c.tracked_oracle(j).as_ref(),
                    key,
                    config.batch_constraint,
                    x0,
                )?);
                draws.push(key);
                q += 1;
            }
        }
        let tracked = values.len();
        let tracked_block = (block * tracked / m).max(1);
        let constraints = MsvrState::new(
            values,
            x0.clone(),
            config.gamma_constraints,
            config.gamma_prime_constraints,
            tracked_block,
            config.allow_large_gamma,
        )?;

        let inner = match &objective {
            Part::Plain(_) => None,
            Part::Fcco(f) => {
                let mut values = Vec::with_capacity(f.n());
                for (i, g) in f.inner.iter().enumerate() {
                    let key = StreamKey::new(seed, Role::Inner, i as u64, INIT_ITERATION);
                    values.push(init_draw(g.as_ref(), key, config.batch_inner, x0)?);
                    draws.push(key);
                }
                Some(MsvrState::new(
                    values,
                    x0.clone(),
                    config.gamma_inner,
                    config.gamma_prime_inner,
                    config.batch_objective,
                    config.allow_large_gamma,
                )?)
            }
        };

        let phi = if problem.has_exact() {
            Some(PenaltyObjective::new(problem, config.beta, config.penalty)?)
        } else {
            None
        };

        let mut warnings = Vec::new();
        if let Some(delta) = problem.constants.regularity_delta {
            let floor = beta_lower_bound(0.0, problem.constants.lipschitz_objective, delta)?;
            if config.beta <= floor {
                warnings.push(format!(
                    "beta = {} does not exceed L_F/delta = {floor}; the penalty may not be exact",
                    config.beta
                ));
            }
        }
        if constraints.gamma_prime_overridden() || inner.as_ref().is_some_and(|s| s.gamma_prime_overridden()) {
            warnings.push("gamma_prime override differs from the closed form".into());
        }
        for w in &warnings {
            log::warn!("{}: {w}", problem.name);
        }

        Ok(Self {
            problem,
            config,
            objective,
            phi,
            constraints,
            inner,
            draws,
            warnings,
        })
    }

    fn snapshot(&self, t: u64, x: &Vector, g1: Option<f64>, g2: Option<f64>) -> Result<TrajectoryRecord> {
        let mut rec = TrajectoryRecord {
            t,
            x: x.clone(),
            g1_norm: g1,
            g2_norm: g2,
            eta_t: self.config.eta_at(t),
            ..Default::default()
        };
        if let Some(phi) = &self.phi {
            let e = phi.evaluate_exact(x)?;
            rec.phi_exact = Some(e.value);
            rec.f_exact = Some(e.objective);
            rec.max_violation = e.constraints.iter().copied().reduce(f64::max);
            rec.constraints = e.constraints;
        }
        rec.tracker_constraints = exact_tracked(self.problem, x).map(|h| self.constraints.tracking_error(&h));
        if let (Part::Fcco(f), Some(inner)) = (&self.objective, &self.inner) {
            rec.tracker_inner = exact_inner(f, x).map(|g| inner.tracking_error(&g));
        }
        Ok(rec)
    }

    fn divergence(&self, x: &Vector) -> Option<String> {
        if !x.iter().all(|v| v.is_finite()) {
            return Some("non-finite iterate".into());
        }
        let r = self.problem.constants.region_radius;
        let norm = x.norm();
        (r > 0.0 && r.is_finite() && norm > 10.0 * r).then(|| format!("‖x‖ = {norm} exceeds 10·R = {}", 10.0 * r))
    }

    /// G₁ for iteration t, updating the inner tracker on the same batches.
    fn objective_step(&mut self, x: &Vector, t: u64) -> Result<Vector> {
        let c = self.config;
        match &self.objective {
            Part::Plain(f) => {
                let (g, key) = objective_grad_setting1(*f, x, c.batch_objective, c.seed, t)?;
                if c.record_draws {
                    self.draws.push(key);
                }
                Ok(g)
            }
            Part::Fcco(f) => {
                let inner = self.inner.as_mut().expect("compositional runs track inner values");
                let b = draw_inner_batches(f, inner, x, c.batch_objective, c.batch_inner, c.seed, t)?;
                let g = match c.tracker_order {
                    TrackerOrder::PreUpdate => {
                        let g = objective_grad_from(f, &b, inner.values())?;
                        inner.update(&b.current, &b.previous, x)?;
                        g
                    }
                    TrackerOrder::PostUpdate => {
                        inner.update(&b.current, &b.previous, x)?;
                        objective_grad_from(f, &b, inner.values())?
                    }
                };
                if c.record_draws {
                    self.draws.extend(&b.keys);
                }
                Ok(g)
            }
        }
    }

    /// G₂ for iteration t, updating the constraint tracker on the same batches.
    fn penalty_step(&mut self, x: &Vector, t: u64) -> Result<Vector> {
        let c = self.config;
        let p = self.problem;
        let b = draw_constraint_batches(
            p,
            &self.constraints,
            x,
            c.constraint_block(p.m()),
            c.batch_constraint,
            c.seed,
            t,
        )?;
        let g = match c.tracker_order {
            TrackerOrder::PreUpdate => {
                let g = penalty_grad_from(p, &b, self.constraints.values(), c.beta, c.penalty);
                self.constraints.update(&b.current, &b.previous, x)?;
                g
            }
            TrackerOrder::PostUpdate => {
                self.constraints.update(&b.current, &b.previous, x)?;
                penalty_grad_from(p, &b, self.constraints.values(), c.beta, c.penalty)
            }
        };
        if c.record_draws {
            self.draws.extend(&b.keys);
        }
        Ok(g)
    }

    fn run(mut self) -> Result<RunResult> {
        let started = Instant::now();
        let c = self.config;
        let stride = c.stride();
        let mut x = self.problem.initial_point.clone();
        let mut trajectory = Vec::new();
        let mut status = RunStatus::Completed;
        let mut done = 0;
        for t in 0..c.iterations {
            let g1 = self.objective_step(&x, t)?;
            let g2 = self.penalty_step(&x, t)?;
            if t % stride == 0 {
                trajectory.push(self.snapshot(t, &x, Some(g1.norm()), Some(g2.norm()))?);
            }
            let next = &x - (g1 + g2) * c.eta_at(t);
            if let Some(reason) = self.divergence(&next) {
                log::warn!("{}: run diverged at iteration {t}: {reason}", self.problem.name);
                if trajectory.last().is_none_or(|r| r.t != t) {
                    trajectory.push(self.snapshot(t, &x, None, None)?);
                }
                status = RunStatus::Diverged { iteration: t, reason };
                break;
            }
            x = next;
            done = t + 1;
        }
        if status == RunStatus::Completed {
            trajectory.push(self.snapshot(c.iterations, &x, None, None)?);
        }

        let idx = select_output(
            &trajectory,
            c.output_rule,
            c.seed,
            self.phi.as_ref(),
            &c.diagnostic_prox,
        )?;
        let output = OutputIterate {
            t: trajectory[idx].t,
            x: trajectory[idx].x.clone(),
        };
        let instance_hash = InstanceDocument::from_problem(self.problem).ok().map(|d| d.hash());
        Ok(RunResult {
            schema_version: RUN_SCHEMA_VERSION,
            status,
            setting: match self.objective {
                Part::Plain(_) => "I",
                Part::Fcco(_) => "II",
            }
            .into(),
            instance: self.problem.name.clone(),
            instance_hash,
            config: c.clone(),
            iterations_run: done,
            output,
            final_point: x,
            gamma_prime_constraints: self.constraints.gamma_prime(),
            gamma_prime_inner: self.inner.as_ref().map(MsvrState::gamma_prime),
            gamma_prime_overridden: self.constraints.gamma_prime_overridden()
                || self.inner.as_ref().is_some_and(MsvrState::gamma_prime_overridden),
            warnings: self.warnings,
            wall_time_secs: started.elapsed().as_secs_f64(),
            trajectory,
            draws: if c.record_draws { self.draws } else { Vec::new() },
        })
    }
}

/// ‖∇Φ_θ(x)‖ + [max_k h_k(x)]_+ at θ = 1/(2C).
pub fn diagnostic_value(phi: &PenaltyObjective, x: &Vector, controls: &ProxControls) -> Result<f64> {
    let theta = phi.derived_constants().theta_default;
    let (g, _) = moreau_grad(phi, x, theta, controls)?;
    Ok(g.norm() + phi.problem.max_violation(x)?.max(0.0))
}

/// Index of the output record. `UniformRandom` draws among records with
/// t ≥ 1 (all records when the run has none) from the output stream of
/// `seed`; `BestDiagnostic` needs exact evaluators.
pub fn select_output(
    records: &[TrajectoryRecord],
    rule: OutputRule,
    seed: u64,
    phi: Option<&PenaltyObjective>,
    controls: &ProxControls,
) -> Result<usize> {
    if records.is_empty() {
        return Err(Error::invalid("trajectory", "no records to select from"));
    }
    match rule {
        OutputRule::Final => Ok(records.len() - 1),
        OutputRule::UniformRandom => {
            let pool: Vec<usize> = (0..records.len()).filter(|&i| records[i].t >= 1).collect();
            let pool = if pool.is_empty() {
                (0..records.len()).collect()
            } else {
                pool
            };
            let mut rng = StreamKey::new(seed, Role::Output, 0, 0).rng();
            Ok(pool[rng.random_range(0..pool.len())])
        }
        OutputRule::BestDiagnostic => {
            let Some(phi) = phi else {
                return Err(Error::invalid("output_rule", "best_diagnostic needs exact evaluators"));
            };
            let mut best = (f64::INFINITY, 0);
            for (i, r) in records.iter().enumerate() {
                let v = diagnostic_value(phi, &r.x, controls)?;
                if v < best.0 {
                    best = (v, i);
                }
            }
            Ok(best.1)
        }
    }
}

/// Exact tracking error of every tracked constraint quantity, for callers
/// driving a tracker by hand.
pub fn constraint_tracking_error(problem: &ConstrainedProblem, tracker: &[f64], x: &Vector) -> Option<TrackingError> {
    exact_tracked(problem, x).map(|h| TrackingError::between(tracker, &h))
}

#[cfg(test)]
mod tests;
