use std::collections::HashSet;

use proptest::prelude::*;

use super::*;
use crate::oracles::{make_exemplar_1d, FccoCondition, FccoSpec};
use crate::penalty::PenaltyKind;
use crate::vector;

fn exemplar_config(beta: f64, eta: f64, iterations: u64, seed: u64) -> SolverConfig {
    SolverConfig::new(beta, eta, 0.1, iterations, seed)
}

#[test]
fn exemplar_noise_free_reaches_minimiser() {
    let p = make_exemplar_1d(0.0);
    let mut c = exemplar_config(4.0, 1e-3, 20_000, 0);
    c.output_rule = OutputRule::Final;
    let r = solve(&p, &c).unwrap();
    assert!(r.completed());
    let x = r.final_point[0];
    assert!((x + 2f64.sqrt()).abs() < 0.05, "x = {x}");
    assert!(p.max_violation(&r.final_point).unwrap() <= 1e-2);
    assert_eq!(r.output.t, 20_000);
    assert_eq!(r.setting, "I");
    assert!(r.instance_hash.is_some());
}

#[test]
fn zero_iterations_returns_start() {
    let p = make_exemplar_1d(0.1);
    for rule in [OutputRule::UniformRandom, OutputRule::Final, OutputRule::BestDiagnostic] {
        let mut c = exemplar_config(4.0, 1e-3, 0, 3);
        c.output_rule = rule;
        let r = solve(&p, &c).unwrap();
        assert_eq!(r.final_point, p.initial_point);
        assert_eq!(r.output.x, p.initial_point);
        assert_eq!(r.trajectory.len(), 1);
        assert_eq!(r.iterations_run, 0);
    }
}

#[test]
fn single_iteration_selects_t1_under_every_rule() {
    let p = make_exemplar_1d(0.1);
    for rule in [OutputRule::UniformRandom, OutputRule::Final, OutputRule::BestDiagnostic] {
        let mut c = exemplar_config(4.0, 1e-3, 1, 3);
        c.output_rule = rule;
        let r = solve(&p, &c).unwrap();
        assert_eq!(r.output.t, 1, "{rule:?}");
    }
}

#[test]
fn equal_seeds_are_bit_identical() {
    let p = make_exemplar_1d(0.2);
    let mut c = exemplar_config(4.0, 1e-3, 3000, 42);
    c.stride = Some(7);
    let a = solve(&p, &c).unwrap();
    let b = solve(&p, &c).unwrap();
    assert_eq!(a.trajectory, b.trajectory);
    assert_eq!(a.output, b.output);
    let mut buf_a = Vec::new();
    let mut buf_b = Vec::new();
    a.write_trajectory_csv(&mut buf_a).unwrap();
    b.write_trajectory_csv(&mut buf_b).unwrap();
    assert_eq!(buf_a, buf_b);
    c.seed = 43;
    let d = solve(&p, &c).unwrap();
    assert_ne!(a.trajectory, d.trajectory);
}

#[test]
fn strided_records_cover_endpoints() {
    let p = make_exemplar_1d(0.1);
    let mut c = exemplar_config(4.0, 1e-3, 1000, 1);
    c.stride = Some(300);
    let r = solve(&p, &c).unwrap();
    let ts: Vec<u64> = r.trajectory.iter().map(|r| r.t).collect();
    assert_eq!(ts, vec![0, 300, 600, 900, 1000]);
    assert_eq!(exemplar_config(1.0, 1.0, 500, 0).stride(), 1);
    assert_eq!(exemplar_config(1.0, 1.0, 100_000, 0).stride(), 100);
}

#[test]
fn descent_in_smooth_phase() {
    let p = make_exemplar_1d(0.0);
    let phi = PenaltyObjective::new(&p, 4.0, PenaltyKind::Hinge).unwrap();
    let eta = 1.0 / (2.0 * phi.derived_constants().weak_convexity * 5.0);
    let mut c = exemplar_config(4.0, eta, 2000, 0);
    c.stride = Some(1);
    let r = solve(&p, &c).unwrap();
    let target = -(2f64.sqrt()) + 0.01;
    let mut checked = 0;
    for w in r.trajectory.windows(2) {
        if w[1].x[0] < target {
            break;
        }
        assert!(
            w[1].phi_exact.unwrap() <= w[0].phi_exact.unwrap() + 1e-9,
            "t = {}",
            w[1].t
        );
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn inactive_constraints_do_not_move_iterates() {
    let mut p = make_exemplar_1d(0.05);
    p.initial_point = vector(&[1.0]);
    let base = exemplar_config(0.0, 1e-3, 500, 9);
    let plain = solve(&p, &base).unwrap();
    let penalised = solve(&p, &SolverConfig { beta: 4.0, ..base }).unwrap();
    let xs = |r: &RunResult| r.trajectory.iter().map(|r| r.x.clone()).collect::<Vec<_>>();
    assert_eq!(xs(&plain), xs(&penalised));
    assert!(penalised.trajectory.iter().all(|r| r.g2_norm.is_none_or(|g| g == 0.0)));
}

#[test]
fn divergence_is_reported() {
    let mut p = make_exemplar_1d(0.0);
    p.initial_point = vector(&[0.0]);
    let r = solve(&p, &exemplar_config(0.0, 1.0, 1000, 0)).unwrap();
    match &r.status {
        RunStatus::Diverged { iteration, .. } => assert_eq!(*iteration, 30),
        s => panic!("expected divergence, got {s:?}"),
    }
    assert!(r.final_point[0].abs() <= 30.0);
    assert!(r.trajectory.last().unwrap().x[0].is_finite());
}

#[test]
fn beta_below_floor_warns() {
    let p = make_exemplar_1d(0.0);
    let r = solve(&p, &exemplar_config(0.25, 1e-3, 10, 0)).unwrap();
    assert_eq!(r.warnings.len(), 1);
    let r = solve(&p, &exemplar_config(4.0, 1e-3, 10, 0)).unwrap();
    assert!(r.warnings.is_empty());
}

#[test]
fn invalid_configs_rejected() {
    let p = make_exemplar_1d(0.0);
    let mut c = exemplar_config(4.0, 1e-3, 10, 0);
    c.batch_constraint_block = Some(2);
    assert!(matches!(solve(&p, &c), Err(Error::BlockTooLarge { .. })));
    assert!(solve_setting2(&p, &exemplar_config(4.0, 1e-3, 10, 0)).is_err());
    assert!(solve(&p, &exemplar_config(4.0, 0.0, 10, 0)).is_err());
    assert!(solve(&p, &exemplar_config(4.0, 1e-3, 10, 0).with_gamma(0.8)).is_err());
}

impl SolverConfig {
    fn with_gamma(mut self, g: f64) -> Self {
        self.gamma_constraints = g;
        self
    }
}

fn draws_unique(r: &RunResult) {
    let mut seen = HashSet::new();
    for k in &r.draws {
        assert!(seen.insert(*k), "stream key drawn twice: {k:?}");
    }
}

#[test]
fn one_batch_per_draw_setting1() {
    let p = crate::oracles::QuadraticSpec::new(2, 5, 1).build().unwrap();
    let mut c = SolverConfig::new(5.0, 1e-3, 0.1, 200, 4);
    c.batch_constraint_block = Some(2);
    c.batch_constraint = 4;
    c.record_draws = true;
    let r = solve(&p, &c).unwrap();
    draws_unique(&r);
    // init draws + per iteration: objective, block, two constraint batches
    assert_eq!(r.draws.len(), 5 + 200 * 4);
}

fn monotone_toy(noise: f64, seed: u64) -> ConstrainedProblem {
    FccoSpec {
        noise_inner: noise,
        noise_constraints: noise,
        ..FccoSpec::new(2, 2, FccoCondition::Monotone, seed)
    }
    .build()
    .unwrap()
}

#[test]
fn one_batch_per_draw_setting2() {
    let p = monotone_toy(0.1, 2);
    let mut c = SolverConfig::new(5.0, 1e-3, 0.1, 100, 4);
    c.batch_objective = 1;
    c.record_draws = true;
    let r = solve(&p, &c).unwrap();
    draws_unique(&r);
    assert_eq!(r.setting, "II");
    assert!(r.gamma_prime_inner.is_some());
}

#[test]
fn setting2_noise_free_reaches_reference() {
    let p = monotone_toy(0.0, 5);
    let reference = p.known_solution.clone().unwrap().point;
    let mut c = SolverConfig::new(10.0, 2e-3, 0.5, 40_000, 0);
    c.batch_objective = 2;
    c.output_rule = OutputRule::Final;
    c.milestones = vec![
        Milestone {
            at: 20_000,
            factor: 0.1,
        },
        Milestone {
            at: 30_000,
            factor: 0.1,
        },
    ];
    let r = solve(&p, &c).unwrap();
    assert!(r.completed());
    let d = (&r.final_point - &reference).norm();
    assert!(d < 0.05, "distance {d}: {} vs {}", r.final_point, reference);
}

#[test]
fn post_update_order_runs() {
    let p = monotone_toy(0.1, 2);
    let mut c = SolverConfig::new(5.0, 1e-3, 0.1, 200, 4);
    let pre = solve(&p, &c).unwrap();
    c.tracker_order = TrackerOrder::PostUpdate;
    let post = solve(&p, &c).unwrap();
    assert!(post.completed());
    assert_ne!(pre.final_point, post.final_point);
}

#[test]
fn trajectory_csv_round_trip() {
    let p = make_exemplar_1d(0.1);
    let mut c = exemplar_config(4.0, 1e-3, 100, 1);
    c.stride = Some(10);
    let r = solve(&p, &c).unwrap();
    let mut buf = Vec::new();
    r.write_trajectory_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with(
        "t,phi_exact,f_exact,max_violation,g1_norm,g2_norm,tracker_mean_abs_constraints,tracker_mean_abs_inner,eta_t"
    ));
    let back = read_trajectory_csv(&buf[..]).unwrap();
    assert_eq!(back, r.trajectory);
    assert!(read_trajectory_csv("t,x_0\n".as_bytes()).is_err());
    assert!(read_trajectory_csv("t,x_0\n1,abc\n".as_bytes()).is_err());

    let json = r.metadata_json().unwrap();
    let meta = RunResult::from_metadata_json(&json).unwrap();
    assert_eq!(meta.output, r.output);
    assert_eq!(meta.config, r.config);
}

#[test]
fn best_diagnostic_is_argmin() {
    let p = make_exemplar_1d(0.0);
    let mut c = exemplar_config(4.0, 1e-2, 400, 0);
    c.stride = Some(20);
    c.output_rule = OutputRule::BestDiagnostic;
    let r = solve(&p, &c).unwrap();
    let phi = PenaltyObjective::new(&p, 4.0, PenaltyKind::Hinge).unwrap();
    let chosen = diagnostic_value(&phi, &r.output.x, &c.diagnostic_prox).unwrap();
    for rec in &r.trajectory {
        assert!(chosen <= diagnostic_value(&phi, &rec.x, &c.diagnostic_prox).unwrap());
    }
    let vmin = r
        .trajectory
        .iter()
        .map(|r| r.max_violation.unwrap().max(0.0))
        .fold(f64::INFINITY, f64::min);
    assert!(p.max_violation(&r.output.x).unwrap().max(0.0) <= vmin + chosen);
}

#[test]
fn uniform_output_is_reproducible() {
    let p = make_exemplar_1d(0.1);
    let mut c = exemplar_config(4.0, 1e-3, 5000, 11);
    c.stride = Some(10);
    let a = solve(&p, &c).unwrap();
    let b = solve(&p, &c).unwrap();
    assert_eq!(a.output, b.output);
    assert!(a.output.t >= 1);
    let picks: HashSet<u64> = (0..20)
        .map(|s| {
            select_output(
                &a.trajectory,
                OutputRule::UniformRandom,
                s,
                None,
                &ProxControls::default(),
            )
            .unwrap()
        })
        .map(|i| a.trajectory[i].t)
        .collect();
    assert!(picks.len() > 10);
    assert!(select_output(
        &a.trajectory,
        OutputRule::BestDiagnostic,
        0,
        None,
        &ProxControls::default()
    )
    .is_err());
    assert!(select_output(&[], OutputRule::Final, 0, None, &ProxControls::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn runs_are_deterministic(seed in 0u64..1000, beta in 0.0f64..10.0, noise in 0.0f64..0.3) {
        let p = make_exemplar_1d(noise);
        let c = exemplar_config(beta, 1e-3, 300, seed);
        let a = solve(&p, &c).unwrap();
        let b = solve(&p, &c).unwrap();
        prop_assert_eq!(a.trajectory, b.trajectory);
        prop_assert_eq!(a.final_point, b.final_point);
    }

    #[test]
    fn draws_never_repeat(seed in 0u64..1000, block in 1usize..=3, batch in 1usize..4) {
        let p = make_exemplar_1d(0.1);
        let q = crate::oracles::QuadraticSpec::new(2, 3, 7).build().unwrap();
        for (prob, blk) in [(&p, 1), (&q, block)] {
            let mut c = SolverConfig::new(3.0, 1e-3, 0.2, 50, seed);
            c.batch_constraint_block = Some(blk);
            c.batch_constraint = batch;
            c.record_draws = true;
            let r = solve(prob, &c).unwrap();
            let n = r.draws.len();
            let uniq: HashSet<_> = r.draws.iter().collect();
            prop_assert_eq!(uniq.len(), n);
        }
    }
}
