//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hinge_penalty::certify::{
    frvp_min_singular, grid_1d, grid_box, kkt_certificate, pl_regularity_estimate, FrvpReport, KktCertificate,
    PlEstimate,
};
use hinge_penalty::oracles::InstanceDocument;
use hinge_penalty::penalty::PenaltyKind;
use hinge_penalty::solver::{read_trajectory_csv, schedule_from_theorem, RunStatus};
use hinge_penalty::{solve, ConstrainedProblem, PenaltyObjective, ProxControls, RunResult, SolverConfig};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{CertifyConfig, ExperimentConfig};

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

/// Command-line overrides shared by every subcommand.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub stride: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_hash: String,
    pub instance_hash: String,
    pub code_version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    pub schema_version: u32,
    pub name: String,
    pub provenance: Provenance,
    pub result: RunResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateDocument {
    pub schema_version: u32,
    pub name: String,
    /// Iteration of the certified point.
    pub t: u64,
    pub certificate: KktCertificate,
}

fn sha256_json<T: Serialize>(value: &T) -> String {
    let text = serde_json::to_string(value).expect("config values serialise");
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn code_version() -> String {
    format!("hpo {}", env!("CARGO_PKG_VERSION"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers).build()?)
}

/// Seed for a cell that does not share streams with its siblings.
pub fn cell_seed(master: u64, name: &str) -> u64 {
    let digest = Sha256::digest(name.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    master ^ u64::from_le_bytes(bytes)
}

struct CellEnv<'a> {
    problem: &'a ConstrainedProblem,
    instance: &'a InstanceDocument,
    certify: &'a CertifyConfig,
}

/// Summary of one solver cell after its files are written.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub name: String,
    pub run: RunResult,
    pub certificate: Option<KktCertificate>,
    pub final_max_violation: Option<f64>,
    pub final_objective: Option<f64>,
}

fn apply_overrides(mut solver: SolverConfig, o: &Overrides) -> SolverConfig {
    if let Some(s) = o.seed {
        solver.seed = s;
    }
    if let Some(s) = o.stride {
        solver.stride = Some(s);
    }
    solver
}

fn execute_cell(ctx: &CellEnv, name: &str, solver: &SolverConfig, dir: &Path) -> Result<CellReport> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    log::info!("{name}: {} iterations", solver.iterations);
    let run = solve(ctx.problem, solver).with_context(|| format!("cell `{name}`"))?;
    let doc = RunDocument {
        schema_version: OUTPUT_SCHEMA_VERSION,
        name: name.to_string(),
        provenance: Provenance {
            config_hash: sha256_json(solver),
            instance_hash: ctx.instance.hash(),
            code_version: code_version(),
        },
        result: run.clone(),
    };
    write_json(&dir.join("run.json"), &doc)?;
    write_json(&dir.join("instance.json"), ctx.instance)?;
    let csv_path = dir.join("trajectory.csv");
    let file = fs::File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    run.write_trajectory_csv(std::io::BufWriter::new(file))?;

    let last = run.trajectory.last();
    let mut report = CellReport {
        name: name.to_string(),
        final_max_violation: last.and_then(|r| r.max_violation),
        final_objective: last.and_then(|r| r.f_exact),
        certificate: None,
        run,
    };
    if let RunStatus::Diverged { iteration, reason } = &report.run.status {
        bail!(
            "cell `{name}` diverged at iteration {iteration}: {reason} (partial logs in {})",
            dir.display()
        );
    }
    if ctx.problem.has_exact() {
        let phi = PenaltyObjective::new(ctx.problem, solver.beta, solver.penalty)?;
        let cert = kkt_certificate(&phi, &report.run.output.x, ctx.certify.theta, &ctx.certify.prox)?;
        write_json(
            &dir.join("certificate.json"),
            &CertificateDocument {
                schema_version: OUTPUT_SCHEMA_VERSION,
                name: name.to_string(),
                t: report.run.output.t,
                certificate: cert.clone(),
            },
        )?;
        report.certificate = Some(cert);
    }
    Ok(report)
}

fn run_cells(
    ctx: &CellEnv,
    cells: &[(String, SolverConfig, PathBuf)],
    workers: usize,
) -> Result<Vec<(String, Result<CellReport>)>> {
    let out = pool(workers)?.install(|| {
        cells
            .par_iter()
            .map(|(name, solver, dir)| (name.clone(), execute_cell(ctx, name, solver, dir)))
            .collect()
    });
    Ok(out)
}

fn failure_summary(results: &[(String, Result<CellReport>)]) -> Result<()> {
    let failed: Vec<String> = results
        .iter()
        .filter_map(|(n, r)| r.as_ref().err().map(|e| format!("{n}: {e:#}")))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        for f in &failed {
            log::error!("{f}");
        }
        bail!(
            "{} of {} cells failed:\n  {}",
            failed.len(),
            results.len(),
            failed.join("\n  ")
        )
    }
}

pub fn cmd_run(config: &ExperimentConfig, o: &Overrides) -> Result<Vec<CellReport>> {
    if config.runs.is_empty() {
        bail!("config has no `runs`");
    }
    let (problem, instance) = config.build_instance()?;
    let ctx = CellEnv {
        problem: &problem,
        instance: &instance,
        certify: &config.certify,
    };
    let out = config.output_dir(o.out.as_deref());
    let cells: Vec<_> = config
        .runs
        .iter()
        .map(|r| (r.name.clone(), apply_overrides(r.solver.clone(), o), out.join(&r.name)))
        .collect();
    let results = run_cells(&ctx, &cells, o.workers.unwrap_or(config.workers))?;
    for (name, r) in &results {
        if let Ok(r) = r {
            match &r.certificate {
                Some(c) => println!(
                    "{name}: output t = {}, certified epsilon {:.4e}",
                    r.run.output.t, c.epsilon
                ),
                None => println!("{name}: output t = {}", r.run.output.t),
            }
        }
    }
    failure_summary(&results)?;
    Ok(results.into_iter().filter_map(|(_, r)| r.ok()).collect())
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub cell: String,
    pub penalty: String,
    pub beta: f64,
    pub status: String,
    pub final_max_violation: String,
    pub final_objective: String,
    pub certified_epsilon: String,
    pub error: String,
}

pub fn cmd_compare(config: &ExperimentConfig, o: &Overrides) -> Result<Vec<CompareRow>> {
    let Some(cmp) = &config.compare else {
        bail!("config has no `compare` section");
    };
    let (problem, instance) = config.build_instance()?;
    let ctx = CellEnv {
        problem: &problem,
        instance: &instance,
        certify: &config.certify,
    };
    let out = config.output_dir(o.out.as_deref());
    let base = apply_overrides(cmp.solver.clone(), o);
    let mut cells = Vec::new();
    let mut meta = Vec::new();
    for &kind in &cmp.kinds {
        for &beta in &cmp.betas {
            let name = format!("{}_beta_{beta}", kind.as_str());
            let mut s = base.clone();
            s.penalty = kind;
            s.beta = beta;
            if !cmp.paired {
                s.seed = cell_seed(base.seed, &name);
            }
            meta.push((kind, beta));
            cells.push((name.clone(), s, out.join("compare").join(&name)));
        }
    }
    let results = run_cells(&ctx, &cells, o.workers.unwrap_or(config.workers))?;
    let rows: Vec<CompareRow> = results
        .iter()
        .zip(&meta)
        .map(|((name, r), &(kind, beta))| match r {
            Ok(r) => CompareRow {
                cell: name.clone(),
                penalty: kind.as_str().into(),
                beta,
                status: "completed".into(),
                final_max_violation: opt(r.final_max_violation),
                final_objective: opt(r.final_objective),
                certified_epsilon: opt(r.certificate.as_ref().map(|c| c.epsilon)),
                error: String::new(),
            },
            Err(e) => CompareRow {
                cell: name.clone(),
                penalty: kind.as_str().into(),
                beta,
                status: "failed".into(),
                final_max_violation: String::new(),
                final_objective: String::new(),
                certified_epsilon: String::new(),
                error: format!("{e:#}"),
            },
        })
        .collect();
    fs::create_dir_all(&out)?;
    let mut w = csv::Writer::from_path(out.join("compare.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    println!(
        "{:<24} {:>14} {:>14} {:>14}",
        "cell", "max violation", "objective", "certified eps"
    );
    let short = |v: &str| {
        v.parse::<f64>()
            .map(|v| format!("{v:.4e}"))
            .unwrap_or_else(|_| "-".into())
    };
    for r in &rows {
        println!(
            "{:<24} {:>14} {:>14} {:>14}",
            r.cell,
            short(&r.final_max_violation),
            short(&r.final_objective),
            short(&r.certified_epsilon)
        );
    }
    failure_summary(&results)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub cell: String,
    pub epsilon_target: f64,
    pub gamma_multiplier: f64,
    pub eta_multiplier: f64,
    pub iterations_multiplier: f64,
    pub gamma: f64,
    pub eta: f64,
    pub iterations: u64,
    pub iterations_run: String,
    pub certified_epsilon: String,
    pub status: String,
    pub wall_time_secs: String,
}

pub fn cmd_sweep(config: &ExperimentConfig, o: &Overrides) -> Result<Vec<SweepRow>> {
    let Some(sw) = &config.sweep else {
        bail!("config has no `sweep` section");
    };
    if sw.epsilons.is_empty() || sw.multipliers.is_empty() {
        log::info!("empty sweep grid, nothing to do");
        return Ok(Vec::new());
    }
    let (problem, instance) = config.build_instance()?;
    let ctx = CellEnv {
        problem: &problem,
        instance: &instance,
        certify: &config.certify,
    };
    let out = config.output_dir(o.out.as_deref());
    let base = apply_overrides(sw.solver.clone(), o);
    let n = match &problem.objective {
        hinge_penalty::oracles::Objective::Fcco(f) => f.n(),
        hinge_penalty::oracles::Objective::Plain(_) => 1,
    };
    let mut cells = Vec::new();
    let mut meta = Vec::new();
    for (mi, mult) in sw.multipliers.iter().enumerate() {
        for &eps in &sw.epsilons {
            let schedule = schedule_from_theorem(sw.setting, eps, base.beta, sw.batches, problem.m(), n, *mult)?;
            let name = format!("eps_{eps}_mult_{mi}");
            let mut s = base.clone().with_schedule(&schedule);
            s.batch_objective = sw.batches.outer;
            s.batch_constraint_block = Some(sw.batches.constraint_block);
            s.batch_inner = sw.batches.inner;
            s.batch_constraint = sw.batches.constraint;
            if let Some(cap) = sw.iteration_cap {
                s.iterations = s.iterations.min(cap);
            }
            meta.push((eps, *mult, schedule));
            cells.push((name.clone(), s, out.join("sweep").join(&name)));
        }
    }
    let results = run_cells(&ctx, &cells, o.workers.unwrap_or(config.workers))?;
    let rows: Vec<SweepRow> = results
        .iter()
        .zip(&meta)
        .map(|((name, r), (eps, mult, sched))| {
            let mut row = SweepRow {
                cell: name.clone(),
                epsilon_target: *eps,
                gamma_multiplier: mult.gamma,
                eta_multiplier: mult.eta,
                iterations_multiplier: mult.iterations,
                gamma: sched.gamma_constraints,
                eta: sched.eta,
                iterations: sched.iterations,
                iterations_run: String::new(),
                certified_epsilon: String::new(),
                status: "failed".into(),
                wall_time_secs: String::new(),
            };
            if let Ok(r) = r {
                row.iterations_run = r.run.iterations_run.to_string();
                row.certified_epsilon = opt(r.certificate.as_ref().map(|c| c.epsilon));
                row.status = "completed".into();
                row.wall_time_secs = r.run.wall_time_secs.to_string();
            }
            row
        })
        .collect();
    fs::create_dir_all(&out)?;
    let mut w = csv::Writer::from_path(out.join("sweep.csv"))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    failure_summary(&results)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFrvp {
    pub t: u64,
    #[serde(flatten)]
    pub report: FrvpReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub schema_version: u32,
    pub name: String,
    pub frvp: Vec<SnapshotFrvp>,
    /// No snapshot violates any constraint.
    pub all_vacuous: bool,
    pub pl: Option<PlEstimate>,
}

#[derive(Debug, Clone)]
pub struct CertifyArgs {
    pub run: PathBuf,
    pub instance: PathBuf,
    pub theta: Option<f64>,
    pub prox: ProxControls,
    /// Certify every `stride`-th stored snapshot.
    pub stride: usize,
}

/// Sample points for the PL estimate: a fine grid of the instance box,
/// capped at roughly 10⁵ points.
fn pl_points(dim: usize, r: f64) -> Vec<hinge_penalty::Vector> {
    if dim == 1 {
        return grid_1d(-r, r, r / 5000.0);
    }
    let per_axis = (100_000f64.powf(1.0 / dim as f64).floor() as usize).max(2);
    grid_box(dim, r, per_axis)
}

pub fn cmd_certify(args: &CertifyArgs, o: &Overrides) -> Result<PathBuf> {
    let text = fs::read_to_string(&args.run).with_context(|| format!("reading {}", args.run.display()))?;
    let doc: RunDocument =
        serde_json::from_str(&text).with_context(|| format!("run document {}", args.run.display()))?;
    let run_dir = args.run.parent().map(Path::to_path_buf).unwrap_or_default();
    let traj_path = run_dir.join("trajectory.csv");
    let file = fs::File::open(&traj_path).with_context(|| format!("reading {}", traj_path.display()))?;
    let records = read_trajectory_csv(file).with_context(|| format!("trajectory {}", traj_path.display()))?;

    let itext = fs::read_to_string(&args.instance).with_context(|| format!("reading {}", args.instance.display()))?;
    let idoc = InstanceDocument::from_json(&itext)?;
    let problem = idoc.build()?;
    if !problem.has_exact() {
        bail!(
            "instance `{}` has no exact evaluators; certification needs them",
            problem.name
        );
    }
    if idoc.hash() != doc.provenance.instance_hash {
        log::warn!("instance hash differs from the one recorded in {}", args.run.display());
    }
    let cfg = &doc.result.config;
    let phi = PenaltyObjective::new(&problem, cfg.beta, cfg.penalty)?;
    let out = o.out.clone().unwrap_or_else(|| run_dir.join("certify"));
    fs::create_dir_all(&out)?;

    let cert = kkt_certificate(&phi, &doc.result.output.x, args.theta, &args.prox)?;
    write_json(
        &out.join("certificate.json"),
        &CertificateDocument {
            schema_version: OUTPUT_SCHEMA_VERSION,
            name: doc.name.clone(),
            t: doc.result.output.t,
            certificate: cert.clone(),
        },
    )?;

    let stride = args.stride.max(1);
    let mut w = csv::Writer::from_path(out.join("snapshots.csv"))?;
    w.write_record([
        "t",
        "epsilon",
        "stationarity",
        "feasibility",
        "complementarity",
        "displacement",
        "moreau_grad_norm",
        "prox_converged",
    ])?;
    let mut frvp = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        if i % stride == 0 || i + 1 == records.len() {
            let c = kkt_certificate(&phi, &rec.x, args.theta, &args.prox)?;
            w.write_record([
                rec.t.to_string(),
                c.epsilon.to_string(),
                c.stationarity.to_string(),
                c.feasibility.to_string(),
                c.complementarity.to_string(),
                c.displacement.to_string(),
                c.moreau_grad_norm.to_string(),
                c.prox_converged.to_string(),
            ])?;
        }
        frvp.push(SnapshotFrvp {
            t: rec.t,
            report: frvp_min_singular(&problem, &rec.x, 0.0)?,
        });
    }
    w.flush()?;
    let all_vacuous = frvp.iter().all(|s| s.report.sigma_min.is_none());
    let pl = if problem.m() == 1 {
        Some(pl_regularity_estimate(
            &problem,
            &pl_points(problem.dim(), problem.constants.region_radius),
        )?)
    } else {
        None
    };
    write_json(
        &out.join("regularity.json"),
        &RegularityReport {
            schema_version: OUTPUT_SCHEMA_VERSION,
            name: doc.name.clone(),
            frvp,
            all_vacuous,
            pl,
        },
    )?;
    println!(
        "{}: output t = {}, certified epsilon {:.4e} (displacement {:.3e}); reports in {}",
        doc.name,
        doc.result.output.t,
        cert.epsilon,
        cert.displacement,
        out.display()
    );
    Ok(out)
}

/// Penalty kinds accepted on the command line.
pub fn parse_kind(s: &str) -> Result<PenaltyKind> {
    match s {
        "hinge" => Ok(PenaltyKind::Hinge),
        "squared_hinge" => Ok(PenaltyKind::SquaredHinge),
        _ => bail!("unknown penalty `{s}`"),
    }
}
