//! Solver sweeps. Rows may run on a worker pool; output order is always the
//! nested config order (solver, then factor, then usf, then seed).

use std::path::Path;
use std::time::Instant;

use cslr_core::giraf::{filter_update, giraf_solve, oversampled_box, Lambda, LsProblem, RecoveryTrace};
use cslr_core::grids::{zero_pad, ComplexGrid};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{BenchKind, BenchSpec, ExperimentConfig, InnerSpec, OversampleSpec, SolverSpec};
use crate::error::{CliError, CliResult};
use crate::experiment::{build_problem, solve, Problem};
use crate::number::g17;
use crate::output::{create_dir, write_csv, write_json, Manifest};

pub const TABLE_HEADER: [&str; 8] = [
    "dataset",
    "algorithm",
    "p",
    "usf",
    "seed",
    "iters_to_tol",
    "seconds_to_tol",
    "final_nmse",
];
pub const OVERSAMPLING_HEADER: [&str; 8] = [
    "dataset",
    "algorithm",
    "p",
    "usf",
    "seed",
    "oversample",
    "iterations",
    "final_nmse",
];
pub const INNER_HEADER: [&str; 8] = ["dataset", "usf", "seed", "solver", "delta", "iter", "seconds", "nmsd"];

/// One data instance of the sweep.
struct Instance {
    usf: f64,
    seed: u64,
    problem: Problem,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowFailure {
    pub row: usize,
    pub algorithm: String,
    pub seed: u64,
    pub usf: f64,
    pub message: String,
}

pub struct BenchReport {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
    pub failures: Vec<RowFailure>,
}

fn instances(config: &ExperimentConfig, bench: &BenchSpec) -> CliResult<Vec<Instance>> {
    let seeds = if bench.seeds.is_empty() {
        vec![config.seed]
    } else {
        bench.seeds.clone()
    };
    let usfs: Vec<Option<f64>> = if bench.usf.is_empty() {
        vec![None]
    } else {
        bench.usf.iter().copied().map(Some).collect()
    };
    let mut out = Vec::new();
    for usf in usfs {
        for &seed in &seeds {
            let problem = build_problem(config, seed, usf)?;
            if problem.truth.is_none() {
                return Err(CliError::config("benchmarks need ground truth"));
            }
            let used = problem.mask.count() as f64 / problem.mask.domain().len() as f64;
            let usf = usf.or(config.sampling.as_ref().map(|s| s.usf)).unwrap_or(used);
            out.push(Instance { usf, seed, problem });
        }
    }
    Ok(out)
}

fn pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

enum Outcome {
    Done(RecoveryTrace),
    Mem,
    Failed(String),
}

fn attempt(solver: &SolverSpec, problem: &Problem, timing: bool) -> Outcome {
    match solve(solver, problem, timing) {
        Ok(t) if t.x.is_finite() => Outcome::Done(t),
        Ok(_) => Outcome::Failed("non-finite estimate".into()),
        Err(cslr_core::Error::BudgetExceeded { .. }) => Outcome::Mem,
        Err(e) => Outcome::Failed(e.to_string()),
    }
}

fn failure(row: usize, solver: &SolverSpec, inst: &Instance, message: String) -> RowFailure {
    RowFailure {
        row,
        algorithm: solver.name().into(),
        seed: inst.seed,
        usf: inst.usf,
        message,
    }
}

fn table(config: &ExperimentConfig, bench: &BenchSpec, insts: &[Instance], threads: usize) -> CliResult<BenchReport> {
    let mut jobs = Vec::new();
    for solver in config.bench_solvers() {
        let mut solver = solver.clone();
        if bench.stop_at_tol && solver.stop_nmse().is_none() {
            solver.set_stop_nmse(Some(bench.tol));
        }
        for inst in insts {
            jobs.push((solver.clone(), inst));
        }
    }
    let outcomes: Vec<Outcome> = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|(s, i)| attempt(s, &i.problem, config.timing))
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, ((solver, inst), outcome)) in jobs.iter().zip(outcomes).enumerate() {
        let mut row = vec![
            config.name.clone(),
            solver.name().to_string(),
            g17(solver.p()),
            g17(inst.usf),
            inst.seed.to_string(),
        ];
        match outcome {
            Outcome::Done(trace) => {
                match trace.first_below(bench.tol) {
                    Some((it, secs)) => row.extend([it.to_string(), g17(secs)]),
                    None => row.extend(["Inf".to_string(), "Inf".to_string()]),
                }
                row.push(trace.final_nmse().map(g17).unwrap_or_default());
            }
            Outcome::Mem => row.extend(["Mem", "Mem", "Mem"].map(String::from)),
            Outcome::Failed(m) => {
                failures.push(failure(n, solver, inst, m));
                row.extend(["Fail", "Fail", "Fail"].map(String::from));
            }
        }
        rows.push(row);
    }
    Ok(BenchReport {
        header: &TABLE_HEADER,
        rows,
        failures,
    })
}

fn oversampling(
    config: &ExperimentConfig,
    bench: &BenchSpec,
    insts: &[Instance],
    threads: usize,
) -> CliResult<BenchReport> {
    let mut jobs = Vec::new();
    for solver in config.bench_solvers() {
        for &f in &bench.oversample {
            let mut s = solver.clone();
            if let SolverSpec::Giraf(g) = &mut s {
                g.oversample = OversampleSpec::Factor(f);
            }
            for inst in insts {
                jobs.push((s.clone(), f, inst));
            }
        }
    }
    let outcomes: Vec<Outcome> = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|(s, _, i)| attempt(s, &i.problem, config.timing))
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, ((solver, f, inst), outcome)) in jobs.iter().zip(outcomes).enumerate() {
        let mut row = vec![
            config.name.clone(),
            solver.name().to_string(),
            g17(solver.p()),
            g17(inst.usf),
            inst.seed.to_string(),
            g17(*f),
        ];
        match outcome {
            Outcome::Done(trace) => {
                row.push(trace.iterations().to_string());
                row.push(trace.final_nmse().map(g17).unwrap_or_default());
            }
            Outcome::Mem => row.extend(["Mem", "Mem"].map(String::from)),
            Outcome::Failed(m) => {
                failures.push(failure(n, solver, inst, m));
                row.extend(["Fail", "Fail"].map(String::from));
            }
        }
        rows.push(row);
    }
    Ok(BenchReport {
        header: &OVERSAMPLING_HEADER,
        rows,
        failures,
    })
}

/// Relative residual at which CG runs stop; driving CG further only
/// accumulates rounding error.
const REFERENCE_TOL: f64 = 1e-13;

/// One sample of an inner-solver convergence curve.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub solver: &'static str,
    pub delta: Option<f64>,
    pub iter: usize,
    pub seconds: f64,
    pub nmsd: f64,
}

/// Freezes the least-squares subproblem after `inner.warmup` GIRAF
/// iterations and records the distance of each inner solver's iterates to a
/// long-run CG reference.
pub fn inner_curves(
    solver: &SolverSpec,
    problem: &Problem,
    inner: &InnerSpec,
    timing: bool,
) -> cslr_core::Result<Vec<CurvePoint>> {
    let SolverSpec::Giraf(g) = solver else {
        return Err(cslr_core::Error::Config("inner-solver benches run GIRAF only".into()));
    };
    let mut cfg = g.to_config(false);
    cfg.outer_iters = inner.warmup;
    cfg.stop_nmse = None;
    cfg.tol = None;
    let warm = giraf_solve(&problem.spec, &problem.mask, &problem.b, &cfg, None)?;
    let eps = cfg.eps_at(warm.records[0].eps, inner.warmup);

    let data = problem.spec.data_box();
    let work = oversampled_box(data, problem.spec.filter_box(), cfg.oversample)?;
    let wspec = problem.spec.with_data_box(work.clone())?;
    let wmask = problem.mask.embed(&work)?;
    let wb = zero_pad(&problem.mask.project(&problem.b)?, &work)?;
    let x0 = zero_pad(&warm.x, &work)?;
    let state = filter_update(&wspec, &x0, eps, cfg.p)?;
    let l = work.len() as f64;
    let w = state.d.iter().map(|v| v * l).collect();
    let reg = match cfg.lambda {
        Lambda::Penalized(v) => Some(v * cfg.c_p()),
        Lambda::Equality => None,
    };
    let ls = LsProblem::new(&wspec, &wmask, &wb, w, reg)?;
    let reference = ls.cg(&x0, inner.reference_iters, REFERENCE_TOL, |_, _| {})?.x;
    let scale = reference.norm_sqr().max(f64::MIN_POSITIVE);
    let nmsd = |x: &ComplexGrid| x.sub(&reference).map(|d| d.norm_sqr() / scale).unwrap_or(f64::NAN);

    let mut points = Vec::new();
    let mut run = |name: &'static str, delta: Option<f64>| -> cslr_core::Result<()> {
        points.push(CurvePoint {
            solver: name,
            delta,
            iter: 0,
            seconds: 0.0,
            nmsd: nmsd(&x0),
        });
        let start = Instant::now();
        let mut excluded = 0.0;
        let mut monitor = |it: usize, x: &ComplexGrid| {
            let t = Instant::now();
            let seconds = if timing {
                start.elapsed().as_secs_f64() - excluded
            } else {
                0.0
            };
            points.push(CurvePoint {
                solver: name,
                delta,
                iter: it,
                seconds,
                nmsd: nmsd(x),
            });
            excluded += t.elapsed().as_secs_f64();
        };
        match delta {
            Some(d) => ls.admm(&x0, inner.iters, d, &mut monitor).map(|_| ()),
            None => ls.cg(&x0, inner.iters, REFERENCE_TOL, &mut monitor).map(|_| ()),
        }
    };
    for &d in &inner.deltas {
        run("admm", Some(d))?;
    }
    if inner.cg {
        run("cg", None)?;
    }
    Ok(points)
}

fn inner_solver(
    config: &ExperimentConfig,
    bench: &BenchSpec,
    insts: &[Instance],
    threads: usize,
) -> CliResult<BenchReport> {
    let mut jobs = Vec::new();
    for solver in config.bench_solvers() {
        for inst in insts {
            jobs.push((solver.clone(), inst));
        }
    }
    let curves: Vec<_> = pool(threads)?.install(|| {
        jobs.par_iter()
            .map(|(s, i)| inner_curves(s, &i.problem, &bench.inner, config.timing))
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (n, ((solver, inst), curve)) in jobs.iter().zip(curves).enumerate() {
        match curve {
            Ok(points) => rows.extend(points.into_iter().map(|pt| {
                vec![
                    config.name.clone(),
                    g17(inst.usf),
                    inst.seed.to_string(),
                    pt.solver.to_string(),
                    pt.delta.map(g17).unwrap_or_default(),
                    pt.iter.to_string(),
                    g17(pt.seconds),
                    g17(pt.nmsd),
                ]
            })),
            Err(e) => failures.push(failure(n, solver, inst, e.to_string())),
        }
    }
    Ok(BenchReport {
        header: &INNER_HEADER,
        rows,
        failures,
    })
}

/// Runs the configured sweep without writing anything.
pub fn sweep(config: &ExperimentConfig, threads: usize) -> CliResult<BenchReport> {
    let bench = config.bench.clone().unwrap_or_default();
    let insts = instances(config, &bench)?;
    match bench.kind {
        BenchKind::Table => table(config, &bench, &insts, threads),
        BenchKind::Oversampling => oversampling(config, &bench, &insts, threads),
        BenchKind::InnerSolver => inner_solver(config, &bench, &insts, threads),
    }
}

pub fn run(config: &ExperimentConfig, out: &Path, threads: usize) -> CliResult<BenchReport> {
    let report = sweep(config, threads)?;
    create_dir(out)?;
    let names = &config.outputs;
    write_csv(&out.join(&names.bench), report.header, &report.rows)?;

    #[derive(Serialize)]
    struct BenchManifest<'a> {
        #[serde(flatten)]
        manifest: Manifest,
        failures: &'a [RowFailure],
    }
    let mut manifest = Manifest::new("bench", config.clone(), None);
    manifest.files.insert("bench", names.bench.clone());
    write_json(
        &out.join(&names.manifest),
        &BenchManifest {
            manifest,
            failures: &report.failures,
        },
    )?;
    for f in &report.failures {
        eprintln!(
            "row {} ({}, seed {}, usf {}): {}",
            f.row,
            f.algorithm,
            f.seed,
            g17(f.usf),
            f.message
        );
    }
    Ok(report)
}
