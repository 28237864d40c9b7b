//! Turning a config into a recovery problem and running solvers on it.

use cslr_core::baselines::baseline_solve;
use cslr_core::giraf::{giraf_solve, RecoveryTrace};
use cslr_core::grids::{ComplexGrid, IndexBox};
use cslr_core::lifting::LiftingSpec;
use cslr_core::models::{
    add_noise, dirac_fourier, gradient_weighting, random_mask, rect_fourier, DiracSignal, Rect, RectPhantom, SamplingOp,
};
use cslr_core::Complex64;

use crate::config::{ExperimentConfig, Seeds, SignalSpec, Solver, SolverSpec, Weighting};
use crate::error::{CliError, CliResult};
use crate::format::read_grid;

/// Everything a solver needs, plus the ground truth when known.
#[derive(Clone, Debug)]
pub struct Problem {
    pub spec: LiftingSpec,
    pub mask: SamplingOp,
    /// Zero-filled measurements on the data box.
    pub b: ComplexGrid,
    pub truth: Option<ComplexGrid>,
    pub seeds: Seeds,
}

fn config_err(e: cslr_core::Error) -> CliError {
    CliError::config(e.to_string())
}

fn data_err(e: cslr_core::Error) -> CliError {
    CliError::data(e.to_string())
}

/// Synthesizes the ground truth described by `signal` on `domain`.
pub fn synthesize(signal: &SignalSpec, domain: &IndexBox, seeds: &Seeds) -> CliResult<ComplexGrid> {
    match signal {
        SignalSpec::Dirac {
            count,
            min_gap,
            locations,
            amplitudes,
            ..
        } => {
            if domain.ndim() != 1 {
                return Err(CliError::config("dirac signals need a 1-D data box"));
            }
            let sig = match (count, locations, amplitudes) {
                (Some(r), _, _) => DiracSignal::random(*r, min_gap.unwrap_or(0.0), seeds.signal.unwrap_or(0)),
                (None, Some(l), Some(a)) => DiracSignal::new(l.clone(), a.iter().map(|c| c.value()).collect()),
                _ => return Err(CliError::config("incomplete dirac signal")),
            }
            .map_err(config_err)?;
            dirac_fourier(&sig, domain).map_err(config_err)
        }
        SignalSpec::Rects { rects } => {
            if domain.ndim() != 2 {
                return Err(CliError::config("rectangle phantoms need a 2-D data box"));
            }
            let rects = rects
                .iter()
                .map(|r| Rect {
                    amplitude: r.amplitude.value(),
                    x: (r.x[0], r.x[1]),
                    y: (r.y[0], r.y[1]),
                })
                .collect();
            let ph = RectPhantom::new(rects).map_err(config_err)?;
            rect_fourier(&ph, domain).map_err(config_err)
        }
        SignalSpec::File { path } => {
            let g = read_grid(path)?;
            if g.domain() != domain {
                return Err(CliError::data(format!(
                    "{} is not on the configured data box",
                    path.display()
                )));
            }
            Ok(g)
        }
    }
}

fn lifting(config: &ExperimentConfig, domain: &IndexBox) -> CliResult<LiftingSpec> {
    let filter = config.filter_box.resolve()?;
    match config.weighting {
        Weighting::Identity => LiftingSpec::plain(domain.clone(), filter),
        Weighting::Gradient => gradient_weighting(domain).and_then(|w| LiftingSpec::new(domain.clone(), filter, w)),
    }
    .map_err(config_err)
}

fn mask_from_grid(grid: &ComplexGrid) -> CliResult<SamplingOp> {
    let mut mask = Vec::with_capacity(grid.len());
    for v in grid.values() {
        mask.push(if *v == Complex64::new(1.0, 0.0) {
            true
        } else if *v == Complex64::new(0.0, 0.0) {
            false
        } else {
            return Err(CliError::data(format!("mask entries must be 0 or 1, found {v}")));
        });
    }
    SamplingOp::new(grid.domain().clone(), mask).map_err(data_err)
}

/// The 0/1 grid written for a sampling mask.
pub fn mask_to_grid(mask: &SamplingOp) -> ComplexGrid {
    let values = mask
        .mask()
        .iter()
        .map(|&m| Complex64::new(if m { 1.0 } else { 0.0 }, 0.0))
        .collect();
    ComplexGrid::new(mask.domain().clone(), values).expect("mask length matches its box")
}

/// Builds the problem for base seed `seed`, optionally overriding the
/// undersampling factor.
pub fn build_problem(config: &ExperimentConfig, seed: u64, usf: Option<f64>) -> CliResult<Problem> {
    let seeds = config.component_seeds(seed);
    if let Some(inputs) = &config.inputs {
        let mask = mask_from_grid(&read_grid(&inputs.mask)?)?;
        let domain = mask.domain().clone();
        if let Some(b) = &config.data_box {
            if b.resolve()? != domain {
                return Err(CliError::data("input files are not on the configured data box"));
            }
        }
        let measured = read_grid(&inputs.measurements)?;
        if measured.domain() != &domain {
            return Err(CliError::data("measurements and mask are on different boxes"));
        }
        let b = mask.project(&measured).map_err(data_err)?;
        let truth = match &inputs.truth {
            Some(p) => {
                let t = read_grid(p)?;
                if t.domain() != &domain {
                    return Err(CliError::data("ground truth and mask are on different boxes"));
                }
                Some(t)
            }
            None => None,
        };
        let spec = lifting(config, &domain)?;
        return Ok(Problem {
            spec,
            mask,
            b,
            truth,
            seeds,
        });
    }

    let signal = config.signal.as_ref().ok_or_else(|| CliError::config("no signal"))?;
    let sampling = config
        .sampling
        .as_ref()
        .ok_or_else(|| CliError::config("no sampling section"))?;
    let domain = match (&config.data_box, signal) {
        (Some(b), _) => b.resolve()?,
        (None, SignalSpec::File { path }) => read_grid(path)?.domain().clone(),
        (None, _) => return Err(CliError::config("no data box")),
    };
    let spec = lifting(config, &domain)?;
    let truth = synthesize(signal, &domain, &seeds)?;
    let usf = usf.unwrap_or(sampling.usf);
    let mask = random_mask(&domain, usf, seeds.sampling.unwrap_or(seed), sampling.force_dc).map_err(config_err)?;
    let mut b = mask.project(&truth).map_err(data_err)?;
    if let Some(noise) = &config.noise {
        b = add_noise(&b, &mask, noise.snr_db, seeds.noise.unwrap_or(seed)).map_err(data_err)?;
    }
    Ok(Problem {
        spec,
        mask,
        b,
        truth: Some(truth),
        seeds,
    })
}

/// Runs a solver section on a problem, keeping the library error.
pub fn solve(solver: &SolverSpec, problem: &Problem, timing: bool) -> cslr_core::Result<RecoveryTrace> {
    let truth = problem.truth.as_ref();
    match solver.resolve(timing) {
        Solver::Giraf(c) => giraf_solve(&problem.spec, &problem.mask, &problem.b, &c, truth),
        Solver::Baseline(c) => baseline_solve(&problem.spec, &problem.mask, &problem.b, &c, truth),
    }
}

/// Runs a solver section on a problem.
pub fn run_solver(solver: &SolverSpec, problem: &Problem, timing: bool) -> CliResult<RecoveryTrace> {
    let trace = solve(solver, problem, timing).map_err(CliError::from_solver)?;
    if !trace.x.is_finite() {
        return Err(CliError::solver("solver produced non-finite values"));
    }
    Ok(trace)
}
