use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::CliResult;
use crate::experiment::{build_problem, run_solver};
use crate::format::write_grid;
use crate::output::{create_dir, write_json, write_trace, Manifest, Summary};

/// Runs the configured solver and writes the estimate, trace and summary.
pub fn run(config: &ExperimentConfig, out: &Path) -> CliResult<Summary> {
    let problem = build_problem(config, config.seed, None)?;
    let trace = run_solver(&config.solver, &problem, config.timing)?;
    create_dir(out)?;
    let names = &config.outputs;
    write_grid(&out.join(&names.recovered), &trace.x)?;
    write_trace(&out.join(&names.trace), &trace, problem.truth.is_some())?;
    let summary = Summary::new(config.solver.name(), config.solver.p(), &trace);
    write_json(&out.join(&names.summary), &summary)?;

    let mut manifest = Manifest::new("recover", config.with_explicit_seeds(), Some(problem.seeds));
    manifest.files.insert("recovered", names.recovered.clone());
    manifest.files.insert("trace", names.trace.clone());
    manifest.files.insert("summary", names.summary.clone());
    write_json(&out.join(&names.manifest), &manifest)?;
    Ok(summary)
}
