use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::experiment::{build_problem, mask_to_grid};
use crate::format::write_grid;
use crate::output::{create_dir, write_json, Manifest};

/// Writes ground truth, mask and measurements plus a manifest.
pub fn run(config: &ExperimentConfig, out: &Path) -> CliResult<()> {
    if config.signal.is_none() {
        return Err(CliError::config("gen needs a signal section"));
    }
    let problem = build_problem(config, config.seed, None)?;
    create_dir(out)?;
    let names = &config.outputs;
    let truth = problem.truth.as_ref().expect("synthetic problems carry their truth");
    write_grid(&out.join(&names.truth), truth)?;
    write_grid(&out.join(&names.mask), &mask_to_grid(&problem.mask))?;
    write_grid(&out.join(&names.measurements), &problem.b)?;

    let mut manifest = Manifest::new("gen", config.with_explicit_seeds(), Some(problem.seeds));
    manifest.files.insert("truth", names.truth.clone());
    manifest.files.insert("mask", names.mask.clone());
    manifest.files.insert("measurements", names.measurements.clone());
    write_json(&out.join(&names.manifest), &manifest)
}
