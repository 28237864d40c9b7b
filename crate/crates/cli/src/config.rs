//! JSON experiment configuration.
//!
//! Every section rejects unknown keys. Omitted solver fields take the library
//! defaults and are written back explicitly in manifests, so a manifest is a
//! complete, reviewable description of a run.

use std::fs;
use std::path::{Path, PathBuf};

use cslr_core::baselines::{Algorithm, BaselineConfig};
use cslr_core::giraf::{Eps0, EpsFloor, Lambda, LsSolver, Oversample, SolverConfig};
use cslr_core::grids::IndexBox;
use cslr_core::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Marker distinguishing a manifest from a bare config.
pub const MANIFEST_FORMAT: &str = "cslr-manifest";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset label used in bench output.
    #[serde(default = "default_name")]
    pub name: String,
    /// Base seed; component seeds not given explicitly derive from it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal: Option<SignalSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data_box: Option<BoxSpec>,
    pub filter_box: BoxSpec,
    #[serde(default)]
    pub weighting: Weighting,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling: Option<SamplingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSpec>,
    /// Pre-existing data files used instead of a synthetic signal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    /// Record wall-clock times. Off by default so that repeated runs produce
    /// byte-identical outputs.
    #[serde(default)]
    pub timing: bool,
    #[serde(default)]
    pub outputs: OutputSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bench: Option<BenchSpec>,
}

fn default_name() -> String {
    "custom".into()
}

/// An index box; without `offset` it is centred on the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub extent: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<i64>>,
}

impl BoxSpec {
    pub fn resolve(&self) -> CliResult<IndexBox> {
        match &self.offset {
            Some(o) => IndexBox::new(o.clone(), self.extent.clone()),
            None => IndexBox::centered(&self.extent),
        }
        .map_err(|e| CliError::config(format!("invalid box: {e}")))
    }
}

/// A complex number written as a real number or a `[re, im]` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexSpec::Real(re) => Complex64::new(re, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSpec {
    /// Periodic Dirac stream on `[0, 1)`: either explicit `locations` and
    /// `amplitudes`, or `count` random ones at least `min_gap` apart.
    Dirac {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_gap: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        locations: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitudes: Option<Vec<ComplexSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Union of axis-aligned rectangles on `[0, 1)²`.
    Rects { rects: Vec<RectSpec> },
    /// Ground truth read from a CSLR1 file.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectSpec {
    pub amplitude: ComplexSpec,
    pub x: [f64; 2],
    pub y: [f64; 2],
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    #[default]
    Identity,
    Gradient,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub usf: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub force_dc: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub snr_db: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Data files: a 0/1 mask grid, zero-filled measurements and optionally the
/// ground truth, all on the same box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub mask: PathBuf,
    pub measurements: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
}

/// File names written inside the output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub truth: String,
    pub mask: String,
    pub measurements: String,
    pub recovered: String,
    pub trace: String,
    pub summary: String,
    pub bench: String,
    pub manifest: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            truth: "truth.cslr".into(),
            mask: "mask.cslr".into(),
            measurements: "measurements.cslr".into(),
            recovered: "recovered.cslr".into(),
            trace: "trace.csv".into(),
            summary: "summary.json".into(),
            bench: "bench.csv".into(),
            manifest: "manifest.json".into(),
        }
    }
}

impl OutputSpec {
    fn names(&self) -> [&str; 8] {
        [
            &self.truth,
            &self.mask,
            &self.measurements,
            &self.recovered,
            &self.trace,
            &self.summary,
            &self.bench,
            &self.manifest,
        ]
    }
}

/// `"auto"` or an explicit value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Eps0Spec {
    Named(AutoTag),
    Value(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

/// `"default"`, `{"relative": r}` or `{"absolute": a}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EpsFloorSpec {
    Named(DefaultTag),
    Relative { relative: f64 },
    Absolute { absolute: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefaultTag {
    Default,
}

/// `"off"`, `"filter_margin"` or a scale factor.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OversampleSpec {
    Named(OversampleTag),
    Factor(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OversampleTag {
    Off,
    FilterMargin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LsSolverSpec {
    Admm,
    Cg,
}

fn lambda_of(v: Option<f64>) -> Lambda {
    v.map_or(Lambda::Equality, Lambda::Penalized)
}

fn eps0_of(v: Eps0Spec) -> Eps0 {
    match v {
        Eps0Spec::Named(AutoTag::Auto) => Eps0::Auto,
        Eps0Spec::Value(e) => Eps0::Explicit(e),
    }
}

fn floor_of(v: EpsFloorSpec) -> EpsFloor {
    match v {
        EpsFloorSpec::Named(DefaultTag::Default) => EpsFloor::Default,
        EpsFloorSpec::Relative { relative } => EpsFloor::Relative(relative),
        EpsFloorSpec::Absolute { absolute } => EpsFloor::Absolute(absolute),
    }
}

fn eps0_spec(v: Eps0) -> Eps0Spec {
    match v {
        Eps0::Auto => Eps0Spec::Named(AutoTag::Auto),
        Eps0::Explicit(e) => Eps0Spec::Value(e),
    }
}

fn floor_spec(v: EpsFloor) -> EpsFloorSpec {
    match v {
        EpsFloor::Default => EpsFloorSpec::Named(DefaultTag::Default),
        EpsFloor::Relative(relative) => EpsFloorSpec::Relative { relative },
        EpsFloor::Absolute(absolute) => EpsFloorSpec::Absolute { absolute },
    }
}

fn lambda_spec(v: Lambda) -> Option<f64> {
    match v {
        Lambda::Penalized(l) => Some(l),
        Lambda::Equality => None,
    }
}

/// GIRAF settings. `lambda: null` selects exact data consistency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GirafSpec {
    pub p: f64,
    pub lambda: Option<f64>,
    pub eps0: Eps0Spec,
    pub eta: f64,
    pub eps_floor: EpsFloorSpec,
    pub outer_iters: usize,
    pub ls_solver: LsSolverSpec,
    pub admm_iters: usize,
    pub cg_iters: usize,
    pub cg_tol: f64,
    pub delta: f64,
    pub oversample: OversampleSpec,
    pub tol: Option<f64>,
    pub stop_nmse: Option<f64>,
}

impl Default for GirafSpec {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            p: d.p,
            lambda: lambda_spec(d.lambda),
            eps0: eps0_spec(d.eps0),
            eta: d.eta,
            eps_floor: floor_spec(d.eps_floor),
            outer_iters: d.outer_iters,
            ls_solver: match d.ls_solver {
                LsSolver::Admm => LsSolverSpec::Admm,
                LsSolver::Cg => LsSolverSpec::Cg,
            },
            admm_iters: d.admm_iters,
            cg_iters: d.cg_iters,
            cg_tol: d.cg_tol,
            delta: d.delta,
            oversample: OversampleSpec::Named(OversampleTag::Off),
            tol: d.tol,
            stop_nmse: d.stop_nmse,
        }
    }
}

impl GirafSpec {
    pub fn to_config(&self, timing: bool) -> SolverConfig {
        SolverConfig {
            p: self.p,
            lambda: lambda_of(self.lambda),
            eps0: eps0_of(self.eps0),
            eta: self.eta,
            eps_floor: floor_of(self.eps_floor),
            outer_iters: self.outer_iters,
            ls_solver: match self.ls_solver {
                LsSolverSpec::Admm => LsSolver::Admm,
                LsSolverSpec::Cg => LsSolver::Cg,
            },
            admm_iters: self.admm_iters,
            cg_iters: self.cg_iters,
            cg_tol: self.cg_tol,
            delta: self.delta,
            oversample: match self.oversample {
                OversampleSpec::Named(OversampleTag::Off) => Oversample::Off,
                OversampleSpec::Named(OversampleTag::FilterMargin) => Oversample::FilterMargin,
                OversampleSpec::Factor(f) => Oversample::Factor(f),
            },
            tol: self.tol,
            stop_nmse: self.stop_nmse,
            timing,
        }
    }
}

/// Settings shared by the baseline solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineSpec {
    pub p: f64,
    pub rank: Option<usize>,
    pub lambda: Option<f64>,
    pub beta: f64,
    pub eps0: Eps0Spec,
    pub eta: f64,
    pub eps_floor: EpsFloorSpec,
    pub max_iters: usize,
    pub tol: f64,
    pub stop_nmse: Option<f64>,
    pub cg_iters: usize,
    pub cg_tol: f64,
}

impl Default for BaselineSpec {
    fn default() -> Self {
        let d = BaselineConfig::new(Algorithm::Irls);
        Self {
            p: d.p,
            rank: d.rank,
            lambda: lambda_spec(d.lambda),
            beta: d.beta,
            eps0: eps0_spec(d.eps0),
            eta: d.eta,
            eps_floor: floor_spec(d.eps_floor),
            max_iters: d.max_iters,
            tol: d.tol,
            stop_nmse: d.stop_nmse,
            cg_iters: d.cg_iters,
            cg_tol: d.cg_tol,
        }
    }
}

impl BaselineSpec {
    pub fn to_config(&self, algorithm: Algorithm, timing: bool) -> BaselineConfig {
        BaselineConfig {
            algorithm,
            p: self.p,
            rank: self.rank,
            lambda: lambda_of(self.lambda),
            beta: self.beta,
            eps0: eps0_of(self.eps0),
            eta: self.eta,
            eps_floor: floor_of(self.eps_floor),
            max_iters: self.max_iters,
            tol: self.tol,
            stop_nmse: self.stop_nmse,
            cg_iters: self.cg_iters,
            cg_tol: self.cg_tol,
            timing,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum SolverSpec {
    Giraf(GirafSpec),
    Irls(BaselineSpec),
    Ap(BaselineSpec),
    ApProx(BaselineSpec),
    Svt(BaselineSpec),
    SvtUv(BaselineSpec),
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec::Giraf(GirafSpec::default())
    }
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Giraf(_) => "giraf",
            SolverSpec::Irls(_) => Algorithm::Irls.name(),
            SolverSpec::Ap(_) => Algorithm::Ap.name(),
            SolverSpec::ApProx(_) => Algorithm::ApProx.name(),
            SolverSpec::Svt(_) => Algorithm::Svt.name(),
            SolverSpec::SvtUv(_) => Algorithm::SvtUv.name(),
        }
    }

    pub fn p(&self) -> f64 {
        match self {
            SolverSpec::Giraf(g) => g.p,
            SolverSpec::Irls(b)
            | SolverSpec::Ap(b)
            | SolverSpec::ApProx(b)
            | SolverSpec::Svt(b)
            | SolverSpec::SvtUv(b) => b.p,
        }
    }

    pub fn stop_nmse(&self) -> Option<f64> {
        match self {
            SolverSpec::Giraf(g) => g.stop_nmse,
            SolverSpec::Irls(b)
            | SolverSpec::Ap(b)
            | SolverSpec::ApProx(b)
            | SolverSpec::Svt(b)
            | SolverSpec::SvtUv(b) => b.stop_nmse,
        }
    }

    pub fn set_stop_nmse(&mut self, target: Option<f64>) {
        match self {
            SolverSpec::Giraf(g) => g.stop_nmse = target,
            SolverSpec::Irls(b)
            | SolverSpec::Ap(b)
            | SolverSpec::ApProx(b)
            | SolverSpec::Svt(b)
            | SolverSpec::SvtUv(b) => b.stop_nmse = target,
        }
    }

    /// The library configuration this section describes.
    pub fn resolve(&self, timing: bool) -> Solver {
        match self {
            SolverSpec::Giraf(g) => Solver::Giraf(g.to_config(timing)),
            SolverSpec::Irls(b) => Solver::Baseline(b.to_config(Algorithm::Irls, timing)),
            SolverSpec::Ap(b) => Solver::Baseline(b.to_config(Algorithm::Ap, timing)),
            SolverSpec::ApProx(b) => Solver::Baseline(b.to_config(Algorithm::ApProx, timing)),
            SolverSpec::Svt(b) => Solver::Baseline(b.to_config(Algorithm::Svt, timing)),
            SolverSpec::SvtUv(b) => Solver::Baseline(b.to_config(Algorithm::SvtUv, timing)),
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let checked = match self.resolve(false) {
            Solver::Giraf(c) => c.validate(),
            Solver::Baseline(c) => c.validate(),
        };
        checked.map_err(|e| CliError::config(format!("solver {}: {e}", self.name())))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solver {
    Giraf(SolverConfig),
    Baseline(BaselineConfig),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    /// Iterations and time to reach the NMSE tolerance, per solver/usf/seed.
    #[default]
    Table,
    /// Final NMSE against the working-grid oversampling factor (GIRAF only).
    Oversampling,
    /// Convergence of the inner least-squares solvers on a frozen subproblem.
    InnerSolver,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InnerSpec {
    /// GIRAF outer iterations run before freezing the subproblem.
    pub warmup: usize,
    pub iters: usize,
    pub deltas: Vec<f64>,
    pub cg: bool,
    /// CG steps used for the reference solution.
    pub reference_iters: usize,
}

impl Default for InnerSpec {
    fn default() -> Self {
        Self {
            warmup: 2,
            iters: 200,
            deltas: vec![1.0, 10.0, 100.0],
            cg: true,
            reference_iters: 5000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSpec {
    #[serde(default)]
    pub kind: BenchKind,
    /// Solvers to sweep; empty means the top-level solver.
    #[serde(default)]
    pub solvers: Vec<SolverSpec>,
    /// Base seeds; empty means the top-level seed.
    #[serde(default)]
    pub seeds: Vec<u64>,
    /// Undersampling factors; empty means the sampling section's value.
    #[serde(default)]
    pub usf: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Stop each run as soon as it reaches `tol` (table benches).
    #[serde(default = "default_true")]
    pub stop_at_tol: bool,
    #[serde(default = "default_factors")]
    pub oversample: Vec<f64>,
    #[serde(default)]
    pub inner: InnerSpec,
}

impl Default for BenchSpec {
    fn default() -> Self {
        Self {
            kind: BenchKind::Table,
            solvers: Vec::new(),
            seeds: Vec::new(),
            usf: Vec::new(),
            tol: default_tol(),
            stop_at_tol: true,
            oversample: default_factors(),
            inner: InnerSpec::default(),
        }
    }
}

fn default_tol() -> f64 {
    1e-4
}

fn default_true() -> bool {
    true
}

fn default_factors() -> Vec<f64> {
    vec![1.0, 1.25, 1.5, 2.0]
}

impl ExperimentConfig {
    /// Parses a config, or the config embedded in a manifest.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| CliError::config(format!("invalid JSON: {e}")))?;
        let is_manifest = value.get("format").and_then(|f| f.as_str()) == Some(MANIFEST_FORMAT);
        let body = if is_manifest {
            value
                .get("config")
                .cloned()
                .ok_or_else(|| CliError::config("manifest has no config"))?
        } else {
            value
        };
        let config: Self = serde_json::from_value(body).map_err(|e| CliError::config(format!("schema error: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    /// Loads a config file; relative data paths are taken relative to it.
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.rebase(base);
        Ok(config)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(SignalSpec::File { path }) = &mut self.signal {
            fix(path);
        }
        if let Some(inputs) = &mut self.inputs {
            fix(&mut inputs.mask);
            fix(&mut inputs.measurements);
            if let Some(t) = &mut inputs.truth {
                fix(t);
            }
        }
    }

    /// Replaces the base seed; component seeds are re-derived from it.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = seed;
        if let Some(SignalSpec::Dirac { seed, .. }) = &mut self.signal {
            *seed = None;
        }
        if let Some(s) = &mut self.sampling {
            s.seed = None;
        }
        if let Some(n) = &mut self.noise {
            n.seed = None;
        }
        if let Some(b) = &mut self.bench {
            b.seeds.clear();
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::config(m));
        match (&self.signal, &self.inputs) {
            (None, None) => return bad("either a signal or input files are required".into()),
            (Some(_), Some(_)) => return bad("signal and inputs are mutually exclusive".into()),
            (Some(_), None) => {
                if self.sampling.is_none() {
                    return bad("a synthetic signal needs a sampling section".into());
                }
                if self.data_box.is_none() && !matches!(self.signal, Some(SignalSpec::File { .. })) {
                    return bad("a synthetic signal needs a data_box".into());
                }
            }
            (None, Some(_)) => {
                if self.sampling.is_some() || self.noise.is_some() {
                    return bad("sampling and noise apply only to synthetic signals".into());
                }
            }
        }
        let filter = self.filter_box.resolve()?;
        if let Some(b) = &self.data_box {
            let data = b.resolve()?;
            if data.ndim() != filter.ndim() {
                return bad(format!(
                    "data box is {}-D but filter box is {}-D",
                    data.ndim(),
                    filter.ndim()
                ));
            }
            if filter.extent().iter().zip(data.extent()).any(|(f, d)| f > d) {
                return bad("filter box is larger than the data box".into());
            }
            if self.weighting == Weighting::Gradient && data.ndim() != 2 {
                return bad("gradient weighting needs a 2-D data box".into());
            }
        }
        match &self.signal {
            Some(SignalSpec::Dirac {
                count,
                min_gap,
                locations,
                amplitudes,
                ..
            }) => match (count, locations, amplitudes) {
                (Some(_), None, None) => {
                    if min_gap.is_some_and(|g| !(g >= 0.0)) {
                        return bad("min_gap must be non-negative".into());
                    }
                }
                (None, Some(l), Some(a)) if l.len() == a.len() && min_gap.is_none() => {}
                _ => {
                    return bad("a dirac signal needs either count (with optional min_gap) or \
                             equally long locations and amplitudes"
                        .into())
                }
            },
            Some(SignalSpec::Rects { rects }) if rects.is_empty() => {
                return bad("rects signal has no rectangles".into())
            }
            _ => {}
        }
        if let Some(s) = &self.sampling {
            if !(s.usf > 0.0 && s.usf <= 1.0) {
                return bad(format!("usf {} outside (0, 1]", s.usf));
            }
        }
        if let Some(n) = &self.noise {
            if n.snr_db.is_nan() {
                return bad("snr_db is NaN".into());
            }
        }
        for name in self.outputs.names() {
            let p = Path::new(name);
            if name.is_empty() || p.components().count() != 1 || p.file_name().is_none() {
                return bad(format!("output name {name:?} must be a plain file name"));
            }
        }
        self.solver.validate()?;
        if let Some(bench) = &self.bench {
            self.validate_bench(bench)?;
        }
        Ok(())
    }

    fn validate_bench(&self, bench: &BenchSpec) -> CliResult<()> {
        let bad = |m: String| Err(CliError::config(m));
        for s in &bench.solvers {
            s.validate()?;
        }
        if !(bench.tol > 0.0) {
            return bad("bench tol must be positive".into());
        }
        if bench.usf.iter().any(|u| !(*u > 0.0 && *u <= 1.0)) {
            return bad("bench usf values must lie in (0, 1]".into());
        }
        if !bench.usf.is_empty() && self.sampling.is_none() {
            return bad("a usf sweep needs a synthetic signal".into());
        }
        if !bench.seeds.is_empty() {
            let explicit = matches!(self.signal, Some(SignalSpec::Dirac { seed: Some(_), .. }))
                || self.sampling.as_ref().is_some_and(|s| s.seed.is_some())
                || self.noise.as_ref().is_some_and(|n| n.seed.is_some());
            if explicit {
                return bad("a seed sweep cannot be combined with explicit component seeds".into());
            }
        }
        if bench.kind != BenchKind::Table {
            let giraf_only = self.bench_solvers().iter().all(|s| matches!(s, SolverSpec::Giraf(_)));
            if !giraf_only {
                return bad(format!("{:?} benches run GIRAF solvers only", bench.kind).to_lowercase());
            }
        }
        if bench.kind == BenchKind::Oversampling
            && (bench.oversample.is_empty() || bench.oversample.iter().any(|f| !(*f >= 1.0)))
        {
            return bad("oversampling factors must be at least 1".into());
        }
        if bench.kind == BenchKind::InnerSolver
            && (bench.inner.iters == 0 || bench.inner.deltas.iter().any(|d| !(*d > 0.0)))
        {
            return bad("inner-solver bench needs iters > 0 and positive deltas".into());
        }
        Ok(())
    }

    /// Solvers a bench sweeps.
    pub fn bench_solvers(&self) -> Vec<SolverSpec> {
        match &self.bench {
            Some(b) if !b.solvers.is_empty() => b.solvers.clone(),
            _ => vec![self.solver.clone()],
        }
    }

    /// Seeds actually used for data generation at base seed `seed`.
    pub fn component_seeds(&self, seed: u64) -> Seeds {
        let signal = match &self.signal {
            Some(SignalSpec::Dirac {
                count: Some(_),
                seed: s,
                ..
            }) => Some(s.unwrap_or(seed.wrapping_add(1000))),
            _ => None,
        };
        Seeds {
            signal,
            sampling: self.sampling.as_ref().map(|s| s.seed.unwrap_or(seed)),
            noise: self.noise.as_ref().map(|n| n.seed.unwrap_or(seed.wrapping_add(500))),
        }
    }

    /// Copy with every derived seed written out explicitly.
    pub fn with_explicit_seeds(&self) -> Self {
        let seeds = self.component_seeds(self.seed);
        let mut out = self.clone();
        if let Some(SignalSpec::Dirac {
            seed, count: Some(_), ..
        }) = &mut out.signal
        {
            *seed = seeds.signal;
        }
        if let Some(s) = &mut out.sampling {
            s.seed = seeds.sampling;
        }
        if let Some(n) = &mut out.noise {
            n.seed = seeds.noise;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub signal: Option<u64>,
    pub sampling: Option<u64>,
    pub noise: Option<u64>,
}
