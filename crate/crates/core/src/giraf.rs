//! Iteratively reweighted annihilating filter solver on the half-circulant
//! surrogate: eigendecomposition-based filter updates alternating with a
//! weighted least-squares annihilation solved by ADMM or CG.

use std::cell::Cell;
use std::time::Instant;

use num_complex::Complex64;

use crate::dense::{hermitian_eigen, DenseMatrix, HermitianEigen};
use crate::error::{Error, Result};
use crate::grids::{difference_set, restrict, zero_pad, ComplexGrid, DftPlan, IndexBox};
use crate::lifting::{gram_with_plan, LiftingSpec};
use crate::models::{nmse, SamplingOp};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Data-consistency mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Lambda {
    /// `min ‖Ax − b‖² + λ · penalty`.
    Penalized(f64),
    /// `min penalty` subject to `Ax = b`, solved by eliminating the sampled
    /// entries.
    Equality,
}

/// Initial smoothing level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eps0 {
    /// One hundredth of the largest Gram eigenvalue at the initial iterate.
    Auto,
    Explicit(f64),
}

/// Lower limit of the smoothing schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EpsFloor {
    /// `max(ε₀ η^{−outer_iters}, 1e−9 ε₀)`.
    Default,
    /// A multiple of `ε₀`; `Relative(1.0)` freezes the schedule.
    Relative(f64),
    Absolute(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LsSolver {
    Admm,
    Cg,
}

/// Working grid enlargement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Oversample {
    Off,
    /// Pad by the filter extent minus one on each side (`Δ + 2Λ`).
    FilterMargin,
    /// Scale every extent by about this factor, keeping it centred on `Δ`.
    Factor(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub p: f64,
    pub lambda: Lambda,
    pub eps0: Eps0,
    pub eta: f64,
    pub eps_floor: EpsFloor,
    pub outer_iters: usize,
    pub ls_solver: LsSolver,
    pub admm_iters: usize,
    pub cg_iters: usize,
    pub cg_tol: f64,
    pub delta: f64,
    pub oversample: Oversample,
    /// Stop early once `‖x_n − x_{n−1}‖² / ‖x_{n−1}‖²` falls below this.
    pub tol: Option<f64>,
    /// Stop once the NMSE against the supplied ground truth reaches this.
    pub stop_nmse: Option<f64>,
    /// Record wall-clock times; when false all times are reported as zero.
    pub timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 0.0,
            lambda: Lambda::Equality,
            eps0: Eps0::Auto,
            eta: 1.2,
            eps_floor: EpsFloor::Default,
            outer_iters: 50,
            ls_solver: LsSolver::Admm,
            admm_iters: 20,
            cg_iters: 100,
            cg_tol: 1e-12,
            delta: 10.0,
            oversample: Oversample::Off,
            tol: None,
            stop_nmse: None,
            timing: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} is not in [0, 1]", self.p));
        }
        if let Lambda::Penalized(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda = {l} must be positive"));
            }
        }
        if let Eps0::Explicit(e) = self.eps0 {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("eps0 = {e} must be positive"));
            }
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return bad(format!("eta = {} must exceed 1", self.eta));
        }
        match self.eps_floor {
            EpsFloor::Relative(r) if !(r > 0.0 && r <= 1.0) => {
                return bad(format!("relative eps floor {r} must be in (0, 1]"))
            }
            EpsFloor::Absolute(a) if !(a > 0.0 && a.is_finite()) => {
                return bad(format!("eps floor {a} must be positive"))
            }
            _ => {}
        }
        if self.outer_iters == 0 || self.admm_iters == 0 || self.cg_iters == 0 {
            return bad("iteration counts must be positive".into());
        }
        if !(self.delta >= 1.0 && self.delta.is_finite()) {
            return bad(format!("delta = {} must be at least 1", self.delta));
        }
        if let Oversample::Factor(f) = self.oversample {
            if !(f >= 1.0 && f.is_finite()) {
                return bad(format!("oversampling factor {f} must be at least 1"));
            }
        }
        Ok(())
    }

    /// Majorizer constant: `p/2` for `p > 0`, `1/2` for `p = 0`.
    pub fn c_p(&self) -> f64 {
        c_p(self.p)
    }

    /// Smoothing level used by outer iteration `n` (1-based) is `eps_at(n−1)`.
    pub fn eps_at(&self, eps0: f64, n: usize) -> f64 {
        eps_schedule(eps0, self.eta, self.eps_floor, self.outer_iters, n)
    }
}

/// `max(ε₀ η^{−n}, floor)`, where the default floor depends on the total
/// iteration budget.
pub fn eps_schedule(eps0: f64, eta: f64, floor: EpsFloor, iters: usize, n: usize) -> f64 {
    let floor = match floor {
        EpsFloor::Default => (eps0 * eta.powi(-(iters as i32))).max(1e-9 * eps0),
        EpsFloor::Relative(r) => r * eps0,
        EpsFloor::Absolute(a) => a,
    };
    (eps0 * eta.powf(-(n as f64))).max(floor)
}

pub fn c_p(p: f64) -> f64 {
    if p > 0.0 {
        p / 2.0
    } else {
        0.5
    }
}

/// Smoothed Schatten penalty from Gram eigenvalues:
/// `Σ (λ_i + ε)^{p/2}` for `p > 0`, `½ Σ log(λ_i + ε)` for `p = 0`.
pub fn smoothed_penalty(eigvals: &[f64], p: f64, eps: f64) -> f64 {
    if p > 0.0 {
        eigvals.iter().map(|&l| (l.max(0.0) + eps).powf(p / 2.0)).sum()
    } else {
        0.5 * eigvals.iter().map(|&l| (l.max(0.0) + eps).ln()).sum::<f64>()
    }
}

/// The working grid for an oversampling policy.
pub fn oversampled_box(data: &IndexBox, filter: &IndexBox, policy: Oversample) -> Result<IndexBox> {
    let pads: Vec<usize> = match policy {
        Oversample::Off => vec![0; data.ndim()],
        Oversample::FilterMargin => filter.extent().iter().map(|e| e - 1).collect(),
        Oversample::Factor(f) => data
            .extent()
            .iter()
            .map(|&e| ((f - 1.0) * e as f64 / 2.0).round() as usize)
            .collect(),
    };
    IndexBox::new(
        data.offset().iter().zip(&pads).map(|(o, p)| o - *p as i64).collect(),
        data.extent().iter().zip(&pads).map(|(e, p)| e + 2 * p).collect(),
    )
}

/// Output of one filter update.
#[derive(Clone, Debug)]
pub struct FilterState {
    /// Reweighted annihilating filter on `Λ − Λ`.
    pub h: ComplexGrid,
    /// Annihilation weights `Σ_i |F* P* h_i|²`, one per image-domain position
    /// of the data grid (row-major).
    pub d: Vec<f64>,
    /// Gram eigenvalues, ascending, as computed (before clamping).
    pub eigvals: Vec<f64>,
}

/// Builds the reweighted filter and weights from a Gram eigendecomposition.
pub fn filter_from_eigen(
    spec: &LiftingSpec,
    eigen: &HermitianEigen,
    eps: f64,
    p: f64,
    plan: &DftPlan,
) -> Result<FilterState> {
    if !(eps > 0.0) {
        return Err(Error::Config(format!("smoothing level {eps} must be positive")));
    }
    let q = 1.0 - p / 2.0;
    let n = spec.filter_len();
    let v = &eigen.vectors;
    let mu: Vec<f64> = eigen.values.iter().map(|&l| (l.max(0.0) + eps).powf(-q)).collect();
    // H = V diag(mu) V^H
    let scaled = DenseMatrix::from_fn(n, n, |i, k| v.get(i, k) * mu[k])?;
    let hmat = scaled.matmul(&v.adjoint())?;
    let filter = spec.filter_box();
    let diff = difference_set(filter);
    let taps: Vec<Vec<i64>> = filter.indices().collect();
    let mut h = vec![ZERO; diff.len()];
    let mut m = vec![0i64; filter.ndim()];
    for (a, la) in taps.iter().enumerate() {
        for (b, lb) in taps.iter().enumerate() {
            for i in 0..m.len() {
                m[i] = la[i] - lb[i];
            }
            let pos = diff.linear_index(&m).expect("difference lies in the difference set");
            h[pos] += hmat.get(a, b);
        }
    }
    let h = ComplexGrid::new(diff, h)?;
    let data = spec.data_box();
    let mut layout = vec![ZERO; data.len()];
    for (k, &val) in h.domain().indices().zip(h.values()) {
        layout[data.periodic_position(&k)] += val;
    }
    plan.inverse(&mut layout);
    let scale = 1.0 / (data.len() as f64).sqrt();
    let d = layout.iter().map(|v| (v.re * scale).max(0.0)).collect();
    Ok(FilterState {
        h,
        d,
        eigvals: eigen.values.clone(),
    })
}

/// Gram, eigendecomposition and reweighted filter at `x`.
pub fn filter_update(spec: &LiftingSpec, x: &ComplexGrid, eps: f64, p: f64) -> Result<FilterState> {
    let plan = DftPlan::new(spec.data_box());
    let eigen = hermitian_eigen(&gram_with_plan(spec, x, &plan)?)?;
    filter_from_eigen(spec, &eigen, eps, p, &plan)
}

/// Weighted least-squares annihilation problem
/// `‖Ax − b‖² + λ C_p Σ_j Σ_n w[n] |(F* M_j x)[n]|²`
/// (or its equality-constrained counterpart).
#[derive(Debug)]
pub struct LsProblem<'a> {
    spec: &'a LiftingSpec,
    mask: &'a SamplingOp,
    /// Zero-filled measurements `A* b`.
    b: &'a ComplexGrid,
    w: Vec<f64>,
    /// `λ C_p` in penalized mode, `None` under equality constraints.
    reg: Option<f64>,
    plan: DftPlan,
    mweights: Vec<Vec<Complex64>>,
    energy: Vec<f64>,
}

/// How a CG run ended.
#[derive(Clone, Debug)]
pub struct CgOutcome {
    pub x: ComplexGrid,
    pub iterations: usize,
    /// True when the iteration cap was reached before the tolerance.
    pub capped: bool,
}

impl<'a> LsProblem<'a> {
    /// `w` are the penalty weights per image-domain position (the solver
    /// passes `L·d`); `reg` is `λ C_p` or `None` for equality constraints.
    pub fn new(
        spec: &'a LiftingSpec,
        mask: &'a SamplingOp,
        b: &'a ComplexGrid,
        w: Vec<f64>,
        reg: Option<f64>,
    ) -> Result<Self> {
        spec.check_data(b)?;
        if mask.domain() != spec.data_box() {
            return Err(Error::SupportMismatch(
                "sampling mask is not on the lifting data support",
            ));
        }
        if w.len() != spec.data_box().len() {
            return Err(Error::LengthMismatch {
                expected: spec.data_box().len(),
                found: w.len(),
            });
        }
        if w.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Config(
                "annihilation weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            spec,
            mask,
            b,
            w,
            reg,
            plan: DftPlan::new(spec.data_box()),
            mweights: spec.weight_arrays(),
            energy: spec.weight_energy(),
        })
    }

    /// `F* M_j x` for every block.
    fn image_blocks(&self, x: &[Complex64]) -> Vec<Vec<Complex64>> {
        self.mweights
            .iter()
            .map(|m| {
                let mut z: Vec<Complex64> = x.iter().zip(m).map(|(a, b)| a * b).collect();
                self.plan.inverse(&mut z);
                z
            })
            .collect()
    }

    /// `Σ_j M_j* F (w ⊙ F* M_j x)`.
    fn penalty_normal(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; x.len()];
        for (m, mut z) in self.mweights.iter().zip(self.image_blocks(x)) {
            for (v, &wv) in z.iter_mut().zip(&self.w) {
                *v *= wv;
            }
            self.plan.forward(&mut z);
            for ((o, v), mj) in out.iter_mut().zip(&z).zip(m) {
                *o += v * mj.conj();
            }
        }
        out
    }

    /// `Σ_j Σ_n w[n] |(F* M_j x)[n]|²`.
    pub fn penalty(&self, x: &ComplexGrid) -> f64 {
        self.image_blocks(x.values())
            .iter()
            .map(|z| z.iter().zip(&self.w).map(|(v, wv)| wv * v.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// Objective value: data misfit plus weighted penalty, or the penalty
    /// alone under equality constraints.
    pub fn objective(&self, x: &ComplexGrid) -> Result<f64> {
        let pen = self.penalty(x);
        Ok(match self.reg {
            Some(r) => self.misfit(x)? + r * pen,
            None => pen,
        })
    }

    pub fn misfit(&self, x: &ComplexGrid) -> Result<f64> {
        Ok(self.mask.project(x)?.sub(self.b)?.norm_sqr())
    }

    /// Indices where the penalty does not reach: zero total weight energy.
    pub(crate) fn check_unpenalized_sampled(spec: &LiftingSpec, mask: &SamplingOp) -> Result<()> {
        for ((e, &m), k) in spec
            .weight_energy()
            .iter()
            .zip(mask.mask())
            .zip(spec.data_box().indices())
        {
            if *e == 0.0 && !m {
                return Err(Error::Config(format!(
                    "index {k:?} is annihilated by every weighting and must be sampled"
                )));
            }
        }
        Ok(())
    }

    /// ADMM with splitting `y_j = F* M_j x`, `γ = max(w)/δ`; dual variables
    /// start at zero. `monitor` sees every iterate.
    pub fn admm(
        &self,
        x0: &ComplexGrid,
        iters: usize,
        delta: f64,
        mut monitor: impl FnMut(usize, &ComplexGrid),
    ) -> Result<ComplexGrid> {
        self.spec.check_data(x0)?;
        let wmax = self.w.iter().cloned().fold(0.0, f64::max);
        let gamma = wmax / delta;
        let mut x = x0.values().to_vec();
        let bvals = self.b.values();
        let mask = self.mask.mask();
        let l = x.len();
        let mut z = self.image_blocks(&x);
        let mut u = vec![vec![ZERO; l]; z.len()];
        let mut y = vec![vec![ZERO; l]; z.len()];
        let coupling = self.reg.map(|r| r * gamma);
        for it in 1..=iters {
            for ((yj, zj), uj) in y.iter_mut().zip(&z).zip(&u) {
                for n in 0..l {
                    let den = self.w[n] + gamma;
                    yj[n] = if den > 0.0 {
                        (zj[n] - uj[n]) * (gamma / den)
                    } else {
                        ZERO
                    };
                }
            }
            let mut back = vec![ZERO; l];
            for ((yj, uj), m) in y.iter().zip(&u).zip(&self.mweights) {
                let mut s: Vec<Complex64> = yj.iter().zip(uj).map(|(a, b)| a + b).collect();
                self.plan.forward(&mut s);
                for ((o, v), mj) in back.iter_mut().zip(&s).zip(m) {
                    *o += v * mj.conj();
                }
            }
            for k in 0..l {
                match coupling {
                    Some(c) => {
                        let (num, den) = if mask[k] {
                            (bvals[k] + back[k] * c, 1.0 + c * self.energy[k])
                        } else {
                            (back[k] * c, c * self.energy[k])
                        };
                        if den > 0.0 {
                            x[k] = num / den;
                        }
                    }
                    None => {
                        if mask[k] {
                            x[k] = bvals[k];
                        } else if self.energy[k] > 0.0 {
                            x[k] = back[k] / self.energy[k];
                        }
                    }
                }
            }
            z = self.image_blocks(&x);
            for ((uj, yj), zj) in u.iter_mut().zip(&y).zip(&z) {
                for n in 0..l {
                    uj[n] += yj[n] - zj[n];
                }
            }
            let grid = ComplexGrid::new(self.spec.data_box().clone(), x.clone())?;
            monitor(it, &grid);
        }
        let out = ComplexGrid::new(self.spec.data_box().clone(), x)?;
        if !out.is_finite() {
            return Err(Error::NonFinite("ADMM least squares"));
        }
        Ok(out)
    }

    /// Conjugate gradients on the normal equations, warm-started at `x0`.
    /// Under equality constraints only unsampled entries move.
    pub fn cg(
        &self,
        x0: &ComplexGrid,
        iters: usize,
        tol: f64,
        mut monitor: impl FnMut(usize, &ComplexGrid),
    ) -> Result<CgOutcome> {
        self.spec.check_data(x0)?;
        let mask = self.mask.mask();
        let bvals = self.b.values();
        let (scale, free): (f64, Vec<bool>) = match self.reg {
            Some(r) => (r, vec![true; mask.len()]),
            None => (1.0, mask.iter().map(|m| !m).collect()),
        };
        let apply = |v: &[Complex64]| -> Vec<Complex64> {
            let mut out = self.penalty_normal(v);
            for (k, o) in out.iter_mut().enumerate() {
                if !free[k] {
                    *o = ZERO;
                    continue;
                }
                *o *= scale;
                if self.reg.is_some() && mask[k] {
                    *o += v[k];
                }
            }
            out
        };
        let mut x: Vec<Complex64> = x0.values().to_vec();
        if self.reg.is_none() {
            for k in 0..x.len() {
                if mask[k] {
                    x[k] = bvals[k];
                }
            }
        }
        // Residual of the full normal equations restricted to free entries.
        let rhs: Vec<Complex64> = match self.reg {
            Some(_) => bvals
                .iter()
                .zip(mask)
                .map(|(&b, &m)| if m { b } else { ZERO })
                .collect(),
            None => vec![ZERO; x.len()],
        };
        let residual = |x: &[Complex64]| -> Vec<Complex64> {
            let full = match self.reg {
                Some(_) => apply(x),
                None => {
                    let pen = self.penalty_normal(x);
                    pen.iter()
                        .enumerate()
                        .map(|(k, v)| if free[k] { *v } else { ZERO })
                        .collect()
                }
            };
            rhs.iter().zip(&full).map(|(a, b)| a - b).collect()
        };
        let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
        let mut r = residual(&x);
        let reference = match self.reg {
            Some(_) => norm(&rhs),
            None => {
                let fixed: Vec<Complex64> = x
                    .iter()
                    .enumerate()
                    .map(|(k, v)| if free[k] { ZERO } else { *v })
                    .collect();
                norm(&residual(&fixed))
            }
        };
        let target = tol * tol * reference.max(f64::MIN_POSITIVE);
        let mut d = r.clone();
        let mut rr = norm(&r);
        let mut done = 0;
        let mut capped = true;
        if rr <= target {
            capped = false;
        } else {
            for it in 1..=iters {
                let ad = apply(&d);
                let dad: f64 = d.iter().zip(&ad).map(|(a, b)| (a.conj() * b).re).sum();
                if !(dad > 0.0) {
                    capped = false;
                    break;
                }
                let alpha = rr / dad;
                for k in 0..x.len() {
                    x[k] += d[k] * alpha;
                    r[k] -= ad[k] * alpha;
                }
                done = it;
                let grid = ComplexGrid::new(self.spec.data_box().clone(), x.clone())?;
                monitor(it, &grid);
                let rr_new = norm(&r);
                if rr_new <= target {
                    capped = false;
                    break;
                }
                let beta = rr_new / rr;
                rr = rr_new;
                for k in 0..d.len() {
                    d[k] = r[k] + d[k] * beta;
                }
            }
        }
        let out = ComplexGrid::new(self.spec.data_box().clone(), x)?;
        if !out.is_finite() {
            return Err(Error::NonFinite("CG least squares"));
        }
        Ok(CgOutcome {
            x: out,
            iterations: done,
            capped,
        })
    }
}

/// ADMM solve of the weighted least-squares annihilation problem.
#[allow(clippy::too_many_arguments)]
pub fn admm_ls(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    w: &[f64],
    lambda: Lambda,
    p: f64,
    x0: &ComplexGrid,
    iters: usize,
    delta: f64,
) -> Result<ComplexGrid> {
    let reg = match lambda {
        Lambda::Penalized(l) => Some(l * c_p(p)),
        Lambda::Equality => None,
    };
    LsProblem::new(spec, mask, b, w.to_vec(), reg)?.admm(x0, iters, delta, |_, _| {})
}

/// CG solve of the weighted least-squares annihilation problem.
#[allow(clippy::too_many_arguments)]
pub fn cg_ls(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    w: &[f64],
    lambda: Lambda,
    p: f64,
    x0: &ComplexGrid,
    iters: usize,
    tol: f64,
) -> Result<CgOutcome> {
    let reg = match lambda {
        Lambda::Penalized(l) => Some(l * c_p(p)),
        Lambda::Equality => None,
    };
    LsProblem::new(spec, mask, b, w.to_vec(), reg)?.cg(x0, iters, tol, |_, _| {})
}

/// One row of a recovery trace. Record `n` describes the iterate after `n`
/// outer iterations (record 0 is the initial guess); `eps` is the smoothing
/// level that produced it and at which `cost` is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub struct IterRecord {
    pub iter: usize,
    pub eps: f64,
    pub nmse: Option<f64>,
    pub cost: f64,
    /// Extreme singular values of the lifting, when the solver computes them.
    pub sigma_min: Option<f64>,
    pub sigma_max: Option<f64>,
    /// Cumulative wall-clock seconds.
    pub seconds: f64,
    pub filter_seconds: f64,
    pub ls_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RecoveryTrace {
    pub records: Vec<IterRecord>,
    /// Final estimate on the original data support.
    pub x: ComplexGrid,
    /// True when the least-squares solver hit its cap in some iteration.
    pub ls_capped: bool,
}

impl RecoveryTrace {
    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn final_nmse(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.nmse)
    }

    /// First iteration whose NMSE is at most `tol`, with its elapsed time.
    pub fn first_below(&self, tol: f64) -> Option<(usize, f64)> {
        self.records
            .iter()
            .find(|r| r.nmse.is_some_and(|e| e <= tol))
            .map(|r| (r.iter, r.seconds))
    }
}

/// Whether the latest record meets an NMSE stopping target.
pub(crate) fn reached(records: &[IterRecord], target: Option<f64>) -> bool {
    match (target, records.last().and_then(|r| r.nmse)) {
        (Some(t), Some(e)) => e <= t,
        _ => false,
    }
}

/// Monotonic stopwatch that can leave out bookkeeping work.
pub(crate) struct Clock {
    start: Option<Instant>,
    excluded: Cell<f64>,
}

impl Clock {
    pub(crate) fn new(enabled: bool) -> Self {
        Self {
            start: enabled.then(Instant::now),
            excluded: Cell::new(0.0),
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        self.start
            .map_or(0.0, |s| s.elapsed().as_secs_f64() - self.excluded.get())
    }

    /// Runs `f` without charging its time.
    pub(crate) fn exclude<T>(&self, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        if self.start.is_some() {
            self.excluded.set(self.excluded.get() + t.elapsed().as_secs_f64());
        }
        out
    }
}

/// Recovers the lifting's data from samples `b` (zero-filled, on
/// `spec.data_box()`) by alternating filter updates and least-squares
/// annihilation.
pub fn giraf_solve(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &SolverConfig,
    truth: Option<&ComplexGrid>,
) -> Result<RecoveryTrace> {
    config.validate()?;
    spec.check_data(b)?;
    if mask.domain() != spec.data_box() {
        return Err(Error::SupportMismatch(
            "sampling mask is not on the lifting data support",
        ));
    }
    if let Some(t) = truth {
        spec.check_data(t)?;
    }
    let original = spec.data_box().clone();
    let work_box = oversampled_box(&original, spec.filter_box(), config.oversample)?;
    let wspec = spec.with_data_box(work_box.clone())?;
    let wmask = mask.embed(&work_box)?;
    let wb = zero_pad(&mask.project(b)?, &work_box)?;
    LsProblem::check_unpenalized_sampled(&wspec, &wmask)?;

    let clock = Clock::new(config.timing);
    let plan = DftPlan::new(&work_box);
    let l = work_box.len() as f64;
    let reg = match config.lambda {
        Lambda::Penalized(v) => Some(v * config.c_p()),
        Lambda::Equality => None,
    };
    let measure = |x: &ComplexGrid| -> Result<Option<f64>> {
        match truth {
            Some(t) => Ok(Some(nmse(&restrict(x, &original)?, t)?)),
            None => Ok(None),
        }
    };
    let misfit = |x: &ComplexGrid| -> Result<f64> { Ok(wmask.project(x)?.sub(&wb)?.norm_sqr()) };
    let cost = |x: &ComplexGrid, eig: &[f64], eps: f64| -> Result<f64> {
        let s = smoothed_penalty(eig, config.p, eps);
        Ok(match config.lambda {
            Lambda::Penalized(v) => misfit(x)? + v * s,
            Lambda::Equality => s,
        })
    };
    let extremes = |eig: &[f64]| -> (f64, f64) {
        let lo = eig.first().copied().unwrap_or(0.0).max(0.0).sqrt();
        let hi = eig.last().copied().unwrap_or(0.0).max(0.0).sqrt();
        (lo, hi)
    };

    let mut x = wb.clone();
    let mut records = Vec::with_capacity(config.outer_iters + 1);
    let mut ls_capped = false;
    let mut filter_seconds = 0.0;
    let mut ls_seconds = 0.0;

    let t0 = clock.elapsed();
    let mut eigen = hermitian_eigen(&gram_with_plan(&wspec, &x, &plan)?)?;
    filter_seconds += clock.elapsed() - t0;
    let eps0 = match config.eps0 {
        Eps0::Explicit(e) => e,
        Eps0::Auto => {
            let top = eigen.values.last().copied().unwrap_or(0.0);
            if !(top > 0.0) {
                return Err(Error::ZeroSignal);
            }
            top / 100.0
        }
    };
    let (lo, hi) = extremes(&eigen.values);
    records.push(IterRecord {
        iter: 0,
        eps: eps0,
        nmse: measure(&x)?,
        cost: cost(&x, &eigen.values, eps0)?,
        sigma_min: Some(lo),
        sigma_max: Some(hi),
        seconds: clock.elapsed(),
        filter_seconds,
        ls_seconds,
    });

    for n in 1..=config.outer_iters {
        let eps = config.eps_at(eps0, n - 1);
        let t = clock.elapsed();
        let state = filter_from_eigen(&wspec, &eigen, eps, config.p, &plan)?;
        filter_seconds += clock.elapsed() - t;

        let t = clock.elapsed();
        let w: Vec<f64> = state.d.iter().map(|v| v * l).collect();
        let problem = LsProblem::new(&wspec, &wmask, &wb, w, reg)?;
        let previous = x.clone();
        x = match config.ls_solver {
            LsSolver::Admm => problem.admm(&x, config.admm_iters, config.delta, |_, _| {})?,
            LsSolver::Cg => {
                let out = problem.cg(&x, config.cg_iters, config.cg_tol, |_, _| {})?;
                ls_capped |= out.capped;
                out.x
            }
        };
        ls_seconds += clock.elapsed() - t;

        let t = clock.elapsed();
        eigen = hermitian_eigen(&gram_with_plan(&wspec, &x, &plan)?)?;
        filter_seconds += clock.elapsed() - t;

        let (lo, hi) = extremes(&eigen.values);
        records.push(IterRecord {
            iter: n,
            eps,
            nmse: measure(&x)?,
            cost: cost(&x, &eigen.values, eps)?,
            sigma_min: Some(lo),
            sigma_max: Some(hi),
            seconds: clock.elapsed(),
            filter_seconds,
            ls_seconds,
        });
        if reached(&records, config.stop_nmse) {
            break;
        }
        if let Some(tol) = config.tol {
            let change = x.sub(&previous)?.norm_sqr() / previous.norm_sqr().max(f64::MIN_POSITIVE);
            if change < tol {
                break;
            }
        }
    }
    Ok(RecoveryTrace {
        records,
        x: restrict(&x, &original)?,
        ls_capped,
    })
}
