//! Reference solvers that work on the exact (non-circulant) lifting: direct
//! IRLS, alternating projections and its proximal relaxation, singular value
//! thresholding and its factored variant. Also Schatten-norm utilities and
//! the trace-inequality majorizer used to check the IRLS descent property.
//!
//! All of these hold the lifted matrix densely, so their size is bounded by
//! the dense oracle budget; exceeding it surfaces as
//! [`Error::BudgetExceeded`].

use num_complex::Complex64;

use crate::dense::{check_budget, hermitian_eigen, hermitian_eigenvalues, thin_svd, DenseMatrix, ThinSvd};
use crate::error::{Error, Result};
use crate::giraf::{
    c_p, eps_schedule, reached, smoothed_penalty, Clock, Eps0, EpsFloor, IterRecord, Lambda, RecoveryTrace,
};
use crate::grids::ComplexGrid;
use crate::lifting::LiftingSpec;
use crate::models::{nmse, SamplingOp};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Irls,
    Ap,
    ApProx,
    Svt,
    SvtUv,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Irls => "irls",
            Algorithm::Ap => "ap",
            Algorithm::ApProx => "ap_prox",
            Algorithm::Svt => "svt",
            Algorithm::SvtUv => "svt_uv",
        }
    }

    /// Whether the algorithm needs a rank (or factor width) estimate.
    pub fn needs_rank(self) -> bool {
        matches!(self, Algorithm::Ap | Algorithm::ApProx | Algorithm::SvtUv)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub algorithm: Algorithm,
    /// Schatten exponent (IRLS only).
    pub p: f64,
    /// Truncation rank for AP / AP-PROX, factor width for SVT+UV.
    pub rank: Option<usize>,
    /// Under `Equality` the SVT-type solvers weigh the nuclear norm by one.
    pub lambda: Lambda,
    /// ADMM penalty parameter for SVT and SVT+UV.
    pub beta: f64,
    pub eps0: Eps0,
    pub eta: f64,
    pub eps_floor: EpsFloor,
    pub max_iters: usize,
    /// Stop once `‖x_n − x_{n−1}‖² / ‖x_{n−1}‖²` drops below this.
    pub tol: f64,
    /// Stop once the NMSE against the supplied ground truth reaches this.
    pub stop_nmse: Option<f64>,
    /// CG budget for the IRLS least-squares step.
    pub cg_iters: usize,
    pub cg_tol: f64,
    pub timing: bool,
}

impl BaselineConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            p: 0.0,
            rank: None,
            lambda: Lambda::Equality,
            beta: 1.0,
            eps0: Eps0::Auto,
            eta: 1.2,
            eps_floor: EpsFloor::Default,
            max_iters: 100,
            tol: 1e-8,
            stop_nmse: None,
            cg_iters: 50,
            cg_tol: 1e-10,
            timing: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.algorithm.needs_rank() {
            match self.rank {
                Some(r) if r > 0 => {}
                _ => return bad(format!("{} needs a positive rank", self.algorithm.name())),
            }
        } else if self.rank.is_some() {
            return bad(format!("{} does not take a rank", self.algorithm.name()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad(format!("p = {} is not in [0, 1]", self.p));
        }
        if let Lambda::Penalized(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lambda = {l} must be positive"));
            }
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta = {} must be positive", self.beta));
        }
        if let Eps0::Explicit(e) = self.eps0 {
            if !(e > 0.0 && e.is_finite()) {
                return bad(format!("eps0 = {e} must be positive"));
            }
        }
        if !(self.eta > 1.0 && self.eta.is_finite()) {
            return bad(format!("eta = {} must exceed 1", self.eta));
        }
        if self.max_iters == 0 || self.cg_iters == 0 {
            return bad("iteration counts must be positive".into());
        }
        if !(self.tol >= 0.0) {
            return bad(format!("tol = {} must be nonnegative", self.tol));
        }
        Ok(())
    }
}

/// Dispatches to the configured algorithm.
pub fn baseline_solve(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &BaselineConfig,
    truth: Option<&ComplexGrid>,
) -> Result<RecoveryTrace> {
    match config.algorithm {
        Algorithm::Irls => irls_direct(spec, mask, b, config, truth),
        Algorithm::Ap => ap_solve(spec, mask, b, config, truth),
        Algorithm::ApProx => ap_prox_solve(spec, mask, b, config, truth),
        Algorithm::Svt => svt_solve(spec, mask, b, config, truth),
        Algorithm::SvtUv => svt_uv_solve(spec, mask, b, config, truth),
    }
}

/// Exact lifting with its index table precomputed: row `(j, γ)`, column `ℓ`
/// reads data position `pos[γ·N + ℓ]` weighted by `M_j`.
pub(crate) struct Lift {
    pos: Vec<usize>,
    weights: Vec<Vec<Complex64>>,
    mult: Vec<f64>,
    valid: usize,
    taps: usize,
}

impl Lift {
    pub(crate) fn new(spec: &LiftingSpec) -> Result<Self> {
        check_budget(spec.exact_rows(), spec.filter_len())?;
        let data = spec.data_box();
        let taps: Vec<Vec<i64>> = spec.filter_box().indices().collect();
        let mut pos = Vec::with_capacity(spec.valid_box().len() * taps.len());
        let mut shifted = vec![0i64; data.ndim()];
        for g in spec.valid_box().indices() {
            for l in &taps {
                for a in 0..shifted.len() {
                    shifted[a] = g[a] - l[a];
                }
                pos.push(data.linear_index(&shifted).ok_or(Error::NotContained)?);
            }
        }
        Ok(Self {
            pos,
            weights: spec.weight_arrays(),
            mult: spec.multiplicity(),
            valid: spec.valid_box().len(),
            taps: taps.len(),
        })
    }

    fn rows(&self) -> usize {
        self.weights.len() * self.valid
    }

    pub(crate) fn forward(&self, x: &[Complex64]) -> Result<DenseMatrix> {
        let weighted: Vec<Vec<Complex64>> = self
            .weights
            .iter()
            .map(|w| w.iter().zip(x).map(|(a, b)| a * b).collect())
            .collect();
        DenseMatrix::from_fn(self.rows(), self.taps, |r, c| {
            let (j, g) = (r / self.valid, r % self.valid);
            weighted[j][self.pos[g * self.taps + c]]
        })
    }

    pub(crate) fn adjoint(&self, m: &DenseMatrix) -> Vec<Complex64> {
        let len = self.mult.len();
        let mut out = vec![ZERO; len];
        let mut block = vec![ZERO; len];
        for (j, w) in self.weights.iter().enumerate() {
            block.iter_mut().for_each(|v| *v = ZERO);
            for g in 0..self.valid {
                let row = j * self.valid + g;
                for c in 0..self.taps {
                    block[self.pos[g * self.taps + c]] += m.get(row, c);
                }
            }
            for ((o, v), wk) in out.iter_mut().zip(&block).zip(w) {
                *o += v * wk.conj();
            }
        }
        out
    }

    /// `(T*T)^{-1} T* m`, keeping `fallback` where the lifting is blind.
    fn pinv(&self, m: &DenseMatrix, fallback: &[Complex64]) -> Vec<Complex64> {
        self.adjoint(m)
            .iter()
            .zip(&self.mult)
            .zip(fallback)
            .map(|((a, &d), &f)| if d > 0.0 { a / d } else { f })
            .collect()
    }
}

/// Squared singular values of `t` padded with zeros to its column count,
/// together with right singular vectors spanning the whole column space.
fn gram_spectrum(t: &DenseMatrix) -> Result<(Vec<f64>, DenseMatrix)> {
    if t.rows() >= t.cols() {
        let svd = thin_svd(t)?;
        Ok((svd.s.iter().map(|s| s * s).collect(), svd.v))
    } else {
        let eig = hermitian_eigen(&t.gram()?)?;
        Ok((eig.values.iter().map(|v| v.max(0.0)).collect(), eig.vectors))
    }
}

fn pad_sq(s: &[f64], n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = s.iter().map(|v| v * v).collect();
    out.resize(n.max(out.len()), 0.0);
    out
}

fn extremes(s: &[f64], n: usize) -> (f64, f64) {
    let hi = s.iter().cloned().fold(0.0, f64::max);
    let lo = if s.len() < n {
        0.0
    } else {
        s.iter().cloned().fold(f64::INFINITY, f64::min)
    };
    (lo.min(hi), hi)
}

/// Shared bookkeeping: data, clock, trace records and the stopping rule.
struct Run<'a> {
    mask: Vec<bool>,
    b: Vec<Complex64>,
    truth: Option<&'a ComplexGrid>,
    spec: &'a LiftingSpec,
    clock: Clock,
    records: Vec<IterRecord>,
}

impl<'a> Run<'a> {
    fn new(
        spec: &'a LiftingSpec,
        mask: &SamplingOp,
        b: &ComplexGrid,
        config: &BaselineConfig,
        truth: Option<&'a ComplexGrid>,
    ) -> Result<Self> {
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
        let bz = mask.project(b)?;
        Ok(Self {
            mask: mask.mask().to_vec(),
            b: bz.into_values(),
            truth,
            spec,
            clock: Clock::new(config.timing),
            records: Vec::new(),
        })
    }

    fn misfit(&self, x: &[Complex64]) -> f64 {
        x.iter()
            .zip(&self.b)
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|((a, b), _)| (a - b).norm_sqr())
            .sum()
    }

    fn grid(&self, x: Vec<Complex64>) -> Result<ComplexGrid> {
        ComplexGrid::new(self.spec.data_box().clone(), x)
    }

    fn record(&mut self, eps: f64, x: &[Complex64], cost: f64, sigma: Option<(f64, f64)>) -> Result<()> {
        let err = match self.truth {
            Some(t) => {
                let g = self.grid(x.to_vec())?;
                Some(self.clock.exclude(|| nmse(&g, t))?)
            }
            None => None,
        };
        let iter = self.records.len();
        let seconds = self.clock.elapsed();
        self.records.push(IterRecord {
            iter,
            eps,
            nmse: err,
            cost,
            sigma_min: sigma.map(|s| s.0),
            sigma_max: sigma.map(|s| s.1),
            seconds,
            filter_seconds: 0.0,
            ls_seconds: 0.0,
        });
        Ok(())
    }

    fn finish(self, x: Vec<Complex64>, ls_capped: bool) -> Result<RecoveryTrace> {
        let x = self.grid(x)?;
        if !x.is_finite() {
            return Err(Error::NonFinite("baseline iterate"));
        }
        Ok(RecoveryTrace {
            records: self.records,
            x,
            ls_capped,
        })
    }
}

fn converged(x: &[Complex64], previous: &[Complex64], tol: f64) -> bool {
    let num: f64 = x.iter().zip(previous).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = previous.iter().map(|v| v.norm_sqr()).sum();
    num <= tol * den.max(f64::MIN_POSITIVE)
}

/// Conjugate gradients for a Hermitian PSD `apply` restricted to the `free`
/// entries of `x`; the other entries stay fixed. Returns true when the
/// iteration cap was hit.
fn cg_restricted(
    apply: impl Fn(&[Complex64]) -> Result<Vec<Complex64>>,
    rhs: &[Complex64],
    x: &mut [Complex64],
    free: &[bool],
    iters: usize,
    tol: f64,
) -> Result<bool> {
    let restrict = |v: &mut Vec<Complex64>| {
        for (a, &f) in v.iter_mut().zip(free) {
            if !f {
                *a = ZERO;
            }
        }
    };
    let norm = |v: &[Complex64]| v.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let ax = apply(x)?;
    let mut r: Vec<Complex64> = rhs.iter().zip(&ax).map(|(a, b)| a - b).collect();
    restrict(&mut r);
    let mut frhs = rhs.to_vec();
    restrict(&mut frhs);
    let mut rr = norm(&r);
    let target = tol * tol * norm(&frhs).max(rr).max(f64::MIN_POSITIVE);
    if rr <= target {
        return Ok(false);
    }
    let mut d = r.clone();
    for _ in 0..iters {
        let mut ad = apply(&d)?;
        restrict(&mut ad);
        let dad: f64 = d.iter().zip(&ad).map(|(a, b)| (a.conj() * b).re).sum();
        if !(dad > 0.0) {
            return Ok(false);
        }
        let alpha = rr / dad;
        for k in 0..x.len() {
            x[k] += d[k] * alpha;
            r[k] -= ad[k] * alpha;
        }
        let rr_new = norm(&r);
        if rr_new <= target {
            return Ok(false);
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for k in 0..d.len() {
            d[k] = r[k] + d[k] * beta;
        }
    }
    Ok(true)
}

/// `V diag(f(λ_i)) V^H`.
fn spectral_matrix(values: &[f64], vectors: &DenseMatrix, f: impl Fn(f64) -> f64) -> Result<DenseMatrix> {
    let n = vectors.rows();
    let scaled = DenseMatrix::from_fn(n, values.len(), |i, k| vectors.get(i, k) * f(values[k]))?;
    scaled.matmul(&vectors.adjoint())
}

/// Iteratively reweighted least squares on the exact lifting:
/// `H = [T(x)^H T(x) + εI]^{p/2 − 1}` from a dense SVD, then
/// `min ‖Ax − b‖² + λ C_p ‖T(x) H^{1/2}‖²` by CG.
pub fn irls_direct(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &BaselineConfig,
    truth: Option<&ComplexGrid>,
) -> Result<RecoveryTrace> {
    let mut run = Run::new(spec, mask, b, config, truth)?;
    let lift = Lift::new(spec)?;
    let n = spec.filter_len();
    let p = config.p;
    let penalty_cost = |run: &Run, x: &[Complex64], eig: &[f64], eps: f64| -> f64 {
        let s = smoothed_penalty(eig, p, eps);
        match config.lambda {
            Lambda::Penalized(l) => run.misfit(x) + l * s,
            Lambda::Equality => s,
        }
    };
    let sig = |eig: &[f64]| {
        let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0).sqrt();
        let hi = eig.iter().cloned().fold(0.0, f64::max).sqrt();
        (lo, hi)
    };

    let mut x = run.b.clone();
    let (mut eig, mut vecs) = gram_spectrum(&lift.forward(&x)?)?;
    let eps0 = match config.eps0 {
        Eps0::Explicit(e) => e,
        Eps0::Auto => {
            let top = eig.iter().cloned().fold(0.0, f64::max);
            if !(top > 0.0) {
                return Err(Error::ZeroSignal);
            }
            top / 100.0
        }
    };
    let cost = penalty_cost(&run, &x, &eig, eps0);
    run.record(eps0, &x, cost, Some(sig(&eig)))?;

    let (reg, free): (Option<f64>, Vec<bool>) = match config.lambda {
        Lambda::Penalized(l) => (Some(l * c_p(p)), vec![true; x.len()]),
        Lambda::Equality => (None, run.mask.iter().map(|m| !m).collect()),
    };
    let rhs: Vec<Complex64> = match reg {
        Some(_) => run.b.clone(),
        None => vec![ZERO; x.len()],
    };
    let mut capped = false;
    for it in 1..=config.max_iters {
        let eps = eps_schedule(eps0, config.eta, config.eps_floor, config.max_iters, it - 1);
        let h = spectral_matrix(&eig, &vecs, |l| (l.max(0.0) + eps).powf(p / 2.0 - 1.0))?;
        let apply = |v: &[Complex64]| -> Result<Vec<Complex64>> {
            let th = lift.forward(v)?.matmul(&h)?;
            let mut out = lift.adjoint(&th);
            if let Some(r) = reg {
                for ((o, vk), &m) in out.iter_mut().zip(v).zip(&run.mask) {
                    *o *= r;
                    if m {
                        *o += vk;
                    }
                }
            }
            Ok(out)
        };
        let previous = x.clone();
        capped |= cg_restricted(apply, &rhs, &mut x, &free, config.cg_iters, config.cg_tol)?;
        let spectrum = gram_spectrum(&lift.forward(&x)?)?;
        eig = spectrum.0;
        vecs = spectrum.1;
        debug_assert_eq!(eig.len(), n);
        let cost = run.clock.exclude(|| penalty_cost(&run, &x, &eig, eps));
        run.record(eps, &x, cost, Some(sig(&eig)))?;
        if reached(&run.records, config.stop_nmse) || converged(&x, &previous, config.tol) {
            break;
        }
    }
    run.finish(x, capped)
}

/// Distance to the nearest rank-`r` matrix, `Σ_{i>r} σ_i²`, from singular
/// values.
fn tail_energy(s: &[f64], r: usize) -> f64 {
    s.iter().skip(r).map(|v| v * v).sum()
}

/// Alternating projections (Cadzow): rank-`r` truncation, projection back
/// onto lifted signals, re-insertion of the measured samples.
pub fn ap_solve(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &BaselineConfig,
    truth: Option<&ComplexGrid>,
) -> Result<RecoveryTrace> {
    projection_solve(spec, mask, b, config, truth, None)
}

/// Proximal alternating projections for
/// `min ‖Ax − b‖² + λ ‖T(x) − X‖²` over `x` and rank-`r` matrices `X`.
/// The `x` step is the closed-form least squares
/// `x = (A*b + λ T*X) / (A*A + λ T*T)`; under equality constraints this
/// reduces to [`ap_solve`].
pub fn ap_prox_solve(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &BaselineConfig,
    truth: Option<&ComplexGrid>,
) -> Result<RecoveryTrace> {
    let lambda = match config.lambda {
        Lambda::Penalized(l) => Some(l),
        Lambda::Equality => None,
    };
    projection_solve(spec, mask, b, config, truth, lambda)
}

fn projection_solve(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &BaselineConfig,
    truth: Option<&ComplexGrid>,
    lambda: Option<f64>,
) -> Result<RecoveryTrace> {
    let mut run = Run::new(spec, mask, b, config, truth)?;
    let lift = Lift::new(spec)?;
    let r = config.rank.ok_or_else(|| Error::Config("rank required".into()))?;
    let n = spec.filter_len();
    let cost = |run: &Run, x: &[Complex64], s: &[f64]| match lambda {
        Some(l) => run.misfit(x) + l * tail_energy(s, r),
        None => tail_energy(s, r),
    };
    let mut x = run.b.clone();
    let mut svd = thin_svd(&lift.forward(&x)?)?;
    let c = cost(&run, &x, &svd.s);
    run.record(0.0, &x, c, Some(extremes(&svd.s, n)))?;
    for _ in 0..config.max_iters {
        let low = svd.reconstruct_with(r, |s| s)?;
        let previous = x.clone();
        projection_step(&lift, &run.mask, &run.b, &low, &mut x, lambda);
        svd = thin_svd(&lift.forward(&x)?)?;
        let c = run.clock.exclude(|| cost(&run, &x, &svd.s));
        run.record(0.0, &x, c, Some(extremes(&svd.s, n)))?;
        if reached(&run.records, config.stop_nmse) || converged(&x, &previous, config.tol) {
            break;
        }
    }
    run.finish(x, false)
}

/// Updates `x` from a rank-truncated lifting `low`: structured projection
/// plus sample re-insertion, or, for penalty `λ`, the closed form
/// `(A*b + λ T*X) / (A*A + λ T*T)` (entries with a zero denominator keep
/// their value).
fn projection_step(
    lift: &Lift,
    mask: &[bool],
    b: &[Complex64],
    low: &DenseMatrix,
    x: &mut Vec<Complex64>,
    lambda: Option<f64>,
) {
    match lambda {
        None => {
            *x = lift.pinv(low, x);
            for k in 0..x.len() {
                if mask[k] {
                    x[k] = b[k];
                }
            }
        }
        Some(l) => {
            let back = lift.adjoint(low);
            for k in 0..x.len() {
                let m = if mask[k] { 1.0 } else { 0.0 };
                let den = m + l * lift.mult[k];
                if den > 0.0 {
                    x[k] = (b[k] * m + back[k] * l) / den;
                }
            }
        }
    }
}

/// Soft-thresholds the singular values of `m` by `tau`, the proximal map of
/// `tau ‖·‖_*`.
pub fn singular_value_threshold(m: &DenseMatrix, tau: f64) -> Result<DenseMatrix> {
    let svd = thin_svd(m)?;
    svd.reconstruct_with(svd.s.len(), |s| (s - tau).max(0.0))
}

/// Best rank-`r` approximation.
pub fn rank_truncate(m: &DenseMatrix, r: usize) -> Result<DenseMatrix> {
    thin_svd(m)?.reconstruct_with(r, |s| s)
}

/// `x` step shared by the ADMM solvers:
/// `min ‖Ax − b‖² + (β/2) ‖T(x) − Z‖²` (or with `Ax = b` enforced).
fn admm_data_step(run: &Run, lift: &Lift, z: &DenseMatrix, x: &mut [Complex64], beta: f64, penalized: bool) {
    let back = lift.adjoint(z);
    for k in 0..x.len() {
        if penalized {
            let m = if run.mask[k] { 2.0 } else { 0.0 };
            let den = m + beta * lift.mult[k];
            if den > 0.0 {
                x[k] = (run.b[k] * m + back[k] * beta) / den;
            }
        } else if run.mask[k] {
            x[k] = run.b[k];
        } else if lift.mult[k] > 0.0 {
            x[k] = back[k] / lift.mult[k];
        }
    }
}

fn nuclear_weight(lambda: Lambda) -> (f64, bool) {
    match lambda {
        Lambda::Penalized(l) => (l, true),
        Lambda::Equality => (1.0, false),
    }
}

/// Singular value thresholding: ADMM on
/// `min ‖Ax − b‖² + λ ‖X‖_*` subject to `X = T(x)`, threshold `λ/β`.
pub fn svt_solve(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &BaselineConfig,
    truth: Option<&ComplexGrid>,
) -> Result<RecoveryTrace> {
    let mut run = Run::new(spec, mask, b, config, truth)?;
    let lift = Lift::new(spec)?;
    let n = spec.filter_len();
    let (lambda, penalized) = nuclear_weight(config.lambda);
    let beta = config.beta;
    let cost = |run: &Run, x: &[Complex64], s: &[f64]| {
        let nuc: f64 = s.iter().sum();
        if penalized {
            run.misfit(x) + lambda * nuc
        } else {
            lambda * nuc
        }
    };
    let mut x = run.b.clone();
    let mut t = lift.forward(&x)?;
    let s = singular_values(&t)?;
    let c = cost(&run, &x, &s);
    run.record(0.0, &x, c, Some(extremes(&s, n)))?;
    let mut dual = DenseMatrix::zeros(t.rows(), t.cols())?;
    for _ in 0..config.max_iters {
        let low = singular_value_threshold(&t.add(&dual)?, lambda / beta)?;
        let previous = x.clone();
        admm_data_step(&run, &lift, &low.sub(&dual)?, &mut x, beta, penalized);
        t = lift.forward(&x)?;
        let residual = t.sub(&low)?;
        let settled = residual.frobenius_norm_sqr() <= config.tol * t.frobenius_norm_sqr();
        dual = dual.add(&residual)?;
        let monitor = run.clock.exclude(|| -> Result<(f64, (f64, f64))> {
            let s = singular_values(&t)?;
            Ok((cost(&run, &x, &s), extremes(&s, n)))
        })?;
        run.record(0.0, &x, monitor.0, Some(monitor.1))?;
        if reached(&run.records, config.stop_nmse) || (settled && converged(&x, &previous, config.tol)) {
            break;
        }
    }
    run.finish(x, false)
}

fn singular_values(t: &DenseMatrix) -> Result<Vec<f64>> {
    crate::dense::singular_values_dense(t)
}

/// Balanced factors `U = U_R Σ_R^{1/2}`, `V = V_R Σ_R^{1/2}` of the leading
/// `r` singular triplets, so `U V^H` is the rank-`r` truncation and
/// `½(‖U‖² + ‖V‖²)` its nuclear norm.
pub fn balanced_factors(svd: &ThinSvd, r: usize) -> Result<(DenseMatrix, DenseMatrix)> {
    let k = r.min(svd.s.len());
    let root: Vec<f64> = svd.s.iter().take(k).map(|s| s.sqrt()).collect();
    // Columns past the available rank stay zero.
    let u = DenseMatrix::from_fn(
        svd.u.rows(),
        r,
        |i, j| if j < k { svd.u.get(i, j) * root[j] } else { ZERO },
    )?;
    let v = DenseMatrix::from_fn(
        svd.v.rows(),
        r,
        |i, j| if j < k { svd.v.get(i, j) * root[j] } else { ZERO },
    )?;
    Ok((u, v))
}

/// `½(‖U‖_F² + ‖V‖_F²)`.
pub fn factored_nuclear_norm(u: &DenseMatrix, v: &DenseMatrix) -> f64 {
    0.5 * (u.frobenius_norm_sqr() + v.frobenius_norm_sqr())
}

/// Minimizer over `U` of `(λ/2)‖U‖² + (β/2)‖Z − U V^H‖²`:
/// `U = β Z V (λI + β V^H V)^{-1}`.
fn ridge_factor(z: &DenseMatrix, v: &DenseMatrix, lambda: f64, beta: f64) -> Result<DenseMatrix> {
    let mut system = v.gram()?;
    system.scale(Complex64::new(beta, 0.0));
    for i in 0..system.rows() {
        system.add_to(i, i, Complex64::new(lambda, 0.0));
    }
    let mut zv = z.matmul(v)?;
    zv.scale(Complex64::new(beta, 0.0));
    // system is Hermitian, so U^H = system^{-1} (βZV)^H.
    Ok(system.solve(&zv.adjoint())?.adjoint())
}

/// SVT with the factorization heuristic: ADMM on
/// `min ‖Ax − b‖² + (λ/2)(‖U‖² + ‖V‖²)` subject to `U V^H = T(x)`, with
/// ridge-regression updates for the width-`R` factors.
pub fn svt_uv_solve(
    spec: &LiftingSpec,
    mask: &SamplingOp,
    b: &ComplexGrid,
    config: &BaselineConfig,
    truth: Option<&ComplexGrid>,
) -> Result<RecoveryTrace> {
    let mut run = Run::new(spec, mask, b, config, truth)?;
    let lift = Lift::new(spec)?;
    let width = config.rank.ok_or_else(|| Error::Config("rank required".into()))?;
    let (lambda, penalized) = nuclear_weight(config.lambda);
    let beta = config.beta;
    let cost = |run: &Run, x: &[Complex64], u: &DenseMatrix, v: &DenseMatrix| {
        let nuc = factored_nuclear_norm(u, v);
        if penalized {
            run.misfit(x) + lambda * nuc
        } else {
            lambda * nuc
        }
    };
    let mut x = run.b.clone();
    let mut t = lift.forward(&x)?;
    let (mut u, mut v) = balanced_factors(&thin_svd(&t)?, width)?;
    let c = cost(&run, &x, &u, &v);
    run.record(0.0, &x, c, None)?;
    let mut dual = DenseMatrix::zeros(t.rows(), t.cols())?;
    for _ in 0..config.max_iters {
        let z = t.add(&dual)?;
        u = ridge_factor(&z, &v, lambda, beta)?;
        v = ridge_factor(&z.adjoint(), &u, lambda, beta)?;
        let low = u.matmul(&v.adjoint())?;
        let previous = x.clone();
        admm_data_step(&run, &lift, &low.sub(&dual)?, &mut x, beta, penalized);
        t = lift.forward(&x)?;
        let residual = t.sub(&low)?;
        let settled = residual.frobenius_norm_sqr() <= config.tol * t.frobenius_norm_sqr();
        dual = dual.add(&residual)?;
        let c = run.clock.exclude(|| cost(&run, &x, &u, &v));
        run.record(0.0, &x, c, None)?;
        if reached(&run.records, config.stop_nmse) || (settled && converged(&x, &previous, config.tol)) {
            break;
        }
    }
    run.finish(x, false)
}

/// Schatten quasi-norm `(Σ σ_i^p)^{1/p}` for `p ∈ (0, 1]`; for `p = 0` the
/// log-determinant form `Σ log σ_i`.
pub fn schatten_p(m: &DenseMatrix, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("p = {p} is not in [0, 1]")));
    }
    let s = singular_values(m)?;
    if p > 0.0 {
        Ok(s.iter().map(|v| v.powf(p)).sum::<f64>().powf(1.0 / p))
    } else {
        if s.contains(&0.0) {
            return Err(Error::SingularLogDet);
        }
        Ok(s.iter().map(|v| v.ln()).sum())
    }
}

/// Smoothed penalty `Tr[(X^H X + εI)^{p/2}]`, or `½ log det(X^H X + εI)`
/// for `p = 0`.
pub fn smoothed_schatten(m: &DenseMatrix, p: f64, eps: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) || !(eps >= 0.0) {
        return Err(Error::Config(format!("invalid p = {p} or eps = {eps}")));
    }
    let eig = pad_sq(&singular_values(m)?, m.cols());
    if p == 0.0 && eig.iter().any(|&l| l + eps == 0.0) {
        return Err(Error::SingularLogDet);
    }
    Ok(smoothed_penalty(&eig, p, eps))
}

/// `g_p(X; X₀) − ‖X‖_{p,ε}^p`, where `g_p` is the trace-inequality
/// majorizer of the smoothed penalty around `X₀`. Nonnegative, and zero at
/// `X = X₀`.
pub fn majorizer_gap(x: &DenseMatrix, x0: &DenseMatrix, p: f64, eps: f64) -> Result<f64> {
    if x.cols() != x0.cols() {
        return Err(Error::DimensionMismatch {
            expected: x0.cols(),
            found: x.cols(),
        });
    }
    if !(eps > 0.0) || !(0.0..=1.0).contains(&p) {
        return Err(Error::Config(format!("invalid p = {p} or eps = {eps}")));
    }
    let gx = x.gram()?;
    let g0 = x0.gram()?;
    let base = hermitian_eigen(&g0)?;
    let diff = gx.sub(&g0)?;
    // Diagonal of W^H (Y − Y₀) W in the eigenbasis of Y₀.
    let proj = base.vectors.adjoint().matmul(&diff)?.matmul(&base.vectors)?;
    let mu: Vec<f64> = base.values.iter().map(|l| l.max(0.0) + eps).collect();
    let y: Vec<f64> = hermitian_eigenvalues(&gx)?.iter().map(|l| l.max(0.0) + eps).collect();
    let q = p / 2.0;
    let gap = if p > 0.0 {
        let g: f64 = mu
            .iter()
            .enumerate()
            .map(|(i, m)| m.powf(q) + q * m.powf(q - 1.0) * proj.get(i, i).re)
            .sum();
        g - y.iter().map(|v| v.powf(q)).sum::<f64>()
    } else {
        let g: f64 = mu.iter().enumerate().map(|(i, m)| m.ln() + proj.get(i, i).re / m).sum();
        0.5 * (g - y.iter().map(|v| v.ln()).sum::<f64>())
    };
    Ok(gap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::IndexBox;
    use crate::lifting::{lift_adjoint, lift_pseudo_inverse, materialize_exact};
    use crate::models::{dirac_fourier, gradient_weighting, random_mask, DiracSignal};
    use crate::testutil::{random_c64, random_grid, seeded};

    fn specs() -> Vec<LiftingSpec> {
        let d2 = IndexBox::centered(&[9, 8]).unwrap();
        vec![
            LiftingSpec::plain(IndexBox::centered(&[21]).unwrap(), IndexBox::centered(&[5]).unwrap()).unwrap(),
            LiftingSpec::new(
                d2.clone(),
                IndexBox::new(vec![0, -1], vec![3, 3]).unwrap(),
                gradient_weighting(&d2).unwrap(),
            )
            .unwrap(),
        ]
    }

    fn random_matrix(rng: &mut impl rand::Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| random_c64(rng)).unwrap()
    }

    fn low_rank(rng: &mut impl rand::Rng, rows: usize, cols: usize, rank: usize) -> DenseMatrix {
        random_matrix(rng, rows, rank)
            .matmul(&random_matrix(rng, rank, cols))
            .unwrap()
    }

    #[test]
    fn lift_table_matches_reference_lifting() {
        let mut rng = seeded(3);
        for spec in specs() {
            let lift = Lift::new(&spec).unwrap();
            let x = random_grid(&mut rng, spec.data_box());
            let t = lift.forward(x.values()).unwrap();
            assert!(t.max_abs_diff(&materialize_exact(&spec, &x).unwrap()).unwrap() < 1e-15);
            let m = random_matrix(&mut rng, spec.exact_rows(), spec.filter_len());
            let a = lift.adjoint(&m);
            let want = lift_adjoint(&spec, &m).unwrap();
            assert!(
                ComplexGrid::new(spec.data_box().clone(), a)
                    .unwrap()
                    .max_abs_diff(&want)
                    .unwrap()
                    < 1e-12
            );
        }
    }

    #[test]
    fn structured_projection_inverts_lifting() {
        let mut rng = seeded(8);
        for spec in specs() {
            let lift = Lift::new(&spec).unwrap();
            let x = random_grid(&mut rng, spec.data_box());
            let fallback = random_grid(&mut rng, spec.data_box());
            let t = lift.forward(x.values()).unwrap();
            let back = lift.pinv(&t, fallback.values());
            let mult = spec.multiplicity();
            for k in 0..back.len() {
                let want = if mult[k] > 0.0 {
                    x.values()[k]
                } else {
                    fallback.values()[k]
                };
                assert!((back[k] - want).norm() < 1e-12);
            }
            let reference = lift_pseudo_inverse(&spec, &t, &fallback).unwrap();
            assert!(
                reference
                    .max_abs_diff(&ComplexGrid::new(spec.data_box().clone(), back.clone()).unwrap())
                    .unwrap()
                    < 1e-12
            );
            // T ∘ T† is idempotent on arbitrary matrices.
            let m = random_matrix(&mut rng, spec.exact_rows(), spec.filter_len());
            let once = lift.forward(&lift.pinv(&m, fallback.values())).unwrap();
            let twice = lift.forward(&lift.pinv(&once, fallback.values())).unwrap();
            assert!(once.max_abs_diff(&twice).unwrap() < 1e-12);
        }
    }

    #[test]
    fn rank_truncation_is_idempotent() {
        let mut rng = seeded(5);
        let m = random_matrix(&mut rng, 12, 7);
        let once = rank_truncate(&m, 3).unwrap();
        let twice = rank_truncate(&once, 3).unwrap();
        assert!(once.max_abs_diff(&twice).unwrap() < 1e-12);
        let s = singular_values(&once).unwrap();
        assert!(s[3] < 1e-12 * s[0]);
    }

    #[test]
    fn distance_to_rank_vanishes_exactly_on_low_rank() {
        let mut rng = seeded(6);
        let m = low_rank(&mut rng, 10, 6, 2);
        let s = singular_values(&m).unwrap();
        assert!(tail_energy(&s, 2) < 1e-20 * s[0] * s[0]);
        assert!(tail_energy(&s, 1) > 1e-3);
    }

    #[test]
    fn thresholding_above_top_singular_value_gives_zero() {
        let mut rng = seeded(7);
        let m = random_matrix(&mut rng, 8, 5);
        let top = singular_values(&m).unwrap()[0];
        let out = singular_value_threshold(&m, top * 1.01).unwrap();
        assert!(out.frobenius_norm() == 0.0);
    }

    /// Scalar prox oracle: for diagonal `Y`, each diagonal entry solves
    /// `min_x ½(x − y)² + τ|x|`; compare against a fine brute-force scan.
    #[test]
    fn thresholding_solves_the_nuclear_prox() {
        let y = [2.5, -1.2, 0.4, 0.9];
        let tau = 0.7;
        let m = DenseMatrix::diagonal(&y.map(|v| Complex64::new(v, 0.0))).unwrap();
        let out = singular_value_threshold(&m, tau).unwrap();
        for (i, &yi) in y.iter().enumerate() {
            let mut best = (f64::INFINITY, 0.0);
            for step in -40000..=40000 {
                let x = step as f64 * 1e-4;
                let f = 0.5 * (x - yi) * (x - yi) + tau * x.abs();
                if f < best.0 {
                    best = (f, x);
                }
            }
            assert!((out.get(i, i).re - best.1).abs() < 2e-4);
            assert!(out.get(i, i).im.abs() < 1e-12);
        }
    }

    #[test]
    fn schatten_examples() {
        let id = DenseMatrix::identity(4).unwrap();
        assert!((schatten_p(&id, 1.0).unwrap() - 4.0).abs() < 1e-12);
        let d = DenseMatrix::diagonal(&[Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)]).unwrap();
        assert!((schatten_p(&d, 0.0).unwrap() - 2f64.ln()).abs() < 1e-12);
        let sing = DenseMatrix::diagonal(&[Complex64::new(2.0, 0.0), ZERO]).unwrap();
        assert!(matches!(schatten_p(&sing, 0.0), Err(Error::SingularLogDet)));
        assert!(matches!(smoothed_schatten(&sing, 0.0, 0.0), Err(Error::SingularLogDet)));
        assert!(smoothed_schatten(&sing, 0.0, 1e-3).is_ok());
    }

    #[test]
    fn schatten_trace_form_agrees() {
        let mut rng = seeded(12);
        for p in [0.25, 0.5, 1.0] {
            let m = random_matrix(&mut rng, 9, 5);
            let eig = hermitian_eigen(&m.gram().unwrap()).unwrap();
            let trace: f64 = eig.values.iter().map(|l| l.max(0.0).powf(p / 2.0)).sum();
            let want = trace.powf(1.0 / p);
            assert!((schatten_p(&m, p).unwrap() - want).abs() < 1e-10 * want);
            let eps = 0.3;
            let smoothed: f64 = eig.values.iter().map(|l| (l + eps).powf(p / 2.0)).sum();
            assert!((smoothed_schatten(&m, p, eps).unwrap() - smoothed).abs() < 1e-10 * smoothed);
        }
    }

    #[test]
    fn majorizer_is_tight_and_above() {
        let mut rng = seeded(13);
        for p in [0.0, 0.5, 1.0] {
            let x0 = random_matrix(&mut rng, 10, 6);
            assert!(majorizer_gap(&x0, &x0, p, 0.1).unwrap().abs() < 1e-10);
            for _ in 0..20 {
                let x = random_matrix(&mut rng, 10, 6);
                assert!(majorizer_gap(&x, &x0, p, 0.1).unwrap() >= -1e-10);
                let mut scaled = x0.clone();
                scaled.scale(Complex64::new(3.0, 0.0));
                assert!(majorizer_gap(&x, &scaled, p, 0.1).unwrap() >= -1e-10);
            }
        }
    }

    #[test]
    fn balanced_factors_attain_the_nuclear_norm() {
        let mut rng = seeded(14);
        let x = low_rank(&mut rng, 12, 8, 3);
        let nuc: f64 = singular_values(&x).unwrap().iter().sum();
        for width in [3, 5] {
            let (u, v) = balanced_factors(&thin_svd(&x).unwrap(), width).unwrap();
            assert!(u.matmul(&v.adjoint()).unwrap().max_abs_diff(&x).unwrap() < 1e-10);
            assert!((factored_nuclear_norm(&u, &v) - nuc).abs() < 1e-6 * nuc);
            // Any other factorization of the same matrix costs at least as much.
            let a = DenseMatrix::diagonal(
                &(0..width)
                    .map(|i| Complex64::new(1.0 + i as f64, 0.5))
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let inv = DenseMatrix::diagonal(
                &(0..width)
                    .map(|i| Complex64::new(1.0, 0.0) / Complex64::new(1.0 + i as f64, 0.5).conj())
                    .collect::<Vec<_>>(),
            )
            .unwrap();
            let (u2, v2) = (u.matmul(&a).unwrap(), v.matmul(&inv).unwrap());
            assert!(u2.matmul(&v2.adjoint()).unwrap().max_abs_diff(&x).unwrap() < 1e-10);
            assert!(factored_nuclear_norm(&u2, &v2) >= nuc * (1.0 - 1e-12));
        }
    }

    #[test]
    fn ridge_factor_minimizes_block_objective() {
        let mut rng = seeded(15);
        let z = random_matrix(&mut rng, 10, 6);
        let v = random_matrix(&mut rng, 6, 3);
        let (lambda, beta) = (0.7, 1.3);
        let u = ridge_factor(&z, &v, lambda, beta).unwrap();
        let objective = |u: &DenseMatrix| {
            0.5 * lambda * u.frobenius_norm_sqr()
                + 0.5 * beta * z.sub(&u.matmul(&v.adjoint()).unwrap()).unwrap().frobenius_norm_sqr()
        };
        let best = objective(&u);
        for _ in 0..20 {
            let mut d = random_matrix(&mut rng, 10, 3);
            d.scale(Complex64::new(1e-3, 0.0));
            assert!(objective(&u.add(&d).unwrap()) >= best);
        }
    }

    #[test]
    fn irls_weight_at_zero_signal_is_scaled_identity() {
        let spec = &specs()[0];
        let lift = Lift::new(spec).unwrap();
        let zero = vec![ZERO; spec.data_box().len()];
        let (eig, vecs) = gram_spectrum(&lift.forward(&zero).unwrap()).unwrap();
        let (eps, p) = (0.2, 0.5);
        let h = spectral_matrix(&eig, &vecs, |l| (l + eps).powf(p / 2.0 - 1.0)).unwrap();
        let mut want = DenseMatrix::identity(spec.filter_len()).unwrap();
        want.scale(Complex64::new(eps.powf(p / 2.0 - 1.0), 0.0));
        assert!(h.max_abs_diff(&want).unwrap() < 1e-12);
    }

    fn dirac_problem(seed: u64) -> (LiftingSpec, SamplingOp, ComplexGrid, ComplexGrid, usize) {
        let domain = IndexBox::centered(&[63]).unwrap();
        let sig = DiracSignal::random(3, 2.0 / 9.0, seed).unwrap();
        let truth = dirac_fourier(&sig, &domain).unwrap();
        let spec = LiftingSpec::plain(domain.clone(), IndexBox::centered(&[9]).unwrap()).unwrap();
        let mask = random_mask(&domain, 0.6, seed + 100, false).unwrap();
        let b = mask.project(&truth).unwrap();
        (spec, mask, b, truth, 3)
    }

    #[test]
    fn exact_low_rank_data_is_a_fixed_point_of_projections() {
        let (spec, mask, _, truth, r) = dirac_problem(1);
        let b = mask.project(&truth).unwrap();
        let lift = Lift::new(&spec).unwrap();
        let low = rank_truncate(&lift.forward(truth.values()).unwrap(), r).unwrap();
        let mut x = lift.pinv(&low, truth.values());
        for (v, (&bv, &m)) in x.iter_mut().zip(b.values().iter().zip(mask.mask())) {
            if m {
                *v = bv;
            }
        }
        let g = ComplexGrid::new(spec.data_box().clone(), x).unwrap();
        assert!(g.max_abs_diff(&truth).unwrap() < 1e-10);
    }

    #[test]
    fn solvers_recover_small_dirac_problem() {
        let (spec, mask, b, truth, r) = dirac_problem(2);
        for alg in [Algorithm::Irls, Algorithm::Ap, Algorithm::Svt, Algorithm::SvtUv] {
            let mut cfg = BaselineConfig::new(alg);
            cfg.max_iters = 300;
            cfg.timing = false;
            if alg.needs_rank() {
                cfg.rank = Some(r);
            }
            let tr = baseline_solve(&spec, &mask, &b, &cfg, Some(&truth)).unwrap();
            let e = tr.final_nmse().unwrap();
            assert!(e < 1e-4, "{} nmse {e}", alg.name());
            assert_eq!(tr.records[0].iter, 0);
            assert!(tr.records.iter().all(|rec| rec.seconds == 0.0));
        }
    }

    #[test]
    fn prox_projection_shares_cadzow_fixed_points() {
        let (spec, mask, b, truth, r) = dirac_problem(3);
        let lift = Lift::new(&spec).unwrap();
        let low = rank_truncate(&lift.forward(truth.values()).unwrap(), r).unwrap();
        for lambda in [None, Some(1.0), Some(1e9)] {
            let mut x = truth.values().to_vec();
            projection_step(&lift, mask.mask(), b.values(), &low, &mut x, lambda);
            let g = ComplexGrid::new(spec.data_box().clone(), x).unwrap();
            assert!(g.max_abs_diff(&truth).unwrap() < 1e-10 * truth.norm());
        }
        // With a moderate λ the relaxed problem still recovers consistent data.
        let mut prox = BaselineConfig::new(Algorithm::ApProx);
        prox.rank = Some(r);
        prox.lambda = Lambda::Penalized(1.0);
        prox.max_iters = 300;
        prox.timing = false;
        let p = ap_prox_solve(&spec, &mask, &b, &prox, Some(&truth)).unwrap();
        assert!(p.final_nmse().unwrap() < 1e-3, "{}", p.final_nmse().unwrap());
    }

    #[test]
    fn irls_cost_is_monotone_with_frozen_eps() {
        let (spec, mask, b, truth, _) = dirac_problem(4);
        let mut cfg = BaselineConfig::new(Algorithm::Irls);
        cfg.p = 1.0;
        cfg.lambda = Lambda::Penalized(1e-2);
        cfg.eps_floor = EpsFloor::Relative(1.0);
        cfg.max_iters = 15;
        cfg.cg_iters = 500;
        cfg.cg_tol = 1e-13;
        cfg.tol = 0.0;
        let tr = irls_direct(&spec, &mask, &b, &cfg, Some(&truth)).unwrap();
        for w in tr.records.windows(2) {
            assert!(w[1].cost <= w[0].cost * (1.0 + 1e-9), "{} -> {}", w[0].cost, w[1].cost);
        }
    }

    #[test]
    fn validation_rejects_missing_rank() {
        let cfg = BaselineConfig::new(Algorithm::Ap);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = BaselineConfig::new(Algorithm::Svt);
        cfg.rank = Some(3);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn budget_overflow_is_reported() {
        let domain = IndexBox::centered(&[255, 255]).unwrap();
        let spec = LiftingSpec::new(
            domain.clone(),
            IndexBox::centered(&[45, 45]).unwrap(),
            gradient_weighting(&domain).unwrap(),
        )
        .unwrap();
        assert!(matches!(Lift::new(&spec), Err(Error::BudgetExceeded { .. })));
    }
}
