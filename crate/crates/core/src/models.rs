//! Synthetic signals with closed-form Fourier coefficients, sampling
//! operators, noise and error metrics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grids::{ComplexGrid, IndexBox};
use crate::lifting::WeightingOp;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Seeded generator used for every random draw in the crate (ChaCha8).
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Periodic stream of Dirac impulses on `[0, 1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiracSignal {
    locations: Vec<f64>,
    amplitudes: Vec<Complex64>,
}

impl DiracSignal {
    pub fn new(locations: Vec<f64>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if locations.is_empty() || locations.len() != amplitudes.len() {
            return Err(Error::Config(
                "a Dirac stream needs matching, nonempty locations and amplitudes".into(),
            ));
        }
        if locations.iter().any(|x| !(0.0..1.0).contains(x)) {
            return Err(Error::Config("Dirac locations must lie in [0, 1)".into()));
        }
        let sig = Self { locations, amplitudes };
        if sig.min_separation() <= 0.0 {
            return Err(Error::Config("Dirac locations must be distinct".into()));
        }
        Ok(sig)
    }

    /// `r` impulses with unit-modulus random phases at random locations whose
    /// circular gaps are at least `min_gap`.
    pub fn random(r: usize, min_gap: f64, seed: u64) -> Result<Self> {
        if r == 0 || min_gap * r as f64 >= 1.0 {
            return Err(Error::Config(format!(
                "cannot place {r} Diracs with circular gap {min_gap}"
            )));
        }
        let mut rng = rng_from_seed(seed);
        let mut u = rand_distr::Uniform::new(0.0f64, 1.0).expect("valid range");
        for _ in 0..10_000 {
            let mut locs: Vec<f64> = (0..r).map(|_| u.sample(&mut rng)).collect();
            locs.sort_by(f64::total_cmp);
            let sig = Self {
                amplitudes: vec![ZERO; r],
                locations: locs.clone(),
            };
            if sig.min_separation() >= min_gap {
                let amps = (0..r)
                    .map(|_| Complex64::from_polar(1.0, 2.0 * PI * u.sample(&mut rng)))
                    .collect();
                return Self::new(locs, amps);
            }
            u = rand_distr::Uniform::new(0.0f64, 1.0).expect("valid range");
        }
        Err(Error::Config("failed to draw separated Dirac locations".into()))
    }

    pub fn locations(&self) -> &[f64] {
        &self.locations
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.locations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locations.is_empty()
    }

    /// Smallest circular distance between two impulses (1 for a single one).
    pub fn min_separation(&self) -> f64 {
        let mut best = 1.0f64;
        for (i, a) in self.locations.iter().enumerate() {
            for b in &self.locations[i + 1..] {
                let d = (a - b).abs();
                best = best.min(d.min(1.0 - d));
            }
        }
        best
    }
}

/// `ρ̂[k] = Σ_i c_i e^{-j 2π k x_i}` on a 1-D box.
pub fn dirac_fourier(sig: &DiracSignal, domain: &IndexBox) -> Result<ComplexGrid> {
    domain.check_ndim(1)?;
    Ok(ComplexGrid::from_fn(domain.clone(), |k| {
        sig.locations
            .iter()
            .zip(&sig.amplitudes)
            .map(|(x, c)| c * Complex64::from_polar(1.0, -2.0 * PI * k[0] as f64 * x))
            .sum()
    }))
}

/// Filter on `filter_box` that annihilates the Fourier coefficients of `sig`:
/// taps `Λ_0 .. Λ_0 + r` carry the coefficients of `Π_i (z − e^{j2π x_i})`.
pub fn dirac_annihilator(sig: &DiracSignal, filter_box: &IndexBox) -> Result<ComplexGrid> {
    filter_box.check_ndim(1)?;
    let r = sig.len();
    if filter_box.len() < r + 1 {
        return Err(Error::Config(format!(
            "an annihilator of {r} Diracs needs at least {} taps",
            r + 1
        )));
    }
    // Coefficients in increasing power of z.
    let mut poly = vec![Complex64::new(1.0, 0.0)];
    for x in &sig.locations {
        let root = Complex64::from_polar(1.0, 2.0 * PI * x);
        let mut next = vec![ZERO; poly.len() + 1];
        for (i, &p) in poly.iter().enumerate() {
            next[i + 1] += p;
            next[i] -= p * root;
        }
        poly = next;
    }
    poly.resize(filter_box.len(), ZERO);
    ComplexGrid::new(filter_box.clone(), poly)
}

/// Axis-aligned rectangle indicator on `[0, 1)²` scaled by `amplitude`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    pub amplitude: Complex64,
    /// Interval along axis 0.
    pub x: (f64, f64),
    /// Interval along axis 1.
    pub y: (f64, f64),
}

/// Piecewise constant image made of rectangles.
#[derive(Clone, Debug, PartialEq)]
pub struct RectPhantom {
    rects: Vec<Rect>,
}

impl RectPhantom {
    pub fn new(rects: Vec<Rect>) -> Result<Self> {
        for r in &rects {
            for (a, b) in [r.x, r.y] {
                if !(0.0 <= a && a < b && b <= 1.0) {
                    return Err(Error::Config(format!(
                        "rectangle interval ({a}, {b}) must satisfy 0 <= a < b <= 1"
                    )));
                }
            }
        }
        Ok(Self { rects })
    }

    pub fn rects(&self) -> &[Rect] {
        &self.rects
    }
}

fn interval_fourier(k: i64, (a, b): (f64, f64)) -> Complex64 {
    if k == 0 {
        return Complex64::new(b - a, 0.0);
    }
    let w = -2.0 * PI * k as f64;
    (Complex64::from_polar(1.0, w * b) - Complex64::from_polar(1.0, w * a)) / Complex64::new(0.0, w)
}

/// Exact Fourier coefficients `∫∫ f(x, y) e^{-j2π(k_0 x + k_1 y)}` on a 2-D box.
pub fn rect_fourier(ph: &RectPhantom, domain: &IndexBox) -> Result<ComplexGrid> {
    domain.check_ndim(2)?;
    Ok(ComplexGrid::from_fn(domain.clone(), |k| {
        ph.rects
            .iter()
            .map(|r| r.amplitude * interval_fourier(k[0], r.x) * interval_fourier(k[1], r.y))
            .sum()
    }))
}

/// The two Fourier-derivative weightings `j2πk_0`, `j2πk_1` on a 2-D box.
pub fn gradient_weighting(domain: &IndexBox) -> Result<Vec<WeightingOp>> {
    domain.check_ndim(2)?;
    (0..2)
        .map(|a| WeightingOp::fourier_derivative(domain.clone(), a))
        .collect()
}

/// Sampling of a subset of Fourier indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingOp {
    domain: IndexBox,
    mask: Vec<bool>,
}

impl SamplingOp {
    pub fn new(domain: IndexBox, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != domain.len() {
            return Err(Error::LengthMismatch {
                expected: domain.len(),
                found: mask.len(),
            });
        }
        Ok(Self { domain, mask })
    }

    pub fn full(domain: IndexBox) -> Self {
        let mask = vec![true; domain.len()];
        Self { domain, mask }
    }

    pub fn domain(&self) -> &IndexBox {
        &self.domain
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_sampled(&self, index: &[i64]) -> bool {
        self.domain.linear_index(index).is_some_and(|p| self.mask[p])
    }

    /// `A*A x`: keeps sampled entries and zeros the rest.
    pub fn project(&self, x: &ComplexGrid) -> Result<ComplexGrid> {
        self.check(x)?;
        let values = x
            .values()
            .iter()
            .zip(&self.mask)
            .map(|(&v, &m)| if m { v } else { ZERO })
            .collect();
        ComplexGrid::new(self.domain.clone(), values)
    }

    /// `A x`: sampled entries in row-major order.
    pub fn measure(&self, x: &ComplexGrid) -> Result<Vec<Complex64>> {
        self.check(x)?;
        Ok(x.values()
            .iter()
            .zip(&self.mask)
            .filter(|(_, &m)| m)
            .map(|(&v, _)| v)
            .collect())
    }

    /// `A* b`: scatters measured values into a zero grid.
    pub fn adjoint(&self, b: &[Complex64]) -> Result<ComplexGrid> {
        if b.len() != self.count() {
            return Err(Error::LengthMismatch {
                expected: self.count(),
                found: b.len(),
            });
        }
        let mut it = b.iter();
        let values = self
            .mask
            .iter()
            .map(|&m| if m { *it.next().expect("counted") } else { ZERO })
            .collect();
        ComplexGrid::new(self.domain.clone(), values)
    }

    /// The same samples seen on a larger grid (new entries unsampled).
    pub fn embed(&self, target: &IndexBox) -> Result<SamplingOp> {
        if !target.contains_box(&self.domain) {
            return Err(Error::NotContained);
        }
        let mask = target.indices().map(|k| self.is_sampled(&k)).collect();
        Ok(SamplingOp {
            domain: target.clone(),
            mask,
        })
    }

    fn check(&self, x: &ComplexGrid) -> Result<()> {
        if x.domain() != &self.domain {
            return Err(Error::SupportMismatch("grid is not on the sampling domain"));
        }
        Ok(())
    }
}

/// `⌈usf·|box|⌉` distinct indices drawn uniformly without replacement. With
/// `force_dc` the zero frequency is swapped in if it was not drawn, keeping
/// the sample count.
pub fn random_mask(domain: &IndexBox, usf: f64, seed: u64, force_dc: bool) -> Result<SamplingOp> {
    if !(usf > 0.0 && usf <= 1.0) {
        return Err(Error::Config(format!("undersampling factor {usf} is not in (0, 1]")));
    }
    let n = domain.len();
    let count = ((usf * n as f64).ceil() as usize).clamp(1, n);
    let mut rng = rng_from_seed(seed);
    let mut picks = rand::seq::index::sample(&mut rng, n, count).into_vec();
    if force_dc {
        let dc = domain
            .linear_index(&vec![0; domain.ndim()])
            .ok_or_else(|| Error::Config("sampling box does not contain the zero frequency".into()))?;
        if !picks.contains(&dc) {
            *picks.last_mut().expect("at least one sample") = dc;
        }
    }
    let mut mask = vec![false; n];
    for p in picks {
        mask[p] = true;
    }
    SamplingOp::new(domain.clone(), mask)
}

/// Adds circular complex white Gaussian noise to the sampled entries of `b`,
/// rescaled so the sample SNR is exactly `snr_db`. An infinite target
/// returns `b` unchanged.
pub fn add_noise(b: &ComplexGrid, mask: &SamplingOp, snr_db: f64, seed: u64) -> Result<ComplexGrid> {
    if snr_db == f64::INFINITY {
        return Ok(b.clone());
    }
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("invalid SNR target {snr_db}")));
    }
    let measured = mask.measure(b)?;
    let signal: f64 = measured.iter().map(|v| v.norm_sqr()).sum();
    if signal == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let mut rng = rng_from_seed(seed);
    let noise: Vec<Complex64> = measured
        .iter()
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let energy: f64 = noise.iter().map(|v| v.norm_sqr()).sum();
    let scale = (signal * 10f64.powf(-snr_db / 10.0) / energy).sqrt();
    let noisy: Vec<Complex64> = measured.iter().zip(&noise).map(|(s, n)| s + n * scale).collect();
    mask.adjoint(&noisy)
}

/// `‖x − x0‖² / ‖x0‖²`.
pub fn nmse(x: &ComplexGrid, x0: &ComplexGrid) -> Result<f64> {
    let reference = x0.norm_sqr();
    if reference == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(x.sub(x0)?.norm_sqr() / reference)
}

/// `−10 log10(nmse)`.
pub fn snr_db(nmse: f64) -> f64 {
    -10.0 * nmse.log10()
}

/// Number of singular values (descending) whose ratio to the largest is at
/// least `threshold`.
pub fn numerical_rank(singular_values: &[f64], threshold: f64) -> usize {
    match singular_values.first() {
        Some(&s0) if s0 > 0.0 => singular_values.iter().take_while(|&&s| s / s0 >= threshold).count(),
        _ => 0,
    }
}
