//! Convolutional liftings `T(x)` (multi-level Toeplitz blocks, one per
//! Fourier weighting) and their half-circulant surrogates `T̆(x)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dense::{check_budget, DenseMatrix};
use crate::error::{Error, Result};
use crate::grids::{kernel_layout, valid_set, ComplexGrid, DftPlan, IndexBox};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// What a weighting does to each Fourier coefficient.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightingKind {
    Identity,
    /// Multiplication by `j 2 pi k_axis`.
    FourierDerivative {
        axis: usize,
    },
    /// Multiplication by an arbitrary grid of weights.
    Elementwise(ComplexGrid),
}

/// Diagonal weighting `M_j` acting on the data support.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightingOp {
    kind: WeightingKind,
    grid: IndexBox,
}

impl WeightingOp {
    pub fn identity(grid: IndexBox) -> Self {
        Self {
            kind: WeightingKind::Identity,
            grid,
        }
    }

    pub fn fourier_derivative(grid: IndexBox, axis: usize) -> Result<Self> {
        if axis >= grid.ndim() {
            return Err(Error::DimensionMismatch {
                expected: grid.ndim(),
                found: axis + 1,
            });
        }
        Ok(Self {
            kind: WeightingKind::FourierDerivative { axis },
            grid,
        })
    }

    pub fn elementwise(weights: ComplexGrid) -> Result<Self> {
        if !weights.is_finite() {
            return Err(Error::NonFinite("elementwise weighting"));
        }
        Ok(Self {
            grid: weights.domain().clone(),
            kind: WeightingKind::Elementwise(weights),
        })
    }

    pub fn kind(&self) -> &WeightingKind {
        &self.kind
    }

    pub fn grid(&self) -> &IndexBox {
        &self.grid
    }

    /// Diagonal entries in row-major order over the grid.
    pub fn weights(&self) -> Vec<Complex64> {
        match &self.kind {
            WeightingKind::Identity => vec![Complex64::new(1.0, 0.0); self.grid.len()],
            WeightingKind::FourierDerivative { axis } => self
                .grid
                .indices()
                .map(|k| Complex64::new(0.0, 2.0 * PI * k[*axis] as f64))
                .collect(),
            WeightingKind::Elementwise(w) => w.values().to_vec(),
        }
    }

    pub fn apply(&self, x: &ComplexGrid) -> Result<ComplexGrid> {
        self.check_grid(x)?;
        let w = self.weights();
        let values = x.values().iter().zip(&w).map(|(a, b)| a * b).collect();
        ComplexGrid::new(self.grid.clone(), values)
    }

    pub fn apply_adjoint(&self, x: &ComplexGrid) -> Result<ComplexGrid> {
        self.check_grid(x)?;
        let w = self.weights();
        let values = x.values().iter().zip(&w).map(|(a, b)| a * b.conj()).collect();
        ComplexGrid::new(self.grid.clone(), values)
    }

    /// The same weighting rule evaluated on another grid. Elementwise
    /// weights have no rule to extend them and are rejected.
    pub fn on_grid(&self, grid: &IndexBox) -> Result<Self> {
        match &self.kind {
            WeightingKind::Identity => Ok(Self::identity(grid.clone())),
            WeightingKind::FourierDerivative { axis } => Self::fourier_derivative(grid.clone(), *axis),
            WeightingKind::Elementwise(_) if grid == &self.grid => Ok(self.clone()),
            WeightingKind::Elementwise(_) => Err(Error::Config(
                "elementwise weightings cannot be moved to an oversampled grid".into(),
            )),
        }
    }

    fn check_grid(&self, x: &ComplexGrid) -> Result<()> {
        if x.domain() != &self.grid {
            return Err(Error::SupportMismatch("weighting grid differs from data support"));
        }
        Ok(())
    }
}

/// A lifting: data support, filter support and the stacked weightings.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftingSpec {
    data_box: IndexBox,
    filter_box: IndexBox,
    valid_box: IndexBox,
    weightings: Vec<WeightingOp>,
}

impl LiftingSpec {
    pub fn new(data_box: IndexBox, filter_box: IndexBox, weightings: Vec<WeightingOp>) -> Result<Self> {
        let valid_box = valid_set(&data_box, &filter_box)?;
        if weightings.is_empty() {
            return Err(Error::Config("a lifting needs at least one weighting".into()));
        }
        if weightings.iter().any(|w| w.grid() != &data_box) {
            return Err(Error::SupportMismatch("weighting grid differs from data support"));
        }
        Ok(Self {
            data_box,
            filter_box,
            valid_box,
            weightings,
        })
    }

    /// Single identity-weighted block.
    pub fn plain(data_box: IndexBox, filter_box: IndexBox) -> Result<Self> {
        let w = WeightingOp::identity(data_box.clone());
        Self::new(data_box, filter_box, vec![w])
    }

    pub fn data_box(&self) -> &IndexBox {
        &self.data_box
    }

    pub fn filter_box(&self) -> &IndexBox {
        &self.filter_box
    }

    pub fn valid_box(&self) -> &IndexBox {
        &self.valid_box
    }

    pub fn weightings(&self) -> &[WeightingOp] {
        &self.weightings
    }

    pub fn num_blocks(&self) -> usize {
        self.weightings.len()
    }

    /// `N = |Λ|`.
    pub fn filter_len(&self) -> usize {
        self.filter_box.len()
    }

    /// Rows of the exact lifting, `K |Γ|`.
    pub fn exact_rows(&self) -> usize {
        self.num_blocks() * self.valid_box.len()
    }

    /// Rows of the surrogate, `K |Δ|`.
    pub fn surrogate_rows(&self) -> usize {
        self.num_blocks() * self.data_box.len()
    }

    /// The same lifting with every weighting re-evaluated on `data_box`.
    pub fn with_data_box(&self, data_box: IndexBox) -> Result<Self> {
        let weightings = self
            .weightings
            .iter()
            .map(|w| w.on_grid(&data_box))
            .collect::<Result<Vec<_>>>()?;
        Self::new(data_box, self.filter_box.clone(), weightings)
    }

    /// Weighted copies `M_j x`.
    pub fn weighted(&self, x: &ComplexGrid) -> Result<Vec<ComplexGrid>> {
        self.check_data(x)?;
        self.weightings.iter().map(|w| w.apply(x)).collect()
    }

    /// Weight arrays of all blocks, row-major over the data box.
    pub fn weight_arrays(&self) -> Vec<Vec<Complex64>> {
        self.weightings.iter().map(WeightingOp::weights).collect()
    }

    /// `Σ_j |M_j[k]|²` per data index.
    pub fn weight_energy(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.data_box.len()];
        for w in self.weight_arrays() {
            for (o, v) in out.iter_mut().zip(&w) {
                *o += v.norm_sqr();
            }
        }
        out
    }

    /// Diagonal of `T*T`: `Σ_j |M_j[k]|²` times the number of lifted entries
    /// that copy `x[k]`.
    pub fn multiplicity(&self) -> Vec<f64> {
        let ndim = self.data_box.ndim();
        let per_axis: Vec<Vec<f64>> = (0..ndim)
            .map(|a| {
                let (d0, de) = (self.data_box.offset()[a], self.data_box.extent()[a] as i64);
                let (l0, le) = (self.filter_box.offset()[a], self.filter_box.extent()[a] as i64);
                let (g0, ge) = (self.valid_box.offset()[a], self.valid_box.extent()[a] as i64);
                (d0..d0 + de)
                    .map(|k| (l0..l0 + le).filter(|l| (g0..g0 + ge).contains(&(k + l))).count() as f64)
                    .collect()
            })
            .collect();
        let energy = self.weight_energy();
        self.data_box
            .indices()
            .zip(energy)
            .map(|(k, e)| {
                let count: f64 = (0..ndim)
                    .map(|a| per_axis[a][(k[a] - self.data_box.offset()[a]) as usize])
                    .product();
                e * count
            })
            .collect()
    }

    pub(crate) fn check_data(&self, x: &ComplexGrid) -> Result<()> {
        if x.domain() != &self.data_box {
            return Err(Error::SupportMismatch("grid is not on the lifting data support"));
        }
        Ok(())
    }

    pub(crate) fn check_filter(&self, h: &ComplexGrid) -> Result<()> {
        if h.domain() != &self.filter_box {
            return Err(Error::SupportMismatch("filter is not on the lifting filter support"));
        }
        Ok(())
    }

    /// Position in the data grid of every valid index (wrapping when the
    /// valid set pokes outside the data support).
    pub(crate) fn valid_positions(&self) -> Vec<usize> {
        self.valid_box
            .indices()
            .map(|g| self.data_box.wrapped_linear_index(&g))
            .collect()
    }
}

/// FFT machinery for valid convolutions on a fixed lifting.
#[derive(Debug)]
pub struct ConvEngine {
    plan: DftPlan,
    data_box: IndexBox,
    gather: Vec<usize>,
    scale: f64,
}

impl ConvEngine {
    pub fn new(spec: &LiftingSpec) -> Self {
        Self {
            plan: DftPlan::new(spec.data_box()),
            data_box: spec.data_box().clone(),
            gather: spec.valid_positions(),
            scale: (spec.data_box().len() as f64).sqrt(),
        }
    }

    pub fn plan(&self) -> &DftPlan {
        &self.plan
    }

    /// `√L · F(P* h)`, the multiplier of circular convolution with `h`.
    pub fn kernel_spectrum(&self, h: &ComplexGrid) -> Result<Vec<Complex64>> {
        let mut k = kernel_layout(h, &self.data_box)?;
        self.plan.forward(&mut k);
        for v in k.iter_mut() {
            *v *= self.scale;
        }
        Ok(k)
    }

    /// Forward transform of a data array.
    pub fn spectrum(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut s = y.to_vec();
        self.plan.forward(&mut s);
        s
    }

    /// Valid convolution from the spectra of data and kernel; output is in
    /// row-major order over the valid set.
    pub fn valid_conv(&self, y_hat: &[Complex64], k_hat: &[Complex64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = y_hat.iter().zip(k_hat).map(|(a, b)| a * b).collect();
        self.plan.inverse(&mut c);
        self.gather.iter().map(|&p| c[p]).collect()
    }

    /// Adjoint of `y ↦ valid_conv(F y, k_hat)`, returned in the transform
    /// domain (`F` of the data-domain result) and accumulated into `acc`.
    pub fn valid_conv_adjoint_spectrum(&self, r: &[Complex64], k_hat: &[Complex64], acc: &mut [Complex64]) {
        let mut z = vec![ZERO; self.data_box.len()];
        for (&p, &v) in self.gather.iter().zip(r) {
            z[p] += v;
        }
        self.plan.forward(&mut z);
        for ((a, zv), k) in acc.iter_mut().zip(&z).zip(k_hat) {
            *a += zv * k.conj();
        }
    }
}

/// `[(M_j x) * h restricted to Γ]` for every block, via FFTs.
pub fn apply_lift(spec: &LiftingSpec, x: &ComplexGrid, h: &ComplexGrid) -> Result<Vec<ComplexGrid>> {
    spec.check_data(x)?;
    spec.check_filter(h)?;
    let engine = ConvEngine::new(spec);
    let k_hat = engine.kernel_spectrum(h)?;
    spec.weighted(x)?
        .iter()
        .map(|y| {
            let out = engine.valid_conv(&engine.spectrum(y.values()), &k_hat);
            ComplexGrid::new(spec.valid_box().clone(), out)
        })
        .collect()
}

/// Dense exact lifting: rows `(j, γ ∈ Γ)`, columns `ℓ ∈ Λ`, entry
/// `(M_j x)[γ − ℓ]`.
pub fn materialize_exact(spec: &LiftingSpec, x: &ComplexGrid) -> Result<DenseMatrix> {
    check_budget(spec.exact_rows(), spec.filter_len())?;
    let ys = spec.weighted(x)?;
    let taps: Vec<Vec<i64>> = spec.filter_box().indices().collect();
    let rows: Vec<Vec<i64>> = spec.valid_box().indices().collect();
    let m = rows.len();
    let data = spec.data_box();
    let mut shifted = vec![0i64; data.ndim()];
    let mut out = DenseMatrix::zeros(spec.exact_rows(), spec.filter_len())?;
    for (j, y) in ys.iter().enumerate() {
        for (r, g) in rows.iter().enumerate() {
            for (c, l) in taps.iter().enumerate() {
                for a in 0..shifted.len() {
                    shifted[a] = g[a] - l[a];
                }
                let pos = data.linear_index(&shifted).ok_or(Error::NotContained)?;
                out.set(j * m + r, c, y.values()[pos]);
            }
        }
    }
    Ok(out)
}

/// Dense half-circulant surrogate: rows `(j, k ∈ Δ)`, entry
/// `(M_j x)[k − ℓ]` with `k − ℓ` wrapped periodically into `Δ`.
pub fn materialize_surrogate(spec: &LiftingSpec, x: &ComplexGrid) -> Result<DenseMatrix> {
    check_budget(spec.surrogate_rows(), spec.filter_len())?;
    let ys = spec.weighted(x)?;
    let taps: Vec<Vec<i64>> = spec.filter_box().indices().collect();
    let data = spec.data_box();
    let l = data.len();
    let mut shifted = vec![0i64; data.ndim()];
    let mut out = DenseMatrix::zeros(spec.surrogate_rows(), spec.filter_len())?;
    for (j, y) in ys.iter().enumerate() {
        for (r, k) in data.indices().enumerate() {
            for (c, t) in taps.iter().enumerate() {
                for a in 0..shifted.len() {
                    shifted[a] = k[a] - t[a];
                }
                out.set(j * l + r, c, y.values()[data.wrapped_linear_index(&shifted)]);
            }
        }
    }
    Ok(out)
}

/// Summed circular autocorrelation `R = Σ_j √L · F|F* M_j x|²`, indexed by
/// periodic position on the data grid.
pub fn autocorrelation(spec: &LiftingSpec, x: &ComplexGrid, plan: &DftPlan) -> Result<Vec<Complex64>> {
    let l = spec.data_box().len();
    let mut acc = vec![ZERO; l];
    for y in spec.weighted(x)? {
        let mut z = y.into_values();
        plan.inverse(&mut z);
        for (a, v) in acc.iter_mut().zip(&z) {
            *a += v.norm_sqr();
        }
    }
    plan.forward(&mut acc);
    let scale = (l as f64).sqrt();
    for a in acc.iter_mut() {
        *a *= scale;
    }
    Ok(acc)
}

/// Gram matrix `T̆(x)^H T̆(x)` from FFTs: `G[a, b] = R[ℓ_a − ℓ_b]`.
pub fn gram_surrogate(spec: &LiftingSpec, x: &ComplexGrid) -> Result<DenseMatrix> {
    let plan = DftPlan::new(spec.data_box());
    gram_with_plan(spec, x, &plan)
}

pub(crate) fn gram_with_plan(spec: &LiftingSpec, x: &ComplexGrid, plan: &DftPlan) -> Result<DenseMatrix> {
    let r = autocorrelation(spec, x, plan)?;
    let data = spec.data_box();
    let taps: Vec<Vec<i64>> = spec.filter_box().indices().collect();
    let n = taps.len();
    let mut diff = vec![0i64; data.ndim()];
    let mut g = DenseMatrix::zeros(n, n)?;
    for (a, la) in taps.iter().enumerate() {
        for (b, lb) in taps.iter().enumerate().take(a + 1) {
            for i in 0..diff.len() {
                diff[i] = la[i] - lb[i];
            }
            let v = r[data.periodic_position(&diff)];
            g.set(a, b, v);
            g.set(b, a, v.conj());
        }
        let d = g.get(a, a);
        g.set(a, a, Complex64::new(d.re, 0.0));
    }
    Ok(g)
}

/// Adjoint of the exact lifting applied to a dense matrix of lifting shape:
/// `x[k] = Σ_j conj(M_j[k]) Σ_{γ − ℓ = k} X_j[γ, ℓ]`.
pub fn lift_adjoint(spec: &LiftingSpec, m: &DenseMatrix) -> Result<ComplexGrid> {
    if m.rows() != spec.exact_rows() || m.cols() != spec.filter_len() {
        return Err(Error::DimensionMismatch {
            expected: spec.exact_rows() * spec.filter_len(),
            found: m.rows() * m.cols(),
        });
    }
    let data = spec.data_box();
    let taps: Vec<Vec<i64>> = spec.filter_box().indices().collect();
    let rows: Vec<Vec<i64>> = spec.valid_box().indices().collect();
    let nrows = rows.len();
    let mut shifted = vec![0i64; data.ndim()];
    let mut out = vec![ZERO; data.len()];
    for (j, w) in spec.weight_arrays().iter().enumerate() {
        let mut block = vec![ZERO; data.len()];
        for (r, g) in rows.iter().enumerate() {
            for (c, l) in taps.iter().enumerate() {
                for a in 0..shifted.len() {
                    shifted[a] = g[a] - l[a];
                }
                let pos = data.linear_index(&shifted).ok_or(Error::NotContained)?;
                block[pos] += m.get(j * nrows + r, c);
            }
        }
        for ((o, b), wk) in out.iter_mut().zip(&block).zip(w) {
            *o += b * wk.conj();
        }
    }
    ComplexGrid::new(data.clone(), out)
}

/// Projection back onto lifted signals, `(T*T)^{-1} T* X`. Entries whose
/// multiplicity is zero (unweighted by every block) are copied from
/// `fallback`.
pub fn lift_pseudo_inverse(spec: &LiftingSpec, m: &DenseMatrix, fallback: &ComplexGrid) -> Result<ComplexGrid> {
    spec.check_data(fallback)?;
    let adj = lift_adjoint(spec, m)?;
    let diag = spec.multiplicity();
    let values = adj
        .values()
        .iter()
        .zip(&diag)
        .zip(fallback.values())
        .map(|((a, &d), &f)| if d > 0.0 { a / d } else { f })
        .collect();
    ComplexGrid::new(spec.data_box().clone(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::singular_values_dense;
    use crate::grids::linear_conv_valid;
    use crate::testutil::{random_grid, rel_diff, seeded};
    use rand::Rng;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gradient_spec(data: IndexBox, filter: IndexBox) -> LiftingSpec {
        let w = (0..data.ndim())
            .map(|a| WeightingOp::fourier_derivative(data.clone(), a).unwrap())
            .collect();
        LiftingSpec::new(data, filter, w).unwrap()
    }

    fn random_instance(rng: &mut impl Rng, gradient: bool) -> LiftingSpec {
        let ndim = rng.random_range(1..=2usize);
        let (data_ext, filt_ext): (Vec<usize>, Vec<usize>) = if ndim == 1 {
            let d = rng.random_range(4..=40usize);
            (vec![d], vec![rng.random_range(1..=d.min(9))])
        } else {
            let d0 = rng.random_range(3..=16usize);
            let d1 = rng.random_range(3..=16usize);
            (
                vec![d0, d1],
                vec![rng.random_range(1..=d0.min(5)), rng.random_range(1..=d1.min(5))],
            )
        };
        let data_off: Vec<i64> = data_ext.iter().map(|_| rng.random_range(-8..=3)).collect();
        let filt_off: Vec<i64> = filt_ext.iter().map(|_| rng.random_range(-4..=2)).collect();
        let data = IndexBox::new(data_off, data_ext).unwrap();
        let filter = IndexBox::new(filt_off, filt_ext).unwrap();
        if gradient {
            gradient_spec(data, filter)
        } else {
            LiftingSpec::plain(data, filter).unwrap()
        }
    }

    #[test]
    fn one_dimensional_toeplitz_layout() {
        let data = IndexBox::new(vec![0], vec![5]).unwrap();
        let filter = IndexBox::new(vec![0], vec![2]).unwrap();
        let spec = LiftingSpec::plain(data.clone(), filter).unwrap();
        let x = ComplexGrid::new(data, (0..5).map(|v| c(v as f64)).collect()).unwrap();
        let t = materialize_exact(&spec, &x).unwrap();
        assert_eq!((t.rows(), t.cols()), (4, 2));
        for r in 0..4 {
            assert_eq!(t.row(r), vec![c(r as f64 + 1.0), c(r as f64)]);
        }
        let s = materialize_surrogate(&spec, &x).unwrap();
        assert_eq!((s.rows(), s.cols()), (5, 2));
        assert_eq!(s.row(0), vec![c(0.0), c(4.0)]);
        for r in 1..5 {
            assert_eq!(s.row(r), t.row(r - 1));
        }
    }

    #[test]
    fn table_sized_gradient_lifting_shape() {
        let data = IndexBox::centered(&[65, 65]).unwrap();
        let filter = IndexBox::centered(&[9, 9]).unwrap();
        let spec = gradient_spec(data, filter);
        assert_eq!(spec.valid_box().extent(), &[57, 57]);
        assert_eq!((spec.exact_rows(), spec.filter_len()), (6498, 81));
    }

    #[test]
    fn apply_lift_matches_dense_and_direct_convolution() {
        let mut rng = seeded(11);
        for trial in 0..60 {
            let spec = random_instance(&mut rng, trial % 2 == 1);
            let x = random_grid(&mut rng, spec.data_box());
            let h = random_grid(&mut rng, spec.filter_box());
            let fast = apply_lift(&spec, &x, &h).unwrap();
            let dense = materialize_exact(&spec, &x).unwrap().mul_vec(h.values()).unwrap();
            let stacked: Vec<Complex64> = fast.iter().flat_map(|g| g.values().to_vec()).collect();
            let err = stacked
                .iter()
                .zip(&dense)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-12, "trial {trial}: {err}");
            let direct = linear_conv_valid(&spec.weighted(&x).unwrap()[0], &h).unwrap();
            assert!(direct.max_abs_diff(&fast[0]).unwrap() < 1e-10);
        }
    }

    #[test]
    fn columns_are_unit_filter_responses() {
        let mut rng = seeded(4);
        let spec = random_instance(&mut rng, true);
        let x = random_grid(&mut rng, spec.data_box());
        let t = materialize_exact(&spec, &x).unwrap();
        for (col, l) in spec.filter_box().indices().enumerate() {
            let e = ComplexGrid::delta(spec.filter_box().clone(), &l).unwrap();
            let lifted: Vec<Complex64> = apply_lift(&spec, &x, &e)
                .unwrap()
                .iter()
                .flat_map(|g| g.values().to_vec())
                .collect();
            assert!(rel_diff(&lifted, &t.column(col)) < 1e-12);
        }
    }

    #[test]
    fn delta_filter_restricts_data() {
        let data = IndexBox::new(vec![-2, 1], vec![6, 5]).unwrap();
        let filter = IndexBox::new(vec![0, 0], vec![1, 1]).unwrap();
        let spec = LiftingSpec::plain(data.clone(), filter.clone()).unwrap();
        let x = random_grid(&mut seeded(2), &data);
        let out = apply_lift(&spec, &x, &ComplexGrid::delta(filter, &[0, 0]).unwrap()).unwrap();
        assert!(out[0].max_abs_diff(&x).unwrap() < 1e-13);
    }

    #[test]
    fn surrogate_rows_contain_exact_rows() {
        let mut rng = seeded(21);
        for trial in 0..20 {
            let spec = random_instance(&mut rng, trial % 2 == 0);
            let x = random_grid(&mut rng, spec.data_box());
            let t = materialize_exact(&spec, &x).unwrap();
            let s = materialize_surrogate(&spec, &x).unwrap();
            let srows: Vec<Vec<Complex64>> = (0..s.rows()).map(|r| s.row(r)).collect();
            for r in 0..t.rows() {
                let row = t.row(r);
                assert!(srows.iter().any(|sr| sr == &row), "trial {trial} row {r}");
            }
        }
    }

    #[test]
    fn surrogate_singular_values_dominate() {
        let mut rng = seeded(8);
        for trial in 0..20 {
            let spec = random_instance(&mut rng, trial % 2 == 0);
            let x = random_grid(&mut rng, spec.data_box());
            let st = singular_values_dense(&materialize_exact(&spec, &x).unwrap()).unwrap();
            let ss = singular_values_dense(&materialize_surrogate(&spec, &x).unwrap()).unwrap();
            for (i, a) in st.iter().enumerate() {
                assert!(*a <= ss[i] + 1e-10 * ss[0].max(1.0), "trial {trial} index {i}");
            }
        }
    }

    #[test]
    fn fft_gram_matches_dense_surrogate_gram() {
        let mut rng = seeded(17);
        for trial in 0..20 {
            let spec = random_instance(&mut rng, trial % 2 == 0);
            let x = random_grid(&mut rng, spec.data_box());
            let g = gram_surrogate(&spec, &x).unwrap();
            let oracle = materialize_surrogate(&spec, &x).unwrap().gram().unwrap();
            let err = g.sub(&oracle).unwrap().frobenius_norm() / oracle.frobenius_norm();
            assert!(err < 1e-10, "trial {trial}: {err}");
            assert!(g.sub(&g.adjoint()).unwrap().frobenius_norm() < 1e-12 * g.frobenius_norm());
        }
    }

    #[test]
    fn gram_of_zero_is_zero() {
        let spec = gradient_spec(
            IndexBox::centered(&[9, 7]).unwrap(),
            IndexBox::centered(&[3, 3]).unwrap(),
        );
        let g = gram_surrogate(&spec, &ComplexGrid::zeros(spec.data_box().clone())).unwrap();
        assert_eq!(g.frobenius_norm(), 0.0);
    }

    #[test]
    fn gram_of_delta_is_identity() {
        let data = IndexBox::centered(&[11]).unwrap();
        let spec = LiftingSpec::plain(data.clone(), IndexBox::centered(&[4]).unwrap()).unwrap();
        let x = ComplexGrid::delta(data, &[0]).unwrap();
        let g = gram_surrogate(&spec, &x).unwrap();
        let oracle = materialize_surrogate(&spec, &x).unwrap().gram().unwrap();
        assert!(g.max_abs_diff(&oracle).unwrap() < 1e-13);
        assert!(g.max_abs_diff(&DenseMatrix::identity(4).unwrap()).unwrap() < 1e-13);
    }

    #[test]
    fn multiplicity_is_diagonal_of_normal_operator() {
        let mut rng = seeded(5);
        for trial in 0..10 {
            let spec = random_instance(&mut rng, trial % 2 == 0);
            let diag = spec.multiplicity();
            for (p, k) in spec.data_box().indices().enumerate() {
                let e = ComplexGrid::delta(spec.data_box().clone(), &k).unwrap();
                let t = materialize_exact(&spec, &e).unwrap();
                let back = lift_adjoint(&spec, &t).unwrap();
                for (q, v) in back.values().iter().enumerate() {
                    let want = if q == p { diag[p] } else { 0.0 };
                    assert!((v - c(want)).norm() < 1e-9 * (1.0 + want));
                }
            }
        }
    }

    #[test]
    fn adjoint_matches_inner_products() {
        let mut rng = seeded(6);
        for trial in 0..20 {
            let spec = random_instance(&mut rng, trial % 2 == 0);
            let x = random_grid(&mut rng, spec.data_box());
            let big = random_grid(&mut rng, spec.data_box());
            let m = materialize_exact(&spec, &big).unwrap();
            let tx = materialize_exact(&spec, &x).unwrap();
            let lhs: Complex64 = tx
                .to_row_major()
                .iter()
                .zip(m.to_row_major())
                .map(|(a, b)| a.conj() * b)
                .sum();
            let rhs = x.inner(&lift_adjoint(&spec, &m).unwrap()).unwrap();
            assert!((lhs - rhs).norm() < 1e-9 * lhs.norm().max(1.0));
        }
    }

    #[test]
    fn pseudo_inverse_recovers_signal() {
        let mut rng = seeded(7);
        for trial in 0..20 {
            let spec = random_instance(&mut rng, trial % 2 == 0);
            let x = random_grid(&mut rng, spec.data_box());
            let t = materialize_exact(&spec, &x).unwrap();
            let diag = spec.multiplicity();
            let back = lift_pseudo_inverse(&spec, &t, &x).unwrap();
            for ((a, b), d) in back.values().iter().zip(x.values()).zip(&diag) {
                if *d > 1e-9 {
                    assert!((a - b).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn elementwise_weighting_rejects_regridding() {
        let data = IndexBox::centered(&[5]).unwrap();
        let w = WeightingOp::elementwise(ComplexGrid::zeros(data)).unwrap();
        assert!(matches!(
            w.on_grid(&IndexBox::centered(&[9]).unwrap()),
            Err(Error::Config(_))
        ));
    }
}
