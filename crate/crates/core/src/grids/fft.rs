use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{ComplexGrid, IndexBox};

/// Unitary multi-dimensional DFT on a fixed box shape.
///
/// Positions are taken relative to the box offset (the offset corner is
/// position 0). Both directions carry a `1/sqrt(L)` factor so that the
/// inverse is the adjoint.
#[derive(Clone)]
pub struct DftPlan {
    extent: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scratch_len: usize,
}

impl std::fmt::Debug for DftPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DftPlan").field("extent", &self.extent).finish()
    }
}

impl DftPlan {
    pub fn new(domain: &IndexBox) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let extent = domain.extent().to_vec();
        let forward: Vec<_> = extent.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse: Vec<_> = extent.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        let scratch_len = forward
            .iter()
            .chain(&inverse)
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            strides: domain.strides(),
            len: domain.len(),
            extent,
            forward,
            inverse,
            scratch_len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform, `X[m] = L^{-1/2} sum_n x[n] e^{-2 pi i <m, n/N>}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    /// In-place inverse transform (adjoint of [`DftPlan::forward`]).
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        assert_eq!(data.len(), self.len, "DFT input length");
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len];
        let ndim = self.extent.len();
        let mut lines = Vec::new();
        for axis in 0..ndim {
            let n = self.extent[axis];
            if n == 1 {
                continue;
            }
            let stride = self.strides[axis];
            if stride == 1 {
                plans[axis].process_with_scratch(data, &mut scratch);
                continue;
            }
            // Gather every line along `axis` into a contiguous batch.
            lines.resize(self.len, Complex64::new(0.0, 0.0));
            let block = n * stride;
            let mut dst = 0;
            for base in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let start = base + inner;
                    for i in 0..n {
                        lines[dst + i] = data[start + i * stride];
                    }
                    dst += n;
                }
            }
            plans[axis].process_with_scratch(&mut lines, &mut scratch);
            let mut src = 0;
            for base in (0..self.len).step_by(block) {
                for inner in 0..stride {
                    let start = base + inner;
                    for i in 0..n {
                        data[start + i * stride] = lines[src + i];
                    }
                    src += n;
                }
            }
        }
        let scale = 1.0 / (self.len as f64).sqrt();
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Unitary forward DFT of a grid; the result lives on the same box.
pub fn dft(x: &ComplexGrid) -> ComplexGrid {
    let mut out = x.clone();
    DftPlan::new(x.domain()).forward(out.values_mut());
    out
}

/// Unitary inverse DFT; `idft(dft(x)) == x` up to round-off.
pub fn idft(x: &ComplexGrid) -> ComplexGrid {
    let mut out = x.clone();
    DftPlan::new(x.domain()).inverse(out.values_mut());
    out
}
