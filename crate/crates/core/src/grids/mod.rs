//! Index-set arithmetic, complex grids, unitary DFTs and convolution
//! primitives on which the liftings are built.

mod conv;
mod fft;
mod index_box;

pub use conv::{circ_conv, kernel_layout, linear_conv_valid};
pub use fft::{dft, idft, DftPlan};
pub use index_box::{difference_set, minkowski_sum, valid_set, IndexBox, Indices, MAX_CARDINALITY};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex samples on an [`IndexBox`], stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    domain: IndexBox,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn new(domain: IndexBox, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::LengthMismatch {
                expected: domain.len(),
                found: values.len(),
            });
        }
        Ok(Self { domain, values })
    }

    pub fn zeros(domain: IndexBox) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); domain.len()];
        Self { domain, values }
    }

    pub fn from_fn(domain: IndexBox, mut f: impl FnMut(&[i64]) -> Complex64) -> Self {
        let values = domain.indices().map(|k| f(&k)).collect();
        Self { domain, values }
    }

    /// Unit impulse at `index`.
    pub fn delta(domain: IndexBox, index: &[i64]) -> Result<Self> {
        let lin = domain.linear_index(index).ok_or(Error::NotContained)?;
        let mut grid = Self::zeros(domain);
        grid.values[lin] = Complex64::new(1.0, 0.0);
        Ok(grid)
    }

    pub fn domain(&self) -> &IndexBox {
        &self.domain
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, index: &[i64]) -> Option<Complex64> {
        self.domain.linear_index(index).map(|i| self.values[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `<self, other> = sum conj(self) * other`.
    pub fn inner(&self, other: &ComplexGrid) -> Result<Complex64> {
        self.check_same_domain(other)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> ComplexGrid {
        ComplexGrid {
            domain: self.domain.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> ComplexGrid {
        self.map(|v| v * factor)
    }

    pub fn zip_with(&self, other: &ComplexGrid, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<ComplexGrid> {
        self.check_same_domain(other)?;
        Ok(ComplexGrid {
            domain: self.domain.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn add(&self, other: &ComplexGrid) -> Result<ComplexGrid> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexGrid) -> Result<ComplexGrid> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn max_abs_diff(&self, other: &ComplexGrid) -> Result<f64> {
        self.check_same_domain(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub(crate) fn check_same_domain(&self, other: &ComplexGrid) -> Result<()> {
        if self.domain != other.domain {
            return Err(Error::SupportMismatch("grids live on different boxes"));
        }
        Ok(())
    }
}

/// Embeds `x` into the larger box `target`, zero elsewhere.
pub fn zero_pad(x: &ComplexGrid, target: &IndexBox) -> Result<ComplexGrid> {
    if !target.contains_box(x.domain()) {
        return Err(Error::NotContained);
    }
    let mut out = ComplexGrid::zeros(target.clone());
    for (k, &v) in x.domain().indices().zip(x.values()) {
        let lin = target.linear_index(&k).expect("contained");
        out.values[lin] = v;
    }
    Ok(out)
}

/// Restriction of `x` to the sub-box `sub`; adjoint of [`zero_pad`].
pub fn restrict(x: &ComplexGrid, sub: &IndexBox) -> Result<ComplexGrid> {
    if !x.domain().contains_box(sub) {
        return Err(Error::NotContained);
    }
    let values = sub
        .indices()
        .map(|k| x.values[x.domain().linear_index(&k).expect("contained")])
        .collect();
    ComplexGrid::new(sub.clone(), values)
}

/// `h~[k] = conj(h[-k])`, supported on the reflected box.
pub fn reverse_conjugate(h: &ComplexGrid) -> ComplexGrid {
    let values = h.values.iter().rev().map(|v| v.conj()).collect();
    ComplexGrid {
        domain: h.domain.reflect(),
        values,
    }
}
