//! Small dense complex matrices backed by `faer`, used for eigendecompositions
//! of filter Gram matrices, SVD-based baselines and test oracles.

use faer::prelude::Solve;
use faer::{Mat, MatRef, Side};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Largest number of entries a dense matrix may hold.
pub const ORACLE_BUDGET: usize = 10_000_000;

pub(crate) fn check_budget(rows: usize, cols: usize) -> Result<()> {
    let entries = rows as u128 * cols as u128;
    if entries > ORACLE_BUDGET as u128 {
        return Err(Error::BudgetExceeded {
            entries,
            budget: ORACLE_BUDGET as u128,
        });
    }
    Ok(())
}

#[inline]
fn to_faer(z: Complex64) -> faer::c64 {
    faer::c64::new(z.re, z.im)
}

#[inline]
fn from_faer(z: faer::c64) -> Complex64 {
    Complex64::new(z.re, z.im)
}

/// Dense complex matrix.
#[derive(Clone, Debug)]
pub struct DenseMatrix {
    inner: Mat<faer::c64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_budget(rows, cols)?;
        Ok(Self {
            inner: Mat::zeros(rows, cols),
        })
    }

    pub fn identity(n: usize) -> Result<Self> {
        check_budget(n, n)?;
        Ok(Self {
            inner: Mat::identity(n, n),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        check_budget(rows, cols)?;
        Ok(Self {
            inner: Mat::from_fn(rows, cols, |i, j| to_faer(f(i, j))),
        })
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: &[Complex64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        Self::from_fn(rows, cols, |i, j| data[i * cols + j])
    }

    pub fn diagonal(values: &[Complex64]) -> Result<Self> {
        let n = values.len();
        Self::from_fn(n, n, |i, j| if i == j { values[i] } else { Complex64::new(0.0, 0.0) })
    }

    pub(crate) fn from_mat(inner: Mat<faer::c64>) -> Self {
        Self { inner }
    }

    pub fn as_faer(&self) -> MatRef<'_, faer::c64> {
        self.inner.as_ref()
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        from_faer(self.inner[(row, col)])
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.inner[(row, col)] = to_faer(value);
    }

    pub fn add_to(&mut self, row: usize, col: usize, value: Complex64) {
        self.inner[(row, col)] += to_faer(value);
    }

    pub fn row(&self, row: usize) -> Vec<Complex64> {
        (0..self.cols()).map(|j| self.get(row, j)).collect()
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.rows()).map(|i| self.get(i, col)).collect()
    }

    /// Entries in row-major order.
    pub fn to_row_major(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            out.extend(self.row(i));
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint().to_owned(),
        }
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols() != other.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.cols(),
                found: other.rows(),
            });
        }
        check_budget(self.rows(), other.cols())?;
        Ok(Self {
            inner: &self.inner * &other.inner,
        })
    }

    /// `self^H self`.
    pub fn gram(&self) -> Result<Self> {
        check_budget(self.cols(), self.cols())?;
        Ok(Self {
            inner: self.inner.adjoint() * &self.inner,
        })
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols() {
            return Err(Error::LengthMismatch {
                expected: self.cols(),
                found: v.len(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows()];
        for (j, &vj) in v.iter().enumerate() {
            let col = self.inner.col(j);
            for (o, &c) in out.iter_mut().zip(col.iter()) {
                *o += from_faer(c) * vj;
            }
        }
        Ok(out)
    }

    pub fn adjoint_mul_vec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.rows() {
            return Err(Error::LengthMismatch {
                expected: self.rows(),
                found: v.len(),
            });
        }
        Ok((0..self.cols())
            .map(|j| {
                self.inner
                    .col(j)
                    .iter()
                    .zip(v)
                    .map(|(&c, &vi)| from_faer(c).conj() * vi)
                    .sum()
            })
            .collect())
    }

    pub fn scale(&mut self, factor: Complex64) {
        let f = to_faer(factor);
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                self.inner[(i, j)] *= f;
            }
        }
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            inner: &self.inner - &other.inner,
        })
    }

    pub fn add(&self, other: &DenseMatrix) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            inner: &self.inner + &other.inner,
        })
    }

    pub fn frobenius_norm_sqr(&self) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.cols() {
            for &c in self.inner.col(j).iter() {
                acc += c.re * c.re + c.im * c.im;
            }
        }
        acc
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sqr().sqrt()
    }

    pub fn max_abs_diff(&self, other: &DenseMatrix) -> Result<f64> {
        self.check_same_shape(other)?;
        let mut m = 0.0f64;
        for j in 0..self.cols() {
            for i in 0..self.rows() {
                m = m.max((self.get(i, j) - other.get(i, j)).norm());
            }
        }
        Ok(m)
    }

    /// Solves `self * X = rhs` for square `self` by LU with partial pivoting.
    pub fn solve(&self, rhs: &DenseMatrix) -> Result<Self> {
        if self.rows() != self.cols() || rhs.rows() != self.rows() {
            return Err(Error::DimensionMismatch {
                expected: self.rows(),
                found: rhs.rows(),
            });
        }
        let out = Self {
            inner: self.inner.partial_piv_lu().solve(&rhs.inner),
        };
        if !out.is_finite() {
            return Err(Error::NonFinite("dense solve"));
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        (0..self.cols()).all(|j| self.inner.col(j).iter().all(|c| c.re.is_finite() && c.im.is_finite()))
    }

    fn check_same_shape(&self, other: &DenseMatrix) -> Result<()> {
        if self.rows() != other.rows() || self.cols() != other.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.rows() * self.cols(),
                found: other.rows() * other.cols(),
            });
        }
        Ok(())
    }
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: DenseMatrix,
}

/// Eigendecomposition of a Hermitian matrix (only the lower triangle is read).
pub fn hermitian_eigen(m: &DenseMatrix) -> Result<HermitianEigen> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let evd = m
        .inner
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let n = m.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let values: Vec<f64> = order.iter().map(|&i| s[i].re).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Eigen("non-finite eigenvalue".into()));
    }
    let u = evd.U();
    let vectors = DenseMatrix::from_mat(Mat::from_fn(n, n, |i, j| u[(i, order[j])]));
    Ok(HermitianEigen { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: m.cols(),
        });
    }
    let mut v: Vec<f64> = m
        .inner
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Thin singular value decomposition `m = U diag(s) V^H`, `s` descending.
#[derive(Clone, Debug)]
pub struct ThinSvd {
    pub u: DenseMatrix,
    pub s: Vec<f64>,
    pub v: DenseMatrix,
}

impl ThinSvd {
    /// `U_r diag(f(s)_r) V_r^H` over the leading `rank` triplets.
    pub fn reconstruct_with(&self, rank: usize, f: impl Fn(f64) -> f64) -> Result<DenseMatrix> {
        let r = rank.min(self.s.len());
        let (m, n) = (self.u.rows(), self.v.rows());
        check_budget(m, n)?;
        let us = Mat::from_fn(m, r, |i, k| self.u.inner[(i, k)] * f(self.s[k]));
        let vr = self.v.inner.get(.., 0..r);
        Ok(DenseMatrix::from_mat(us * vr.adjoint()))
    }
}

pub fn thin_svd(m: &DenseMatrix) -> Result<ThinSvd> {
    let svd = m.inner.thin_svd().map_err(|e| Error::Svd(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let k = s.nrows();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    let values: Vec<f64> = order.iter().map(|&i| s[i].re.max(0.0)).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Svd("non-finite singular value".into()));
    }
    let (u, v) = (svd.U(), svd.V());
    Ok(ThinSvd {
        u: DenseMatrix::from_mat(Mat::from_fn(m.rows(), k, |i, j| u[(i, order[j])])),
        s: values,
        v: DenseMatrix::from_mat(Mat::from_fn(m.cols(), k, |i, j| v[(i, order[j])])),
    })
}

/// Singular values, nonnegative and descending, `min(rows, cols)` of them.
pub fn singular_values_dense(m: &DenseMatrix) -> Result<Vec<f64>> {
    check_budget(m.rows(), m.cols())?;
    let mut s = m.inner.singular_values().map_err(|e| Error::Svd(format!("{e:?}")))?;
    for v in s.iter_mut() {
        *v = v.max(0.0);
    }
    s.sort_by(|a, b| b.total_cmp(a));
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::Svd("non-finite singular value".into()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{random_c64, seeded};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(seed: u64, rows: usize, cols: usize) -> DenseMatrix {
        let mut rng = seeded(seed);
        DenseMatrix::from_fn(rows, cols, |_, _| random_c64(&mut rng)).unwrap()
    }

    #[test]
    fn diagonal_singular_values_are_sorted_moduli() {
        let m = DenseMatrix::diagonal(&[c(1.0, 0.0), c(0.0, -3.0), c(-2.0, 0.0)]).unwrap();
        let s = singular_values_dense(&m).unwrap();
        for (a, b) in s.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_has_unit_singular_values() {
        let s = singular_values_dense(&DenseMatrix::identity(6).unwrap()).unwrap();
        assert_eq!(s.len(), 6);
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn singular_values_match_gram_eigenvalues() {
        let m = random_matrix(3, 20, 8);
        let s = singular_values_dense(&m).unwrap();
        let mut e = hermitian_eigenvalues(&m.gram().unwrap()).unwrap();
        e.reverse();
        assert_eq!(s.len(), 8);
        for (si, ei) in s.iter().zip(&e) {
            assert!((si * si - ei).abs() < 1e-9);
        }
        let total: f64 = s.iter().map(|v| v * v).sum();
        assert!((total - m.frobenius_norm_sqr()).abs() < 1e-10 * total);
    }

    #[test]
    fn eigen_reconstructs_hermitian_matrix() {
        let g = random_matrix(5, 12, 7).gram().unwrap();
        let e = hermitian_eigen(&g).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        let lam: Vec<Complex64> = e.values.iter().map(|&v| c(v, 0.0)).collect();
        let rebuilt = e
            .vectors
            .matmul(&DenseMatrix::diagonal(&lam).unwrap())
            .unwrap()
            .matmul(&e.vectors.adjoint())
            .unwrap();
        assert!(rebuilt.max_abs_diff(&g).unwrap() < 1e-12 * g.frobenius_norm().max(1.0) * 10.0);
    }

    #[test]
    fn thin_svd_reconstructs() {
        let m = random_matrix(9, 15, 6);
        let svd = thin_svd(&m).unwrap();
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        let back = svd.reconstruct_with(6, |s| s).unwrap();
        assert!(back.max_abs_diff(&m).unwrap() < 1e-12);
    }

    #[test]
    fn solve_and_products_agree() {
        let a = random_matrix(1, 5, 5)
            .gram()
            .unwrap()
            .add(&DenseMatrix::identity(5).unwrap())
            .unwrap();
        let b = random_matrix(2, 5, 2);
        let x = a.solve(&b).unwrap();
        assert!(a.matmul(&x).unwrap().max_abs_diff(&b).unwrap() < 1e-12);
        let v: Vec<Complex64> = (0..5).map(|i| c(i as f64, 1.0)).collect();
        let mv = a.mul_vec(&v).unwrap();
        let dense = a.matmul(&DenseMatrix::from_row_major(5, 1, &v).unwrap()).unwrap();
        for (i, val) in mv.iter().enumerate() {
            assert!((val - dense.get(i, 0)).norm() < 1e-12);
        }
        let w = a.adjoint_mul_vec(&v).unwrap();
        let w2 = a.adjoint().mul_vec(&v).unwrap();
        for (p, q) in w.iter().zip(&w2) {
            assert!((p - q).norm() < 1e-12);
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            DenseMatrix::zeros(10_001, 1000),
            Err(Error::BudgetExceeded { .. })
        ));
    }
}
