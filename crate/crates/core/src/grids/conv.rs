use num_complex::Complex64;

use super::{valid_set, ComplexGrid, DftPlan, IndexBox};
use crate::error::{Error, Result};

/// Lays out a filter on the periodic grid `grid` with its origin at position 0
/// (absolute tap index taken modulo the grid extent).
pub fn kernel_layout(h: &ComplexGrid, grid: &IndexBox) -> Result<Vec<Complex64>> {
    grid.check_ndim(h.domain().ndim())?;
    if h.domain().extent().iter().zip(grid.extent()).any(|(f, g)| f > g) {
        return Err(Error::FilterTooLarge {
            filter: h.domain().extent().to_vec(),
            data: grid.extent().to_vec(),
        });
    }
    let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (l, &v) in h.domain().indices().zip(h.values()) {
        out[grid.periodic_position(&l)] += v;
    }
    Ok(out)
}

/// Circular convolution `(y (*) h)[k] = sum_l y[k - l] h[l]` on the periodic
/// grid `y.domain()`, computed with DFTs. Indices of `h` are absolute and
/// wrap modulo the grid extent.
pub fn circ_conv(y: &ComplexGrid, h: &ComplexGrid) -> Result<ComplexGrid> {
    let grid = y.domain();
    let plan = DftPlan::new(grid);
    let mut kernel = kernel_layout(h, grid)?;
    let mut data = y.values().to_vec();
    plan.forward(&mut data);
    plan.forward(&mut kernel);
    let scale = (grid.len() as f64).sqrt();
    for (d, k) in data.iter_mut().zip(&kernel) {
        *d *= k * scale;
    }
    plan.inverse(&mut data);
    ComplexGrid::new(grid.clone(), data)
}

/// Linear convolution on the valid set `valid_set(y.domain(), h.domain())`,
/// evaluated by direct summation.
pub fn linear_conv_valid(y: &ComplexGrid, h: &ComplexGrid) -> Result<ComplexGrid> {
    let gamma = valid_set(y.domain(), h.domain()).map_err(|e| match e {
        Error::FilterTooLarge { .. } => Error::EmptyValidSet,
        other => other,
    })?;
    let ydom = y.domain();
    let taps: Vec<(Vec<i64>, Complex64)> = h.domain().indices().zip(h.values().iter().copied()).collect();
    let mut shifted = vec![0i64; ydom.ndim()];
    Ok(ComplexGrid::from_fn(gamma, |k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, v) in &taps {
            for a in 0..k.len() {
                shifted[a] = k[a] - l[a];
            }
            acc += y.values()[ydom.linear_index(&shifted).expect("valid index")] * v;
        }
        acc
    }))
}
