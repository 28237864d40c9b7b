use crate::error::{Error, Result};

/// Largest cardinality accepted for a box; keeps linear indices in `u32`
/// range on every platform.
pub const MAX_CARDINALITY: u128 = 1 << 31;

/// Axis-aligned rectangular set of integer indices in `d` dimensions.
///
/// Elements are linearized in row-major order (last axis fastest) with the
/// offset corner mapped to linear index 0.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexBox {
    offset: Vec<i64>,
    extent: Vec<usize>,
}

impl IndexBox {
    pub fn new(offset: Vec<i64>, extent: Vec<usize>) -> Result<Self> {
        if offset.len() != extent.len() {
            return Err(Error::DimensionMismatch {
                expected: offset.len(),
                found: extent.len(),
            });
        }
        if extent.is_empty() || extent.contains(&0) {
            return Err(Error::InvalidExtent { extent });
        }
        let card = extent.iter().map(|&e| e as u128).product::<u128>();
        if card > MAX_CARDINALITY {
            return Err(Error::TooLarge(card));
        }
        Ok(Self { offset, extent })
    }

    /// Box of the given extent whose index range is centered on the origin
    /// (offset `-(e-1)/2` per axis, exact for odd extents).
    pub fn centered(extent: &[usize]) -> Result<Self> {
        let offset = extent.iter().map(|&e| -(((e as i64) - 1) / 2)).collect();
        Self::new(offset, extent.to_vec())
    }

    pub fn singleton(index: &[i64]) -> Result<Self> {
        Self::new(index.to_vec(), vec![1; index.len()])
    }

    pub fn ndim(&self) -> usize {
        self.extent.len()
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset
    }

    pub fn extent(&self) -> &[usize] {
        &self.extent
    }

    /// Number of indices in the box.
    pub fn len(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exclusive upper corner along `axis`.
    pub fn end(&self, axis: usize) -> i64 {
        self.offset[axis] + self.extent[axis] as i64
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.ndim()];
        for axis in (0..self.ndim().saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * self.extent[axis + 1];
        }
        strides
    }

    pub fn contains(&self, index: &[i64]) -> bool {
        index.len() == self.ndim()
            && index
                .iter()
                .zip(&self.offset)
                .zip(&self.extent)
                .all(|((&k, &o), &e)| k >= o && k < o + e as i64)
    }

    pub fn contains_box(&self, other: &IndexBox) -> bool {
        other.ndim() == self.ndim()
            && (0..self.ndim()).all(|a| other.offset[a] >= self.offset[a] && other.end(a) <= self.end(a))
    }

    pub fn linear_index(&self, index: &[i64]) -> Option<usize> {
        if !self.contains(index) {
            return None;
        }
        let mut lin = 0usize;
        for axis in 0..self.ndim() {
            lin = lin * self.extent[axis] + (index[axis] - self.offset[axis]) as usize;
        }
        Some(lin)
    }

    /// Inverse of [`IndexBox::linear_index`].
    pub fn index_at(&self, mut linear: usize) -> Vec<i64> {
        let mut index = vec![0i64; self.ndim()];
        for axis in (0..self.ndim()).rev() {
            let e = self.extent[axis];
            index[axis] = self.offset[axis] + (linear % e) as i64;
            linear /= e;
        }
        index
    }

    /// Position of `index` on the periodic grid spanned by this box when the
    /// origin sits at position 0, i.e. `index mod extent` per axis.
    ///
    /// This is how filters are laid out for circular convolution: a tap at
    /// absolute index `l` acts as a shift by `l` regardless of the offset.
    pub fn periodic_position(&self, index: &[i64]) -> usize {
        let mut lin = 0usize;
        for axis in 0..self.ndim() {
            let e = self.extent[axis] as i64;
            lin = lin * self.extent[axis] + index[axis].rem_euclid(e) as usize;
        }
        lin
    }

    /// Data position of an absolute index wrapped periodically into the box.
    pub fn wrapped_linear_index(&self, index: &[i64]) -> usize {
        let mut lin = 0usize;
        for axis in 0..self.ndim() {
            let e = self.extent[axis] as i64;
            lin = lin * self.extent[axis] + (index[axis] - self.offset[axis]).rem_euclid(e) as usize;
        }
        lin
    }

    /// Point reflection through the origin: `{-k : k in self}`.
    pub fn reflect(&self) -> IndexBox {
        let offset = self
            .offset
            .iter()
            .zip(&self.extent)
            .map(|(&o, &e)| -(o + e as i64 - 1))
            .collect();
        IndexBox {
            offset,
            extent: self.extent.clone(),
        }
    }

    pub fn translate(&self, shift: &[i64]) -> Result<IndexBox> {
        self.check_ndim(shift.len())?;
        let offset = self.offset.iter().zip(shift).map(|(o, s)| o + s).collect();
        Ok(IndexBox {
            offset,
            extent: self.extent.clone(),
        })
    }

    /// Iterates all indices in row-major order.
    pub fn indices(&self) -> Indices<'_> {
        Indices {
            domain: self,
            next: Some(self.offset.clone()),
        }
    }

    pub(crate) fn check_ndim(&self, found: usize) -> Result<()> {
        if found != self.ndim() {
            return Err(Error::DimensionMismatch {
                expected: self.ndim(),
                found,
            });
        }
        Ok(())
    }
}

pub struct Indices<'a> {
    domain: &'a IndexBox,
    next: Option<Vec<i64>>,
}

impl Iterator for Indices<'_> {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        for axis in (0..self.domain.ndim()).rev() {
            succ[axis] += 1;
            if succ[axis] < self.domain.end(axis) {
                self.next = Some(succ);
                return Some(current);
            }
            succ[axis] = self.domain.offset[axis];
        }
        Some(current)
    }
}

/// Valid set of a linear convolution: all `k` with `k - l` in `data` for every
/// `l` in `filter`.
pub fn valid_set(data: &IndexBox, filter: &IndexBox) -> Result<IndexBox> {
    data.check_ndim(filter.ndim())?;
    if filter.extent.iter().zip(&data.extent).any(|(f, d)| f > d) {
        return Err(Error::FilterTooLarge {
            filter: filter.extent.clone(),
            data: data.extent.clone(),
        });
    }
    let offset = (0..data.ndim())
        .map(|a| data.offset[a] + filter.offset[a] + filter.extent[a] as i64 - 1)
        .collect();
    let extent = (0..data.ndim())
        .map(|a| data.extent[a] - filter.extent[a] + 1)
        .collect();
    IndexBox::new(offset, extent)
}

/// `{a + b : a in first, b in second}`.
pub fn minkowski_sum(first: &IndexBox, second: &IndexBox) -> Result<IndexBox> {
    first.check_ndim(second.ndim())?;
    let offset = (0..first.ndim()).map(|a| first.offset[a] + second.offset[a]).collect();
    let extent = (0..first.ndim())
        .map(|a| first.extent[a] + second.extent[a] - 1)
        .collect();
    IndexBox::new(offset, extent)
}

/// Support of `reverse_conjugate(v) * v` for `v` supported on `filter`: the
/// centered difference set `filter - filter`.
pub fn difference_set(filter: &IndexBox) -> IndexBox {
    minkowski_sum(&filter.reflect(), filter).expect("same dimensionality")
}
