//! The CSLR1 binary grid format.
//!
//! Layout, all little-endian: the magic bytes `CSLR`, `u32` version (1),
//! `u32` dimension count, then an `(i64 offset, u64 extent)` pair per axis,
//! then one `(f64 re, f64 im)` pair per grid point in row-major order.

use std::fs;
use std::path::Path;

use cslr_core::grids::{ComplexGrid, IndexBox};
use cslr_core::Complex64;

use crate::error::{CliError, CliResult};

pub const MAGIC: &[u8; 4] = b"CSLR";
pub const VERSION: u32 = 1;

pub fn encode(grid: &ComplexGrid) -> Vec<u8> {
    let domain = grid.domain();
    let mut out = Vec::with_capacity(12 + 16 * domain.ndim() + 16 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(domain.ndim() as u32).to_le_bytes());
    for (o, e) in domain.offset().iter().zip(domain.extent()) {
        out.extend_from_slice(&o.to_le_bytes());
        out.extend_from_slice(&(*e as u64).to_le_bytes());
    }
    for v in grid.values() {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self, what: &str) -> CliResult<[u8; N]> {
        let end = self.pos + N;
        let chunk = self
            .bytes
            .get(self.pos..end)
            .ok_or_else(|| CliError::data(format!("truncated CSLR1 data while reading {what}")))?;
        self.pos = end;
        Ok(chunk.try_into().expect("slice has length N"))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn decode(bytes: &[u8]) -> CliResult<ComplexGrid> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.take::<4>("magic")? != MAGIC {
        return Err(CliError::data("not a CSLR1 file (bad magic)"));
    }
    let version = u32::from_le_bytes(r.take("version")?);
    if version != VERSION {
        return Err(CliError::data(format!("unsupported CSLR version {version}")));
    }
    let ndim = u32::from_le_bytes(r.take("dimension count")?) as usize;
    if ndim == 0 || ndim * 16 > r.remaining() {
        return Err(CliError::data(format!("invalid dimension count {ndim}")));
    }
    let mut offset = Vec::with_capacity(ndim);
    let mut extent = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        offset.push(i64::from_le_bytes(r.take("offset")?));
        let e = u64::from_le_bytes(r.take("extent")?);
        extent.push(usize::try_from(e).map_err(|_| CliError::data(format!("extent {e} too large")))?);
    }
    let domain = IndexBox::new(offset, extent).map_err(|e| CliError::data(e.to_string()))?;
    let expected = domain.len() as u128 * 16;
    if expected != r.remaining() as u128 {
        return Err(CliError::data(format!(
            "CSLR1 payload has {} bytes, the header implies {expected}",
            r.remaining()
        )));
    }
    let mut values = Vec::with_capacity(domain.len());
    for _ in 0..domain.len() {
        let re = f64::from_le_bytes(r.take("value")?);
        let im = f64::from_le_bytes(r.take("value")?);
        values.push(Complex64::new(re, im));
    }
    ComplexGrid::new(domain, values).map_err(|e| CliError::data(e.to_string()))
}

pub fn read_grid(path: &Path) -> CliResult<ComplexGrid> {
    let bytes = fs::read(path).map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    decode(&bytes).map_err(|e| CliError::data(format!("{}: {}", path.display(), e.message)))
}

pub fn write_grid(path: &Path, grid: &ComplexGrid) -> CliResult<()> {
    fs::write(path, encode(grid)).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}
