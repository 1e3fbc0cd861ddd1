//! Lossless CSDF binary format, version 1.
//!
//! ```text
//! "CSDF" | u16 version | u16 flags | u32 dims[3] | f32 origin[3] | f32 voxel_size
//! f32 distance[N] | u8 rgb[3N] | u8 valid[N] | u16 part[N]
//! ```
//!
//! All values little-endian, arrays in x-fastest order. Each voxel's validity
//! bit is padded to a full byte.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::grid::CsdfGrid;

pub const MAGIC: &[u8; 4] = b"CSDF";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 36;

pub fn write_binary(grid: &CsdfGrid, mut sink: impl Write) -> Result<()> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&0u16.to_le_bytes());
    for d in grid.dims() {
        let d = u32::try_from(d).map_err(|_| Error::InvalidDims(grid.dims()))?;
        header.extend_from_slice(&d.to_le_bytes());
    }
    for o in grid.origin() {
        header.extend_from_slice(&o.to_le_bytes());
    }
    header.extend_from_slice(&grid.voxel_size().to_le_bytes());
    sink.write_all(&header)?;

    let n = grid.len();
    let mut buf = Vec::with_capacity(n * 10);
    for d in grid.distance() {
        buf.extend_from_slice(&d.to_le_bytes());
    }
    for c in grid.color() {
        buf.extend_from_slice(c);
    }
    buf.extend(grid.valid().iter().map(|&v| v as u8));
    for p in grid.part() {
        buf.extend_from_slice(&p.to_le_bytes());
    }
    sink.write_all(&buf)?;
    Ok(())
}

pub fn to_bytes(grid: &CsdfGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + grid.len() * 10);
    write_binary(grid, &mut out).expect("writing to a Vec cannot fail");
    out
}

/// Cursor over a byte source that reports the offset of any shortfall.
struct Reader<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Reader<R> {
    fn take(&mut self, buf: &mut [u8]) -> Result<()> {
        let mut filled = 0;
        while filled < buf.len() {
            match self.inner.read(&mut buf[filled..]) {
                Ok(0) => {
                    return Err(Error::format(
                        self.offset + filled as u64,
                        format!("truncated stream, expected {} more bytes", buf.len() - filled),
                    ))
                }
                Ok(k) => filled += k,
                Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e.into()),
            }
        }
        self.offset += buf.len() as u64;
        Ok(())
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.take(&mut b)?;
        Ok(b)
    }
}

pub fn read_binary(source: impl Read) -> Result<CsdfGrid> {
    let mut r = Reader {
        inner: source,
        offset: 0,
    };
    let magic: [u8; 4] = r.array()?;
    if &magic != MAGIC {
        return Err(Error::format(0, "bad magic, expected \"CSDF\""));
    }
    let version = u16::from_le_bytes(r.array()?);
    if version != VERSION {
        return Err(Error::format(4, format!("unsupported version {version}")));
    }
    let _flags = u16::from_le_bytes(r.array()?);
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = u32::from_le_bytes(r.array()?) as usize;
    }
    let mut origin = [0f32; 3];
    for o in &mut origin {
        *o = f32::from_le_bytes(r.array()?);
    }
    let voxel_size = f32::from_le_bytes(r.array()?);
    let n = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .filter(|&n| n > 0 && n <= 1 << 32)
        .ok_or_else(|| Error::format(8, format!("invalid dims {dims:?}")))?;
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::format(32, format!("invalid voxel size {voxel_size}")));
    }

    let mut raw = vec![0u8; n * 4];
    r.take(&mut raw)?;
    let distance = raw
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let mut raw = vec![0u8; n * 3];
    r.take(&mut raw)?;
    let color = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let valid_at = r.offset;
    let mut raw = vec![0u8; n];
    r.take(&mut raw)?;
    if let Some(k) = raw.iter().position(|&b| b > 1) {
        return Err(Error::format(valid_at + k as u64, "validity byte must be 0 or 1"));
    }
    let valid = raw.into_iter().map(|b| b == 1).collect();
    let mut raw = vec![0u8; n * 2];
    r.take(&mut raw)?;
    let part = raw
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes([c[0], c[1]]))
        .collect();
    CsdfGrid::from_parts(dims, origin, voxel_size, distance, color, valid, part)
}
