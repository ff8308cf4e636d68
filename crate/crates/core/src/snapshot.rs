//! Binary field snapshots.
//!
//! Layout (all little-endian): a 32-byte header
//!
//! | bytes  | content                          |
//! |--------|----------------------------------|
//! | 0..4   | magic `MHDF`                     |
//! | 4..8   | format version (`u32`)           |
//! | 8..12  | points per axis `n` (`u32`)      |
//! | 12..20 | box edge `L` (`f64`)             |
//! | 20..24 | number of fields (`u32`)         |
//! | 24..32 | grid origin, same on all axes (`f64`) |
//!
//! followed by each field's `n^3` values as `f64`, z fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, ScalarField};

pub const MAGIC: [u8; 4] = *b"MHDF";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;

pub fn write_fields<W: Write>(mut w: W, fields: &[&ScalarField]) -> Result<()> {
    let first = fields
        .first()
        .ok_or_else(|| Error::Format("no fields to write".into()))?;
    let grid = *first.grid();
    if fields.iter().any(|f| !f.grid().same_as(&grid)) {
        return Err(Error::GridMismatch);
    }
    let origin = grid.origin();
    if origin[1] != origin[0] || origin[2] != origin[0] {
        return Err(Error::Format("snapshot grids need the same origin on every axis".into()));
    }
    let n = u32::try_from(grid.n()).map_err(|_| Error::Format("grid too large".into()))?;
    let count = u32::try_from(fields.len()).map_err(|_| Error::Format("too many fields".into()))?;
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&n.to_le_bytes());
    header.extend_from_slice(&grid.length().to_le_bytes());
    header.extend_from_slice(&count.to_le_bytes());
    header.extend_from_slice(&origin[0].to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(grid.len() * 8);
    for f in fields {
        buf.clear();
        for v in f.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fields<R: Read>(mut r: R) -> Result<Vec<ScalarField>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    if header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().expect("4 bytes"));
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().expect("8 bytes"));
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = u32_at(8) as usize;
    let length = f64_at(12);
    let count = u32_at(20) as usize;
    let origin = f64_at(24);
    let grid = Grid::with_origin(n, length, [origin; 3])?;
    let mut fields = Vec::with_capacity(count);
    let mut bytes = vec![0u8; grid.len() * 8];
    for i in 0..count {
        r.read_exact(&mut bytes)
            .map_err(|e| Error::Format(format!("field {i} truncated: {e}")))?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        fields.push(ScalarField::from_values(grid, values)?);
    }
    Ok(fields)
}

pub fn save(path: impl AsRef<Path>, fields: &[&ScalarField]) -> Result<()> {
    write_fields(BufWriter::new(File::create(path)?), fields)
}

pub fn load(path: impl AsRef<Path>) -> Result<Vec<ScalarField>> {
    read_fields(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let g = Grid::centered(8, 3.0).unwrap();
        let a = ScalarField::from_fn(g, |p| p[0].sin() + 1e-300 * p[1]);
        let b = ScalarField::from_fn(g, |p| p[2] * p[1]);
        let mut bytes = Vec::new();
        write_fields(&mut bytes, &[&a, &b]).unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 2 * 512 * 8);
        let back = read_fields(bytes.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn corrupt_input_is_reported() {
        let g = Grid::new(4, 1.0).unwrap();
        let mut bytes = Vec::new();
        write_fields(&mut bytes, &[&ScalarField::zeros(g)]).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_fields(bad.as_slice()), Err(Error::Format(_))));
        assert!(matches!(read_fields(&bytes[..100]), Err(Error::Format(_))));
        assert!(write_fields(&mut Vec::new(), &[]).is_err());
    }
}
