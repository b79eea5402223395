//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian `u64`):
//! `b"MEGN1"`, tensor count, then per tensor: name byte length, UTF-8 name,
//! rows, cols, `rows * cols` little-endian `f64` entries in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"MEGN1";

pub fn write_checkpoint<W: Write>(w: &mut W, tensors: &[(String, &DenseMatrix)]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(tensors.len() as u64).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u64).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rows() as u64).to_le_bytes())?;
        w.write_all(&(t.cols() as u64).to_le_bytes())?;
        for v in t.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Vec<(String, DenseMatrix)>> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Checkpoint(format!("missing magic: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint(format!("bad magic {magic:?}")));
    }
    let count = read_u64(r)?;
    let mut out = Vec::new();
    for _ in 0..count {
        let len = read_u64(r)? as usize;
        if len > 1 << 20 {
            return Err(Error::Checkpoint(format!("tensor name length {len} too large")));
        }
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)
            .map_err(|e| Error::Checkpoint(format!("truncated name: {e}")))?;
        let name = String::from_utf8(name)
            .map_err(|e| Error::Checkpoint(format!("tensor name not UTF-8: {e}")))?;
        let rows = read_u64(r)? as usize;
        let cols = read_u64(r)? as usize;
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint(format!("tensor {name}: {rows}x{cols} overflows")))?;
        let mut data = Vec::with_capacity(len.min(1 << 24));
        let mut b = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut b)
                .map_err(|e| Error::Checkpoint(format!("tensor {name} truncated: {e}")))?;
            data.push(f64::from_le_bytes(b));
        }
        let m = DenseMatrix::from_vec(rows, cols, data).map_err(|e| e.context(format!("tensor {name}")))?;
        out.push((name, m));
    }
    Ok(out)
}

pub fn save(path: &Path, tensors: &[(String, &DenseMatrix)]) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_checkpoint(&mut w, tensors)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Vec<(String, DenseMatrix)>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut BufReader::new(f))
}
