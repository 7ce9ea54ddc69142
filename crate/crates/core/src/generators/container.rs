//! Binary container for exchanging task collections.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic    4 bytes   "TCOL"
//! version  u32       1
//! d        u64       dimension
//! T        u64       number of tasks
//! n_m      T × u64   rows of each task
//! tasks    for m in 0..T: X_m (n_m × d, row-major f64), then y_m (n_m f64)
//! w0       d × f64   starting point
//! ```
//!
//! Structured feature matrices are written densely and read back as dense.

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::task::{Task, TaskCollection};

pub const MAGIC: [u8; 4] = *b"TCOL";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("malformed container: {0}")]
    Format(String),
    #[error(transparent)]
    Invalid(#[from] crate::error::Error),
}

pub fn export_collection<W: Write>(c: &TaskCollection, mut out: W) -> Result<(), ContainerError> {
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(c.dim() as u64).to_le_bytes())?;
    out.write_all(&(c.len() as u64).to_le_bytes())?;
    for t in c.tasks() {
        out.write_all(&(t.rows() as u64).to_le_bytes())?;
    }
    for t in c.tasks() {
        let x = t.features().to_dense();
        for i in 0..x.nrows() {
            for v in x.row(i).iter() {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        for v in t.targets().iter() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    for v in c.start().iter() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn size(v: u64, what: &str) -> Result<usize, ContainerError> {
    usize::try_from(v).map_err(|_| ContainerError::Format(format!("{what} = {v} does not fit")))
}

pub fn import_collection<R: Read>(mut input: R) -> Result<TaskCollection, ContainerError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(ContainerError::Format("bad magic".into()));
    }
    let mut ver = [0u8; 4];
    input.read_exact(&mut ver)?;
    let ver = u32::from_le_bytes(ver);
    if ver != VERSION {
        return Err(ContainerError::Format(format!("unsupported version {ver}")));
    }
    let d = size(read_u64(&mut input)?, "d")?;
    let t = size(read_u64(&mut input)?, "T")?;
    if d == 0 || t == 0 {
        return Err(ContainerError::Format("empty collection".into()));
    }
    let mut rows = Vec::with_capacity(t.min(1 << 20));
    for _ in 0..t {
        rows.push(size(read_u64(&mut input)?, "n_m")?);
    }
    let mut tasks = Vec::with_capacity(t);
    for n in rows {
        let len = n
            .checked_mul(d)
            .ok_or_else(|| ContainerError::Format("task too large".into()))?;
        let x = DMatrix::from_row_slice(n, d, &read_f64s(&mut input, len)?);
        let y = DVector::from_vec(read_f64s(&mut input, n)?);
        tasks.push(Task::new(x, y)?);
    }
    let start = DVector::from_vec(read_f64s(&mut input, d)?);
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(ContainerError::Format("trailing bytes".into()));
    }
    Ok(TaskCollection::with_start(tasks, start)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn round_trip() {
        let a = Task::new(dmatrix![1.0, 2.0, 3.0; 0.5, -1.0, 0.0], dvector![1.0, 2.0]).unwrap();
        let b = Task::new(dmatrix![0.0, 0.0, 1.0], dvector![0.25]).unwrap();
        let c = TaskCollection::with_start(vec![a, b], dvector![0.1, 0.2, 0.3]).unwrap();
        let mut bytes = Vec::new();
        export_collection(&c, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 16 + (6 + 2 + 3 + 1 + 3) * 8);
        assert_eq!(&bytes[..4], b"TCOL");
        let back = import_collection(bytes.as_slice()).unwrap();
        assert_eq!(back.tasks(), c.tasks());
        assert_eq!(back.start(), c.start());
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(
            import_collection(&b"XXXX\x01\0\0\0"[..]),
            Err(ContainerError::Format(_))
        ));
        assert!(matches!(
            import_collection(&b"TC"[..]),
            Err(ContainerError::Io(_))
        ));
    }
}
