//! Row-major `f32` matrices and the `AALN` binary tensor format.
//!
//! Layout (little-endian):
//!
//! ```text
//! offset  size  field
//! 0       4     magic "AALN"
//! 4       4     version (u32) = 1
//! 8       4     rows (u32)
//! 12      4     cols (u32)
//! 16      1     dtype (u8), 0 = f32
//! 17      4*r*c payload, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AALN";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;
pub const HEADER_LEN: usize = 17;

/// Dense row-major matrix of `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f32>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Config(format!(
                "matrix buffer holds {} values, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    context: format!("row {i}"),
                    left: r.len(),
                    right: cols,
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f32] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Rescales each row to unit L2 norm. Fails on the first zero-norm or
    /// non-finite row; `context` labels the error.
    pub fn normalize_rows(&mut self, context: &str) -> Result<()> {
        for i in 0..self.rows {
            let row = self.row_mut(i);
            if let Some(col) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    context: context.to_string(),
                    row: i,
                    col,
                });
            }
            let norm = l2_norm(row);
            if norm == 0.0 {
                return Err(Error::ZeroNorm {
                    context: context.to_string(),
                    row: i,
                });
            }
            for v in row.iter_mut() {
                *v = (f64::from(*v) / norm) as f32;
            }
        }
        Ok(())
    }
}

pub fn l2_norm(v: &[f32]) -> f64 {
    v.iter()
        .map(|&x| f64::from(x) * f64::from(x))
        .sum::<f64>()
        .sqrt()
}

pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .sum()
}

/// Mean of all rows, rescaled to unit norm. `None` when the mean vanishes.
pub fn pooled_unit_mean(m: &Matrix) -> Option<Vec<f32>> {
    if m.rows() == 0 {
        return None;
    }
    let mut acc = vec![0.0f64; m.cols()];
    for row in m.iter_rows() {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += f64::from(v);
        }
    }
    let n = m.rows() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    let norm = acc.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return None;
    }
    Some(acc.into_iter().map(|a| (a / norm) as f32).collect())
}

pub fn encode<W: Write>(m: &Matrix, mut w: W) -> std::io::Result<()> {
    let dim = |n: usize| {
        u32::try_from(n).map_err(|_| {
            std::io::Error::new(std::io::ErrorKind::InvalidInput, "dimension exceeds u32")
        })
    };
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u32::<LittleEndian>(dim(m.rows)?)?;
    w.write_u32::<LittleEndian>(dim(m.cols)?)?;
    w.write_u8(DTYPE_F32)?;
    for &v in &m.data {
        w.write_f32::<LittleEndian>(v)?;
    }
    w.flush()
}

/// Decodes a tensor. The error string describes the format violation.
pub fn decode<R: Read>(mut r: R) -> std::result::Result<Matrix, String> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|e| format!("truncated header: {e}"))?;
    if &magic != MAGIC {
        return Err(format!("bad magic {magic:?}"));
    }
    let header = |e: std::io::Error| format!("truncated header: {e}");
    let version = r.read_u32::<LittleEndian>().map_err(header)?;
    if version != VERSION {
        return Err(format!("unsupported version {version}"));
    }
    let rows = r.read_u32::<LittleEndian>().map_err(header)? as usize;
    let cols = r.read_u32::<LittleEndian>().map_err(header)? as usize;
    let dtype = r.read_u8().map_err(header)?;
    if dtype != DTYPE_F32 {
        return Err(format!("unsupported dtype {dtype}"));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| format!("shape {rows}x{cols} overflows"))?;
    let mut data = vec![0f32; len];
    r.read_f32_into::<LittleEndian>(&mut data)
        .map_err(|e| format!("payload shorter than {rows}x{cols}: {e}"))?;
    let mut probe = [0u8; 1];
    match r.read(&mut probe) {
        Ok(0) => {}
        Ok(_) => return Err("trailing bytes after payload".into()),
        Err(e) => return Err(e.to_string()),
    }
    Ok(Matrix { rows, cols, data })
}

pub fn write_tensor(path: &Path, m: &Matrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    encode(m, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Reads a tensor file without any normalization.
pub fn read_tensor(path: &Path) -> Result<Matrix> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    decode(BufReader::new(file)).map_err(|reason| Error::TensorFormat {
        path: path.to_path_buf(),
        reason,
    })
}
