//! `STRB-DENSE` v1 binary arrays: magic `STRB`, `u32` version, `u32` rank,
//! `u64` extents, then the little-endian `f64` payload in column-major order.

use crate::error::{Error, Result};
use faer::{Mat, MatRef};
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"STRB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseArray {
    pub dims: Vec<usize>,
    pub data: Vec<f64>,
}

impl DenseArray {
    pub fn new(dims: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let len = checked_len(&dims)?;
        if len != data.len() {
            return Err(Error::Dimension(format!("extents {dims:?} hold {len} values, got {}", data.len())));
        }
        Ok(Self { dims, data })
    }

    pub fn from_vec(v: &[f64]) -> Self {
        Self {
            dims: vec![v.len()],
            data: v.to_vec(),
        }
    }

    pub fn from_mat(m: MatRef<'_, f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for j in 0..m.ncols() {
            data.extend((0..m.nrows()).map(|i| m[(i, j)]));
        }
        Self {
            dims: vec![m.nrows(), m.ncols()],
            data,
        }
    }

    /// Stacks equally shaped matrices along a trailing third axis.
    pub fn from_mats(mats: &[Mat<f64>], rows: usize, cols: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols * mats.len());
        for m in mats {
            if m.nrows() != rows || m.ncols() != cols {
                return Err(Error::Dimension(format!("stack of {rows}x{cols} got {}x{}", m.nrows(), m.ncols())));
            }
            data.extend(Self::from_mat(m.as_ref()).data);
        }
        Ok(Self {
            dims: vec![rows, cols, mats.len()],
            data,
        })
    }

    pub fn to_vec(&self) -> Result<Vec<f64>> {
        if self.dims.len() != 1 {
            return Err(Error::Dimension(format!("expected a vector, got extents {:?}", self.dims)));
        }
        Ok(self.data.clone())
    }

    pub fn to_mat(&self) -> Result<Mat<f64>> {
        if self.dims.len() != 2 {
            return Err(Error::Dimension(format!("expected a matrix, got extents {:?}", self.dims)));
        }
        let r = self.dims[0];
        Ok(Mat::from_fn(r, self.dims[1], |i, j| self.data[i + r * j]))
    }

    pub fn to_mats(&self) -> Result<Vec<Mat<f64>>> {
        if self.dims.len() != 3 {
            return Err(Error::Dimension(format!("expected a rank-3 array, got extents {:?}", self.dims)));
        }
        let (r, c) = (self.dims[0], self.dims[1]);
        Ok((0..self.dims[2])
            .map(|k| Mat::from_fn(r, c, |i, j| self.data[i + r * (j + c * k)]))
            .collect())
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.dims.len() + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.dims.len() as u32).to_le_bytes());
        for &d in &self.dims {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let ctx = "STRB-DENSE";
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(Error::format(ctx, "bad magic"));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::format(ctx, format!("unsupported version {version}")));
        }
        let rank = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header = 12 + 8 * rank;
        if bytes.len() < header {
            return Err(Error::format(ctx, "truncated header"));
        }
        let dims: Vec<usize> = (0..rank)
            .map(|k| u64::from_le_bytes(bytes[12 + 8 * k..20 + 8 * k].try_into().unwrap()) as usize)
            .collect();
        let len = checked_len(&dims)?;
        let payload = &bytes[header..];
        if payload.len() < 8 * len {
            return Err(Error::format(ctx, format!("truncated payload: {} of {} bytes", payload.len(), 8 * len)));
        }
        if payload.len() > 8 * len {
            return Err(Error::Dimension(format!(
                "payload of {} bytes exceeds extents {dims:?}",
                payload.len()
            )));
        }
        let data = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self { dims, data })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::decode(&std::fs::read(path)?).map_err(|e| match e {
            Error::Format { message, .. } => Error::format(path.display().to_string(), message),
            other => other,
        })
    }
}

fn checked_len(dims: &[usize]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Dimension(format!("extents {dims:?} overflow")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_column_major() {
        let m = Mat::from_fn(2, 3, |i, j| (10 * i + j) as f64);
        let a = DenseArray::from_mat(m.as_ref());
        assert_eq!(a.data, vec![0.0, 10.0, 1.0, 11.0, 2.0, 12.0]);
        let bytes = a.encode();
        assert_eq!(&bytes[..4], b"STRB");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(bytes.len(), 12 + 16 + 48);
        assert_eq!(DenseArray::decode(&bytes).unwrap().to_mat().unwrap(), m);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let a = DenseArray::from_vec(&[1.0, 2.0, 3.0]);
        let mut bytes = a.encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(DenseArray::decode(&bad), Err(Error::Format { .. })));
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(DenseArray::decode(&v2), Err(Error::Format { .. })));
        assert!(matches!(DenseArray::decode(&bytes[..bytes.len() - 3]), Err(Error::Format { .. })));
        bytes.extend_from_slice(&0.0f64.to_le_bytes());
        assert!(matches!(DenseArray::decode(&bytes), Err(Error::Dimension(_))));
    }
}
