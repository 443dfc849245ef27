//! Binary matrix dump format.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "SGA1"
//!      4     4  rows   (u32 LE)
//!      8     4  cols   (u32 LE)
//!     12     4  dtype  (u32 LE, 1 = f64)
//!     16     8  reserved, zero
//!     24     *  rows*cols f64 LE, row-major
//! ```

use std::io::{Read, Write};

use super::Matrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"SGA1";
pub const HEADER_LEN: usize = 24;
pub const DTYPE_F64: u32 = 1;

pub fn write_matrix<W: Write>(w: &mut W, m: &Matrix) -> Result<()> {
    let rows = u32::try_from(m.rows()).map_err(|_| Error::Shape("rows exceed u32".into()))?;
    let cols = u32::try_from(m.cols()).map_err(|_| Error::Shape("cols exceed u32".into()))?;
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&rows.to_le_bytes());
    header[8..12].copy_from_slice(&cols.to_le_bytes());
    header[12..16].copy_from_slice(&DTYPE_F64.to_le_bytes());
    w.write_all(&header)?;
    let mut buf = Vec::with_capacity(m.data().len() * 8);
    for v in m.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(r: &mut R) -> Result<Matrix> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad matrix magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (rows, cols, dtype) = (word(4) as usize, word(8) as usize, word(12));
    if dtype != DTYPE_F64 {
        return Err(Error::Format(format!("unsupported dtype {dtype}")));
    }
    let mut payload = vec![0u8; rows * cols * 8];
    r.read_exact(&mut payload)?;
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::from_vec(rows, cols, data)
}

pub fn matrix_to_bytes(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + m.data().len() * 8);
    write_matrix(&mut out, m).expect("writing to a Vec cannot fail");
    out
}

pub fn matrix_from_bytes(bytes: &[u8]) -> Result<Matrix> {
    read_matrix(&mut &bytes[..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        let m = Matrix::from_vec(2, 3, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.5]).unwrap();
        let bytes = matrix_to_bytes(&m);
        assert_eq!(bytes.len(), 24 + 48);
        assert_eq!(&bytes[0..4], b"SGA1");
        assert_eq!(&bytes[4..8], &2u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &3u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &1u32.to_le_bytes());
        assert_eq!(&bytes[16..24], &[0u8; 8]);
        assert_eq!(&bytes[64..72], &6.5f64.to_le_bytes());
        assert_eq!(matrix_from_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn rejects_bad_input() {
        let m = Matrix::zeros(1, 1);
        let mut bytes = matrix_to_bytes(&m);
        bytes[12] = 2;
        assert!(matches!(matrix_from_bytes(&bytes), Err(Error::Format(_))));
        bytes[0] = b'X';
        assert!(matrix_from_bytes(&bytes).is_err());
        assert!(matrix_from_bytes(&matrix_to_bytes(&m)[..30]).is_err());
    }
}
