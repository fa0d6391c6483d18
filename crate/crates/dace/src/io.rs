//! Binary file formats.
//!
//! SYMM (symmetric matrix): magic `SYMM`, u32 version = 1, u32 d, then
//! d·(d+1)/2 f64 upper-triangle entries row-major. All integers and floats
//! little-endian.
//!
//! DMAT (data matrix): magic `DMAT`, u32 version = 1, u32 d, u32 n, then
//! d·n f64 column-major. An optional labels sidecar at `<path>.labels`
//! holds one u32 per column.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::data::DataMatrix;
use crate::linalg::{LinalgError, SymmetricMatrix};

pub const SYMM_MAGIC: &[u8; 4] = b"SYMM";
pub const DMAT_MAGIC: &[u8; 4] = b"DMAT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic: expected {expected:?}")]
    BadMagic { expected: [u8; 4] },
    #[error("unsupported version {0}")]
    UnsupportedVersion(u32),
    #[error("unexpected end of file")]
    Truncated,
    #[error("trailing bytes after payload")]
    TrailingBytes,
    #[error("invalid header field: {0}")]
    InvalidHeader(String),
    #[error(transparent)]
    Matrix(#[from] LinalgError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, len: usize) -> Result<&'a [u8], FormatError> {
        if self.pos + len > self.buf.len() {
            return Err(FormatError::Truncated);
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, FormatError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, FormatError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn done(&self) -> Result<(), FormatError> {
        if self.pos != self.buf.len() {
            return Err(FormatError::TrailingBytes);
        }
        Ok(())
    }
}

pub fn encode_symm(m: &SymmetricMatrix) -> Vec<u8> {
    let d = m.dim();
    let mut out = Vec::with_capacity(12 + 8 * d * (d + 1) / 2);
    out.extend_from_slice(SYMM_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for v in m.upper_triangle() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_symm(bytes: &[u8]) -> Result<SymmetricMatrix, FormatError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != SYMM_MAGIC {
        return Err(FormatError::BadMagic { expected: *SYMM_MAGIC });
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let d = r.u32()? as usize;
    if d == 0 {
        return Err(FormatError::InvalidHeader("d must be positive".into()));
    }
    let count = d * (d + 1) / 2;
    let mut upper = Vec::with_capacity(count);
    for _ in 0..count {
        upper.push(r.f64()?);
    }
    r.done()?;
    Ok(SymmetricMatrix::from_upper_triangle(d, &upper)?)
}

pub fn write_symm(path: &Path, m: &SymmetricMatrix) -> Result<(), FormatError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_symm(m))?;
    Ok(())
}

pub fn read_symm(path: &Path) -> Result<SymmetricMatrix, FormatError> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_symm(&buf)
}

pub fn encode_dmat(m: &DataMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * m.raw().len());
    out.extend_from_slice(DMAT_MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(m.n() as u32).to_le_bytes());
    for v in m.raw() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_dmat(bytes: &[u8]) -> Result<DataMatrix, FormatError> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != DMAT_MAGIC {
        return Err(FormatError::BadMagic { expected: *DMAT_MAGIC });
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let d = r.u32()? as usize;
    let n = r.u32()? as usize;
    if d == 0 {
        return Err(FormatError::InvalidHeader("d must be positive".into()));
    }
    let mut values = Vec::with_capacity(d * n);
    for _ in 0..d * n {
        values.push(r.f64()?);
    }
    r.done()?;
    Ok(DataMatrix::from_raw(d, n, values))
}

pub fn write_dmat(path: &Path, m: &DataMatrix) -> Result<(), FormatError> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode_dmat(m))?;
    Ok(())
}

pub fn read_dmat(path: &Path) -> Result<DataMatrix, FormatError> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_dmat(&buf)
}

/// Sidecar path for column labels: `<path>.labels`.
pub fn labels_path(dmat_path: &Path) -> std::path::PathBuf {
    let mut os = dmat_path.as_os_str().to_owned();
    os.push(".labels");
    os.into()
}

pub fn write_labels(path: &Path, labels: &[u32]) -> Result<(), FormatError> {
    let mut out = Vec::with_capacity(4 * labels.len());
    for l in labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&out)?;
    Ok(())
}

pub fn read_labels(path: &Path, expected_n: usize) -> Result<Vec<u32>, FormatError> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    if buf.len() != 4 * expected_n {
        return Err(FormatError::InvalidHeader(format!(
            "labels sidecar holds {} entries, expected {}",
            buf.len() / 4,
            expected_n
        )));
    }
    Ok(buf
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect())
}
