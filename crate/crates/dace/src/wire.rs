//! Wire format for site payloads and the simulated multi-site pipeline.
//!
//! Layout (all little-endian):
//!
//! ```text
//! magic "DACE" | u8 version=1 | u32 site_id | u32 d | u32 m | f64 alpha
//! | u32 column_count
//! | per column: u8 flags (bit0 = is_zero);
//!     if not zero: m×u32 indices, m×f64 values, f64 l1, f64 sq_l2
//! | d×f64 site_sum | u32 CRC32 of all preceding bytes
//! ```
//!
//! Files use the `.dace` extension. The CRC trailer exists because a
//! simulated distributed system still needs an honest corruption error path.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::data::DataMatrix;
use crate::fusion::{EstimatorAccumulator, FusionError, ProbabilityModel};
use crate::linalg::SymmetricMatrix;
use crate::sampling::{self, CompressedColumn, CompressionConfig, SamplingError};

pub const PAYLOAD_MAGIC: &[u8; 4] = b"DACE";
pub const PAYLOAD_VERSION: u8 = 1;
pub const PAYLOAD_EXTENSION: &str = "dace";

const FLAG_ZERO_COLUMN: u8 = 0b0000_0001;

#[derive(Debug, Error)]
pub enum WireError {
    #[error("bad magic, not a DACE payload")]
    BadMagic,
    #[error("unsupported payload version {0}")]
    UnsupportedVersion(u8),
    #[error("crc mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    CrcMismatch { stored: u32, computed: u32 },
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("shard count {g} invalid for {n} columns")]
    InvalidShardCount { g: usize, n: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One site's transmission: its compressed columns plus the exact
/// (uncompressed) sum of its raw columns for the mean correction.
#[derive(Debug, Clone, PartialEq)]
pub struct SitePayload {
    pub site_id: u32,
    pub dim: u32,
    pub m: u32,
    pub alpha: f64,
    pub columns: Vec<CompressedColumn>,
    pub site_sum: Vec<f64>,
}

impl SitePayload {
    pub fn encoded_len(&self) -> usize {
        let mut len = 4 + 1 + 4 + 4 + 4 + 8 + 4; // header
        for c in &self.columns {
            len += 1;
            if !c.is_zero {
                len += self.m as usize * (4 + 8) + 16;
            }
        }
        len + self.dim as usize * 8 + 4 // trailer
    }
}

pub fn encode(p: &SitePayload) -> Vec<u8> {
    let mut out = Vec::with_capacity(p.encoded_len());
    out.extend_from_slice(PAYLOAD_MAGIC);
    out.push(PAYLOAD_VERSION);
    out.extend_from_slice(&p.site_id.to_le_bytes());
    out.extend_from_slice(&p.dim.to_le_bytes());
    out.extend_from_slice(&p.m.to_le_bytes());
    out.extend_from_slice(&p.alpha.to_le_bytes());
    out.extend_from_slice(&(p.columns.len() as u32).to_le_bytes());
    for c in &p.columns {
        if c.is_zero {
            out.push(FLAG_ZERO_COLUMN);
            continue;
        }
        out.push(0);
        for idx in &c.indices {
            out.extend_from_slice(&idx.to_le_bytes());
        }
        for v in &c.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&c.l1.to_le_bytes());
        out.extend_from_slice(&c.sq_l2.to_le_bytes());
    }
    for v in &p.site_sum {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8], WireError> {
        if self.pos + len > self.buf.len() {
            return Err(WireError::CorruptPayload("unexpected end of stream".into()));
        }
        let s = &self.buf[self.pos..self.pos + len];
        self.pos += len;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, WireError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Exact inverse of `encode`. Validates magic, version, structural length,
/// CRC, and every `CompressedColumn` invariant, each with a distinguishable
/// error class.
pub fn decode(bytes: &[u8]) -> Result<SitePayload, WireError> {
    let mut cur = Cursor { buf: bytes, pos: 0 };
    if cur.take(4)? != PAYLOAD_MAGIC {
        return Err(WireError::BadMagic);
    }
    let version = cur.u8()?;
    if version != PAYLOAD_VERSION {
        return Err(WireError::UnsupportedVersion(version));
    }
    let site_id = cur.u32()?;
    let dim = cur.u32()?;
    let m = cur.u32()?;
    let alpha = cur.f64()?;
    let column_count = cur.u32()?;
    if dim == 0 {
        return Err(WireError::CorruptPayload("d must be positive".into()));
    }

    let mut columns = Vec::with_capacity(column_count as usize);
    for _ in 0..column_count {
        let flags = cur.u8()?;
        if flags & FLAG_ZERO_COLUMN != 0 {
            columns.push(CompressedColumn::zero());
            continue;
        }
        let mut indices = Vec::with_capacity(m as usize);
        for _ in 0..m {
            indices.push(cur.u32()?);
        }
        let mut values = Vec::with_capacity(m as usize);
        for _ in 0..m {
            values.push(cur.f64()?);
        }
        let l1 = cur.f64()?;
        let sq_l2 = cur.f64()?;
        columns.push(CompressedColumn {
            indices,
            values,
            l1,
            sq_l2,
            is_zero: false,
        });
    }
    let mut site_sum = Vec::with_capacity(dim as usize);
    for _ in 0..dim {
        site_sum.push(cur.f64()?);
    }
    let stored = cur.u32()?;
    if cur.pos != bytes.len() {
        return Err(WireError::CorruptPayload("trailing bytes".into()));
    }
    let computed = crc32fast::hash(&bytes[..bytes.len() - 4]);
    if stored != computed {
        return Err(WireError::CrcMismatch { stored, computed });
    }

    let payload = SitePayload {
        site_id,
        dim,
        m,
        alpha,
        columns,
        site_sum,
    };
    validate_payload(&payload)?;
    Ok(payload)
}

fn validate_payload(p: &SitePayload) -> Result<(), WireError> {
    if !(p.alpha > 0.0 && p.alpha < 1.0) {
        return Err(WireError::CorruptPayload(format!(
            "alpha {} outside (0,1)",
            p.alpha
        )));
    }
    let d = p.dim as f64;
    for (ci, c) in p.columns.iter().enumerate() {
        if c.is_zero {
            continue;
        }
        if !(c.l1 > 0.0 && c.sq_l2 > 0.0) || !c.l1.is_finite() || !c.sq_l2.is_finite() {
            return Err(WireError::CorruptPayload(format!(
                "column {ci}: invalid norms l1={} sq_l2={}",
                c.l1, c.sq_l2
            )));
        }
        // ‖x‖₁² ≥ ‖x‖₂² ≥ ‖x‖₁²/d with slack for rounding.
        let l1sq = c.l1 * c.l1;
        if c.sq_l2 > l1sq * (1.0 + 1e-9) || c.sq_l2 < l1sq / d * (1.0 - 1e-9) {
            return Err(WireError::CorruptPayload(format!(
                "column {ci}: norms violate l1² ≥ ‖x‖₂² ≥ l1²/d"
            )));
        }
        for (&t, &y) in c.indices.iter().zip(&c.values) {
            if t >= p.dim {
                return Err(WireError::CorruptPayload(format!(
                    "column {ci}: index {t} out of range"
                )));
            }
            if !y.is_finite()
                || y.abs() > c.l1 * (1.0 + 1e-12)
                || y * y > c.sq_l2 * (1.0 + 1e-12)
            {
                return Err(WireError::CorruptPayload(format!(
                    "column {ci}: value {y} inconsistent with norms"
                )));
            }
        }
    }
    if p.site_sum.iter().any(|v| !v.is_finite()) {
        return Err(WireError::CorruptPayload("site_sum not finite".into()));
    }
    Ok(())
}

/// Splits X into g contiguous near-equal shards and compresses each shard
/// as one site. Per-column seeds are derived from the global column index,
/// so the union of payloads is bit-identical to a single-site run.
pub fn simulate_sites(
    x: &DataMatrix,
    g: usize,
    cfg: &CompressionConfig,
) -> Result<Vec<SitePayload>, WireError> {
    let n = x.n();
    if g == 0 || g > n {
        return Err(WireError::InvalidShardCount { g, n });
    }
    let base = n / g;
    let rem = n % g;
    let mut payloads = Vec::with_capacity(g);
    let mut start = 0usize;
    for site in 0..g {
        let len = base + usize::from(site < rem);
        let end = start + len;
        let mut columns = Vec::with_capacity(len);
        let mut site_sum = vec![0.0; x.dim()];
        for col in start..end {
            let data = x.column(col);
            columns.push(sampling::compress_column(data, cfg, col as u64)?);
            for (acc, v) in site_sum.iter_mut().zip(data) {
                *acc += v;
            }
        }
        payloads.push(SitePayload {
            site_id: site as u32,
            dim: x.dim() as u32,
            m: cfg.m as u32,
            alpha: cfg.alpha,
            columns,
            site_sum,
        });
        start = end;
    }
    Ok(payloads)
}

/// Fuses payloads into the covariance estimate. Payloads are sorted by
/// site_id first, which makes the result independent of arrival order.
pub fn estimate_from_payloads(
    payloads: &[SitePayload],
    mean_correct: bool,
) -> Result<SymmetricMatrix, WireError> {
    let first = payloads
        .first()
        .ok_or_else(|| WireError::CorruptPayload("no payloads".into()))?;
    let (dim, m, alpha) = (first.dim, first.m, first.alpha);
    for p in payloads {
        if p.dim != dim || p.m != m || p.alpha != alpha {
            return Err(WireError::CorruptPayload(format!(
                "payload {} disagrees on (d, m, alpha)",
                p.site_id
            )));
        }
    }
    let mut order: Vec<&SitePayload> = payloads.iter().collect();
    order.sort_by_key(|p| p.site_id);

    let mut acc = EstimatorAccumulator::new(
        dim as usize,
        m as usize,
        ProbabilityModel::DataAware { alpha },
    );
    for p in order {
        for c in &p.columns {
            acc.absorb(c).map_err(fusion_to_wire)?;
        }
        acc.add_site_sum(&p.site_sum).map_err(fusion_to_wire)?;
    }
    acc.finalize(mean_correct).map_err(fusion_to_wire)
}

fn fusion_to_wire(e: FusionError) -> WireError {
    WireError::CorruptPayload(e.to_string())
}

pub fn payload_file_name(site_id: u32) -> String {
    format!("site_{site_id:04}.{PAYLOAD_EXTENSION}")
}

pub fn write_payload(dir: &Path, p: &SitePayload) -> Result<(PathBuf, usize), WireError> {
    let bytes = encode(p);
    let path = dir.join(payload_file_name(p.site_id));
    let mut f = fs::File::create(&path)?;
    f.write_all(&bytes)?;
    Ok((path, bytes.len()))
}

pub fn read_payload(path: &Path) -> Result<SitePayload, WireError> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode(&buf)
}

/// Reads every `.dace` file in a directory, sorted by file name.
pub fn read_payload_dir(dir: &Path) -> Result<Vec<SitePayload>, WireError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some(PAYLOAD_EXTENSION))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(WireError::CorruptPayload(format!(
            "no .{PAYLOAD_EXTENSION} files in {}",
            dir.display()
        )));
    }
    paths.iter().map(|p| read_payload(p)).collect()
}
