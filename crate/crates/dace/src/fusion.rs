//! Fusion-center estimation: rebuild per-column sampling probabilities from
//! transmitted payloads, accumulate the debiased covariance estimate
//! C_e = Ĉ₁ − Ĉ₂, apply the exact-mean correction, and evaluate the
//! spectral-norm error bound.
//!
//! The d×m sampling matrix is never materialized: with c_k the multiplicity
//! of index k among the m draws, S Sᵀ x collapses to the sparse vector
//! z_k = c_k·x_k/(m·p_k), and each column contributes the rank-1 update
//! z zᵀ (at most m² cells) plus the diagonal correction weights
//! b_k = 1/(1 + (m−1)p_k).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::data::DataMatrix;
use crate::linalg::{self, LinalgError, SymmetricMatrix};
use crate::sampling::{mixed_prob, CompressedColumn};

#[derive(Debug, Error)]
pub enum FusionError {
    #[error("dimension mismatch: accumulator is {expected}, input is {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("no columns absorbed")]
    InsufficientData,
    #[error("corrupt payload: {0}")]
    CorruptPayload(String),
    #[error("accumulator configurations differ: {0}")]
    ConfigMismatch(String),
    #[error("reference matrix has zero spectral norm")]
    ZeroReference,
    #[error("probability {name} must lie in (0,1), got {value}")]
    InvalidProbability { name: &'static str, value: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// How the fusion center reconstructs per-entry sampling probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProbabilityModel {
    /// Data-aware mixed ℓ1/ℓ2 weights rebuilt from (value, ‖x‖₁, ‖x‖₂²).
    DataAware { alpha: f64 },
    /// Forced p_k = 1/d, the plain uniform with-replacement baseline.
    Uniform,
}

/// Sparse per-column contribution: unique sampled indices with their
/// back-projected values z_k and diagonal correction weights b_k.
#[derive(Debug, Clone)]
pub struct ColumnContribution {
    pub entries: Vec<(u32, f64, f64)>,
}

/// Relative slack allowed when checking transmitted values against the
/// transmitted norms.
const PAYLOAD_SLACK: f64 = 1e-12;

pub fn column_contribution(
    c: &CompressedColumn,
    m: usize,
    dim: usize,
    model: ProbabilityModel,
) -> Result<ColumnContribution, FusionError> {
    if c.is_zero {
        return Ok(ColumnContribution { entries: Vec::new() });
    }
    if c.indices.len() != m || c.values.len() != m {
        return Err(FusionError::CorruptPayload(format!(
            "expected {m} samples, found {}",
            c.indices.len()
        )));
    }
    if !(c.l1 > 0.0 && c.sq_l2 > 0.0) {
        return Err(FusionError::CorruptPayload(
            "nonzero column with nonpositive norms".into(),
        ));
    }
    // Multiplicities of each sampled index; BTreeMap keeps the entry order
    // deterministic.
    let mut seen: BTreeMap<u32, (f64, u32)> = BTreeMap::new();
    for (&t, &y) in c.indices.iter().zip(&c.values) {
        if (t as usize) >= dim {
            return Err(FusionError::CorruptPayload(format!(
                "index {t} out of range for d={dim}"
            )));
        }
        if y.abs() > c.l1 * (1.0 + PAYLOAD_SLACK) || y * y > c.sq_l2 * (1.0 + PAYLOAD_SLACK) {
            return Err(FusionError::CorruptPayload(format!(
                "value {y} inconsistent with norms (l1={}, sq_l2={})",
                c.l1, c.sq_l2
            )));
        }
        let slot = seen.entry(t).or_insert((y, 0));
        if slot.0.to_bits() != y.to_bits() {
            return Err(FusionError::CorruptPayload(format!(
                "index {t} transmitted with conflicting values"
            )));
        }
        slot.1 += 1;
    }
    let mf = m as f64;
    let entries = seen
        .into_iter()
        .map(|(t, (y, count))| {
            let p = match model {
                ProbabilityModel::DataAware { alpha } => mixed_prob(y, c.l1, c.sq_l2, alpha),
                ProbabilityModel::Uniform => 1.0 / dim as f64,
            };
            let z = count as f64 * y / (mf * p);
            let b = 1.0 / (1.0 + (mf - 1.0) * p);
            (t, z, b)
        })
        .collect();
    Ok(ColumnContribution { entries })
}

/// Streaming accumulator for the unbiased estimator. Scaling happens once
/// at `finalize`, so `merge` is plain entrywise addition and sharded
/// accumulation commutes with the single-site pipeline.
#[derive(Debug, Clone)]
pub struct EstimatorAccumulator {
    dim: usize,
    m: usize,
    model: ProbabilityModel,
    n_seen: u64,
    sum_c1: SymmetricMatrix,
    sum_c2_diag: Vec<f64>,
    mean_sum: Vec<f64>,
}

impl EstimatorAccumulator {
    pub fn new(dim: usize, m: usize, model: ProbabilityModel) -> Self {
        assert!(dim > 0 && m >= 2, "need d > 0 and m >= 2");
        Self {
            dim,
            m,
            model,
            n_seen: 0,
            sum_c1: SymmetricMatrix::zeros(dim),
            sum_c2_diag: vec![0.0; dim],
            mean_sum: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_seen(&self) -> u64 {
        self.n_seen
    }

    /// Absorbs one compressed column: a sparse rank-1 update touching at
    /// most m² cells.
    pub fn absorb(&mut self, c: &CompressedColumn) -> Result<(), FusionError> {
        let contrib = column_contribution(c, self.m, self.dim, self.model)?;
        for (a, &(i, zi, _)) in contrib.entries.iter().enumerate() {
            for &(j, zj, _) in &contrib.entries[a..] {
                self.sum_c1.add_sym(i as usize, j as usize, zi * zj);
            }
            let b = contrib.entries[a].2;
            self.sum_c2_diag[i as usize] += zi * zi * b;
        }
        self.n_seen += 1;
        Ok(())
    }

    /// Adds one site's exact raw-data sum vector g_j.
    pub fn add_site_sum(&mut self, g: &[f64]) -> Result<(), FusionError> {
        if g.len() != self.dim {
            return Err(FusionError::DimensionMismatch {
                expected: self.dim,
                found: g.len(),
            });
        }
        for (acc, v) in self.mean_sum.iter_mut().zip(g) {
            *acc += v;
        }
        Ok(())
    }

    /// Entrywise addition; associative and commutative, the only
    /// cross-thread contract for sharded accumulation.
    pub fn merge(&mut self, other: &EstimatorAccumulator) -> Result<(), FusionError> {
        if self.dim != other.dim {
            return Err(FusionError::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.m != other.m || self.model != other.model {
            return Err(FusionError::ConfigMismatch(format!(
                "m {} vs {} or probability model differs",
                self.m, other.m
            )));
        }
        self.sum_c1.add_assign(&other.sum_c1);
        for (a, b) in self.sum_c2_diag.iter_mut().zip(&other.sum_c2_diag) {
            *a += b;
        }
        for (a, b) in self.mean_sum.iter_mut().zip(&other.mean_sum) {
            *a += b;
        }
        self.n_seen += other.n_seen;
        Ok(())
    }

    /// C_e = (m/(nm−n))·(ΣzzᵀC − diag corrections) − x̄x̄ᵀ. The mean term
    /// uses the exactly transmitted site sums and is skipped in zero-mean
    /// mode.
    pub fn finalize(&self, mean_correct: bool) -> Result<SymmetricMatrix, FusionError> {
        if self.n_seen == 0 {
            return Err(FusionError::InsufficientData);
        }
        let n = self.n_seen as f64;
        let m = self.m as f64;
        let scale = m / (n * m - n);
        let mut out = self.sum_c1.clone();
        out.scale(scale);
        for i in 0..self.dim {
            let corrected = out.get(i, i) - scale * self.sum_c2_diag[i];
            out.set_sym(i, i, corrected);
        }
        if mean_correct {
            let d = self.dim;
            for i in 0..d {
                let xi = self.mean_sum[i] / n;
                for j in i..d {
                    let xj = self.mean_sum[j] / n;
                    out.add_sym(i, j, -(xi * xj));
                }
            }
        }
        Ok(out)
    }

    /// Raw Σ z zᵀ accumulator, exposed for PSD diagnostics in tests.
    pub fn sum_c1(&self) -> &SymmetricMatrix {
        &self.sum_c1
    }
}

/// Reference covariance from raw data: C = (1/n)XXᵀ − x̄x̄ᵀ, or (1/n)XXᵀ in
/// zero-mean mode.
pub fn exact_covariance(x: &DataMatrix, zero_mean: bool) -> SymmetricMatrix {
    let d = x.dim();
    let n = x.n().max(1) as f64;
    let mut c = SymmetricMatrix::zeros(d);
    for col in x.columns() {
        for i in 0..d {
            if col[i] == 0.0 {
                continue;
            }
            for j in i..d {
                c.add_sym(i, j, col[i] * col[j]);
            }
        }
    }
    c.scale(1.0 / n);
    if !zero_mean {
        let mean: Vec<f64> = x.column_sum().iter().map(|s| s / n).collect();
        for i in 0..d {
            for j in i..d {
                c.add_sym(i, j, -(mean[i] * mean[j]));
            }
        }
    }
    c
}

/// ‖C_e − C‖₂ / ‖C‖₂, the error metric of all benchmarks.
pub fn relative_error(ce: &SymmetricMatrix, c: &SymmetricMatrix) -> Result<f64, FusionError> {
    let budget = linalg::default_max_iter(c.dim()).max(200_000);
    let denom = linalg::spectral_norm(c, 1e-10, budget)?;
    if denom == 0.0 {
        return Err(FusionError::ZeroReference);
    }
    let num = linalg::spectral_norm(&ce.sub(c)?, 1e-10, budget)?;
    Ok(num / denom)
}

/// Inputs of the spectral-norm error bound. The final variance summand
/// ‖Σ ‖x_i‖₁² x_i x_iᵀ‖₂/(n²mα) needs raw columns; when only payloads are
/// available the trace upper bound Σ ‖x_i‖₁²‖x_i‖₂² replaces the norm
/// (`spectral_summand = None`), which can only loosen a one-sided bound.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub l1: Vec<f64>,
    pub sq_l2: Vec<f64>,
    pub m: usize,
    pub alpha: f64,
    pub eta: f64,
    pub delta: f64,
    pub dim: usize,
    pub spectral_summand: Option<f64>,
}

impl BoundInputs {
    /// Raw-data mode: computes the exact spectral summand.
    pub fn from_matrix(
        x: &DataMatrix,
        m: usize,
        alpha: f64,
        eta: f64,
        delta: f64,
    ) -> Result<Self, FusionError> {
        let d = x.dim();
        let mut l1 = Vec::with_capacity(x.n());
        let mut sq_l2 = Vec::with_capacity(x.n());
        let mut weighted = SymmetricMatrix::zeros(d);
        for col in x.columns() {
            let (v, w) = crate::sampling::column_norms(col)
                .map_err(|e| FusionError::CorruptPayload(e.to_string()))?;
            l1.push(v);
            sq_l2.push(w);
            let v2 = v * v;
            if v2 > 0.0 {
                for i in 0..d {
                    if col[i] == 0.0 {
                        continue;
                    }
                    for j in i..d {
                        weighted.add_sym(i, j, v2 * col[i] * col[j]);
                    }
                }
            }
        }
        let budget = linalg::default_max_iter(d).max(200_000);
        let spectral = linalg::spectral_norm(&weighted, 1e-9, budget)?;
        Ok(Self {
            l1,
            sq_l2,
            m,
            alpha,
            eta,
            delta,
            dim: d,
            spectral_summand: Some(spectral),
        })
    }

    /// Payload-only mode: per-column norms from the compressed columns.
    pub fn from_payload_norms(
        norms: impl Iterator<Item = (f64, f64)>,
        dim: usize,
        m: usize,
        alpha: f64,
        eta: f64,
        delta: f64,
    ) -> Self {
        let (l1, sq_l2) = norms.unzip();
        Self {
            l1,
            sq_l2,
            m,
            alpha,
            eta,
            delta,
            dim,
            spectral_summand: None,
        }
    }

    fn validate(&self) -> Result<(), FusionError> {
        for (name, value) in [("eta", self.eta), ("delta", self.delta)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(FusionError::InvalidProbability { name, value });
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(FusionError::InvalidProbability {
                name: "alpha",
                value: self.alpha,
            });
        }
        Ok(())
    }
}

/// R = max_i [ 7‖x_i‖₂²/n + ln²(2nd/η)·14‖x_i‖₁²/(nmα²) ]. Logarithms are
/// natural; the bound is one-sided so the base ambiguity only shifts a
/// constant factor.
pub fn bound_r_term(bi: &BoundInputs) -> f64 {
    let n = bi.l1.len() as f64;
    let m = bi.m as f64;
    let log_term = (2.0 * n * bi.dim as f64 / bi.eta).ln().powi(2);
    bi.l1
        .iter()
        .zip(&bi.sq_l2)
        .map(|(&v, &w)| 7.0 * w / n + log_term * 14.0 * v * v / (n * m * bi.alpha * bi.alpha))
        .fold(0.0_f64, f64::max)
}

/// σ² of the matrix Bernstein bound; see module docs on the final summand.
pub fn bound_sigma_sq(bi: &BoundInputs) -> f64 {
    let n = bi.l1.len() as f64;
    let m = bi.m as f64;
    let a = bi.alpha;
    let n2 = n * n;
    let mut sigma = 0.0;
    for (&v, &w) in bi.l1.iter().zip(&bi.sq_l2) {
        let v2 = v * v;
        sigma += 8.0 * w * w / (n2 * m * m * (1.0 - a) * (1.0 - a))
            + 4.0 * v2 * w / (n2 * m * m * m * a * a * (1.0 - a))
            + 9.0 * w * w / (n2 * m * (1.0 - a))
            + 2.0 * w * v2 / (n2 * m * m * a * (1.0 - a));
    }
    let spectral = match bi.spectral_summand {
        Some(s) => s,
        None => bi
            .l1
            .iter()
            .zip(&bi.sq_l2)
            .map(|(&v, &w)| v * v * w)
            .sum::<f64>(),
    };
    sigma + spectral / (n2 * m * a)
}

/// High-probability bound on ‖C_e − C‖₂:
/// log(2d/δ)·2R/3 + √(2σ²·log(2d/δ)).
pub fn theoretical_error_bound(bi: &BoundInputs) -> Result<f64, FusionError> {
    bi.validate()?;
    let log_d = (2.0 * bi.dim as f64 / bi.delta).ln();
    let r = bound_r_term(bi);
    let sigma_sq = bound_sigma_sq(bi);
    Ok(log_d * 2.0 * r / 3.0 + (2.0 * sigma_sq * log_d).sqrt())
}
