//! Competing estimators for the benchmark harness. All of them target the
//! zero-mean covariance (1/n)XXᵀ, matching the reduction used everywhere
//! else in the crate.
//!
//! Debiasing constants are never copied from the literature: Gauss-Inverse
//! constants come from a Monte Carlo calibration oracle (cached per (d, m)),
//! and the UniSample-HD without-replacement moments are verified by subset
//! enumeration in the tests before use.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::DataMatrix;
use crate::fusion::{EstimatorAccumulator, FusionError, ProbabilityModel};
use crate::linalg::{LinalgError, SymmetricMatrix};
use crate::sampling::{self, SamplingError};
use crate::seeding;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("projection matrix numerically singular after {retries} redraws")]
    SingularProjection { retries: usize },
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// The estimator families compared in the benchmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    GaussInverse,
    UniSampleHd,
    SparseProj,
    UniformWith,
    UniformWithout,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussInverse => "gauss-inverse",
            Self::UniSampleHd => "unisample-hd",
            Self::SparseProj => "sparse",
            Self::UniformWith => "uniform",
            Self::UniformWithout => "uniform-without",
        }
    }
}

const SALT_GAUSS: u64 = 0x6055;
const SALT_SIGNS: u64 = 0x5167;
const SALT_SUBSET: u64 = 0x5b5e;
const SALT_SPARSE: u64 = 0x5a55;
const GAUSS_REDRAW_LIMIT: usize = 8;

// ---------------------------------------------------------------------------
// Gauss-Inverse
// ---------------------------------------------------------------------------

/// Debiasing constants for E[P·xxᵀ·P] = a·xxᵀ + b·‖x‖₂²·I, where P is the
/// orthogonal projection onto a uniformly random m-dimensional subspace.
#[derive(Debug, Clone, Copy)]
pub struct GaussConstants {
    pub a: f64,
    pub b: f64,
}

fn gauss_cache() -> &'static Mutex<HashMap<(usize, usize), GaussConstants>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), GaussConstants>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Monte Carlo calibration oracle: average P·e₁e₁ᵀ·P over `draws`
/// projections. Entry (0,0) estimates a+b, the other diagonal entries
/// estimate b; off-diagonals vanish by symmetry.
pub fn gauss_debias_constants(
    d: usize,
    m: usize,
    draws: usize,
    seed: u64,
) -> Result<GaussConstants, BaselineError> {
    if m < 1 || m > d {
        return Err(BaselineError::InvalidParam(format!(
            "need 1 <= m <= d, got m={m}, d={d}"
        )));
    }
    let mut rng = seeding::rng_for(seed);
    let mut e1 = vec![0.0; d];
    e1[0] = 1.0;
    let mut sum_first = 0.0;
    let mut sum_rest = 0.0;
    let mut ws = ProjectionWorkspace::new(d, m);
    for _ in 0..draws {
        let v = ws.project(&e1, &mut rng)?;
        sum_first += v[0] * v[0];
        sum_rest += v[1..].iter().map(|x| x * x).sum::<f64>() / (d - 1) as f64;
    }
    let b = sum_rest / draws as f64;
    let a = sum_first / draws as f64 - b;
    Ok(GaussConstants { a, b })
}

/// Cached calibration with the fixed internal budget used by the estimator.
pub fn gauss_constants_cached(d: usize, m: usize) -> Result<GaussConstants, BaselineError> {
    if let Some(c) = gauss_cache().lock().unwrap().get(&(d, m)) {
        return Ok(*c);
    }
    let c = gauss_debias_constants(
        d,
        m,
        200_000,
        seeding::salted_seed(0xca11b, (d * 131 + m) as u64),
    )?;
    gauss_cache().lock().unwrap().insert((d, m), c);
    Ok(c)
}

/// Scratch space for computing P·x = S(SᵀS)⁻¹Sᵀx with a fresh Gaussian S.
struct ProjectionWorkspace {
    d: usize,
    m: usize,
    s: Vec<f64>,    // d×m column-major
    gram: Vec<f64>, // m×m
    t: Vec<f64>,    // m
}

impl ProjectionWorkspace {
    fn new(d: usize, m: usize) -> Self {
        Self {
            d,
            m,
            s: vec![0.0; d * m],
            gram: vec![0.0; m * m],
            t: vec![0.0; m],
        }
    }

    /// Draws S and returns P·x, redrawing on a numerically singular SᵀS.
    fn project<R: Rng>(&mut self, x: &[f64], rng: &mut R) -> Result<Vec<f64>, BaselineError> {
        let (d, m) = (self.d, self.m);
        'redraw: for _ in 0..GAUSS_REDRAW_LIMIT {
            for v in &mut self.s {
                *v = rng.sample(StandardNormal);
            }
            // gram = SᵀS, t = Sᵀx.
            for i in 0..m {
                let ci = &self.s[i * d..(i + 1) * d];
                self.t[i] = ci.iter().zip(x).map(|(a, b)| a * b).sum();
                for j in i..m {
                    let cj = &self.s[j * d..(j + 1) * d];
                    let g: f64 = ci.iter().zip(cj).map(|(a, b)| a * b).sum();
                    self.gram[i * m + j] = g;
                    self.gram[j * m + i] = g;
                }
            }
            // In-place Cholesky solve of gram·q = t.
            let mut chol = self.gram.clone();
            for i in 0..m {
                for j in 0..=i {
                    let mut sum = chol[i * m + j];
                    for k in 0..j {
                        sum -= chol[i * m + k] * chol[j * m + k];
                    }
                    if i == j {
                        if sum <= 1e-12 {
                            continue 'redraw;
                        }
                        chol[i * m + j] = sum.sqrt();
                    } else {
                        chol[i * m + j] = sum / chol[j * m + j];
                    }
                }
            }
            let mut q = self.t.clone();
            for i in 0..m {
                for k in 0..i {
                    q[i] -= chol[i * m + k] * q[k];
                }
                q[i] /= chol[i * m + i];
            }
            for i in (0..m).rev() {
                for k in (i + 1)..m {
                    q[i] -= chol[k * m + i] * q[k];
                }
                q[i] /= chol[i * m + i];
            }
            let mut out = vec![0.0; d];
            for (l, &ql) in q.iter().enumerate() {
                if ql != 0.0 {
                    let col = &self.s[l * d..(l + 1) * d];
                    for i in 0..d {
                        out[i] += ql * col[i];
                    }
                }
            }
            return Ok(out);
        }
        Err(BaselineError::SingularProjection {
            retries: GAUSS_REDRAW_LIMIT,
        })
    }
}

/// Gauss-Inverse estimator: per column project onto a random m-subspace,
/// average the projected outer products, then solve the calibrated moment
/// identity for xxᵀ using ‖x‖₂² estimated as (d/m)‖Px‖₂².
pub fn gauss_inverse_estimate(
    x: &DataMatrix,
    m: usize,
    seed: u64,
) -> Result<SymmetricMatrix, BaselineError> {
    let d = x.dim();
    if m < 1 || m > d {
        return Err(BaselineError::InvalidParam(format!(
            "need 1 <= m <= d, got m={m}, d={d}"
        )));
    }
    let n = x.n().max(1) as f64;
    if m == d {
        // S is full rank almost surely, so P = I and the estimate is exact.
        return Ok(crate::fusion::exact_covariance(x, true));
    }
    let consts = gauss_constants_cached(d, m)?;
    let mut acc = SymmetricMatrix::zeros(d);
    let mut sq_norm_est = 0.0;
    let mut ws = ProjectionWorkspace::new(d, m);
    let mut rng = seeding::rng_for(seeding::salted_seed(seed, SALT_GAUSS));
    for col in x.columns() {
        let p = ws.project(col, &mut rng)?;
        for i in 0..d {
            if p[i] == 0.0 {
                continue;
            }
            for j in i..d {
                acc.add_sym(i, j, p[i] * p[j]);
            }
        }
        sq_norm_est += (d as f64 / m as f64) * p.iter().map(|v| v * v).sum::<f64>();
    }
    acc.scale(1.0 / n);
    let mean_sq = sq_norm_est / n;
    for i in 0..d {
        acc.add_sym(i, i, -consts.b * mean_sq);
    }
    acc.scale(1.0 / consts.a);
    Ok(acc)
}

// ---------------------------------------------------------------------------
// UniSample-HD
// ---------------------------------------------------------------------------

/// In-place normalized Walsh–Hadamard transform; the length must be a power
/// of two. Self-inverse: applying it twice returns the input.
pub fn fwht_normalized(v: &mut [f64]) {
    let n = v.len();
    debug_assert!(n.is_power_of_two());
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(2 * h) {
            for i in block..block + h {
                let a = v[i];
                let b = v[i + h];
                v[i] = a + b;
                v[i + h] = a - b;
            }
        }
        h *= 2;
    }
    let scale = 1.0 / (n as f64).sqrt();
    for x in v {
        *x *= scale;
    }
}

fn next_pow2(d: usize) -> usize {
    d.next_power_of_two()
}

/// Exact without-replacement moment multipliers that take the raw sum of
/// sampled products Σ y_a·y_b straight to an unbiased estimate of y·yᵀ:
/// diagonal d/(m·n), off-diagonal d(d−1)/(m(m−1)·n). Equivalent to scaling
/// samples by d/m and then debiasing by m/d and m(d−1)/(d(m−1)).
fn without_replacement_multipliers(d: usize, m: usize, n: f64) -> (f64, f64) {
    debug_assert!(m >= 2);
    let (df, mf) = (d as f64, m as f64);
    let diag = df / (mf * n);
    let off = df * (df - 1.0) / (mf * (mf - 1.0) * n);
    (diag, off)
}

/// UniSample-HD: flatten each column with a shared random-sign diagonal and
/// the normalized Walsh–Hadamard transform, uniformly sample m coordinates
/// without replacement, debias with the exact subset moments, and invert
/// the transform pair. Dimensions are padded to the next power of two and
/// cropped back after inversion.
pub fn unisample_hd_estimate(
    x: &DataMatrix,
    m: usize,
    seed: u64,
) -> Result<SymmetricMatrix, BaselineError> {
    let d = x.dim();
    let dp = next_pow2(d);
    if m < 2 || m > dp {
        return Err(BaselineError::InvalidParam(format!(
            "need 2 <= m <= padded dim, got m={m}, d={d} (padded {dp})"
        )));
    }
    let n = x.n().max(1) as f64;
    let mut rng_signs = seeding::rng_for(seeding::salted_seed(seed, SALT_SIGNS));
    let signs: Vec<f64> = (0..dp)
        .map(|_| if rng_signs.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    let subset_base = seeding::salted_seed(seed, SALT_SUBSET);
    let mut raw = SymmetricMatrix::zeros(dp);
    let mut y = vec![0.0; dp];
    for (ci, col) in x.columns().enumerate() {
        for (i, slot) in y.iter_mut().enumerate() {
            *slot = if i < d { signs[i] * col[i] } else { 0.0 };
        }
        fwht_normalized(&mut y);
        let mut rng = seeding::rng_for(seeding::column_seed(subset_base, ci as u64));
        let subset = rand::seq::index::sample(&mut rng, dp, m).into_vec();
        accumulate_subset_products(&mut raw, &y, &subset);
    }
    Ok(unisample_recover(&raw, n, m, d, &signs))
}

/// Adds y_a·y_b for every sampled pair (a, b) into the accumulator.
fn accumulate_subset_products(raw: &mut SymmetricMatrix, y: &[f64], subset: &[usize]) {
    for (ai, &a) in subset.iter().enumerate() {
        for &b in &subset[ai..] {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            raw.add_sym(lo, hi, y[a] * y[b]);
        }
    }
}

/// Debiases the accumulated subset products, inverts the transform pair,
/// and crops the padding back off.
fn unisample_recover(
    raw: &SymmetricMatrix,
    n: f64,
    m: usize,
    d_orig: usize,
    signs: &[f64],
) -> SymmetricMatrix {
    let dp = raw.dim();
    let (diag_mul, off_mul) = without_replacement_multipliers(dp, m, n);
    let mut full: Vec<f64> = Vec::with_capacity(dp * dp);
    for i in 0..dp {
        for j in 0..dp {
            let mul = if i == j { diag_mul } else { off_mul };
            full.push(raw.get(i, j) * mul);
        }
    }
    // C_x = D·H·C_y·H·D: transform rows, then columns, then conjugate signs.
    for i in 0..dp {
        fwht_normalized(&mut full[i * dp..(i + 1) * dp]);
    }
    let mut colbuf = vec![0.0; dp];
    for j in 0..dp {
        for i in 0..dp {
            colbuf[i] = full[i * dp + j];
        }
        fwht_normalized(&mut colbuf);
        for i in 0..dp {
            full[i * dp + j] = colbuf[i];
        }
    }
    let mut out = SymmetricMatrix::zeros(d_orig);
    for i in 0..d_orig {
        for j in i..d_orig {
            let v = 0.5 * (full[i * dp + j] + full[j * dp + i]);
            out.set_sym(i, j, signs[i] * signs[j] * v);
        }
    }
    out
}

/// Uniform sampling without replacement in the original coordinates (the
/// transform-free UniSample variant): same exact-moment debiasing, no
/// flattening.
pub fn uniform_without_estimate(
    x: &DataMatrix,
    m: usize,
    seed: u64,
) -> Result<SymmetricMatrix, BaselineError> {
    let d = x.dim();
    if m < 2 || m > d {
        return Err(BaselineError::InvalidParam(format!(
            "need 2 <= m <= d, got m={m}, d={d}"
        )));
    }
    let n = x.n().max(1) as f64;
    let subset_base = seeding::salted_seed(seed, SALT_SUBSET);
    let mut raw = SymmetricMatrix::zeros(d);
    for (ci, col) in x.columns().enumerate() {
        let mut rng = seeding::rng_for(seeding::column_seed(subset_base, ci as u64));
        let subset = rand::seq::index::sample(&mut rng, d, m).into_vec();
        accumulate_subset_products(&mut raw, col, &subset);
    }
    let (diag_mul, off_mul) = without_replacement_multipliers(d, m, n);
    let mut out = SymmetricMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            let mul = if i == j { diag_mul } else { off_mul };
            out.set_sym(i, j, raw.get(i, j) * mul);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Sparse projection
// ---------------------------------------------------------------------------

/// Sparse biased estimator (1/n)Σ SSᵀxxᵀSSᵀ with random-sign entries of
/// density `sparsity`, scaled so E[SSᵀ] = I. Reported as-is, without
/// debiasing.
pub fn sparse_estimate(
    x: &DataMatrix,
    m: usize,
    sparsity: f64,
    seed: u64,
) -> Result<SymmetricMatrix, BaselineError> {
    sparse_estimate_impl(x, m, sparsity, seed, false)
}

pub(crate) fn sparse_estimate_impl(
    x: &DataMatrix,
    m: usize,
    sparsity: f64,
    seed: u64,
    orthonormalize: bool,
) -> Result<SymmetricMatrix, BaselineError> {
    let d = x.dim();
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(BaselineError::InvalidParam(format!(
            "sparsity must lie in (0,1], got {sparsity}"
        )));
    }
    if m < 1 || m > d {
        return Err(BaselineError::InvalidParam(format!(
            "need 1 <= m <= d, got m={m}, d={d}"
        )));
    }
    let n = x.n().max(1) as f64;
    let entry = 1.0 / (sparsity * m as f64).sqrt();
    let col_base = seeding::salted_seed(seed, SALT_SPARSE);
    let mut acc = SymmetricMatrix::zeros(d);
    let mut s = vec![0.0; d * m]; // column-major d×m
    let mut y = vec![0.0; d];
    for (ci, col) in x.columns().enumerate() {
        let mut rng = seeding::rng_for(seeding::column_seed(col_base, ci as u64));
        for v in &mut s {
            *v = if rng.random::<f64>() < sparsity {
                if rng.random::<bool>() {
                    entry
                } else {
                    -entry
                }
            } else {
                0.0
            };
        }
        if orthonormalize {
            gram_schmidt_columns(&mut s, d, m);
        }
        // y = S·(Sᵀ·x).
        y.iter_mut().for_each(|v| *v = 0.0);
        for l in 0..m {
            let sc = &s[l * d..(l + 1) * d];
            let t: f64 = sc.iter().zip(col).map(|(a, b)| a * b).sum();
            if t != 0.0 {
                for i in 0..d {
                    y[i] += t * sc[i];
                }
            }
        }
        for i in 0..d {
            if y[i] == 0.0 {
                continue;
            }
            for j in i..d {
                acc.add_sym(i, j, y[i] * y[j]);
            }
        }
    }
    acc.scale(1.0 / n);
    Ok(acc)
}

fn gram_schmidt_columns(s: &mut [f64], d: usize, m: usize) {
    for l in 0..m {
        for _ in 0..2 {
            for prev in 0..l {
                let (head, tail) = s.split_at_mut(l * d);
                let pc = &head[prev * d..(prev + 1) * d];
                let cc = &mut tail[..d];
                let c: f64 = pc.iter().zip(cc.iter()).map(|(a, b)| a * b).sum();
                for (x, p) in cc.iter_mut().zip(pc) {
                    *x -= c * p;
                }
            }
        }
        let col = &mut s[l * d..(l + 1) * d];
        let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in col {
                *v /= norm;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Plain uniform with-replacement sampling
// ---------------------------------------------------------------------------

/// The data-aware pipeline with forced uniform probabilities p_k = 1/d;
/// isolates the value of data-awareness against the identical estimator
/// machinery.
pub fn uniform_sample_estimate(
    x: &DataMatrix,
    m: usize,
    seed: u64,
) -> Result<SymmetricMatrix, BaselineError> {
    let d = x.dim();
    if m < 2 || m >= d {
        return Err(BaselineError::InvalidParam(format!(
            "need 2 <= m < d, got m={m}, d={d}"
        )));
    }
    let mut acc = EstimatorAccumulator::new(d, m, ProbabilityModel::Uniform);
    for (ci, col) in x.columns().enumerate() {
        let c = sampling::compress_column_uniform(col, m, seed, ci as u64)?;
        acc.absorb(&c)?;
    }
    Ok(acc.finalize(false)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fusion::exact_covariance;

    #[test]
    fn fwht_is_self_inverse() {
        let orig = [0.5, -1.25, 3.0, 0.0, 2.0, -0.5, 1.0, 4.0];
        let mut v = orig;
        fwht_normalized(&mut v);
        fwht_normalized(&mut v);
        for (a, b) in v.iter().zip(&orig) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_calibration_satisfies_trace_identity() {
        // tr(E[P·e₁e₁ᵀ·P]) = E[e₁ᵀPe₁] = m/d exactly, so a + b·d = m/d.
        let (d, m) = (8, 4);
        let c = gauss_debias_constants(d, m, 100_000, 7).unwrap();
        let lhs = c.a + c.b * d as f64;
        let want = m as f64 / d as f64;
        assert!((lhs - want).abs() < 0.01, "a+bd = {lhs}, want {want}");
        assert!(c.a > 0.0 && c.b > 0.0);
    }

    #[test]
    fn gauss_projection_trace_expectation() {
        // E[tr(P·xxᵀ·P)] = (m/d)·‖x‖₂².
        let (d, m) = (6, 3);
        let x = [1.0, -2.0, 0.5, 0.0, 1.5, -1.0];
        let sq: f64 = x.iter().map(|v| v * v).sum();
        let mut ws = ProjectionWorkspace::new(d, m);
        let mut rng = seeding::rng_for(99);
        let draws = 40_000;
        let mut acc = 0.0;
        for _ in 0..draws {
            let p = ws.project(&x, &mut rng).unwrap();
            acc += p.iter().map(|v| v * v).sum::<f64>();
        }
        let got = acc / draws as f64;
        let want = m as f64 / d as f64 * sq;
        assert!((got - want).abs() < 0.05 * want, "{got} vs {want}");
    }

    #[test]
    fn gauss_full_rank_is_exact() {
        let x = DataMatrix::from_columns(3, &[vec![1.0, 2.0, -1.0], vec![0.5, 0.0, 3.0]]);
        let est = gauss_inverse_estimate(&x, 3, 1).unwrap();
        let exact = exact_covariance(&x, true);
        for i in 0..3 {
            for j in 0..3 {
                assert!((est.get(i, j) - exact.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gauss_recovers_identity_covariance() {
        // 10⁴ columns of N(0, I₈) at m = 4: relative error below 0.15.
        let (d, n, m) = (8usize, 10_000usize, 4usize);
        let mut rng = seeding::rng_for(1234);
        let cols: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
            .collect();
        let x = DataMatrix::from_columns(d, &cols);
        let est = gauss_inverse_estimate(&x, m, 5).unwrap();
        let err = crate::fusion::relative_error(&est, &SymmetricMatrix::identity(d)).unwrap();
        assert!(err < 0.15, "relative error {err}");
    }

    /// Enumerates all C(d,m) subsets: the debiased estimate must average to
    /// y·yᵀ exactly. This is the oracle that licenses the
    /// without-replacement multipliers.
    fn subset_enumeration_mean(y: &[f64], m: usize) -> SymmetricMatrix {
        let d = y.len();
        let mut subsets = Vec::new();
        enumerate_subsets(d, m, &mut Vec::new(), &mut subsets, 0);
        let count = subsets.len() as f64;
        let (diag_mul, off_mul) = without_replacement_multipliers(d, m, count);
        let mut raw = SymmetricMatrix::zeros(d);
        for s in &subsets {
            accumulate_subset_products(&mut raw, y, s);
        }
        let mut out = SymmetricMatrix::zeros(d);
        for i in 0..d {
            for j in i..d {
                let mul = if i == j { diag_mul } else { off_mul };
                out.set_sym(i, j, raw.get(i, j) * mul);
            }
        }
        out
    }

    fn enumerate_subsets(
        d: usize,
        m: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
        from: usize,
    ) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in from..d {
            cur.push(i);
            enumerate_subsets(d, m, cur, out, i + 1);
            cur.pop();
        }
    }

    #[test]
    fn unisample_debias_is_unbiased_by_subset_enumeration() {
        let y = [1.5, -0.5, 2.0, 0.25];
        let mean = subset_enumeration_mean(&y, 2);
        for i in 0..4 {
            for j in 0..4 {
                assert!(
                    (mean.get(i, j) - y[i] * y[j]).abs() < 1e-12,
                    "({i},{j}): {} vs {}",
                    mean.get(i, j),
                    y[i] * y[j]
                );
            }
        }
    }

    #[test]
    fn unisample_full_pipeline_expectation_by_enumeration() {
        // With the subset enumerated exhaustively, the whole
        // sign/transform/debias/invert pipeline must reproduce xxᵀ.
        let x = [2.0, -1.0, 0.5, 3.0];
        let d = 4;
        let signs = [1.0, -1.0, -1.0, 1.0];
        let mut y = [0.0; 4];
        for i in 0..d {
            y[i] = signs[i] * x[i];
        }
        fwht_normalized(&mut y);

        let mut subsets = Vec::new();
        enumerate_subsets(d, 2, &mut Vec::new(), &mut subsets, 0);
        let mut raw = SymmetricMatrix::zeros(d);
        for s in &subsets {
            accumulate_subset_products(&mut raw, &y, s);
        }
        let est = unisample_recover(&raw, subsets.len() as f64, 2, d, &signs);
        for i in 0..d {
            for j in 0..d {
                assert!(
                    (est.get(i, j) - x[i] * x[j]).abs() < 1e-12,
                    "({i},{j}): {} vs {}",
                    est.get(i, j),
                    x[i] * x[j]
                );
            }
        }
    }

    #[test]
    fn unisample_full_selection_is_exact() {
        // m = d on a power-of-two dimension selects every coordinate.
        let cols = vec![vec![1.0, -2.0, 0.5, 3.0], vec![0.25, 1.0, -1.0, 2.0]];
        let x = DataMatrix::from_columns(4, &cols);
        let est = unisample_hd_estimate(&x, 4, 3).unwrap();
        let exact = exact_covariance(&x, true);
        for i in 0..4 {
            for j in 0..4 {
                assert!((est.get(i, j) - exact.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn unisample_pads_non_power_of_two() {
        let cols = vec![vec![1.0, -2.0, 0.5], vec![0.25, 1.0, -1.0]];
        let x = DataMatrix::from_columns(3, &cols);
        let est = unisample_hd_estimate(&x, 2, 3).unwrap();
        assert_eq!(est.dim(), 3);
    }

    #[test]
    fn sparse_orthonormal_degenerate_check_is_exact() {
        let cols = vec![vec![1.0, -2.0, 0.5], vec![0.25, 1.0, -1.0]];
        let x = DataMatrix::from_columns(3, &cols);
        let est = sparse_estimate_impl(&x, 3, 1.0, 9, true).unwrap();
        let exact = exact_covariance(&x, true);
        for i in 0..3 {
            for j in 0..3 {
                assert!((est.get(i, j) - exact.get(i, j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn sparse_bias_is_measurable() {
        // Mean over many trials differs from xxᵀ: the estimator is biased.
        let x = DataMatrix::from_columns(2, &[vec![1.0, 1.0]]);
        let trials = 20_000;
        let mut mean = SymmetricMatrix::zeros(2);
        for t in 0..trials {
            let est = sparse_estimate(&x, 2, 0.5, t as u64).unwrap();
            mean.add_assign(&est);
        }
        mean.scale(1.0 / trials as f64);
        let mut worst = 0.0_f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((mean.get(i, j) - 1.0).abs());
            }
        }
        assert!(worst > 0.1, "expected measurable bias, worst dev {worst}");
    }

    #[test]
    fn sparse_output_is_psd_sum() {
        let cols = vec![vec![1.0, -2.0, 0.5], vec![0.25, 1.0, -1.0]];
        let x = DataMatrix::from_columns(3, &cols);
        let est = sparse_estimate(&x, 2, 0.1, 4).unwrap();
        // Sum of rank-1 PSD terms: quadratic form nonnegative on probes.
        let probes = [[1.0, 0.0, 0.0], [0.3, -0.7, 0.2], [1.0, 1.0, 1.0]];
        for p in &probes {
            assert!(est.quadratic_form(p) >= -1e-12);
        }
    }

    #[test]
    fn uniform_mean_recovers_constant_column() {
        // On a constant column the data-aware probabilities are exactly
        // uniform; the uniform estimator must be unbiased for xxᵀ.
        let x = DataMatrix::from_columns(3, &[vec![2.0, 2.0, 2.0]]);
        let exact = exact_covariance(&x, true);
        let trials = 30_000u64;
        let mut mean = SymmetricMatrix::zeros(3);
        for t in 0..trials {
            mean.add_assign(&uniform_sample_estimate(&x, 2, t).unwrap());
        }
        mean.scale(1.0 / trials as f64);
        let err = crate::fusion::relative_error(&mean, &exact).unwrap();
        assert!(err < 0.05, "uniform mean deviates {err}");
    }

    #[test]
    fn parameter_validation() {
        let x = DataMatrix::from_columns(3, &[vec![1.0, 0.0, 2.0]]);
        assert!(gauss_inverse_estimate(&x, 0, 1).is_err());
        assert!(gauss_inverse_estimate(&x, 4, 1).is_err());
        assert!(unisample_hd_estimate(&x, 1, 1).is_err());
        assert!(sparse_estimate(&x, 2, 0.0, 1).is_err());
        assert!(sparse_estimate(&x, 2, 1.5, 1).is_err());
        assert!(uniform_sample_estimate(&x, 3, 1).is_err());
        assert!(uniform_without_estimate(&x, 4, 1).is_err());
    }
}
