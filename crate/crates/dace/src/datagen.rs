//! Synthetic dataset generators for the benchmark suite.
//!
//! The X-families are built as X = U·F·G with a random orthonormal signal
//! basis U, linearly diminishing singular values in F, and Gaussian signal
//! G; X2 additionally rescales rows by 1/β with β uniform in 1..=15. The
//! Gp families draw i.i.d. columns from N(0, C_p) with the Toeplitz kernel
//! C_p[i][j] = 0.5^{|i−j|/50}, optionally truncated to low rank.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::data::DataMatrix;
use crate::linalg::{self, LinalgError, SymmetricMatrix};
use crate::seeding;

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid spec: {0}")]
    InvalidSpec(String),
    #[error("covariance factorization failed: {0}")]
    Factorization(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthFamily {
    /// Low-rank signal, diminishing singular values, k ≈ 0.005·d.
    X1,
    /// X1 with rows rescaled by 1/β, β uniform integer in 1..=15.
    X2,
    /// X1 with F = identity.
    X3,
    /// Same construction as X2; the larger-scale variants differ only in
    /// (d, n), which are free parameters here.
    X4to6,
    /// Gaussian process, full-rank Toeplitz covariance 0.5^{|i−j|/50}.
    Gp7,
    /// Gaussian from the rank-r truncation of the Gp7 covariance.
    Gp8Low,
}

impl SynthFamily {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "x1" => Some(Self::X1),
            "x2" => Some(Self::X2),
            "x3" => Some(Self::X3),
            "x4to6" | "x4" | "x5" | "x6" => Some(Self::X4to6),
            "gp7" => Some(Self::Gp7),
            "gp8low" | "gp8" => Some(Self::Gp8Low),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::X1 => "x1",
            Self::X2 => "x2",
            Self::X3 => "x3",
            Self::X4to6 => "x4to6",
            Self::Gp7 => "gp7",
            Self::Gp8Low => "gp8low",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SynthSpec {
    pub family: SynthFamily,
    pub d: usize,
    pub n: usize,
    pub seed: u64,
    /// Signal rank for the X families; defaults to max(2, round(0.005·d)).
    pub k: Option<usize>,
    /// Truncation rank for Gp8Low; defaults to 5.
    pub r: Option<usize>,
}

impl SynthSpec {
    pub fn new(family: SynthFamily, d: usize, n: usize, seed: u64) -> Self {
        Self {
            family,
            d,
            n,
            seed,
            k: None,
            r: None,
        }
    }

    pub fn signal_rank(&self) -> usize {
        self.k
            .unwrap_or_else(|| ((0.005 * self.d as f64).round() as usize).max(2))
    }

    pub fn truncation_rank(&self) -> usize {
        self.r.unwrap_or(5)
    }

    fn validate(&self) -> Result<(), DatagenError> {
        if self.d == 0 || self.n == 0 {
            return Err(DatagenError::InvalidSpec("d and n must be positive".into()));
        }
        let k = self.signal_rank();
        if k > self.d {
            return Err(DatagenError::InvalidSpec(format!(
                "signal rank {k} exceeds dimension {}",
                self.d
            )));
        }
        if self.truncation_rank() > self.d || self.truncation_rank() == 0 {
            return Err(DatagenError::InvalidSpec(format!(
                "truncation rank {} out of range for d={}",
                self.truncation_rank(),
                self.d
            )));
        }
        Ok(())
    }
}

const SALT_BASIS: u64 = 0xba51;
const SALT_ROWSCALE: u64 = 0x205c;
const SALT_COLUMNS: u64 = 0xc017;

pub fn generate(spec: &SynthSpec) -> Result<DataMatrix, DatagenError> {
    spec.validate()?;
    match spec.family {
        SynthFamily::X1 => generate_ufg(spec, Spectrum::Diminishing, false),
        SynthFamily::X2 | SynthFamily::X4to6 => generate_ufg(spec, Spectrum::Diminishing, true),
        SynthFamily::X3 => generate_ufg(spec, Spectrum::Flat, false),
        SynthFamily::Gp7 => {
            let c = gp7_covariance(spec.d);
            let factor =
                cholesky_factor(&c).map_err(|e| DatagenError::Factorization(e.to_string()))?;
            Ok(sample_from_factor(&factor, spec.d, spec.n, spec.seed))
        }
        SynthFamily::Gp8Low => {
            let factor = gp8_eigen_factor(spec.d, spec.truncation_rank())?;
            Ok(sample_from_factor(&factor, spec.d, spec.n, spec.seed))
        }
    }
}

enum Spectrum {
    /// f_ii = 1 − (i−1)/k.
    Diminishing,
    Flat,
}

fn generate_ufg(
    spec: &SynthSpec,
    spectrum: Spectrum,
    row_scale: bool,
) -> Result<DataMatrix, DatagenError> {
    let (d, n) = (spec.d, spec.n);
    let k = spec.signal_rank();
    let u = random_orthonormal(d, k, seeding::salted_seed(spec.seed, SALT_BASIS));
    let f: Vec<f64> = (0..k)
        .map(|i| match spectrum {
            Spectrum::Diminishing => 1.0 - i as f64 / k as f64,
            Spectrum::Flat => 1.0,
        })
        .collect();
    let scale: Option<Vec<f64>> = if row_scale {
        let mut rng = seeding::rng_for(seeding::salted_seed(spec.seed, SALT_ROWSCALE));
        Some(
            (0..d)
                .map(|_| 1.0 / rng.random_range(1..=15) as f64)
                .collect(),
        )
    } else {
        None
    };

    let col_seed_base = seeding::salted_seed(spec.seed, SALT_COLUMNS);
    let mut x = DataMatrix::zeros(d, n);
    for col in 0..n {
        let mut rng = seeding::rng_for(seeding::column_seed(col_seed_base, col as u64));
        let fg: Vec<f64> = f
            .iter()
            .map(|fv| fv * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let out = x.column_mut(col);
        for i in 0..d {
            let mut acc = 0.0;
            for (l, &g) in fg.iter().enumerate() {
                acc += u[l][i] * g;
            }
            out[i] = match &scale {
                Some(s) => s[i] * acc,
                None => acc,
            };
        }
    }
    Ok(x)
}

/// Random orthonormal d×k basis via Gram-Schmidt with re-orthogonalization
/// of Gaussian draws; columns returned as k separate d-vectors.
pub fn random_orthonormal(d: usize, k: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(k <= d);
    let mut rng = seeding::rng_for(seed);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // degenerate draw, retry
        }
        for vi in &mut v {
            *vi /= norm;
        }
        basis.push(v);
    }
    basis
}

/// Toeplitz covariance C_p[i][j] = 0.5^{|i−j|/50} of the Gp7 process.
pub fn gp7_covariance(d: usize) -> SymmetricMatrix {
    let mut c = SymmetricMatrix::zeros(d);
    for i in 0..d {
        for j in i..d {
            c.set_sym(i, j, 0.5_f64.powf((j - i) as f64 / 50.0));
        }
    }
    c
}

/// Rank-r truncation of the Gp7 covariance, the Gp8 population matrix.
pub fn gp8_covariance(d: usize, r: usize) -> Result<SymmetricMatrix, DatagenError> {
    Ok(linalg::low_rank_truncate(&gp7_covariance(d), r)?)
}

/// d×r factor B with B·Bᵀ = [C_p7]_r, from the top-r eigenpairs.
fn gp8_eigen_factor(d: usize, r: usize) -> Result<Vec<Vec<f64>>, DatagenError> {
    let c = gp7_covariance(d);
    let dec = linalg::top_k_eigen(&c, r, 1e-10)?;
    let mut factor = Vec::with_capacity(r);
    for (lam, u) in dec.eigenvalues.iter().zip(&dec.eigenvectors) {
        if *lam < -1e-10 {
            return Err(DatagenError::Factorization(format!(
                "negative eigenvalue {lam} in PSD covariance"
            )));
        }
        let s = lam.max(0.0).sqrt();
        factor.push(u.iter().map(|x| s * x).collect());
    }
    Ok(factor)
}

/// Lower-triangular Cholesky factor as d column vectors (l[col] holds the
/// col-th column of L, so x = Σ_l g_l·l[l]).
fn cholesky_factor(c: &SymmetricMatrix) -> Result<Vec<Vec<f64>>, LinalgError> {
    let d = c.dim();
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = c.get(i, j);
            for k in 0..j {
                sum -= l[k][i] * l[k][j];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(LinalgError::NonFinite {
                        row: i,
                        col: j,
                        value: sum,
                    });
                }
                l[j][i] = sum.sqrt();
            } else {
                l[j][i] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Columns x = Σ_l g_l·factor_l with per-column Gaussian streams.
fn sample_from_factor(factor: &[Vec<f64>], d: usize, n: usize, seed: u64) -> DataMatrix {
    let col_seed_base = seeding::salted_seed(seed, SALT_COLUMNS);
    let mut x = DataMatrix::zeros(d, n);
    for col in 0..n {
        let mut rng = seeding::rng_for(seeding::column_seed(col_seed_base, col as u64));
        let out = x.column_mut(col);
        for f in factor {
            let g: f64 = rng.sample(StandardNormal);
            if g != 0.0 {
                for i in 0..d {
                    out[i] += g * f[i];
                }
            }
        }
    }
    x
}

const CLASS_SIGNAL: f64 = 3.0;
const CLASS_NOISE: f64 = 0.5;

/// Labeled multi-class data: each class is a zero-mean Gaussian whose
/// dominant rank-k subspace is orthogonal to every other class's (slices of
/// one shared random orthonormal basis), over an isotropic noise floor.
/// Returns the data with one u32 label per column, classes in contiguous
/// blocks.
pub fn generate_class_data(
    num_classes: usize,
    per_class: usize,
    d: usize,
    k: usize,
    seed: u64,
) -> Result<(DataMatrix, Vec<u32>), DatagenError> {
    if num_classes < 2 {
        return Err(DatagenError::InvalidSpec("need at least two classes".into()));
    }
    if per_class == 0 || k == 0 {
        return Err(DatagenError::InvalidSpec(
            "per_class and k must be positive".into(),
        ));
    }
    if num_classes * k > d {
        return Err(DatagenError::InvalidSpec(format!(
            "num_classes·k = {} exceeds dimension {d}; subspaces cannot be disjoint",
            num_classes * k
        )));
    }
    let basis = random_orthonormal(d, num_classes * k, seeding::salted_seed(seed, SALT_BASIS));
    let n = num_classes * per_class;
    let mut x = DataMatrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    let col_seed_base = seeding::salted_seed(seed, SALT_COLUMNS);
    for t in 0..num_classes {
        let class_basis = &basis[t * k..(t + 1) * k];
        for j in 0..per_class {
            let col = t * per_class + j;
            let mut rng = seeding::rng_for(seeding::column_seed(col_seed_base, col as u64));
            let out = x.column_mut(col);
            // Strong signal along the class subspace over a full-dimensional
            // noise floor.
            for (l, b) in class_basis.iter().enumerate() {
                let amp = CLASS_SIGNAL * (1.0 - 0.5 * l as f64 / k as f64);
                let g: f64 = rng.sample(StandardNormal);
                for i in 0..d {
                    out[i] += amp * g * b[i];
                }
            }
            for i in 0..d {
                let g: f64 = rng.sample(StandardNormal);
                out[i] += CLASS_NOISE * g;
            }
            labels.push(t as u32);
        }
    }
    Ok((x, labels))
}

/// Population covariances of `generate_class_data` (same seed derivation):
/// C_t = Σ amp²·u uᵀ + noise²·I.
pub fn class_population_covariances(
    num_classes: usize,
    d: usize,
    k: usize,
    seed: u64,
) -> Result<Vec<SymmetricMatrix>, DatagenError> {
    if num_classes * k > d {
        return Err(DatagenError::InvalidSpec(
            "num_classes·k exceeds dimension".into(),
        ));
    }
    let basis = random_orthonormal(d, num_classes * k, seeding::salted_seed(seed, SALT_BASIS));
    let mut out = Vec::with_capacity(num_classes);
    for t in 0..num_classes {
        let mut c = SymmetricMatrix::zeros(d);
        for (l, b) in basis[t * k..(t + 1) * k].iter().enumerate() {
            let amp = CLASS_SIGNAL * (1.0 - 0.5 * l as f64 / k as f64);
            for i in 0..d {
                for j in i..d {
                    c.add_sym(i, j, amp * amp * b[i] * b[j]);
                }
            }
        }
        for i in 0..d {
            c.add_sym(i, i, CLASS_NOISE * CLASS_NOISE);
        }
        out.push(c);
    }
    Ok(out)
}
