//! Dense symmetric-matrix kernel: storage, spectral norm, top-k
//! eigendecomposition by deflated power iteration, rank-r truncation, and
//! subspace projectors.
//!
//! All operations are pure functions over immutable inputs and are safe to
//! call from multiple threads.

use thiserror::Error;

use crate::seeding;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix entries must be finite, found {value} at ({row}, {col})")]
    NonFinite { row: usize, col: usize, value: f64 },
    #[error("input is not symmetric: |a({row},{col}) - a({col},{row})| = {dev}")]
    Asymmetric { row: usize, col: usize, dev: f64 },
    #[error("dimension must be positive")]
    EmptyMatrix,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("k = {k} out of range for dimension {dim}")]
    RankOutOfRange { k: usize, dim: usize },
    #[error("power iteration did not converge within {max_iter} iterations (pair {pair})")]
    NonConvergence { max_iter: usize, pair: usize },
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("projector ranks differ: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },
    #[error("decomposition is not orthonormal: {reason}")]
    NotOrthonormal { reason: String },
}

/// Dense symmetric d×d matrix. Stored as a full square in row-major order;
/// the constructors and all mutators keep `a(i,j) == a(j,i)` bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Builds from a full row-major square. Rejects non-finite entries and
    /// asymmetry above 1e-9; smaller asymmetry is canonicalized by copying
    /// the upper triangle into the lower one.
    pub fn from_rows(dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        assert_eq!(data.len(), dim * dim, "row data must be dim*dim");
        let mut m = Self { dim, data };
        m.validate_finite()?;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let dev = (m.data[i * dim + j] - m.data[j * dim + i]).abs();
                if dev > 1e-9 {
                    return Err(LinalgError::Asymmetric { row: i, col: j, dev });
                }
            }
        }
        m.mirror_upper();
        Ok(m)
    }

    /// Builds from arbitrary square input by explicit symmetrization
    /// (A + Aᵀ)/2. Use `from_rows` when the input is already symmetric so
    /// accumulation bugs are not silently hidden.
    pub fn from_rows_symmetrized(dim: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        assert_eq!(data.len(), dim * dim, "row data must be dim*dim");
        let mut m = Self { dim, data };
        for i in 0..dim {
            for j in (i + 1)..dim {
                let v = 0.5 * (m.data[i * dim + j] + m.data[j * dim + i]);
                m.data[i * dim + j] = v;
            }
        }
        m.mirror_upper();
        m.validate_finite()?;
        Ok(m)
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let dim = values.len();
        let mut m = Self::zeros(dim);
        for (i, &v) in values.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    fn mirror_upper(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                self.data[j * d + i] = self.data[i * d + j];
            }
        }
    }

    fn validate_finite(&self) -> Result<(), LinalgError> {
        let d = self.dim;
        for i in 0..d {
            for j in 0..d {
                let v = self.data[i * d + j];
                if !v.is_finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j, value: v });
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Writes both mirror cells so symmetry stays bit-exact.
    #[inline]
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
        self.data[j * self.dim + i] = v;
    }

    /// Adds to both mirror cells (only once on the diagonal).
    #[inline]
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] += v;
        if i != j {
            self.data[j * self.dim + i] += v;
        }
    }

    pub fn matvec(&self, v: &[f64], out: &mut [f64]) {
        let d = self.dim;
        debug_assert_eq!(v.len(), d);
        debug_assert_eq!(out.len(), d);
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let mut acc = 0.0;
            for j in 0..d {
                acc += row[j] * v[j];
            }
            out[i] = acc;
        }
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.dim, other.dim);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.dim != other.dim {
            return Err(LinalgError::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { dim: self.dim, data })
    }

    pub fn negated(&self) -> Self {
        let data = self.data.iter().map(|v| -v).collect();
        Self { dim: self.dim, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Gershgorin bound on the spectral radius: max row sum of |entries|.
    pub fn gershgorin_bound(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| self.data[i * d..(i + 1) * d].iter().map(|v| v.abs()).sum())
            .fold(0.0_f64, f64::max)
    }

    /// xᵀ A x.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        debug_assert_eq!(x.len(), d);
        let mut acc = 0.0;
        for i in 0..d {
            let row = &self.data[i * d..(i + 1) * d];
            let mut r = 0.0;
            for j in 0..d {
                r += row[j] * x[j];
            }
            acc += x[i] * r;
        }
        acc
    }

    pub fn rows(&self) -> &[f64] {
        &self.data
    }

    /// Upper-triangle entries row-major, the on-disk order of SYMM files.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let d = self.dim;
        let mut out = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                out.push(self.data[i * d + j]);
            }
        }
        out
    }

    pub fn from_upper_triangle(dim: usize, upper: &[f64]) -> Result<Self, LinalgError> {
        if dim == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        assert_eq!(upper.len(), dim * (dim + 1) / 2);
        let mut m = Self::zeros(dim);
        let mut idx = 0;
        for i in 0..dim {
            for j in i..dim {
                m.set_sym(i, j, upper[idx]);
                idx += 1;
            }
        }
        m.validate_finite()?;
        Ok(m)
    }
}

/// Top-k eigenpairs of a symmetric matrix, eigenvalues non-increasing,
/// eigenvectors orthonormal. `degenerate_gap` is set when the eigengap
/// λ_k − λ_{k+1} falls below the solve tolerance, in which case the spanned
/// subspace (and any projector built from it) is not unique.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
    pub source_dim: usize,
    pub degenerate_gap: bool,
}

impl SpectralDecomposition {
    pub fn k(&self) -> usize {
        self.eigenvalues.len()
    }

    fn validate(&self) -> Result<(), LinalgError> {
        for (i, u) in self.eigenvectors.iter().enumerate() {
            let norm: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(LinalgError::NotOrthonormal {
                    reason: format!("vector {i} has norm {norm}"),
                });
            }
            for (j, w) in self.eigenvectors.iter().enumerate().skip(i + 1) {
                let dot: f64 = u.iter().zip(w).map(|(a, b)| a * b).sum();
                if dot.abs() > 1e-8 {
                    return Err(LinalgError::NotOrthonormal {
                        reason: format!("vectors {i} and {j} have dot {dot}"),
                    });
                }
            }
        }
        for w in self.eigenvalues.windows(2) {
            if w[1] > w[0] + 1e-12 {
                return Err(LinalgError::NotOrthonormal {
                    reason: "eigenvalues not sorted non-increasing".into(),
                });
            }
        }
        Ok(())
    }
}

/// Rank-k orthogonal projector P = Σ u_i u_iᵀ.
#[derive(Debug, Clone)]
pub struct Projector {
    matrix: SymmetricMatrix,
    rank: usize,
}

impl Projector {
    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// xᵀ P x, the subspace energy used by the classifier.
    pub fn energy(&self, x: &[f64]) -> f64 {
        self.matrix.quadratic_form(x)
    }
}

pub fn default_max_iter(dim: usize) -> usize {
    (10.0 * dim as f64 * (dim as f64).ln()).ceil() as usize + 1000
}

/// Largest absolute eigenvalue by power iteration on the matrix itself.
///
/// The eigenvalue estimate is the norm-growth ratio ‖Av‖/‖v‖ and the stop
/// test is the residual of A² at that estimate, which keeps convergence well
/// defined when the dominant eigenvalues are a ±λ pair (as happens for
/// difference matrices) where the plain Rayleigh quotient oscillates.
pub fn spectral_norm(a: &SymmetricMatrix, tol: f64, max_iter: usize) -> Result<f64, LinalgError> {
    if tol <= 0.0 {
        return Err(LinalgError::InvalidTolerance(tol));
    }
    let d = a.dim();
    let mut v = seeding::start_vector(d, 0);
    let mut w = vec![0.0; d];
    a.matvec(&v, &mut w);
    let mut mu = norm2(&w);
    if mu == 0.0 {
        // Av = 0 for the pseudo-random start vector: treat as the zero map.
        return Ok(0.0);
    }
    for _ in 0..max_iter {
        // v_next = Av/‖Av‖, then residual ‖A(Av) − μ²v‖ = μ‖w_next − μv‖.
        let inv = 1.0 / mu;
        let v_next: Vec<f64> = w.iter().map(|x| x * inv).collect();
        a.matvec(&v_next, &mut w);
        let mu_next = norm2(&w);
        let mut resid = 0.0;
        for i in 0..d {
            let r = w[i] - mu * v[i];
            resid += r * r;
        }
        let resid = resid.sqrt();
        v = v_next;
        let done = resid <= tol * mu.max(f64::MIN_POSITIVE);
        mu = mu_next;
        if mu == 0.0 {
            return Ok(0.0);
        }
        if done {
            return Ok(mu);
        }
    }
    Err(LinalgError::NonConvergence { max_iter, pair: 0 })
}

/// Top-k eigenpairs by algebraic value with the default iteration budget.
pub fn top_k_eigen(
    a: &SymmetricMatrix,
    k: usize,
    tol: f64,
) -> Result<SpectralDecomposition, LinalgError> {
    top_k_eigen_with_iters(a, k, tol, default_max_iter(a.dim()))
}

/// Top-k eigenpairs by algebraic value (largest first).
///
/// Power iteration targets the dominant |λ|, so the matrix is first shifted
/// by its Gershgorin bound to make it PSD; that maps the algebraic order
/// onto the magnitude order without changing eigenvectors or residuals.
/// Each converged pair is deflated before the next one is sought.
pub fn top_k_eigen_with_iters(
    a: &SymmetricMatrix,
    k: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SpectralDecomposition, LinalgError> {
    if tol <= 0.0 {
        return Err(LinalgError::InvalidTolerance(tol));
    }
    let d = a.dim();
    if k < 1 || k > d {
        return Err(LinalgError::RankOutOfRange { k, dim: d });
    }
    let shift = a.gershgorin_bound();
    // Residual threshold per pair is tol·‖A‖₂; gershgorin/√d is a cheap
    // lower bound on ‖A‖₂, so the contract is met (slightly over-tight).
    let resid_scale = (shift / (d as f64).sqrt()).max(f64::MIN_POSITIVE);

    // Compute one extra pair (when possible) for the eigengap diagnostic.
    let want = if k < d { k + 1 } else { k };
    let mut values = Vec::with_capacity(want);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(want);

    for pair in 0..want {
        let (mu_shifted, u) = deflated_power_pair(
            a, shift, &values, &vectors, tol * resid_scale, max_iter, pair,
        )?;
        values.push(mu_shifted - shift);
        vectors.push(u);
    }

    // Clustered eigenvalues can converge slightly out of order; restore the
    // non-increasing contract before the eigengap check.
    let mut order: Vec<usize> = (0..want).collect();
    order.sort_by(|&i, &j| values[j].partial_cmp(&values[i]).unwrap());
    let mut values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let mut vectors: Vec<Vec<f64>> = order.iter().map(|&i| vectors[i].clone()).collect();

    let degenerate_gap = if k < d {
        let gap = values[k - 1] - values[k];
        values.truncate(k);
        vectors.truncate(k);
        gap < tol
    } else {
        false
    };

    let dec = SpectralDecomposition {
        eigenvalues: values,
        eigenvectors: vectors,
        source_dim: d,
        degenerate_gap,
    };
    dec.validate()?;
    Ok(dec)
}

/// One power-iteration pass on the shifted operator with the already-found
/// pairs deflated out of the operator and of every iterate.
fn deflated_power_pair(
    a: &SymmetricMatrix,
    shift: f64,
    found_values: &[f64],
    found_vectors: &[Vec<f64>],
    resid_tol: f64,
    max_iter: usize,
    pair: usize,
) -> Result<(f64, Vec<f64>), LinalgError> {
    let d = a.dim();
    let mut v = seeding::start_vector(d, pair as u64 + 1);
    orthogonalize(&mut v, found_vectors);
    if normalize(&mut v) == 0.0 {
        // Start vector lay entirely in the found subspace; perturb.
        v = seeding::start_vector(d, pair as u64 + 0x9000);
        orthogonalize(&mut v, found_vectors);
        normalize(&mut v);
    }
    let mut w = vec![0.0; d];
    let mut r = vec![0.0; d];
    for _ in 0..max_iter {
        apply_deflated(a, shift, found_values, found_vectors, &v, &mut w);
        let mu = dot(&v, &w);
        for i in 0..d {
            r[i] = w[i] - mu * v[i];
        }
        // Measure the residual inside the deflated complement: components
        // along already-found vectors reflect their own converged error and
        // cannot be reduced by further iteration here.
        orthogonalize(&mut r, found_vectors);
        let resid = norm2(&r);
        if resid <= resid_tol {
            // Fix the sign convention: first significantly-nonzero component
            // positive, so example-based tests are deterministic.
            let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * scale) {
                if *first < 0.0 {
                    for x in &mut v {
                        *x = -*x;
                    }
                }
            }
            return Ok((mu, v));
        }
        orthogonalize(&mut w, found_vectors);
        if normalize(&mut w) == 0.0 {
            // The deflated operator annihilated the iterate (exact eigenvalue
            // `-shift` of multiplicity ≥ 1); v is already an eigenvector of
            // the deflated operator with eigenvalue 0.
            return Ok((0.0, v));
        }
        std::mem::swap(&mut v, &mut w);
    }
    Err(LinalgError::NonConvergence { max_iter, pair })
}

/// w = (A + shift·I)v − Σ λ_i u_i (u_iᵀ v), the Hotelling-deflated operator.
fn apply_deflated(
    a: &SymmetricMatrix,
    shift: f64,
    values: &[f64],
    vectors: &[Vec<f64>],
    v: &[f64],
    w: &mut [f64],
) {
    a.matvec(v, w);
    for i in 0..w.len() {
        w[i] += shift * v[i];
    }
    for (lam, u) in values.iter().zip(vectors) {
        let c = (lam + shift) * dot(u, v);
        for i in 0..w.len() {
            w[i] -= c * u[i];
        }
    }
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // Two Gram-Schmidt passes keep the iterate orthogonal to converged pairs.
    for _ in 0..2 {
        for u in basis {
            let c = dot(u, v);
            for i in 0..v.len() {
                v[i] -= c * u[i];
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm2(v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// P = Σ_{i≤k} u_i u_iᵀ from a validated decomposition.
pub fn projector_from(dec: &SpectralDecomposition) -> Result<Projector, LinalgError> {
    dec.validate()?;
    let d = dec.source_dim;
    let k = dec.k();
    let mut p = SymmetricMatrix::zeros(d);
    for u in &dec.eigenvectors {
        for i in 0..d {
            for j in i..d {
                p.add_sym(i, j, u[i] * u[j]);
            }
        }
    }
    let proj = Projector { matrix: p, rank: k };
    debug_assert!(projector_idempotency_defect(&proj) <= 1e-8);
    debug_assert!((proj.matrix.trace() - k as f64).abs() <= 1e-8);
    Ok(proj)
}

/// ‖P·P − P‖_max, used by tests to check idempotency.
pub fn projector_idempotency_defect(p: &Projector) -> f64 {
    let d = p.dim();
    let m = &p.matrix;
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in i..d {
            let mut acc = 0.0;
            for l in 0..d {
                acc += m.get(i, l) * m.get(l, j);
            }
            worst = worst.max((acc - m.get(i, j)).abs());
        }
    }
    worst
}

/// Best rank-r approximation in spectral norm: keep the r eigenvalues of
/// largest magnitude. For indefinite input the most-negative eigenvalues are
/// found by a second deflated solve on −A; when 2r > d a full decomposition
/// is cheaper than two overlapping partial ones.
pub fn low_rank_truncate(a: &SymmetricMatrix, r: usize) -> Result<SymmetricMatrix, LinalgError> {
    low_rank_truncate_with(a, r, 1e-10, default_max_iter(a.dim()))
}

pub fn low_rank_truncate_with(
    a: &SymmetricMatrix,
    r: usize,
    tol: f64,
    max_iter: usize,
) -> Result<SymmetricMatrix, LinalgError> {
    let d = a.dim();
    if r < 1 || r > d {
        return Err(LinalgError::RankOutOfRange { k: r, dim: d });
    }
    if r == d {
        return Ok(a.clone());
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::new();
    if 2 * r <= d {
        let top = top_k_eigen_with_iters(a, r, tol, max_iter)?;
        let bottom = top_k_eigen_with_iters(&a.negated(), r, tol, max_iter)?;
        pairs.extend(top.eigenvalues.into_iter().zip(top.eigenvectors));
        pairs.extend(
            bottom
                .eigenvalues
                .into_iter()
                .map(|v| -v)
                .zip(bottom.eigenvectors),
        );
    } else {
        let full = top_k_eigen_with_iters(a, d, tol, max_iter)?;
        pairs.extend(full.eigenvalues.into_iter().zip(full.eigenvectors));
    }
    // Magnitude order; positive wins ties so the result is deterministic.
    pairs.sort_by(|(x, _), (y, _)| {
        y.abs()
            .partial_cmp(&x.abs())
            .unwrap()
            .then(y.partial_cmp(x).unwrap())
    });
    pairs.truncate(r);

    let mut out = SymmetricMatrix::zeros(d);
    for (lam, u) in &pairs {
        for i in 0..d {
            for j in i..d {
                out.add_sym(i, j, lam * u[i] * u[j]);
            }
        }
    }
    Ok(out)
}

/// Spectral norm of P − Q for two equal-rank orthogonal projectors; lies in
/// [0, 1] and measures the principal angle between the subspaces.
pub fn subspace_distance(p: &Projector, q: &Projector) -> Result<f64, LinalgError> {
    if p.dim() != q.dim() {
        return Err(LinalgError::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    if p.rank() != q.rank() {
        return Err(LinalgError::RankMismatch {
            left: p.rank(),
            right: q.rank(),
        });
    }
    let diff = p.matrix.sub(&q.matrix)?;
    spectral_norm(&diff, 1e-10, default_max_iter(diff.dim()).max(100_000))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(dim: usize, rows: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::from_rows(dim, rows.to_vec()).unwrap()
    }

    #[test]
    fn constructor_rejects_asymmetry() {
        let err = SymmetricMatrix::from_rows(2, vec![1.0, 2.0, 2.5, 1.0]);
        assert!(matches!(err, Err(LinalgError::Asymmetric { .. })));
        let ok = SymmetricMatrix::from_rows_symmetrized(2, vec![1.0, 2.0, 2.5, 1.0]).unwrap();
        assert_eq!(ok.get(0, 1), 2.25);
        assert_eq!(ok.get(1, 0), 2.25);
    }

    #[test]
    fn constructor_rejects_nan() {
        let err = SymmetricMatrix::from_rows(2, vec![1.0, f64::NAN, f64::NAN, 1.0]);
        assert!(matches!(err, Err(LinalgError::NonFinite { .. })));
    }

    #[test]
    fn spectral_norm_identity() {
        let a = SymmetricMatrix::identity(3);
        let n = spectral_norm(&a, 1e-10, 1000).unwrap();
        assert!((n - 1.0).abs() < 1e-9);
    }

    #[test]
    fn spectral_norm_diagonal_magnitude() {
        let a = SymmetricMatrix::diagonal(&[1.0, -5.0, 2.0]);
        let n = spectral_norm(&a, 1e-10, 10_000).unwrap();
        assert!((n - 5.0).abs() < 1e-8, "{n}");
    }

    #[test]
    fn spectral_norm_two_by_two() {
        // Characteristic polynomial (2−λ)² − 1 = 0 gives λ ∈ {1, 3}.
        let a = mat(2, &[2.0, 1.0, 1.0, 2.0]);
        let n = spectral_norm(&a, 1e-12, 10_000).unwrap();
        assert!((n - 3.0).abs() < 1e-8, "{n}");
    }

    #[test]
    fn spectral_norm_plus_minus_pair_converges() {
        // Dominant eigenvalues ±2: the Rayleigh quotient oscillates but the
        // norm-growth estimate must still converge.
        let a = SymmetricMatrix::diagonal(&[2.0, -2.0, 0.5]);
        let n = spectral_norm(&a, 1e-10, 10_000).unwrap();
        assert!((n - 2.0).abs() < 1e-8, "{n}");
    }

    #[test]
    fn spectral_norm_zero_matrix() {
        let a = SymmetricMatrix::zeros(4);
        assert_eq!(spectral_norm(&a, 1e-10, 100).unwrap(), 0.0);
    }

    #[test]
    fn top_k_diagonal() {
        let a = SymmetricMatrix::diagonal(&[3.0, 2.0, 1.0]);
        let dec = top_k_eigen(&a, 1, 1e-10).unwrap();
        assert!((dec.eigenvalues[0] - 3.0).abs() < 1e-8);
        assert!((dec.eigenvectors[0][0].abs() - 1.0).abs() < 1e-6);

        let full = top_k_eigen(&a, 3, 1e-10).unwrap();
        let expect = [3.0, 2.0, 1.0];
        for (got, want) in full.eigenvalues.iter().zip(expect) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
        assert!(!full.degenerate_gap);
    }

    #[test]
    fn top_k_hand_eigendecomposition() {
        let a = mat(2, &[2.0, 1.0, 1.0, 2.0]);
        let dec = top_k_eigen(&a, 1, 1e-12).unwrap();
        assert!((dec.eigenvalues[0] - 3.0).abs() < 1e-9);
        let s = 1.0 / 2.0_f64.sqrt();
        // Sign convention: first nonzero component positive.
        assert!((dec.eigenvectors[0][0] - s).abs() < 1e-7);
        assert!((dec.eigenvectors[0][1] - s).abs() < 1e-7);
    }

    #[test]
    fn top_k_algebraic_order_on_indefinite() {
        let a = SymmetricMatrix::diagonal(&[1.0, -4.0, 2.0]);
        let dec = top_k_eigen(&a, 3, 1e-10).unwrap();
        let expect = [2.0, 1.0, -4.0];
        for (got, want) in dec.eigenvalues.iter().zip(expect) {
            assert!((got - want).abs() < 1e-8, "{:?}", dec.eigenvalues);
        }
    }

    #[test]
    fn top_k_flags_degenerate_gap() {
        let a = SymmetricMatrix::diagonal(&[2.0, 2.0, 1.0]);
        let dec = top_k_eigen(&a, 1, 1e-8).unwrap();
        assert!(dec.degenerate_gap);
        let dec2 = top_k_eigen(&a, 2, 1e-8).unwrap();
        assert!(!dec2.degenerate_gap);
    }

    #[test]
    fn projector_examples() {
        let a = SymmetricMatrix::diagonal(&[3.0, 2.0, 1.0]);
        let dec = top_k_eigen(&a, 1, 1e-10).unwrap();
        let p = projector_from(&dec).unwrap();
        assert!((p.matrix().get(0, 0) - 1.0).abs() < 1e-8);
        assert!(p.matrix().get(1, 1).abs() < 1e-8);
        assert!((p.matrix().trace() - 1.0).abs() < 1e-8);

        let full = top_k_eigen(&a, 3, 1e-10).unwrap();
        let id = projector_from(&full).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.matrix().get(i, j) - want).abs() < 1e-8);
            }
        }

        let b = mat(2, &[2.0, 1.0, 1.0, 2.0]);
        let dec = top_k_eigen(&b, 1, 1e-12).unwrap();
        let p = projector_from(&dec).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.matrix().get(i, j) - 0.5).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn low_rank_truncate_examples() {
        let a = SymmetricMatrix::diagonal(&[3.0, 2.0, 1.0]);
        let t = low_rank_truncate(&a, 2).unwrap();
        let want = [3.0, 2.0, 0.0];
        for i in 0..3 {
            assert!((t.get(i, i) - want[i]).abs() < 1e-8);
        }

        let t = low_rank_truncate(&a, 3).unwrap();
        for i in 0..3 {
            assert!((t.get(i, i) - a.get(i, i)).abs() < 1e-10);
        }

        // Magnitude ordering keeps −4 over 2 and 1.
        let b = SymmetricMatrix::diagonal(&[1.0, -4.0, 2.0]);
        let t = low_rank_truncate(&b, 1).unwrap();
        assert!(t.get(0, 0).abs() < 1e-8);
        assert!((t.get(1, 1) + 4.0).abs() < 1e-8);
        assert!(t.get(2, 2).abs() < 1e-8);
        // ‖A − A_r‖₂ = 2 is minimal over candidate single-eigenvalue keeps.
        let err = spectral_norm(&b.sub(&t).unwrap(), 1e-10, 10_000).unwrap();
        assert!((err - 2.0).abs() < 1e-8);
        for keep in [0usize, 2] {
            let mut alt = SymmetricMatrix::zeros(3);
            alt.set_sym(keep, keep, b.get(keep, keep));
            let alt_err = spectral_norm(&b.sub(&alt).unwrap(), 1e-10, 10_000).unwrap();
            assert!(alt_err >= err - 1e-9);
        }
    }

    #[test]
    fn subspace_distance_examples() {
        let e1 = SymmetricMatrix::diagonal(&[1.0, 0.0]);
        let dec1 = top_k_eigen(&e1, 1, 1e-10).unwrap();
        let p = projector_from(&dec1).unwrap();
        assert!(subspace_distance(&p, &p).unwrap() < 1e-9);

        let e2 = SymmetricMatrix::diagonal(&[0.0, 1.0]);
        let dec2 = top_k_eigen(&e2, 1, 1e-10).unwrap();
        let q = projector_from(&dec2).unwrap();
        let dist = subspace_distance(&p, &q).unwrap();
        assert!((dist - 1.0).abs() < 1e-8);

        let diag = mat(2, &[2.0, 1.0, 1.0, 2.0]);
        let dec3 = top_k_eigen(&diag, 1, 1e-12).unwrap();
        let r = projector_from(&dec3).unwrap();
        let dist = subspace_distance(&p, &r).unwrap();
        assert!((dist - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-7, "{dist}");
    }

    #[test]
    fn subspace_distance_rank_mismatch() {
        let a = SymmetricMatrix::diagonal(&[3.0, 2.0, 1.0]);
        let p1 = projector_from(&top_k_eigen(&a, 1, 1e-10).unwrap()).unwrap();
        let p2 = projector_from(&top_k_eigen(&a, 2, 1e-10).unwrap()).unwrap();
        assert!(matches!(
            subspace_distance(&p1, &p2),
            Err(LinalgError::RankMismatch { .. })
        ));
    }

    #[test]
    fn upper_triangle_round_trip() {
        let a = mat(3, &[4.0, 1.0, 0.5, 1.0, 3.0, -1.0, 0.5, -1.0, 2.0]);
        let ut = a.upper_triangle();
        let b = SymmetricMatrix::from_upper_triangle(3, &ut).unwrap();
        assert_eq!(a, b);
    }
}
