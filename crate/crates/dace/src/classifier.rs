//! Covariance-subspace multiclass classifier: per class, the top-k
//! projector of an estimated (zero-mean) class covariance; prediction is
//! the argmax of the subspace energies xᵀ·Π_t·x, ties broken toward the
//! lowest class index.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::baselines::{self, BaselineError};
use crate::data::DataMatrix;
use crate::fusion::{EstimatorAccumulator, FusionError, ProbabilityModel};
use crate::io::{self, FormatError};
use crate::linalg::{self, LinalgError, Projector, SymmetricMatrix};
use crate::sampling::{self, CompressionConfig, SamplingError};

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("class {0} has no training columns")]
    EmptyClass(u32),
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: u32, num_classes: usize },
    #[error("labels length {labels} does not match column count {columns}")]
    LabelCountMismatch { labels: usize, columns: usize },
    #[error("dimension mismatch: model is {expected}, input is {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("model metadata invalid: {0}")]
    BadModel(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error(transparent)]
    Sampling(#[from] SamplingError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Format(#[from] FormatError),
}

/// Which covariance estimator backs the per-class fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovMethod {
    Exact,
    Dace { m: usize, alpha: f64, seed: u64 },
    GaussInverse { m: usize, seed: u64 },
    UniSampleHd { m: usize, seed: u64 },
    Sparse { m: usize, density: f64, seed: u64 },
    Uniform { m: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct ClassModel {
    projectors: Vec<Projector>,
    k: usize,
    dim: usize,
    class_counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class: Vec<f64>,
}

impl ClassModel {
    pub fn num_classes(&self) -> usize {
        self.projectors.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_counts(&self) -> &[u64] {
        &self.class_counts
    }

    pub fn projector(&self, t: usize) -> &Projector {
        &self.projectors[t]
    }
}

/// Fits one projector per class from labeled columns. Class covariances are
/// estimated in zero-mean mode, matching the class-centering protocol of
/// the data generator.
pub fn fit(
    data: &DataMatrix,
    labels: &[u32],
    num_classes: usize,
    k: usize,
    method: &CovMethod,
) -> Result<ClassModel, ClassifierError> {
    if labels.len() != data.n() {
        return Err(ClassifierError::LabelCountMismatch {
            labels: labels.len(),
            columns: data.n(),
        });
    }
    if k > data.dim() {
        return Err(ClassifierError::Linalg(LinalgError::RankOutOfRange {
            k,
            dim: data.dim(),
        }));
    }
    let mut class_columns: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        if (l as usize) >= num_classes {
            return Err(ClassifierError::LabelOutOfRange {
                label: l,
                num_classes,
            });
        }
        class_columns[l as usize].push(i);
    }
    let mut covariances = Vec::with_capacity(num_classes);
    let mut counts = Vec::with_capacity(num_classes);
    for (t, cols) in class_columns.iter().enumerate() {
        if cols.is_empty() {
            return Err(ClassifierError::EmptyClass(t as u32));
        }
        covariances.push(class_covariance(data, cols, method)?);
        counts.push(cols.len() as u64);
    }
    fit_from_covariances(&covariances, &counts, k)
}

fn class_covariance(
    data: &DataMatrix,
    cols: &[usize],
    method: &CovMethod,
) -> Result<SymmetricMatrix, ClassifierError> {
    let d = data.dim();
    match *method {
        CovMethod::Exact => {
            let mut c = SymmetricMatrix::zeros(d);
            for &ci in cols {
                let col = data.column(ci);
                for i in 0..d {
                    if col[i] == 0.0 {
                        continue;
                    }
                    for j in i..d {
                        c.add_sym(i, j, col[i] * col[j]);
                    }
                }
            }
            c.scale(1.0 / cols.len() as f64);
            Ok(c)
        }
        CovMethod::Dace { m, alpha, seed } => {
            let cfg = CompressionConfig::new(m, alpha, seed)?;
            let mut acc = EstimatorAccumulator::new(d, m, ProbabilityModel::DataAware { alpha });
            for &ci in cols {
                // Global column index keeps the fit deterministic under any
                // class ordering.
                let c = sampling::compress_column(data.column(ci), &cfg, ci as u64)?;
                acc.absorb(&c)?;
            }
            Ok(acc.finalize(false)?)
        }
        CovMethod::GaussInverse { m, seed } => Ok(baselines::gauss_inverse_estimate(
            &gather(data, cols),
            m,
            seed,
        )?),
        CovMethod::UniSampleHd { m, seed } => Ok(baselines::unisample_hd_estimate(
            &gather(data, cols),
            m,
            seed,
        )?),
        CovMethod::Sparse { m, density, seed } => Ok(baselines::sparse_estimate(
            &gather(data, cols),
            m,
            density,
            seed,
        )?),
        CovMethod::Uniform { m, seed } => Ok(baselines::uniform_sample_estimate(
            &gather(data, cols),
            m,
            seed,
        )?),
    }
}

fn gather(data: &DataMatrix, cols: &[usize]) -> DataMatrix {
    let mut out = DataMatrix::zeros(data.dim(), cols.len());
    for (j, &ci) in cols.iter().enumerate() {
        out.column_mut(j).copy_from_slice(data.column(ci));
    }
    out
}

/// Builds the model straight from per-class covariance estimates.
pub fn fit_from_covariances(
    covariances: &[SymmetricMatrix],
    counts: &[u64],
    k: usize,
) -> Result<ClassModel, ClassifierError> {
    assert_eq!(covariances.len(), counts.len());
    let dim = covariances
        .first()
        .map(|c| c.dim())
        .ok_or_else(|| ClassifierError::BadModel("no classes".into()))?;
    let mut projectors = Vec::with_capacity(covariances.len());
    for c in covariances {
        if c.dim() != dim {
            return Err(ClassifierError::DimensionMismatch {
                expected: dim,
                found: c.dim(),
            });
        }
        let dec = linalg::top_k_eigen(c, k, 1e-10)?;
        projectors.push(linalg::projector_from(&dec)?);
    }
    Ok(ClassModel {
        projectors,
        k,
        dim,
        class_counts: counts.to_vec(),
    })
}

/// argmax_t xᵀ·Π_t·x; ties resolve to the lowest class index.
pub fn predict(model: &ClassModel, x: &[f64]) -> Result<u32, ClassifierError> {
    if x.len() != model.dim {
        return Err(ClassifierError::DimensionMismatch {
            expected: model.dim,
            found: x.len(),
        });
    }
    let mut best = 0u32;
    let mut best_energy = f64::NEG_INFINITY;
    for (t, p) in model.projectors.iter().enumerate() {
        let e = p.energy(x);
        if e > best_energy {
            best_energy = e;
            best = t as u32;
        }
    }
    Ok(best)
}

pub fn evaluate(
    model: &ClassModel,
    data: &DataMatrix,
    labels: &[u32],
) -> Result<EvalReport, ClassifierError> {
    if labels.len() != data.n() {
        return Err(ClassifierError::LabelCountMismatch {
            labels: labels.len(),
            columns: data.n(),
        });
    }
    let t = model.num_classes();
    let mut correct = vec![0u64; t];
    let mut totals = vec![0u64; t];
    for (i, &l) in labels.iter().enumerate() {
        if (l as usize) >= t {
            return Err(ClassifierError::LabelOutOfRange {
                label: l,
                num_classes: t,
            });
        }
        totals[l as usize] += 1;
        if predict(model, data.column(i))? == l {
            correct[l as usize] += 1;
        }
    }
    let total: u64 = totals.iter().sum();
    let hits: u64 = correct.iter().sum();
    let per_class = correct
        .iter()
        .zip(&totals)
        .map(|(&c, &n)| if n == 0 { f64::NAN } else { c as f64 / n as f64 })
        .collect();
    Ok(EvalReport {
        accuracy: hits as f64 / total.max(1) as f64,
        per_class,
    })
}

/// Persists the model as one SYMM projector file per class plus a
/// `model.txt` key-value metadata file (T, k, d, counts).
pub fn save_model(dir: &Path, model: &ClassModel) -> Result<(), ClassifierError> {
    fs::create_dir_all(dir).map_err(FormatError::Io)?;
    for (t, p) in model.projectors.iter().enumerate() {
        io::write_symm(&dir.join(format!("projector_{t:03}.symm")), p.matrix())?;
    }
    let counts: Vec<String> = model.class_counts.iter().map(u64::to_string).collect();
    let meta = format!(
        "T={}\nk={}\nd={}\ncounts={}\n",
        model.num_classes(),
        model.k,
        model.dim,
        counts.join(",")
    );
    fs::write(dir.join("model.txt"), meta).map_err(FormatError::Io)?;
    Ok(())
}

pub fn load_model(dir: &Path) -> Result<ClassModel, ClassifierError> {
    let meta = fs::read_to_string(dir.join("model.txt")).map_err(FormatError::Io)?;
    let mut t = None;
    let mut k = None;
    let mut d = None;
    let mut counts: Vec<u64> = Vec::new();
    for line in meta.lines() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        match key.trim() {
            "T" => t = value.trim().parse::<usize>().ok(),
            "k" => k = value.trim().parse::<usize>().ok(),
            "d" => d = value.trim().parse::<usize>().ok(),
            "counts" => {
                counts = value
                    .split(',')
                    .filter_map(|c| c.trim().parse::<u64>().ok())
                    .collect()
            }
            _ => {}
        }
    }
    let (t, k, d) = match (t, k, d) {
        (Some(t), Some(k), Some(d)) if t > 0 => (t, k, d),
        _ => return Err(ClassifierError::BadModel("missing T/k/d keys".into())),
    };
    if counts.len() != t {
        counts = vec![0; t];
    }
    let mut projectors = Vec::with_capacity(t);
    for i in 0..t {
        let m = io::read_symm(&dir.join(format!("projector_{i:03}.symm")))?;
        if m.dim() != d {
            return Err(ClassifierError::BadModel(format!(
                "projector {i} has dim {}, metadata says {d}",
                m.dim()
            )));
        }
        // Recover the eigenbasis of the stored projector to rebuild the
        // validated Projector type.
        let dec = linalg::top_k_eigen(&m, k, 1e-8)?;
        projectors.push(linalg::projector_from(&dec)?);
    }
    Ok(ClassModel {
        projectors,
        k,
        dim: d,
        class_counts: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen;

    fn two_axis_model() -> ClassModel {
        let c0 = SymmetricMatrix::diagonal(&[1.0, 0.0]);
        let c1 = SymmetricMatrix::diagonal(&[0.0, 1.0]);
        fit_from_covariances(&[c0, c1], &[10, 10], 1).unwrap()
    }

    #[test]
    fn predict_examples() {
        let model = two_axis_model();
        assert_eq!(predict(&model, &[1.0, 0.0]).unwrap(), 0);
        assert_eq!(predict(&model, &[0.0, 1.0]).unwrap(), 1);
        // Energies 1 vs 4 for x = (1, 2).
        assert_eq!(predict(&model, &[1.0, 2.0]).unwrap(), 1);
    }

    #[test]
    fn tie_breaks_to_lowest_class() {
        let c0 = SymmetricMatrix::diagonal(&[1.0, 0.0, 0.0]);
        let c1 = SymmetricMatrix::diagonal(&[0.0, 1.0, 0.0]);
        let model = fit_from_covariances(&[c0, c1], &[1, 1], 1).unwrap();
        // e₃ is orthogonal to both subspaces: 0 = 0 tie.
        assert_eq!(predict(&model, &[0.0, 0.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn prediction_is_scale_invariant() {
        let model = two_axis_model();
        for x in [[0.3, 0.8], [-1.0, 0.2], [2.0, -3.0]] {
            let base = predict(&model, &x).unwrap();
            for c in [0.5, -2.0, 100.0] {
                let scaled = [c * x[0], c * x[1]];
                assert_eq!(predict(&model, &scaled).unwrap(), base);
            }
        }
    }

    #[test]
    fn prediction_depends_only_on_projector() {
        // Any covariance with the same top-k eigenspace yields the same
        // predictions.
        let c0a = SymmetricMatrix::diagonal(&[5.0, 0.1, 0.1]);
        let c0b = SymmetricMatrix::diagonal(&[99.0, 0.5, 0.2]);
        let c1 = SymmetricMatrix::diagonal(&[0.1, 6.0, 0.1]);
        let ma = fit_from_covariances(&[c0a, c1.clone()], &[1, 1], 1).unwrap();
        let mb = fit_from_covariances(&[c0b, c1], &[1, 1], 1).unwrap();
        let probes = [[1.0, 0.1, 0.4], [0.2, -0.9, 0.1], [0.6, 0.6, -0.5]];
        for p in &probes {
            assert_eq!(predict(&ma, p).unwrap(), predict(&mb, p).unwrap());
        }
    }

    #[test]
    fn evaluate_counts_per_class() {
        let model = two_axis_model();
        let data = DataMatrix::from_columns(
            2,
            &[vec![1.0, 0.1], vec![0.1, 1.0], vec![1.0, 0.0], vec![1.0, 2.0]],
        );
        let labels = [0, 1, 0, 1];
        let report = evaluate(&model, &data, &labels).unwrap();
        assert!((report.accuracy - 1.0).abs() < 1e-12);
        assert_eq!(report.per_class, vec![1.0, 1.0]);
    }

    #[test]
    fn fit_on_separated_classes_is_accurate() {
        // Train on 300 columns per class and evaluate on the held-out 100:
        // orthogonal class subspaces make the problem near-separable.
        let per_class = 400;
        let (data, labels) = datagen::generate_class_data(2, per_class, 16, 2, 5).unwrap();
        let mut train_idx = Vec::new();
        let mut test_idx = Vec::new();
        for t in 0..2 {
            for j in 0..per_class {
                if j < 300 {
                    train_idx.push(t * per_class + j);
                } else {
                    test_idx.push(t * per_class + j);
                }
            }
        }
        let train = gather(&data, &train_idx);
        let train_labels: Vec<u32> = train_idx.iter().map(|&i| labels[i]).collect();
        let test = gather(&data, &test_idx);
        let test_labels: Vec<u32> = test_idx.iter().map(|&i| labels[i]).collect();

        let model = fit(&train, &train_labels, 2, 2, &CovMethod::Exact).unwrap();
        assert_eq!(model.class_counts(), &[300, 300]);
        let report = evaluate(&model, &test, &test_labels).unwrap();
        assert!(report.accuracy > 0.95, "accuracy {}", report.accuracy);
    }

    #[test]
    fn empty_class_is_rejected() {
        let data = DataMatrix::from_columns(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let labels = [0, 0];
        assert!(matches!(
            fit(&data, &labels, 2, 1, &CovMethod::Exact),
            Err(ClassifierError::EmptyClass(1))
        ));
    }

    #[test]
    fn model_round_trips_through_disk() {
        let model = two_axis_model();
        let dir = tempfile::tempdir().unwrap();
        save_model(dir.path(), &model).unwrap();
        let back = load_model(dir.path()).unwrap();
        assert_eq!(back.num_classes(), 2);
        assert_eq!(back.k(), 1);
        assert_eq!(back.dim(), 2);
        for x in [[1.0, 0.2], [0.1, -2.0]] {
            assert_eq!(predict(&model, &x).unwrap(), predict(&back, &x).unwrap());
        }
    }
}
