//! Column-major data matrix: n observations of dimension d.

#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn zeros(dim: usize, n: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        Self {
            dim,
            n,
            values: vec![0.0; dim * n],
        }
    }

    pub fn from_columns(dim: usize, columns: &[Vec<f64>]) -> Self {
        let mut m = Self::zeros(dim, columns.len());
        for (i, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), dim, "column {i} has wrong dimension");
            m.column_mut(i).copy_from_slice(c);
        }
        m
    }

    pub fn from_raw(dim: usize, n: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dim * n);
        assert!(dim > 0);
        Self { dim, n, values }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn column(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn raw(&self) -> &[f64] {
        &self.values
    }

    /// Left-to-right running sum of all columns, the site-sum vector g_j.
    pub fn column_sum(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for c in self.columns() {
            for (acc, v) in g.iter_mut().zip(c) {
                *acc += v;
            }
        }
        g
    }

    /// Sub-matrix of columns [start, end).
    pub fn slice_columns(&self, start: usize, end: usize) -> DataMatrix {
        assert!(start <= end && end <= self.n);
        DataMatrix {
            dim: self.dim,
            n: end - start,
            values: self.values[start * self.dim..end * self.dim].to_vec(),
        }
    }
}
