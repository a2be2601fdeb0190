//! Dense complex matrix plumbing shared by every module.

use faer::{c64, Mat, MatRef};

use crate::error::{Error, Result};

/// An `s × n` complex data matrix; column `j` is the `s`-vector `x_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix(Mat<c64>);

impl DataMatrix {
    pub fn zeros(s: usize, n: usize) -> Self {
        DataMatrix(Mat::zeros(s, n))
    }

    pub fn from_fn(s: usize, n: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        DataMatrix(Mat::from_fn(s, n, f))
    }

    pub fn from_mat(m: Mat<c64>) -> Self {
        DataMatrix(m)
    }

    /// Builds a `1 × n` matrix from a single snapshot row.
    pub fn from_row(row: &[c64]) -> Self {
        DataMatrix::from_fn(1, row.len(), |_, j| row[j])
    }

    /// Number of rows `s`.
    pub fn snapshots(&self) -> usize {
        self.0.nrows()
    }

    /// Number of columns `n`.
    pub fn samples(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_mat(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.0
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> c64 {
        self.0[(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: c64) {
        self.0[(row, col)] = value;
    }

    pub fn row(&self, row: usize) -> Vec<c64> {
        (0..self.samples()).map(|j| self.0[(row, j)]).collect()
    }

    /// The first `count` rows as a new matrix.
    pub fn leading_rows(&self, count: usize) -> Result<DataMatrix> {
        if count == 0 || count > self.snapshots() {
            return Err(Error::IndexOutOfRange {
                index: count,
                len: self.snapshots(),
            });
        }
        Ok(DataMatrix::from_fn(count, self.samples(), |l, j| self.0[(l, j)]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm_l2()
    }

    /// `⟨self, other⟩ = trace(selfᴴ · other)`.
    pub fn inner(&self, other: &DataMatrix) -> c64 {
        inner(self.as_mat(), other.as_mat())
    }

    pub fn scaled(&self, factor: f64) -> DataMatrix {
        DataMatrix::from_fn(self.snapshots(), self.samples(), |l, j| self.0[(l, j)] * factor)
    }

    pub fn added(&self, other: &DataMatrix) -> DataMatrix {
        DataMatrix(&self.0 + &other.0)
    }

    pub fn subtracted(&self, other: &DataMatrix) -> DataMatrix {
        DataMatrix(&self.0 - &other.0)
    }

    pub fn dims(&self) -> String {
        format!("{}×{}", self.snapshots(), self.samples())
    }
}

/// Trace inner product `trace(aᴴ b)` of two equally sized matrices.
pub(crate) fn inner(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> c64 {
    debug_assert_eq!(a.shape(), b.shape());
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

/// Singular value decomposition `a = U diag(σ) Vᴴ` with σ sorted non-increasing.
pub(crate) struct Svd {
    pub u: Mat<c64>,
    pub sigma: Vec<f64>,
    pub v: Mat<c64>,
}

pub(crate) fn svd_thin(a: MatRef<'_, c64>) -> Result<Svd> {
    let svd = a.thin_svd().map_err(|_| Error::Svd)?;
    Ok(unpack(&svd))
}

/// Full SVD: `U` is square `m × m`, `V` is square `n × n`.
pub(crate) fn svd_full(a: MatRef<'_, c64>) -> Result<Svd> {
    let svd = a.svd().map_err(|_| Error::Svd)?;
    Ok(unpack(&svd))
}

pub(crate) fn singular_values(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(|_| Error::Svd)
}

fn unpack(svd: &faer::linalg::solvers::Svd<c64>) -> Svd {
    let sigma = svd.S().column_vector().iter().map(|s| s.re).collect();
    Svd {
        u: svd.U().to_owned(),
        sigma,
        v: svd.V().to_owned(),
    }
}
