//! Vectorized Hankel lifting and the operators built around it.
//!
//! For an `s × n` matrix `X` with columns `x_0 … x_{n-1}`, `H(X)` is the
//! `s·n1 × n2` block-Hankel matrix whose `(j, k)` block is `x_{j+k}`, with
//! `n1 + n2 = n + 1`. Its adjoint sums the blocks along each anti-diagonal,
//! so `H*H` is the diagonal operator `D²` that scales column `i` by the
//! anti-diagonal multiplicity `w_i`. `G = H D⁻¹` is then an isometry.

use faer::{c64, Mat};

use crate::dense::DataMatrix;
use crate::error::{Error, Result};

/// Dimensions of a vectorized Hankel lift.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LiftShape {
    n: usize,
    s: usize,
    n1: usize,
    n2: usize,
}

impl LiftShape {
    /// Near-square split `n1 = ⌊(n+1)/2⌋`, `n2 = n + 1 − n1`.
    pub fn new(n: usize, s: usize) -> Result<Self> {
        Self::with_rows(n, s, n.div_ceil(2))
    }

    /// Explicit split with `n1` block rows and `n2 = n + 1 − n1` columns.
    pub fn with_rows(n: usize, s: usize, n1: usize) -> Result<Self> {
        if n == 0 || s == 0 {
            return Err(Error::InvalidShape(format!(
                "n and s must be positive (n={n}, s={s})"
            )));
        }
        if n1 == 0 || n1 > n {
            return Err(Error::InvalidShape(format!(
                "n1={n1} must lie in 1..={n}"
            )));
        }
        Ok(LiftShape {
            n,
            s,
            n1,
            n2: n + 1 - n1,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    /// Same split, different subspace dimension.
    pub fn with_snapshots(&self, s: usize) -> Result<Self> {
        Self::with_rows(self.n, s, self.n1)
    }

    /// `(s·n1, n2)`
    pub fn lifted_dims(&self) -> (usize, usize) {
        (self.s * self.n1, self.n2)
    }

    fn check_data(&self, x: &DataMatrix) -> Result<()> {
        if x.snapshots() != self.s || x.samples() != self.n {
            return Err(Error::shape(
                format!("{}×{}", self.s, self.n),
                x.dims(),
            ));
        }
        Ok(())
    }

    /// Range of block rows `j` contributing to anti-diagonal `i`.
    fn antidiagonal(&self, i: usize) -> std::ops::RangeInclusive<usize> {
        let lo = i.saturating_sub(self.n2 - 1);
        let hi = i.min(self.n1 - 1);
        lo..=hi
    }
}

/// `H(X)` stored densely, viewed as an `n1 × n2` grid of `s`-vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct LiftedMatrix {
    shape: LiftShape,
    entries: Mat<c64>,
}

impl LiftedMatrix {
    pub fn zeros(shape: LiftShape) -> Self {
        let (rows, cols) = shape.lifted_dims();
        LiftedMatrix {
            shape,
            entries: Mat::zeros(rows, cols),
        }
    }

    pub fn from_mat(shape: LiftShape, entries: Mat<c64>) -> Result<Self> {
        let dims = shape.lifted_dims();
        if entries.shape() != dims {
            return Err(Error::shape(
                format!("{}×{}", dims.0, dims.1),
                format!("{}×{}", entries.nrows(), entries.ncols()),
            ));
        }
        Ok(LiftedMatrix { shape, entries })
    }

    pub fn shape(&self) -> LiftShape {
        self.shape
    }

    pub fn entries(&self) -> &Mat<c64> {
        &self.entries
    }

    pub fn into_entries(self) -> Mat<c64> {
        self.entries
    }

    /// Block `z_{j,k}`: rows `[j·s, (j+1)·s)` of column `k`.
    pub fn block(&self, j: usize, k: usize) -> Vec<c64> {
        let s = self.shape.s;
        (0..s).map(|l| self.entries[(j * s + l, k)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.norm_l2()
    }

    pub fn inner(&self, other: &LiftedMatrix) -> c64 {
        crate::dense::inner(self.entries.as_ref(), other.entries.as_ref())
    }
}

/// Anti-diagonal multiplicities `w_i = #{(j, k) : j + k = i}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightVector(Vec<usize>);

impl WeightVector {
    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i]
    }
}

pub fn hankel_weights(shape: &LiftShape) -> WeightVector {
    WeightVector(
        (0..shape.n)
            .map(|i| shape.antidiagonal(i).count())
            .collect(),
    )
}

/// `H(X)`: block `(j, k)` is column `x_{j+k}`.
pub fn vec_hankel(x: &DataMatrix, shape: &LiftShape) -> Result<LiftedMatrix> {
    shape.check_data(x)?;
    let s = shape.s;
    let (rows, cols) = shape.lifted_dims();
    let entries = Mat::from_fn(rows, cols, |row, k| x.get(row % s, row / s + k));
    Ok(LiftedMatrix {
        shape: *shape,
        entries,
    })
}

/// `H*(Z)`: column `i` is `Σ_{j+k=i} z_{j,k}`.
pub fn vec_hankel_adjoint(z: &LiftedMatrix) -> DataMatrix {
    let shape = z.shape;
    let s = shape.s;
    let mut out = DataMatrix::zeros(s, shape.n);
    for i in 0..shape.n {
        for j in shape.antidiagonal(i) {
            let k = i - j;
            for l in 0..s {
                let v = out.get(l, i) + z.entries[(j * s + l, k)];
                out.set(l, i, v);
            }
        }
    }
    out
}

/// Scales column `i` of `X` by `w_i^{power/2}`, i.e. applies `D = diag(√w_i)`
/// `power` times. `power` must be one of `±1, ±2`.
pub fn apply_d(x: &DataMatrix, w: &WeightVector, power: i32) -> Result<DataMatrix> {
    if !matches!(power, -2 | -1 | 1 | 2) {
        return Err(Error::InvalidConfig(format!(
            "diagonal power {power} not in {{±1, ±2}}"
        )));
    }
    if w.len() != x.samples() {
        return Err(Error::shape(
            format!("{} columns", w.len()),
            x.dims(),
        ));
    }
    let factors: Vec<f64> = w
        .0
        .iter()
        .map(|&wi| (wi as f64).powf(f64::from(power) / 2.0))
        .collect();
    Ok(DataMatrix::from_fn(x.snapshots(), x.samples(), |l, j| {
        x.get(l, j) * factors[j]
    }))
}

/// `G(X) = H(D⁻¹ X) = Σ_i G_i ⊗ x_i`.
pub fn apply_g(x: &DataMatrix, shape: &LiftShape) -> Result<LiftedMatrix> {
    shape.check_data(x)?;
    let w = hankel_weights(shape);
    vec_hankel(&apply_d(x, &w, -1)?, shape)
}

/// `G*(Z) = D⁻¹ H*(Z)`.
pub fn apply_g_adjoint(z: &LiftedMatrix) -> DataMatrix {
    let w = hankel_weights(&z.shape);
    // Weight length always matches H*(Z) by construction.
    apply_d(&vec_hankel_adjoint(z), &w, -1).expect("weights sized from the same shape")
}

/// Orthonormal Hankel basis matrix `G_i = w_i^{-1/2} Σ_{j+k=i} e_j e_kᵀ` (`n1 × n2`).
pub fn hankel_basis(i: usize, shape: &LiftShape) -> Result<Mat<f64>> {
    if i >= shape.n {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: shape.n,
        });
    }
    let diag = shape.antidiagonal(i);
    let scale = 1.0 / (diag.clone().count() as f64).sqrt();
    let mut g = Mat::zeros(shape.n1, shape.n2);
    for j in diag {
        g[(j, i - j)] = scale;
    }
    Ok(g)
}

/// Two-fold lift of an `s × n²` matrix made of `n` chunks `X_0 … X_{n-1}`
/// (`n` columns each): the `n1 × n2` block-Hankel arrangement whose `(p, q)`
/// block is `H(X_{p+q})`. The result is `(s·n1·n1) × (n2·n2)`.
pub fn two_fold_lift(x: &DataMatrix, shape: &LiftShape) -> Result<Mat<c64>> {
    let n = shape.n;
    if x.snapshots() != shape.s || x.samples() != n * n {
        return Err(Error::shape(
            format!("{}×{}", shape.s, n * n),
            x.dims(),
        ));
    }
    let (inner_rows, inner_cols) = shape.lifted_dims();
    let s = shape.s;
    let rows = inner_rows * shape.n1;
    let cols = inner_cols * shape.n2;
    // Block (p, q) row r, column c picks chunk p+q, inner Hankel entry
    // (r / s) + c of that chunk, snapshot r % s.
    Ok(Mat::from_fn(rows, cols, |row, col| {
        let (p, r) = (row / inner_rows, row % inner_rows);
        let (q, c) = (col / inner_cols, col % inner_cols);
        let chunk = p + q;
        x.get(r % s, chunk * n + r / s + c)
    }))
}
