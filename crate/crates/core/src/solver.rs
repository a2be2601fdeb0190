//! Nuclear-norm minimization over the vectorized Hankel lift.
//!
//! Solves `min ‖H(X)‖_*  s.t.  A(X) = y` with ADMM on the splitting
//! `min ‖Z‖_*  s.t.  Z = H(X), A(X) = y`, using the augmented Lagrangian
//!
//! ```text
//! L_ρ(X, Z, Λ) = ‖Z‖_* + Re⟨Λ, Z − H(X)⟩ + (ρ/2)‖Z − H(X)‖²_F
//! ```
//!
//! restricted to the affine set `A(X) = y`. Each sweep:
//!
//! 1. X-update: minimize `‖Z + Λ/ρ − H(X)‖²_F` over `A(X) = y`. Since `H*H` is
//!    diagonal, column `j` is `m_j = H*(Z + Λ/ρ)_j / w_j` projected onto the
//!    hyperplane `b_j* x = y_j`.
//! 2. Z-update: `Z = svt(H(X) − Λ/ρ, 1/ρ)`.
//! 3. Dual ascent: `Λ ← Λ + ρ(Z − H(X))` (unscaled multiplier).

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::dense::{self, DataMatrix};
use crate::error::{Error, Result};
use crate::lift::{hankel_weights, vec_hankel, vec_hankel_adjoint, LiftShape, LiftedMatrix};
use crate::model::SubspaceMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub rho: f64,
    pub max_iters: usize,
    pub tol_rel: f64,
    /// Keep at most this many singular values in each thresholding step.
    pub svt_rank_cap: Option<usize>,
    /// Record `(primal, dual)` residuals for every iteration.
    pub record_history: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            rho: 1.0,
            max_iters: 5000,
            tol_rel: 1e-7,
            svt_rank_cap: None,
            record_history: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidConfig(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.tol_rel > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol_rel must be positive, got {}",
                self.tol_rel
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        if self.svt_rank_cap == Some(0) {
            return Err(Error::InvalidConfig("svt_rank_cap must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub x_hat: DataMatrix,
    pub iters: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `‖H(X_hat)‖_*`
    pub nuclear_norm: f64,
    pub converged: bool,
    /// Per-iteration `(primal, dual)` residuals when requested.
    pub history: Vec<(f64, f64)>,
}

/// Singular value soft-thresholding `U · max(Σ − t, 0) · Vᴴ`.
pub fn svt(m: &Mat<c64>, threshold: f64) -> Result<Mat<c64>> {
    svt_capped(m, threshold, None)
}

fn svt_capped(m: &Mat<c64>, threshold: f64, cap: Option<usize>) -> Result<Mat<c64>> {
    if !(threshold >= 0.0) {
        return Err(Error::InvalidConfig(format!("negative threshold {threshold}")));
    }
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Ok(m.clone());
    }
    let svd = dense::svd_thin(m.as_ref())?;
    let keep = svd
        .sigma
        .iter()
        .take_while(|&&s| s > threshold)
        .count()
        .min(cap.unwrap_or(usize::MAX));
    let mut out = Mat::zeros(rows, cols);
    if keep == 0 {
        return Ok(out);
    }
    let u = svd.u.get(.., ..keep);
    let v = svd.v.get(.., ..keep);
    let scaled = Mat::from_fn(rows, keep, |i, k| u[(i, k)] * (svd.sigma[k] - threshold));
    faer::linalg::matmul::matmul(
        out.as_mut(),
        faer::Accum::Replace,
        scaled.as_ref(),
        v.adjoint(),
        c64::new(1.0, 0.0),
        faer::Par::Seq,
    );
    Ok(out)
}

/// Sum of singular values.
pub fn nuclear_norm(z: &LiftedMatrix) -> Result<f64> {
    nuclear_norm_mat(z.entries())
}

pub(crate) fn nuclear_norm_mat(m: &Mat<c64>) -> Result<f64> {
    Ok(dense::singular_values(m.as_ref())?.iter().sum())
}

/// Projection of the per-column least-squares targets onto `A(X) = y`.
struct AffineProjector {
    rows: Vec<Vec<c64>>,
    inv_norms: Vec<f64>,
    y: Vec<c64>,
}

impl AffineProjector {
    fn new(y: &[c64], b: &SubspaceMatrix) -> Result<Self> {
        let mut inv_norms = Vec::with_capacity(y.len());
        let mut rows = Vec::with_capacity(y.len());
        for j in 0..b.samples() {
            let norm = b.row_norm_sqr(j);
            if !(norm > 0.0) {
                return Err(Error::DegenerateMeasurement { row: j });
            }
            inv_norms.push(1.0 / norm);
            rows.push((0..b.dim()).map(|l| b.entries()[(j, l)]).collect());
        }
        Ok(AffineProjector {
            rows,
            inv_norms,
            y: y.to_vec(),
        })
    }

    /// `x_j ← x_j + b_j (y_j − b_j* x_j) / ‖b_j‖²` for every column.
    fn project(&self, x: &mut DataMatrix) {
        for (j, row) in self.rows.iter().enumerate() {
            let bx: c64 = row.iter().enumerate().map(|(l, &bl)| bl * x.get(l, j)).sum();
            let gap = (self.y[j] - bx) * self.inv_norms[j];
            for (l, &bl) in row.iter().enumerate() {
                let v = x.get(l, j) + bl.conj() * gap;
                x.set(l, j, v);
            }
        }
    }

    fn residual(&self, x: &DataMatrix) -> f64 {
        self.rows
            .iter()
            .enumerate()
            .map(|(j, row)| {
                let bx: c64 = row.iter().enumerate().map(|(l, &bl)| bl * x.get(l, j)).sum();
                (bx - self.y[j]).norm()
            })
            .fold(0.0, f64::max)
    }
}

/// `a + alpha · b`
fn axpy(a: &Mat<c64>, alpha: f64, b: &Mat<c64>) -> Mat<c64> {
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] + b[(i, j)] * alpha)
}

fn frob(m: &Mat<c64>) -> f64 {
    m.norm_l2()
}

/// Minimizes `‖H(X)‖_*` subject to `A(X) = y`.
///
/// Non-convergence is not an error: the last iterate comes back with
/// `converged = false`.
pub fn solve_vhl(y: &[c64], b: &SubspaceMatrix, shape: &LiftShape, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    if y.len() != shape.n() || b.samples() != shape.n() || b.dim() != shape.s() {
        return Err(Error::shape(
            format!("y of length {} and B of size {}×{}", shape.n(), shape.n(), shape.s()),
            format!("y of length {} and B of size {}×{}", y.len(), b.samples(), b.dim()),
        ));
    }
    let projector = AffineProjector::new(y, b)?;
    let s = shape.s();
    let n = shape.n();
    let weights = hankel_weights(shape);
    let inv_w: Vec<f64> = weights.as_slice().iter().map(|&w| 1.0 / w as f64).collect();

    // Feasible start: the minimum-norm solution of A(X) = y.
    let mut x = DataMatrix::zeros(s, n);
    projector.project(&mut x);

    if s == 1 {
        // The constraint pins every column; nothing left to optimize.
        let hx = vec_hankel(&x, shape)?;
        return Ok(SolveReport {
            nuclear_norm: nuclear_norm(&hx)?,
            x_hat: x,
            iters: 1,
            primal_residual: 0.0,
            dual_residual: 0.0,
            converged: true,
            history: Vec::new(),
        });
    }

    let rho = config.rho;
    let (rows, cols) = shape.lifted_dims();
    let mut z = Mat::<c64>::zeros(rows, cols);
    let mut lambda = Mat::<c64>::zeros(rows, cols);
    let mut hx = vec_hankel(&x, shape)?.into_entries();
    let mut history = Vec::new();
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut iters = 0;
    let mut converged = false;

    for it in 1..=config.max_iters {
        iters = it;
        // X-update.
        let target = LiftedMatrix::from_mat(*shape, axpy(&z, 1.0 / rho, &lambda))?;
        let mut next = vec_hankel_adjoint(&target);
        for j in 0..n {
            for l in 0..s {
                let v = next.get(l, j) * inv_w[j];
                next.set(l, j, v);
            }
        }
        projector.project(&mut next);
        let hx_next = vec_hankel(&next, shape)?.into_entries();
        dual = rho * frob(&(&hx_next - &hx)) / frob(&lambda).max(1.0);
        x = next;
        hx = hx_next;

        // Z-update.
        let shifted = axpy(&hx, -1.0 / rho, &lambda);
        z = svt_capped(&shifted, 1.0 / rho, config.svt_rank_cap)?;

        // Dual update.
        let gap = &z - &hx;
        lambda = axpy(&lambda, rho, &gap);
        primal = frob(&gap) / frob(&hx).max(1.0);

        if config.record_history {
            history.push((primal, dual));
        }
        if primal <= config.tol_rel && dual <= config.tol_rel {
            converged = true;
            break;
        }
    }

    debug_assert!(projector.residual(&x) <= 1e-8 * (1.0 + x.frobenius_norm()));
    Ok(SolveReport {
        nuclear_norm: nuclear_norm_mat(&hx)?,
        x_hat: x,
        iters,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        history,
    })
}

/// Largest per-entry violation `max_j |b_j* x_j − y_j|`.
pub fn feasibility_gap(x: &DataMatrix, y: &[c64], b: &SubspaceMatrix) -> Result<f64> {
    Ok(AffineProjector::new(y, b)?.residual(x))
}
