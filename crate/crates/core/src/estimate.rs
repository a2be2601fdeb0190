//! Frequency retrieval (MUSIC variants) and least-squares amplitude recovery.
//!
//! All three estimators reduce to a noise subspace `U_⊥` of some matrix whose
//! column space is spanned by steering vectors, followed by peak picking on
//! the pseudospectrum `f(τ) = 1 / ‖U_⊥* a_τ‖²`:
//!
//! * VHM: left singular vectors of `H(X)ᵀ` (length-`n2` steering space),
//! * single snapshot: the same with one row of `X`,
//! * MMV: left singular vectors of `Xᵀ` (length-`n` steering space).

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::dense::{self, DataMatrix};
use crate::error::{Error, Result};
use crate::lift::{vec_hankel, LiftShape};
use crate::model::steering;

/// Grid spacing used for pseudospectrum evaluation by default.
pub const DEFAULT_GRID_POINTS: usize = 10_000;

/// Orthonormal basis of the noise subspace.
#[derive(Clone, Debug)]
pub struct NoiseSubspace {
    u_perp: Mat<c64>,
    order: usize,
}

impl NoiseSubspace {
    pub fn basis(&self) -> &Mat<c64> {
        &self.u_perp
    }

    /// Assumed model order `r`.
    pub fn order(&self) -> usize {
        self.order
    }

    /// Length of the steering vectors this subspace lives in.
    pub fn steering_len(&self) -> usize {
        self.u_perp.nrows()
    }

    /// `‖U_⊥* a_τ‖²`
    pub fn projection_energy(&self, tau: f64) -> f64 {
        let a = steering(tau, self.steering_len());
        projection_energy(&self.u_perp, &a)
    }
}

fn projection_energy(u: &Mat<c64>, a: &[c64]) -> f64 {
    let mut energy = 0.0;
    for k in 0..u.ncols() {
        let col = u.col(k);
        let mut dot = c64::new(0.0, 0.0);
        for (i, &ai) in a.iter().enumerate() {
            dot += col[i].conj() * ai;
        }
        energy += dot.norm_sqr();
    }
    energy
}

/// Left singular vectors of `m` beyond the first `r`.
fn trailing_left_vectors(m: &Mat<c64>, r: usize) -> Result<NoiseSubspace> {
    if m.norm_l2() == 0.0 {
        return Err(Error::Degenerate("zero data matrix has no signal subspace".into()));
    }
    let svd = dense::svd_full(m.as_ref())?;
    let rows = m.nrows();
    let u_perp = svd.u.get(.., r..rows).to_owned();
    Ok(NoiseSubspace { u_perp, order: r })
}

/// Noise subspace of `H(X)ᵀ` (MUSIC via the vectorized Hankel matrix).
pub fn noise_subspace_vhm(x: &DataMatrix, r: usize, shape: &LiftShape) -> Result<NoiseSubspace> {
    if r >= shape.n2() {
        return Err(Error::ModelOrder {
            r,
            reason: format!("VHM MUSIC needs r < n2 = {}", shape.n2()),
        });
    }
    let h = vec_hankel(x, shape)?;
    trailing_left_vectors(&h.entries().transpose().to_owned(), r)
}

/// Single-snapshot MUSIC on one row: the scalar Hankel matrix `H(x)ᵀ`.
pub fn noise_subspace_single(row: &[c64], r: usize, shape: &LiftShape) -> Result<NoiseSubspace> {
    let scalar = shape.with_snapshots(1)?;
    noise_subspace_vhm(&DataMatrix::from_row(row), r, &scalar)
}

/// MMV MUSIC: the noise subspace of `Xᵀ`; needs `r ≤ s`.
pub fn noise_subspace_mmv(x: &DataMatrix, r: usize) -> Result<NoiseSubspace> {
    if r > x.snapshots() {
        return Err(Error::ModelOrder {
            r,
            reason: format!(
                "MMV MUSIC needs at least as many snapshots as sources (s = {})",
                x.snapshots()
            ),
        });
    }
    if r >= x.samples() {
        return Err(Error::ModelOrder {
            r,
            reason: format!("MMV MUSIC needs r < n = {}", x.samples()),
        });
    }
    trailing_left_vectors(&x.as_mat().transpose().to_owned(), r)
}

/// `k / points` for `k = 0..points`.
pub fn frequency_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 / points as f64).collect()
}

/// `f(τ)` sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PseudospectrumCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

/// Evaluates `f(τ) = 1 / ‖U_⊥* a_τ‖²` on `grid`.
///
/// A vanishing projection (an exact root on the grid) is clamped to the
/// smallest positive normal so the curve stays finite.
pub fn pseudospectrum(noise: &NoiseSubspace, grid: &[f64]) -> PseudospectrumCurve {
    let values = grid
        .iter()
        .map(|&tau| 1.0 / noise.projection_energy(tau).max(f64::MIN_POSITIVE))
        .collect();
    PseudospectrumCurve {
        grid: grid.to_vec(),
        values,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PeakPick {
    /// Picked frequencies, strongest first.
    pub taus: Vec<f64>,
    /// Grid indices of the picks.
    pub indices: Vec<usize>,
    /// True when fewer than `r` strict local maxima existed and the pick
    /// was padded with the largest remaining grid values.
    pub padded: bool,
}

fn by_value_then_tau(curve: &PseudospectrumCurve) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    |&a, &b| {
        curve.values[b]
            .total_cmp(&curve.values[a])
            .then(curve.grid[a].total_cmp(&curve.grid[b]))
    }
}

/// The `r` largest strict local maxima on the circular grid.
///
/// Ties in value go to the smaller frequency.
pub fn pick_peaks(curve: &PseudospectrumCurve, r: usize) -> Result<PeakPick> {
    let len = curve.values.len();
    if r == 0 {
        return Err(Error::ModelOrder {
            r,
            reason: "need at least one peak".into(),
        });
    }
    if r > len {
        return Err(Error::ModelOrder {
            r,
            reason: format!("grid has only {len} points"),
        });
    }
    let v = &curve.values;
    let is_max = |i: usize| {
        if len == 1 {
            return true;
        }
        let prev = v[(i + len - 1) % len];
        let next = v[(i + 1) % len];
        v[i] > prev && v[i] > next
    };
    let mut maxima: Vec<usize> = (0..len).filter(|&i| is_max(i)).collect();
    maxima.sort_by(by_value_then_tau(curve));
    let padded = maxima.len() < r;
    let mut picks: Vec<usize> = maxima.into_iter().take(r).collect();
    if padded {
        let mut rest: Vec<usize> = (0..len).filter(|i| !picks.contains(i)).collect();
        rest.sort_by(by_value_then_tau(curve));
        picks.extend(rest.into_iter().take(r - picks.len()));
    }
    Ok(PeakPick {
        taus: picks.iter().map(|&i| curve.grid[i]).collect(),
        indices: picks,
        padded,
    })
}

/// Polishes grid picks off the grid: each `τ` is replaced by the minimizer of
/// `‖U_⊥* a_τ‖²` on `[τ − half_width, τ + half_width]` (golden-section search).
///
/// With `half_width` equal to the grid step the true peak is bracketed as long
/// as the grid pick was the nearest grid point to it.
pub fn refine_peaks(noise: &NoiseSubspace, taus: &[f64], half_width: f64) -> Vec<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    taus.iter()
        .map(|&tau| {
            let (mut a, mut b) = (tau - half_width, tau + half_width);
            let mut c = b - INV_PHI * (b - a);
            let mut d = a + INV_PHI * (b - a);
            let (mut fc, mut fd) = (noise.projection_energy(c), noise.projection_energy(d));
            while b - a > 1e-15 {
                if fc < fd {
                    (b, d, fd) = (d, c, fc);
                    c = b - INV_PHI * (b - a);
                    fc = noise.projection_energy(c);
                } else {
                    (a, c, fc) = (c, d, fd);
                    d = a + INV_PHI * (b - a);
                    fd = noise.projection_energy(d);
                }
            }
            (0.5 * (a + b)).rem_euclid(1.0)
        })
        .collect()
}

/// Least-squares source parameters for fixed frequencies.
#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredSources {
    pub taus_hat: Vec<f64>,
    /// `d_k = ‖w_k‖₂ ≥ 0`.
    pub amps_hat: Vec<f64>,
    /// `s × r`, unit-norm columns carrying all of the phase.
    pub orients_hat: Mat<c64>,
    /// `‖X − W Aᵀ‖_F`.
    pub residual: f64,
    /// Condition number of the `n × r` steering matrix.
    pub condition_number: f64,
    /// Set when the condition number exceeds [`ILL_CONDITIONED`].
    pub ill_conditioned: bool,
}

impl RecoveredSources {
    /// Weight matrix `W = [d_1 h_1 … d_r h_r]`.
    pub fn weights(&self) -> Mat<c64> {
        Mat::from_fn(self.orients_hat.nrows(), self.amps_hat.len(), |l, k| {
            self.orients_hat[(l, k)] * self.amps_hat[k]
        })
    }
}

pub const ILL_CONDITIONED: f64 = 1e12;

/// Solves `min_W ‖X − W Aᵀ‖_F` with `A = [a_{τ̂_1} … a_{τ̂_r}]`, then splits
/// each column of `W` into a nonnegative amplitude and a unit orientation.
pub fn recover_amplitudes(x: &DataMatrix, taus_hat: &[f64]) -> Result<RecoveredSources> {
    let n = x.samples();
    let s = x.snapshots();
    let r = taus_hat.len();
    if r == 0 {
        return Err(Error::EmptySet);
    }
    if r > n {
        return Err(Error::ModelOrder {
            r,
            reason: format!("least squares needs r ≤ n = {n}"),
        });
    }
    for &t in taus_hat {
        if !(0.0..1.0).contains(&t) {
            return Err(Error::FrequencyOutOfRange(t));
        }
    }
    if crate::model::min_separation(taus_hat) <= crate::model::DISTINCT_TOL {
        return Err(Error::InvalidModel("estimated frequencies must be distinct".into()));
    }
    let cols: Vec<Vec<c64>> = taus_hat.iter().map(|&t| steering(t, n)).collect();
    let a = Mat::from_fn(n, r, |j, k| cols[k][j]);
    let svd = dense::svd_thin(a.as_ref())?;
    let smax = svd.sigma[0];
    let smin = svd.sigma[r - 1];
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };

    // A Wᵀ ≈ Xᵀ  ⇒  Wᵀ = V Σ⁺ Uᴴ Xᵀ.
    let xt = x.as_mat().transpose().to_owned();
    let uh_xt = svd.u.adjoint() * &xt;
    let cutoff = smax * f64::EPSILON * n as f64;
    let scaled = Mat::from_fn(r, s, |k, l| {
        if svd.sigma[k] > cutoff {
            uh_xt[(k, l)] * (1.0 / svd.sigma[k])
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let wt = &svd.v * &scaled;
    let fitted = &a * &wt;
    let residual = (&xt - &fitted).norm_l2();

    let mut amps_hat = Vec::with_capacity(r);
    let mut orients_hat = Mat::<c64>::zeros(s, r);
    for k in 0..r {
        let d = (0..s).map(|l| wt[(k, l)].norm_sqr()).sum::<f64>().sqrt();
        amps_hat.push(d);
        for l in 0..s {
            orients_hat[(l, k)] = if d > 0.0 {
                wt[(k, l)] * (1.0 / d)
            } else if l == 0 {
                c64::new(1.0, 0.0)
            } else {
                c64::new(0.0, 0.0)
            };
        }
    }
    Ok(RecoveredSources {
        taus_hat: taus_hat.to_vec(),
        amps_hat,
        orients_hat,
        residual,
        condition_number,
        ill_conditioned: condition_number > ILL_CONDITIONED,
    })
}

/// `H̃(X)`: the scalar Hankel matrices of each row stacked vertically.
pub fn stacked_hankel(x: &DataMatrix, shape: &LiftShape) -> Result<Mat<c64>> {
    let scalar = shape.with_snapshots(1)?;
    if x.snapshots() != shape.s() || x.samples() != shape.n() {
        return Err(Error::shape(format!("{}×{}", shape.s(), shape.n()), x.dims()));
    }
    let (n1, n2) = (shape.n1(), shape.n2());
    let blocks: Vec<Mat<c64>> = (0..x.snapshots())
        .map(|l| vec_hankel(&DataMatrix::from_row(&x.row(l)), &scalar).map(|h| h.into_entries()))
        .collect::<Result<_>>()?;
    Ok(Mat::from_fn(x.snapshots() * n1, n2, |row, k| {
        blocks[row / n1][(row % n1, k)]
    }))
}

/// Which subspace a MUSIC run uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    Vhm,
    Single,
    Mmv,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Vhm => "vhm",
            Estimator::Single => "single",
            Estimator::Mmv => "mmv",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vhm" => Ok(Estimator::Vhm),
            "single" => Ok(Estimator::Single),
            "mmv" => Ok(Estimator::Mmv),
            other => Err(Error::InvalidConfig(format!("unknown estimator `{other}`"))),
        }
    }
}

/// Output of [`music`].
#[derive(Clone, Debug)]
pub struct MusicResult {
    pub noise: NoiseSubspace,
    pub curve: PseudospectrumCurve,
    pub peaks: PeakPick,
}

/// Runs one MUSIC estimator end to end on `x` (`row` selects the snapshot
/// for [`Estimator::Single`]).
pub fn music(x: &DataMatrix, r: usize, estimator: Estimator, row: usize, grid: &[f64]) -> Result<MusicResult> {
    let shape = LiftShape::new(x.samples(), x.snapshots())?;
    let noise = match estimator {
        Estimator::Vhm => noise_subspace_vhm(x, r, &shape)?,
        Estimator::Single => {
            if row >= x.snapshots() {
                return Err(Error::IndexOutOfRange {
                    index: row,
                    len: x.snapshots(),
                });
            }
            noise_subspace_single(&x.row(row), r, &shape)?
        }
        Estimator::Mmv => noise_subspace_mmv(x, r)?,
    };
    let curve = pseudospectrum(&noise, grid);
    let peaks = pick_peaks(&curve, r)?;
    Ok(MusicResult { noise, curve, peaks })
}
