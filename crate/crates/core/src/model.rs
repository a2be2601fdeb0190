//! Ground truth and the measurement model.
//!
//! A point-source model `{d_k, τ_k, h_k}` produces the data matrix
//! `X♮ = Σ_k d_k h_k a_{τ_k}ᵀ`. Each measurement sees one column of it
//! through the subspace row `b_j* = B[j, :]`: `y[j] = b_j* x_j`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dense::{self, DataMatrix};
use crate::error::{Error, Result};
use crate::lift::{vec_hankel, LiftShape};

/// Frequencies closer than this (on the torus) are treated as repeated.
pub const DISTINCT_TOL: f64 = 1e-9;

/// `a_τ[j] = exp(−2πi·τ·j)` for `j = 0..len`.
pub fn steering_vector(tau: f64, len: usize) -> Result<Vec<c64>> {
    check_frequency(tau)?;
    Ok(steering(tau, len))
}

pub(crate) fn steering(tau: f64, len: usize) -> Vec<c64> {
    (0..len)
        .map(|j| {
            // Reduce the phase mod 1 before scaling so large j keeps full precision.
            let turns = (tau * j as f64).fract();
            c64::cis(-2.0 * PI * turns)
        })
        .collect()
}

fn check_frequency(tau: f64) -> Result<()> {
    if (0.0..1.0).contains(&tau) {
        Ok(())
    } else {
        Err(Error::FrequencyOutOfRange(tau))
    }
}

/// Distance between two frequencies on the unit circle.
pub fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// Smallest pairwise wraparound gap, `+∞` for fewer than two frequencies.
pub fn min_separation(taus: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, &a) in taus.iter().enumerate() {
        for &b in &taus[i + 1..] {
            best = best.min(wrap_distance(a, b));
        }
    }
    best
}

/// Ground truth `{d_k, τ_k, h_k}`; `orients` is `s × r` with unit-norm columns.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSourceModel {
    taus: Vec<f64>,
    amps: Vec<c64>,
    orients: Mat<c64>,
}

impl PointSourceModel {
    pub fn new(taus: Vec<f64>, amps: Vec<c64>, orients: Mat<c64>) -> Result<Self> {
        let r = taus.len();
        if r == 0 {
            return Err(Error::InvalidModel("at least one source required".into()));
        }
        if amps.len() != r || orients.ncols() != r || orients.nrows() == 0 {
            return Err(Error::InvalidModel(format!(
                "{r} frequencies, {} amplitudes, {}×{} orientations",
                amps.len(),
                orients.nrows(),
                orients.ncols()
            )));
        }
        for &tau in &taus {
            check_frequency(tau)?;
        }
        if min_separation(&taus) <= DISTINCT_TOL {
            return Err(Error::InvalidModel("frequencies must be distinct".into()));
        }
        if let Some(k) = amps.iter().position(|d| d.norm() == 0.0) {
            return Err(Error::InvalidModel(format!("amplitude {k} is zero")));
        }
        for k in 0..r {
            let norm = orients.col(k).norm_l2();
            if (norm - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidModel(format!(
                    "orientation {k} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(PointSourceModel {
            taus,
            amps,
            orients,
        })
    }

    /// Number of sources `r`.
    pub fn order(&self) -> usize {
        self.taus.len()
    }

    /// Orientation dimension `s`.
    pub fn dim(&self) -> usize {
        self.orients.nrows()
    }

    pub fn taus(&self) -> &[f64] {
        &self.taus
    }

    pub fn amps(&self) -> &[c64] {
        &self.amps
    }

    pub fn orients(&self) -> &Mat<c64> {
        &self.orients
    }

    pub fn orient(&self, k: usize) -> Vec<c64> {
        self.orients.col(k).iter().copied().collect()
    }

    /// Union of two models with the same `s`.
    pub fn merged(&self, other: &PointSourceModel) -> Result<PointSourceModel> {
        if self.dim() != other.dim() {
            return Err(Error::shape(
                format!("s={}", self.dim()),
                format!("s={}", other.dim()),
            ));
        }
        let r = self.order() + other.order();
        let orients = Mat::from_fn(self.dim(), r, |l, k| {
            if k < self.order() {
                self.orients[(l, k)]
            } else {
                other.orients[(l, k - self.order())]
            }
        });
        PointSourceModel::new(
            [self.taus.clone(), other.taus.clone()].concat(),
            [self.amps.clone(), other.amps.clone()].concat(),
            orients,
        )
    }
}

/// Law for the amplitudes `d_k`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmpLaw {
    /// `d_k = (1 + 10^{c_k}) e^{−iψ_k}`, `c_k ~ U[0, 1]`, `ψ_k ~ U[0, 2π)`.
    #[default]
    Dynamic,
    /// `d_k = e^{−iψ_k}`.
    UnitModulus,
}

/// Law for the orientation entries before normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientLaw {
    /// Real standard normal entries.
    #[default]
    Gaussian,
    /// Symmetric Bernoulli (±1) entries.
    Bernoulli,
}

impl FromStr for OrientLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(OrientLaw::Gaussian),
            "bernoulli" => Ok(OrientLaw::Bernoulli),
            other => Err(Error::InvalidConfig(format!("unknown orientation law `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelSampling {
    /// Minimum wraparound separation between frequencies.
    pub separation: Option<f64>,
    pub amp_law: AmpLaw,
    pub orient_law: OrientLaw,
}

pub fn sample_model(r: usize, s: usize, seed: u64, opts: &ModelSampling) -> Result<PointSourceModel> {
    if r == 0 || s == 0 {
        return Err(Error::InvalidModel(format!(
            "r and s must be positive (r={r}, s={s})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let taus = sample_frequencies(r, opts.separation, &mut rng)?;
    let amps = (0..r)
        .map(|_| {
            let c: f64 = rng.random();
            let psi = rng.random::<f64>() * 2.0 * PI;
            let magnitude = match opts.amp_law {
                AmpLaw::Dynamic => 1.0 + 10f64.powf(c),
                AmpLaw::UnitModulus => 1.0,
            };
            c64::cis(-psi) * magnitude
        })
        .collect();
    let mut orients = Mat::<c64>::zeros(s, r);
    for k in 0..r {
        loop {
            for l in 0..s {
                let v = match opts.orient_law {
                    OrientLaw::Gaussian => rng.sample::<f64, _>(StandardNormal),
                    OrientLaw::Bernoulli => {
                        if rng.random::<bool>() {
                            1.0
                        } else {
                            -1.0
                        }
                    }
                };
                orients[(l, k)] = c64::new(v, 0.0);
            }
            let norm = orients.col(k).norm_l2();
            if norm > 0.0 {
                for l in 0..s {
                    orients[(l, k)] /= norm;
                }
                break;
            }
        }
    }
    PointSourceModel::new(taus, amps, orients)
}

fn sample_frequencies(r: usize, separation: Option<f64>, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    let delta = separation.unwrap_or(0.0);
    if !(delta >= 0.0) || r as f64 * delta > 1.0 + 1e-12 {
        return Err(Error::InfeasibleSeparation { r, delta });
    }
    if delta <= DISTINCT_TOL {
        let mut taus: Vec<f64> = Vec::with_capacity(r);
        while taus.len() < r {
            let t: f64 = rng.random();
            if taus.iter().all(|&u| wrap_distance(t, u) > DISTINCT_TOL) {
                taus.push(t);
            }
        }
        return Ok(taus);
    }
    // Shrink every gap by Δ: r points on a circle of length 1 − rΔ are
    // uniform, then spread back out and rotate by a uniform offset.
    let slack = (1.0 - r as f64 * delta).max(0.0);
    let offset: f64 = rng.random();
    let mut cuts: Vec<f64> = (1..r).map(|_| rng.random::<f64>() * slack).collect();
    cuts.sort_by(f64::total_cmp);
    let mut taus = Vec::with_capacity(r);
    taus.push(offset);
    for (i, cut) in cuts.into_iter().enumerate() {
        let mut t = offset + cut + (i + 1) as f64 * delta;
        if t >= 1.0 {
            t -= 1.0;
        }
        taus.push(t.clamp(0.0, 1.0 - f64::EPSILON));
    }
    Ok(taus)
}

/// Distribution of the subspace matrix `B`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubspaceDistribution {
    /// Real i.i.d. standard normal entries.
    #[default]
    Gaussian,
    /// Circularly-symmetric complex normal entries with unit variance.
    ComplexGaussian,
    /// ±1 with equal probability.
    Rademacher,
    /// Rows drawn with replacement from the unitary DFT matrix, rescaled to unit modulus.
    DftRows,
}

impl SubspaceDistribution {
    pub fn name(&self) -> &'static str {
        match self {
            SubspaceDistribution::Gaussian => "gaussian",
            SubspaceDistribution::ComplexGaussian => "complex-gaussian",
            SubspaceDistribution::Rademacher => "rademacher",
            SubspaceDistribution::DftRows => "dft-rows",
        }
    }
}

impl fmt::Display for SubspaceDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SubspaceDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(SubspaceDistribution::Gaussian),
            "complex-gaussian" => Ok(SubspaceDistribution::ComplexGaussian),
            "rademacher" => Ok(SubspaceDistribution::Rademacher),
            "dft-rows" => Ok(SubspaceDistribution::DftRows),
            other => Err(Error::InvalidConfig(format!(
                "unsupported subspace distribution `{other}`"
            ))),
        }
    }
}

/// The `n × s` subspace matrix `B`; `g_k = B h_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceMatrix {
    entries: Mat<c64>,
    distribution: SubspaceDistribution,
    seed: u64,
}

impl SubspaceMatrix {
    pub fn new(entries: Mat<c64>, distribution: SubspaceDistribution, seed: u64) -> Self {
        SubspaceMatrix {
            entries,
            distribution,
            seed,
        }
    }

    pub fn entries(&self) -> &Mat<c64> {
        &self.entries
    }

    pub fn distribution(&self) -> SubspaceDistribution {
        self.distribution
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of measurements `n`.
    pub fn samples(&self) -> usize {
        self.entries.nrows()
    }

    /// Subspace dimension `s`.
    pub fn dim(&self) -> usize {
        self.entries.ncols()
    }

    /// `b_j`, the `j`-th column of `B*`.
    pub fn b(&self, j: usize) -> Vec<c64> {
        (0..self.dim()).map(|l| self.entries[(j, l)].conj()).collect()
    }

    /// `‖b_j‖²`
    pub fn row_norm_sqr(&self, j: usize) -> f64 {
        (0..self.dim()).map(|l| self.entries[(j, l)].norm_sqr()).sum()
    }

    /// `B h`, the PSF samples for orientation `h`.
    pub fn psf(&self, h: &[c64]) -> Vec<c64> {
        (0..self.samples())
            .map(|j| (0..self.dim()).map(|l| self.entries[(j, l)] * h[l]).sum())
            .collect()
    }
}

pub fn sample_subspace(dist: SubspaceDistribution, n: usize, s: usize, seed: u64) -> Result<SubspaceMatrix> {
    if s == 0 || n < s {
        return Err(Error::InvalidConfig(format!(
            "subspace needs n ≥ s ≥ 1 (n={n}, s={s})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = match dist {
        SubspaceDistribution::Gaussian => {
            Mat::from_fn(n, s, |_, _| c64::new(rng.sample(StandardNormal), 0.0))
        }
        SubspaceDistribution::ComplexGaussian => Mat::from_fn(n, s, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            c64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
        }),
        SubspaceDistribution::Rademacher => Mat::from_fn(n, s, |_, _| {
            c64::new(if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0)
        }),
        SubspaceDistribution::DftRows => {
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            Mat::from_fn(n, s, |j, l| {
                let turns = ((rows[j] * l) % n) as f64 / n as f64;
                c64::cis(-2.0 * PI * turns)
            })
        }
    };
    Ok(SubspaceMatrix::new(entries, dist, seed))
}

/// `X♮ = Σ_k d_k h_k a_{τ_k}ᵀ` with `n` columns.
pub fn synthesize_data_matrix(model: &PointSourceModel, n: usize) -> DataMatrix {
    let atoms: Vec<Vec<c64>> = model.taus.iter().map(|&t| steering(t, n)).collect();
    DataMatrix::from_fn(model.dim(), n, |l, j| {
        (0..model.order())
            .map(|k| model.amps[k] * model.orients[(l, k)] * atoms[k][j])
            .sum()
    })
}

fn check_measurement_dims(b: &SubspaceMatrix, s: usize, n: usize) -> Result<()> {
    if b.dim() != s || b.samples() != n {
        return Err(Error::shape(
            format!("B of size {n}×{s}"),
            format!("{}×{}", b.samples(), b.dim()),
        ));
    }
    Ok(())
}

/// `y[j] = ⟨b_j e_jᵀ, X⟩ = b_j* x_j`.
pub fn apply_a(x: &DataMatrix, b: &SubspaceMatrix) -> Result<Vec<c64>> {
    check_measurement_dims(b, x.snapshots(), x.samples())?;
    let e = b.entries();
    Ok((0..x.samples())
        .map(|j| (0..x.snapshots()).map(|l| e[(j, l)] * x.get(l, j)).sum())
        .collect())
}

/// `A*(y) = Σ_j y[j] b_j e_jᵀ`.
pub fn apply_a_adjoint(y: &[c64], b: &SubspaceMatrix) -> Result<DataMatrix> {
    if y.len() != b.samples() {
        return Err(Error::shape(
            format!("{} measurements", b.samples()),
            format!("{}", y.len()),
        ));
    }
    let e = b.entries();
    Ok(DataMatrix::from_fn(b.dim(), b.samples(), |l, j| {
        y[j] * e[(j, l)].conj()
    }))
}

/// Vandermonde factors with `H(X♮) = E_hL · diag(d) · E_Rᵀ`.
#[derive(Clone, Debug)]
pub struct VandermondeFactors {
    /// `n1 × r`, columns `a_{τ_k}` of length `n1`.
    pub e_l: Mat<c64>,
    /// `n2 × r`, columns `a_{τ_k}` of length `n2`.
    pub e_r: Mat<c64>,
    /// `s·n1 × r`, the Khatri–Rao product `E_L ⊙ H`.
    pub e_hl: Mat<c64>,
}

impl VandermondeFactors {
    /// `E_hL · diag(d) · E_Rᵀ`
    pub fn reconstruct(&self, amps: &[c64]) -> Mat<c64> {
        let scaled = Mat::from_fn(self.e_hl.nrows(), amps.len(), |i, k| {
            self.e_hl[(i, k)] * amps[k]
        });
        &scaled * self.e_r.transpose()
    }
}

fn vandermonde(taus: &[f64], len: usize) -> Mat<c64> {
    let cols: Vec<Vec<c64>> = taus.iter().map(|&t| steering(t, len)).collect();
    Mat::from_fn(len, taus.len(), |j, k| cols[k][j])
}

pub fn build_vandermonde_factors(model: &PointSourceModel, shape: &LiftShape) -> VandermondeFactors {
    let s = model.dim();
    let e_l = vandermonde(&model.taus, shape.n1());
    let e_r = vandermonde(&model.taus, shape.n2());
    let e_hl = Mat::from_fn(s * shape.n1(), model.order(), |row, k| {
        e_l[(row / s, k)] * model.orients[(row % s, k)]
    });
    VandermondeFactors { e_l, e_r, e_hl }
}

/// How additive noise is drawn.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Circularly symmetric: real and imaginary parts each with variance σ²/2.
    #[default]
    Complex,
    /// Real entries with variance σ².
    Real,
}

/// `σ = ‖X‖_F / (√(s·n) · 10^{SNR/20})`; zero for infinite SNR.
pub fn noise_sigma(x: &DataMatrix, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        return 0.0;
    }
    let count = (x.snapshots() * x.samples()) as f64;
    x.frobenius_norm() / (count.sqrt() * 10f64.powf(snr_db / 20.0))
}

/// `X + E` at the requested SNR in dB (`f64::INFINITY` means noiseless).
pub fn add_noise(x: &DataMatrix, snr_db: f64, seed: u64, kind: NoiseKind) -> Result<DataMatrix> {
    if snr_db.is_nan() || snr_db == f64::NEG_INFINITY {
        return Err(Error::InvalidConfig(format!("SNR {snr_db} dB")));
    }
    let sigma = noise_sigma(x, snr_db);
    if sigma == 0.0 {
        return Ok(x.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(DataMatrix::from_fn(x.snapshots(), x.samples(), |l, j| {
        let e = match kind {
            NoiseKind::Complex => {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                c64::new(re, im) * (sigma * std::f64::consts::FRAC_1_SQRT_2)
            }
            NoiseKind::Real => c64::new(sigma * rng.sample::<f64, _>(StandardNormal), 0.0),
        };
        x.get(l, j) + e
    }))
}

/// Smallest eigenvalues of the Vandermonde Gram matrices and the implied `μ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IncoherenceReport {
    pub sigma_min_left: f64,
    pub sigma_min_right: f64,
    /// `max(n1 / σ_min(E_L*E_L), n2 / σ_min(E_R*E_R))`, infinite when rank-deficient.
    pub mu1: f64,
}

pub fn incoherence_diagnostic(model: &PointSourceModel, shape: &LiftShape) -> Result<IncoherenceReport> {
    let factors = build_vandermonde_factors(model, shape);
    let left = gram_min_eigenvalue(&factors.e_l)?;
    let right = gram_min_eigenvalue(&factors.e_r)?;
    let ratio = |len: usize, lambda: f64| {
        if lambda <= 1e-12 * len as f64 {
            f64::INFINITY
        } else {
            len as f64 / lambda
        }
    };
    Ok(IncoherenceReport {
        sigma_min_left: left,
        sigma_min_right: right,
        mu1: ratio(shape.n1(), left).max(ratio(shape.n2(), right)),
    })
}

/// `σ_min(EᴴE)`, i.e. the squared smallest singular value of a tall `E`.
pub(crate) fn gram_min_eigenvalue(e: &Mat<c64>) -> Result<f64> {
    if e.ncols() > e.nrows() {
        return Ok(0.0);
    }
    let sv = dense::singular_values(e.as_ref())?;
    Ok(sv.last().map_or(0.0, |s| s * s))
}

/// Serialized form of a model together with its subspace matrix.
///
/// Complex numbers are `[re, im]` pairs; matrices are column-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub taus: Vec<f64>,
    pub amps: Vec<[f64; 2]>,
    pub orients: Vec<[f64; 2]>,
    #[serde(rename = "B")]
    pub b: Vec<[f64; 2]>,
    pub distribution: SubspaceDistribution,
    pub seed: u64,
}

pub(crate) fn pack(m: &Mat<c64>) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

pub(crate) fn unpack(values: &[[f64; 2]], rows: usize, cols: usize, what: &str) -> Result<Mat<c64>> {
    if values.len() != rows * cols {
        return Err(Error::Parse(format!(
            "{what}: expected {} entries, found {}",
            rows * cols,
            values.len()
        )));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| {
        let [re, im] = values[j * rows + i];
        c64::new(re, im)
    }))
}

impl ModelDocument {
    pub fn new(model: &PointSourceModel, subspace: &SubspaceMatrix) -> Result<Self> {
        if model.dim() != subspace.dim() {
            return Err(Error::shape(
                format!("s={}", model.dim()),
                format!("B with s={}", subspace.dim()),
            ));
        }
        Ok(ModelDocument {
            n: subspace.samples(),
            s: model.dim(),
            r: model.order(),
            taus: model.taus.clone(),
            amps: model.amps.iter().map(|d| [d.re, d.im]).collect(),
            orients: pack(&model.orients),
            b: pack(subspace.entries()),
            distribution: subspace.distribution,
            seed: subspace.seed,
        })
    }

    pub fn model(&self) -> Result<PointSourceModel> {
        if self.taus.len() != self.r || self.amps.len() != self.r {
            return Err(Error::Parse(format!(
                "r={} but {} taus and {} amps",
                self.r,
                self.taus.len(),
                self.amps.len()
            )));
        }
        let orients = unpack(&self.orients, self.s, self.r, "orients")?;
        let amps = self.amps.iter().map(|&[re, im]| c64::new(re, im)).collect();
        PointSourceModel::new(self.taus.clone(), amps, orients)
    }

    pub fn subspace(&self) -> Result<SubspaceMatrix> {
        let entries = unpack(&self.b, self.n, self.s, "B")?;
        Ok(SubspaceMatrix::new(entries, self.distribution, self.seed))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("model JSON: {e}")))
    }
}

/// `H(X♮)` for a model, a shorthand used by diagnostics and tests.
pub fn lifted_truth(model: &PointSourceModel, shape: &LiftShape) -> Result<crate::lift::LiftedMatrix> {
    vec_hankel(&synthesize_data_matrix(model, shape.n()), shape)
}
