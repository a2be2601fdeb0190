//! Metrics and Monte Carlo experiment harnesses.
//!
//! Every trial draws its randomness from a seed derived from
//! `(base_seed, cell, trial)` alone, and results are stored by trial index,
//! so a grid comes out bit-identical whatever the worker count.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DataMatrix;
use faer::c64;
use crate::error::{Error, Result};
use crate::estimate::{self, Estimator, DEFAULT_GRID_POINTS};
use crate::lift::LiftShape;
use crate::model::{
    add_noise, apply_a, sample_model, sample_subspace, synthesize_data_matrix, wrap_distance,
    ModelSampling, NoiseKind, OrientLaw, PointSourceModel, SubspaceDistribution, SubspaceMatrix,
};
use crate::solver::{solve_vhl, SolverConfig};

/// Success cutoff on the relative Frobenius error.
pub const DEFAULT_THRESHOLD: f64 = 1e-3;

/// `‖X_hat − X_ref‖_F / ‖X_ref‖_F`, with `0/0 = 0` and `x/0 = +∞`.
pub fn relative_error(x_hat: &DataMatrix, x_ref: &DataMatrix) -> Result<f64> {
    if x_hat.snapshots() != x_ref.snapshots() || x_hat.samples() != x_ref.samples() {
        return Err(Error::shape(x_ref.dims(), x_hat.dims()));
    }
    let diff = x_hat.subtracted(x_ref).frobenius_norm();
    let denom = x_ref.frobenius_norm();
    Ok(if denom > 0.0 {
        diff / denom
    } else if diff == 0.0 {
        0.0
    } else {
        f64::INFINITY
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HausdorffMetric {
    /// `|τ − τ̂|` on the line.
    #[default]
    Plain,
    /// `min(|τ − τ̂|, 1 − |τ − τ̂|)` on the circle.
    Wraparound,
}

impl FromStr for HausdorffMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(HausdorffMetric::Plain),
            "wraparound" => Ok(HausdorffMetric::Wraparound),
            other => Err(Error::InvalidConfig(format!("unknown metric `{other}`"))),
        }
    }
}

/// Hausdorff distance between two frequency sets.
pub fn hausdorff(taus: &[f64], taus_hat: &[f64], metric: HausdorffMetric) -> Result<f64> {
    if taus.is_empty() || taus_hat.is_empty() {
        return Err(Error::EmptySet);
    }
    let dist = |a: f64, b: f64| match metric {
        HausdorffMetric::Plain => (a - b).abs(),
        HausdorffMetric::Wraparound => wrap_distance(a, b),
    };
    let directed = |from: &[f64], to: &[f64]| {
        from.iter()
            .map(|&a| to.iter().map(|&b| dist(a, b)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(taus, taus_hat).max(directed(taus_hat, taus)))
}

/// Stable per-trial seed (SplitMix64 finalizer over the three indices).
pub fn trial_seed(base_seed: u64, cell: usize, trial: usize) -> u64 {
    let mut h = mix(base_seed ^ 0x6a09_e667_f3bc_c908);
    h = mix(h ^ cell as u64);
    mix(h ^ (trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent sub-streams of one trial seed.
fn stream(seed: u64, lane: u64) -> u64 {
    mix(seed ^ lane.wrapping_mul(0xd6e8_feb8_6659_fd93))
}

const MODEL_LANE: u64 = 1;
const SUBSPACE_LANE: u64 = 2;
const NOISE_LANE: u64 = 3;

/// A problem parameter swept along a grid axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    N,
    R,
    S,
}

impl Param {
    pub fn name(&self) -> &'static str {
        match self {
            Param::N => "n",
            Param::R => "r",
            Param::S => "s",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(Param::N),
            "r" => Ok(Param::R),
            "s" => Ok(Param::S),
            other => Err(Error::InvalidConfig(format!("unknown grid parameter `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<usize>,
}

/// Problem size of one grid cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub n: usize,
    pub r: usize,
    pub s: usize,
}

impl Dims {
    fn with(mut self, param: Param, value: usize) -> Dims {
        match param {
            Param::N => self.n = value,
            Param::R => self.r = value,
            Param::S => self.s = value,
        }
        self
    }

    pub fn get(&self, param: Param) -> usize {
        match param {
            Param::N => self.n,
            Param::R => self.r,
            Param::S => self.s,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseTransitionConfig {
    pub rows: Axis,
    pub cols: Axis,
    /// Values for the parameter that is on neither axis.
    pub fixed: Dims,
    pub trials: usize,
    pub threshold: f64,
    pub base_seed: u64,
    pub distribution: SubspaceDistribution,
    pub sampling: ModelSampling,
    pub solver: SolverConfig,
    /// Worker cap; 0 lets rayon decide.
    pub threads: usize,
}

impl PhaseTransitionConfig {
    /// An `(r, s)` grid at fixed `n`, with the default protocol (20 trials,
    /// threshold 1e-3, Gaussian `B`, unseparated frequencies).
    pub fn rank_vs_subspace(n: usize, rs: Vec<usize>, ss: Vec<usize>) -> Self {
        PhaseTransitionConfig {
            rows: Axis {
                param: Param::R,
                values: rs,
            },
            cols: Axis {
                param: Param::S,
                values: ss,
            },
            fixed: Dims { n, r: 1, s: 1 },
            trials: 20,
            threshold: DEFAULT_THRESHOLD,
            base_seed: 0,
            distribution: SubspaceDistribution::Gaussian,
            sampling: ModelSampling::default(),
            solver: SolverConfig::default(),
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.param == self.cols.param {
            return Err(Error::InvalidConfig("grid axes must differ".into()));
        }
        if self.rows.values.is_empty() || self.cols.values.is_empty() {
            return Err(Error::InvalidConfig("grid axes must be nonempty".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(Error::InvalidConfig(format!("threshold {}", self.threshold)));
        }
        for cell in 0..self.cells() {
            let d = self.cell_dims(cell);
            if d.n == 0 || d.r == 0 || d.s == 0 {
                return Err(Error::InvalidConfig(format!(
                    "cell (n={}, r={}, s={}) has a zero dimension",
                    d.n, d.r, d.s
                )));
            }
        }
        self.solver.validate()
    }

    pub fn cells(&self) -> usize {
        self.rows.values.len() * self.cols.values.len()
    }

    /// Cells are numbered row-major.
    pub fn cell_dims(&self, cell: usize) -> Dims {
        let width = self.cols.values.len();
        self.fixed
            .with(self.rows.param, self.rows.values[cell / width])
            .with(self.cols.param, self.cols.values[cell % width])
    }
}

/// Per-cell Monte Carlo outcomes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialGrid {
    pub config: PhaseTransitionConfig,
    /// Relative errors, `errors[cell][trial]`; `+∞` marks a trial that failed to run.
    pub errors: Vec<Vec<f64>>,
    /// Successes per cell at `config.threshold`.
    pub counts: Vec<usize>,
}

impl TrialGrid {
    pub fn count(&self, row: usize, col: usize) -> usize {
        self.counts[row * self.config.cols.values.len() + col]
    }

    /// Success counts under a different cutoff.
    pub fn counts_at(&self, threshold: f64) -> Vec<usize> {
        self.errors
            .iter()
            .map(|errs| errs.iter().filter(|&&e| e < threshold).count())
            .collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.config.rows.values.len(), self.config.cols.values.len())
    }
}

/// Everything needed to draw one synthetic problem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub dims: Dims,
    pub distribution: SubspaceDistribution,
    pub sampling: ModelSampling,
    /// `f64::INFINITY` for noiseless data.
    pub snr_db: f64,
    pub noise: NoiseKind,
}

impl ProblemSpec {
    pub fn noiseless(dims: Dims) -> Self {
        ProblemSpec {
            dims,
            distribution: SubspaceDistribution::Gaussian,
            sampling: ModelSampling::default(),
            snr_db: f64::INFINITY,
            noise: NoiseKind::Complex,
        }
    }
}

/// A drawn problem: ground truth, subspace, data and measurements.
#[derive(Clone, Debug)]
pub struct Instance {
    pub model: PointSourceModel,
    pub subspace: SubspaceMatrix,
    /// Noiseless `X♮`.
    pub x_clean: DataMatrix,
    /// `X♮` plus noise at the requested SNR (equal to `x_clean` when noiseless).
    pub x: DataMatrix,
    /// `A(x)`.
    pub y: Vec<c64>,
}

/// Draws a problem; model, subspace and noise use independent streams of `seed`.
pub fn synthesize_instance(spec: &ProblemSpec, seed: u64) -> Result<Instance> {
    let Dims { n, r, s } = spec.dims;
    let model = sample_model(r, s, stream(seed, MODEL_LANE), &spec.sampling)?;
    let subspace = sample_subspace(spec.distribution, n, s, stream(seed, SUBSPACE_LANE))?;
    let x_clean = synthesize_data_matrix(&model, n);
    let x = add_noise(&x_clean, spec.snr_db, stream(seed, NOISE_LANE), spec.noise)?;
    let y = apply_a(&x, &subspace)?;
    Ok(Instance {
        model,
        subspace,
        x_clean,
        x,
        y,
    })
}

/// Relative error of one noiseless phase-transition trial.
pub fn phase_transition_trial(
    dims: Dims,
    seed: u64,
    distribution: SubspaceDistribution,
    sampling: &ModelSampling,
    solver: &SolverConfig,
) -> Result<f64> {
    let spec = ProblemSpec {
        distribution,
        sampling: *sampling,
        ..ProblemSpec::noiseless(dims)
    };
    let inst = synthesize_instance(&spec, seed)?;
    let shape = LiftShape::new(dims.n, dims.s)?;
    let report = solve_vhl(&inst.y, &inst.subspace, &shape, solver)?;
    relative_error(&report.x_hat, &inst.x_clean)
}

fn run_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

pub fn run_phase_transition(config: &PhaseTransitionConfig) -> Result<TrialGrid> {
    run_phase_transition_with_progress(config, |_, _| {})
}

/// As [`run_phase_transition`], calling `progress(done, total)` after each trial.
pub fn run_phase_transition_with_progress(
    config: &PhaseTransitionConfig,
    progress: impl Fn(usize, usize) + Sync,
) -> Result<TrialGrid> {
    config.validate()?;
    let total = config.cells() * config.trials;
    let done = AtomicUsize::new(0);
    let flat: Vec<f64> = run_pool(config.threads, || {
        (0..total)
            .into_par_iter()
            .map(|task| {
                let (cell, trial) = (task / config.trials, task % config.trials);
                let seed = trial_seed(config.base_seed, cell, trial);
                let err = phase_transition_trial(
                    config.cell_dims(cell),
                    seed,
                    config.distribution,
                    &config.sampling,
                    &config.solver,
                )
                .unwrap_or(f64::INFINITY);
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                err
            })
            .collect()
    })?;
    let errors: Vec<Vec<f64>> = flat.chunks(config.trials).map(<[f64]>::to_vec).collect();
    let counts = errors
        .iter()
        .map(|errs| errs.iter().filter(|&&e| e < config.threshold).count())
        .collect();
    Ok(TrialGrid {
        config: config.clone(),
        errors,
        counts,
    })
}

/// One estimator applied to the first `rows` rows of the noisy data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorSpec {
    pub estimator: Estimator,
    pub rows: usize,
}

impl EstimatorSpec {
    pub fn label(&self) -> String {
        format!("{}-{}", self.estimator, self.rows)
    }
}

impl FromStr for EstimatorSpec {
    type Err = Error;

    /// `vhm:6`, `mmv:4`, `single` (row 0).
    fn from_str(s: &str) -> Result<Self> {
        let (name, rows) = match s.split_once(':') {
            Some((name, rows)) => (
                name,
                rows.parse::<usize>()
                    .map_err(|_| Error::InvalidConfig(format!("bad row count in `{s}`")))?,
            ),
            None => (s, 1),
        };
        Ok(EstimatorSpec {
            estimator: name.parse()?,
            rows,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSweepConfig {
    pub n: usize,
    pub s: usize,
    pub r: usize,
    /// SNR values in dB; `f64::INFINITY` is noiseless.
    pub snrs: Vec<f64>,
    pub estimators: Vec<EstimatorSpec>,
    pub orient_law: OrientLaw,
    /// Minimum wraparound separation; `None` means `1/n`.
    pub separation: Option<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub grid_points: usize,
    pub metric: HausdorffMetric,
    pub noise: NoiseKind,
    pub threads: usize,
}

impl SnrSweepConfig {
    /// The snapshot-count comparison: `s = 6`, rows 1, 2, 4, 6 through VHM.
    pub fn snapshot_study(n: usize, r: usize, snrs: Vec<f64>) -> Self {
        SnrSweepConfig {
            n,
            s: 6,
            r,
            snrs,
            estimators: [1, 2, 4, 6]
                .into_iter()
                .map(|rows| EstimatorSpec {
                    estimator: Estimator::Vhm,
                    rows,
                })
                .collect(),
            orient_law: OrientLaw::Gaussian,
            separation: None,
            trials: 100,
            base_seed: 0,
            grid_points: DEFAULT_GRID_POINTS,
            metric: HausdorffMetric::Plain,
            noise: NoiseKind::Complex,
            threads: 0,
        }
    }

    pub fn separation(&self) -> f64 {
        self.separation.unwrap_or(1.0 / self.n as f64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.s == 0 || self.r == 0 {
            return Err(Error::InvalidConfig("n, s and r must be positive".into()));
        }
        if self.trials == 0 || self.grid_points == 0 {
            return Err(Error::InvalidConfig("trials and grid points must be positive".into()));
        }
        if self.snrs.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidConfig("SNR values must be finite or +inf".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("no estimators given".into()));
        }
        if self.r as f64 * self.separation() > 1.0 + 1e-12 {
            return Err(Error::InfeasibleSeparation {
                r: self.r,
                delta: self.separation(),
            });
        }
        let shape = LiftShape::new(self.n, self.s)?;
        for spec in &self.estimators {
            if spec.rows == 0 || spec.rows > self.s {
                return Err(Error::InvalidConfig(format!(
                    "{} uses {} rows but s = {}",
                    spec.label(),
                    spec.rows,
                    self.s
                )));
            }
            match spec.estimator {
                Estimator::Mmv if self.r > spec.rows => {
                    return Err(Error::ModelOrder {
                        r: self.r,
                        reason: format!("{} has fewer snapshots than sources", spec.label()),
                    })
                }
                Estimator::Vhm | Estimator::Single if self.r >= shape.n2() => {
                    return Err(Error::ModelOrder {
                        r: self.r,
                        reason: format!("needs r < n2 = {}", shape.n2()),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSeries {
    pub spec: EstimatorSpec,
    /// Mean Hausdorff error per SNR value.
    pub mean_errors: Vec<f64>,
    /// Trials per SNR in which the estimator could not run.
    pub failures: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub snr_values: Vec<f64>,
    pub series: Vec<SweepSeries>,
    pub trials: usize,
}

impl SweepResult {
    pub fn series_for(&self, spec: &EstimatorSpec) -> Option<&SweepSeries> {
        self.series.iter().find(|s| s.spec == *spec)
    }
}

/// Recorded when an estimator fails: the largest possible wraparound gap.
const FAILED_TRIAL_ERROR: f64 = 0.5;

/// Errors of every estimator for one noisy trial.
fn sweep_trial(config: &SnrSweepConfig, snr: f64, seed: u64, grid: &[f64]) -> Result<Vec<Option<f64>>> {
    let sampling = ModelSampling {
        separation: Some(config.separation()),
        orient_law: config.orient_law,
        ..Default::default()
    };
    let model = sample_model(config.r, config.s, stream(seed, MODEL_LANE), &sampling)?;
    let clean = synthesize_data_matrix(&model, config.n);
    let noisy = add_noise(&clean, snr, stream(seed, NOISE_LANE), config.noise)?;
    Ok(config
        .estimators
        .iter()
        .map(|spec| {
            let x = noisy.leading_rows(spec.rows).ok()?;
            let found = estimate::music(&x, config.r, spec.estimator, 0, grid).ok()?;
            hausdorff(model.taus(), &found.peaks.taus, config.metric).ok()
        })
        .collect())
}

pub fn run_snr_sweep(config: &SnrSweepConfig) -> Result<SweepResult> {
    run_snr_sweep_with_progress(config, |_, _| {})
}

pub fn run_snr_sweep_with_progress(
    config: &SnrSweepConfig,
    progress: impl Fn(usize, usize) + Sync,
) -> Result<SweepResult> {
    config.validate()?;
    let grid = estimate::frequency_grid(config.grid_points);
    let total = config.snrs.len() * config.trials;
    let done = AtomicUsize::new(0);
    let flat: Vec<Vec<Option<f64>>> = run_pool(config.threads, || {
        (0..total)
            .into_par_iter()
            .map(|task| {
                let (cell, trial) = (task / config.trials, task % config.trials);
                let seed = trial_seed(config.base_seed, cell, trial);
                let errs = sweep_trial(config, config.snrs[cell], seed, &grid)
                    .unwrap_or_else(|_| vec![None; config.estimators.len()]);
                progress(done.fetch_add(1, Ordering::Relaxed) + 1, total);
                errs
            })
            .collect()
    })?;

    let series = config
        .estimators
        .iter()
        .enumerate()
        .map(|(e, spec)| {
            let mut mean_errors = Vec::with_capacity(config.snrs.len());
            let mut failures = Vec::with_capacity(config.snrs.len());
            for cell in flat.chunks(config.trials) {
                let mut sum = 0.0;
                let mut failed = 0;
                for errs in cell {
                    match errs[e] {
                        Some(err) => sum += err,
                        None => {
                            sum += FAILED_TRIAL_ERROR;
                            failed += 1;
                        }
                    }
                }
                mean_errors.push(sum / config.trials as f64);
                failures.push(failed);
            }
            SweepSeries {
                spec: *spec,
                mean_errors,
                failures,
            }
        })
        .collect();
    Ok(SweepResult {
        snr_values: config.snrs.clone(),
        series,
        trials: config.trials,
    })
}
