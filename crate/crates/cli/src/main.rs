//! `vhlift` command-line front end.
//!
//! Each subcommand resolves its parameters (flag > `--config` JSON > default),
//! calls into the library, and writes the results. Exit codes: 0 success,
//! 2 usage or validation error, 3 solver did not converge, 4 I/O failure.

mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vhlift::bench::{
    self, relative_error, Dims, HausdorffMetric, PhaseTransitionConfig, ProblemSpec, SnrSweepConfig,
    DEFAULT_THRESHOLD,
};
use vhlift::estimate::{self, Estimator, DEFAULT_GRID_POINTS};
use vhlift::lift::LiftShape;
use vhlift::model::{
    incoherence_diagnostic, min_separation, ModelDocument, ModelSampling, NoiseKind, OrientLaw,
    SubspaceDistribution,
};
use vhlift::report::{self, read_file, write_file, SolveDocument, SourcesDocument};
use vhlift::solver::{solve_vhl, SolverConfig};
use vhlift::{Error, Result};

use config::{parse_axis, parse_estimators, parse_snr, parse_snrs, pick, RunConfig};

#[derive(Parser)]
#[command(name = "vhlift", version, about = "Blind super-resolution via vectorized Hankel lifting")]
struct Cli {
    /// JSON file of defaults; keys are flag names with `_` for `-`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Maximum worker threads for the experiment harnesses (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random instance and write model.json, X.csv and y.csv.
    Synth(SynthArgs),
    /// Recover X from y and B; writes report.json and Xhat.csv.
    Solve(SolveArgs),
    /// Estimate frequencies from X; writes pseudospectrum.csv and sources.json.
    Music(MusicArgs),
    /// Success counts over a two-parameter grid; writes grid.csv and grid.svg.
    PhaseTransition(PhaseTransitionArgs),
    /// Frequency error versus SNR per estimator; writes sweep.csv and sweep.svg.
    SnrSweep(SnrSweepArgs),
}

#[derive(Args)]
struct ProblemFlags {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    s: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// gaussian, complex-gaussian, rademacher or dft-rows
    #[arg(long)]
    distribution: Option<SubspaceDistribution>,
    /// gaussian or bernoulli
    #[arg(long)]
    orient_law: Option<OrientLaw>,
    /// Minimum wraparound separation between frequencies.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    problem: ProblemFlags,
    /// Noise level in dB applied to X before measuring (`inf` = noiseless).
    #[arg(long, value_parser = parse_snr)]
    snr: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// model.json holding B.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    /// Reference X.csv; adds the relative error to the report.
    #[arg(long)]
    x: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MusicArgs {
    /// X.csv or Xhat.csv.
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    r: Option<usize>,
    /// Use only the first S rows of X.
    #[arg(long)]
    s: Option<usize>,
    /// vhm, single or mmv
    #[arg(long)]
    estimator: Option<Estimator>,
    /// Snapshot row for the single estimator.
    #[arg(long)]
    row: Option<usize>,
    /// Grid points on [0, 1).
    #[arg(long)]
    grid: Option<usize>,
    /// Ground-truth model.json, used for the error printout and the figure.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Polish each grid peak off the grid before the least-squares fit.
    #[arg(long)]
    refine: bool,
    /// Also write pseudospectrum.svg.
    #[arg(long)]
    svg: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhaseTransitionArgs {
    #[command(flatten)]
    problem: ProblemFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Row axis, e.g. `r:1,2,4,8`.
    #[arg(long)]
    row_axis: Option<String>,
    /// Column axis, e.g. `s:1,2,4,8`.
    #[arg(long)]
    col_axis: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SnrSweepArgs {
    #[command(flatten)]
    problem: ProblemFlags,
    /// Comma-separated SNRs in dB; `inf` is noiseless.
    #[arg(long)]
    snrs: Option<String>,
    /// Comma-separated `estimator:rows`, e.g. `vhm:1,vhm:6,mmv:6`.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    /// plain or wraparound
    #[arg(long)]
    metric: Option<HausdorffMetric>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Outcome {
    Done,
    NotConverged,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::NotConverged) => ExitCode::from(3),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(match err {
                Error::Io { .. } => 4,
                _ => 2,
            })
        }
    }
}

fn run(cli: Cli) -> Result<Outcome> {
    let cfg = RunConfig::load(cli.config.as_deref())?;
    let threads = pick(cli.threads, cfg.threads, 0);
    match cli.command {
        Command::Synth(args) => synth(args, &cfg),
        Command::Solve(args) => solve(args, &cfg),
        Command::Music(args) => music(args, &cfg),
        Command::PhaseTransition(args) => phase_transition(args, &cfg, threads),
        Command::SnrSweep(args) => snr_sweep(args, &cfg, threads),
    }
}

fn output_dir(flag: Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = pick(flag, cfg.out.clone(), PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

fn required(flag: Option<PathBuf>, config: Option<&PathBuf>, name: &str) -> Result<PathBuf> {
    flag.or_else(|| config.cloned())
        .ok_or_else(|| Error::InvalidConfig(format!("--{name} is required")))
}

fn sampling(p: &ProblemFlags, cfg: &RunConfig) -> ModelSampling {
    ModelSampling {
        separation: p.delta.or(cfg.delta),
        orient_law: pick(p.orient_law, cfg.orient_law, OrientLaw::Gaussian),
        ..Default::default()
    }
}

fn solver_config(f: &SolverFlags, cfg: &RunConfig) -> Result<SolverConfig> {
    let base = SolverConfig::default();
    let config = SolverConfig {
        rho: pick(f.rho, cfg.rho, base.rho),
        tol_rel: pick(f.tol, cfg.tol, base.tol_rel),
        max_iters: pick(f.max_iters, cfg.max_iters, base.max_iters),
        ..base
    };
    config.validate()?;
    Ok(config)
}

fn progress(label: &'static str) -> impl Fn(usize, usize) + Sync {
    move |done, total| {
        let stride = (total / 20).max(1);
        if done % stride == 0 || done == total {
            eprintln!("{label}: {done}/{total} trials");
        }
    }
}

fn synth(args: SynthArgs, cfg: &RunConfig) -> Result<Outcome> {
    let p = &args.problem;
    let dims = Dims {
        n: pick(p.n, cfg.n, 64),
        s: pick(p.s, cfg.s, 3),
        r: pick(p.r, cfg.r, 4),
    };
    let seed = pick(p.seed, cfg.seed, 0);
    let spec = ProblemSpec {
        dims,
        distribution: pick(p.distribution, cfg.distribution, SubspaceDistribution::Gaussian),
        sampling: sampling(p, cfg),
        snr_db: pick(args.snr, cfg.snr, f64::INFINITY),
        noise: NoiseKind::Complex,
    };
    let shape = LiftShape::new(dims.n, dims.s)?;
    let inst = bench::synthesize_instance(&spec, seed)?;
    let incoherence = incoherence_diagnostic(&inst.model, &shape)?;

    let dir = output_dir(args.out, cfg)?;
    let doc = ModelDocument::new(&inst.model, &inst.subspace)?;
    write_file(&dir.join("model.json"), &doc.to_json())?;
    write_file(&dir.join("X.csv"), &report::data_matrix_csv(&inst.x))?;
    write_file(&dir.join("y.csv"), &report::measurements_csv(&inst.y))?;
    println!(
        "n={} s={} r={} mu1={:.4} min_sep={:.5}",
        dims.n,
        dims.s,
        dims.r,
        incoherence.mu1,
        min_separation(inst.model.taus())
    );
    Ok(Outcome::Done)
}

fn solve(args: SolveArgs, cfg: &RunConfig) -> Result<Outcome> {
    let model_path = required(args.model, cfg.model.as_ref(), "model")?;
    let y_path = required(args.y, cfg.y.as_ref(), "y")?;
    let config = solver_config(&args.solver, cfg)?;
    let subspace = ModelDocument::from_json(&read_file(&model_path)?)?.subspace()?;
    let y = report::parse_measurements_csv(&read_file(&y_path)?)?;
    let shape = LiftShape::new(subspace.samples(), subspace.dim())?;
    let result = solve_vhl(&y, &subspace, &shape, &config)?;

    let mut doc = SolveDocument::new(&result);
    if let Some(x_path) = args.x.or_else(|| cfg.x.clone()) {
        let x_ref = report::parse_data_matrix_csv(&read_file(&x_path)?)?;
        doc.relative_error = Some(relative_error(&result.x_hat, &x_ref)?);
    }
    let dir = output_dir(args.out, cfg)?;
    write_file(&dir.join("report.json"), &report::to_json(&doc))?;
    write_file(&dir.join("Xhat.csv"), &report::data_matrix_csv(&result.x_hat))?;

    let mut line = format!(
        "iters={} converged={} nuclear_norm={:.6}",
        result.iters, result.converged, result.nuclear_norm
    );
    if let Some(err) = doc.relative_error {
        line += &format!(" relative_error={err:.3e}");
    }
    println!("{line}");
    if result.converged {
        Ok(Outcome::Done)
    } else {
        eprintln!("solver stopped at max_iters without meeting the tolerance");
        Ok(Outcome::NotConverged)
    }
}

fn music(args: MusicArgs, cfg: &RunConfig) -> Result<Outcome> {
    let x_path = required(args.x, cfg.x.as_ref(), "x")?;
    let r = args
        .r
        .or(cfg.r)
        .ok_or_else(|| Error::InvalidConfig("--r is required".into()))?;
    let estimator = pick(args.estimator, cfg.estimator, Estimator::Vhm);
    let row = pick(args.row, cfg.row, 0);
    let points = pick(args.grid, cfg.grid, DEFAULT_GRID_POINTS);
    if points == 0 {
        return Err(Error::InvalidConfig("--grid must be positive".into()));
    }
    let mut x = report::parse_data_matrix_csv(&read_file(&x_path)?)?;
    if let Some(rows) = args.s.or(cfg.s) {
        x = x.leading_rows(rows)?;
    }
    let truth = match args.model.or_else(|| cfg.model.clone()) {
        Some(path) => Some(ModelDocument::from_json(&read_file(&path)?)?.model()?),
        None => None,
    };

    let grid = estimate::frequency_grid(points);
    let found = estimate::music(&x, r, estimator, row, &grid)?;
    let taus = if args.refine || cfg.refine == Some(true) {
        estimate::refine_peaks(&found.noise, &found.peaks.taus, 1.0 / points as f64)
    } else {
        found.peaks.taus.clone()
    };
    let sources = estimate::recover_amplitudes(&x, &taus)?;

    let dir = output_dir(args.out, cfg)?;
    write_file(&dir.join("pseudospectrum.csv"), &report::pseudospectrum_csv(&found.curve))?;
    write_file(&dir.join("sources.json"), &report::to_json(&SourcesDocument::new(&sources)))?;
    if args.svg || cfg.svg == Some(true) {
        let svg = report::pseudospectrum_svg(&found.curve, &found.peaks, truth.as_ref().map(|m| m.taus()));
        write_file(&dir.join("pseudospectrum.svg"), &svg)?;
    }

    if found.peaks.padded {
        eprintln!("warning: fewer than {r} local maxima; padded with the largest grid values");
    }
    if sources.ill_conditioned {
        eprintln!("warning: steering matrix is ill-conditioned (cond = {:.3e})", sources.condition_number);
    }
    let mut taus = taus;
    taus.sort_by(f64::total_cmp);
    let listed: Vec<String> = taus.iter().map(|t| format!("{t:.6}")).collect();
    let mut line = format!("taus=[{}]", listed.join(", "));
    if let Some(model) = &truth {
        let err = bench::hausdorff(model.taus(), &taus, HausdorffMetric::Plain)?;
        line += &format!(" hausdorff={err:.3e}");
    }
    println!("{line}");
    Ok(Outcome::Done)
}

fn phase_transition(args: PhaseTransitionArgs, cfg: &RunConfig, threads: usize) -> Result<Outcome> {
    let p = &args.problem;
    let row_axis = pick(args.row_axis, cfg.row_axis.clone(), "r:1,2,4,8".into());
    let col_axis = pick(args.col_axis, cfg.col_axis.clone(), "s:1,2,4,8".into());
    let config = PhaseTransitionConfig {
        rows: parse_axis(&row_axis)?,
        cols: parse_axis(&col_axis)?,
        fixed: Dims {
            n: pick(p.n, cfg.n, 64),
            r: pick(p.r, cfg.r, 4),
            s: pick(p.s, cfg.s, 4),
        },
        trials: pick(args.trials, cfg.trials, 20),
        threshold: pick(args.threshold, cfg.threshold, DEFAULT_THRESHOLD),
        base_seed: pick(p.seed, cfg.seed, 0),
        distribution: pick(p.distribution, cfg.distribution, SubspaceDistribution::Gaussian),
        sampling: sampling(p, cfg),
        solver: solver_config(&args.solver, cfg)?,
        threads,
    };
    let grid = bench::run_phase_transition_with_progress(&config, progress("phase-transition"))?;
    let dir = output_dir(args.out, cfg)?;
    write_file(&dir.join("grid.csv"), &report::grid_csv(&grid))?;
    write_file(&dir.join("grid.svg"), &report::heatmap_svg(&grid))?;
    print!("{}", report::grid_csv(&grid));
    Ok(Outcome::Done)
}

fn snr_sweep(args: SnrSweepArgs, cfg: &RunConfig, threads: usize) -> Result<Outcome> {
    let p = &args.problem;
    let n = pick(p.n, cfg.n, 64);
    let snrs = pick(args.snrs, cfg.snrs.clone(), "0,5,10,15,20,25,30,inf".into());
    let estimators = pick(args.estimators, cfg.estimators.clone(), "vhm:1,vhm:2,vhm:4,vhm:6".into());
    let config = SnrSweepConfig {
        n,
        s: pick(p.s, cfg.s, 6),
        r: pick(p.r, cfg.r, 4),
        snrs: parse_snrs(&snrs)?,
        estimators: parse_estimators(&estimators)?,
        orient_law: pick(p.orient_law, cfg.orient_law, OrientLaw::Gaussian),
        separation: p.delta.or(cfg.delta),
        trials: pick(args.trials, cfg.trials, 100),
        base_seed: pick(p.seed, cfg.seed, 0),
        grid_points: pick(args.grid, cfg.grid, DEFAULT_GRID_POINTS),
        metric: pick(args.metric, cfg.metric, HausdorffMetric::Plain),
        noise: NoiseKind::Complex,
        threads,
    };
    let result = bench::run_snr_sweep_with_progress(&config, progress("snr-sweep"))?;
    let dir = output_dir(args.out, cfg)?;
    let csv = report::sweep_csv(&result);
    write_file(&dir.join("sweep.csv"), &csv)?;
    write_file(&dir.join("sweep.svg"), &report::sweep_svg(&result))?;
    print!("{csv}");
    Ok(Outcome::Done)
}
