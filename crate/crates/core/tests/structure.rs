mod common;

use common::*;
use faer::Mat;
use vhlift::bench::hausdorff;
use vhlift::bench::HausdorffMetric;
use vhlift::estimate::{
    frequency_grid, music, noise_subspace_vhm, pseudospectrum, recover_amplitudes, refine_peaks,
    stacked_hankel, Estimator,
};
use vhlift::lift::{vec_hankel, LiftShape};
use vhlift::model::{
    add_noise, apply_a, build_vandermonde_factors, noise_sigma, sample_model, sample_subspace,
    synthesize_data_matrix, ModelSampling, NoiseKind, SubspaceDistribution,
};
use vhlift::{c64, DataMatrix};

fn separated(n: usize) -> ModelSampling {
    ModelSampling {
        separation: Some(1.0 / n as f64),
        ..Default::default()
    }
}

#[test]
fn synthesized_lift_has_rank_r() {
    for seed in 0..30u64 {
        let n = 16 + (seed as usize % 5) * 12;
        let s = 1 + seed as usize % 6;
        let shape = LiftShape::new(n, s).unwrap();
        let r = 1 + seed as usize % shape.n2().min(s * shape.n1()).min(6);
        let model = sample_model(r, s, seed, &separated(n)).unwrap();
        let x = synthesize_data_matrix(&model, n);
        let h = vec_hankel(&x, &shape).unwrap();
        let sv = singular_values(h.entries());
        assert!(sv[r - 1] / sv[0] > 1e-6, "seed {seed}: rank below r");
        if r < sv.len() {
            assert!(sv[r] / sv[0] < 1e-8, "seed {seed}: σ_(r+1)/σ_1 = {}", sv[r] / sv[0]);
        }

        let factors = build_vandermonde_factors(&model, &shape);
        let rebuilt = factors.reconstruct(model.amps());
        assert!(max_abs_diff(&rebuilt, h.entries()) < 1e-10 * frob(h.entries()));
    }
}

#[test]
fn measurement_matches_convolution_form() {
    for seed in 0..10u64 {
        let (n, s, r) = (40, 3, 3);
        let model = sample_model(r, s, seed, &ModelSampling::default()).unwrap();
        let b = sample_subspace(SubspaceDistribution::Gaussian, n, s, seed + 100).unwrap();
        let y = apply_a(&synthesize_data_matrix(&model, n), &b).unwrap();
        let psfs: Vec<Vec<c64>> = (0..r).map(|k| b.psf(&model.orient(k))).collect();
        for j in 0..n {
            let direct: c64 = (0..r)
                .map(|k| model.amps()[k] * phasor(model.taus()[k] * j as f64) * psfs[k][j])
                .sum();
            assert!((y[j] - direct).norm() <= 1e-12 * direct.norm().max(1.0));
        }
    }
}

fn gram_min_eig(e: &Mat<c64>) -> f64 {
    let sv = singular_values(e);
    let last = sv[e.ncols() - 1];
    last * last
}

#[test]
fn orientation_factor_never_shrinks_gram_spectrum() {
    for seed in 0..100u64 {
        let s = 1 + seed as usize % 5;
        let r = 1 + seed as usize % 6;
        let shape = LiftShape::new(32, s).unwrap();
        let model = sample_model(r, s, seed, &ModelSampling::default()).unwrap();
        let f = build_vandermonde_factors(&model, &shape);
        assert!(gram_min_eig(&f.e_hl) >= gram_min_eig(&f.e_l) - 1e-10, "seed {seed}");
    }
}

#[test]
fn stacked_and_vector_lifts_share_singular_values() {
    for seed in 0..40u64 {
        let mut g = rng(seed);
        let (n, s) = (10 + seed as usize % 20, 1 + seed as usize % 5);
        let shape = LiftShape::new(n, s).unwrap();
        let x = random_data(s, n, &mut g);
        let a = singular_values(vec_hankel(&x, &shape).unwrap().entries());
        let b = singular_values(&stacked_hankel(&x, &shape).unwrap());
        for (p, q) in a.iter().zip(&b) {
            assert!((p - q).abs() <= 1e-10 * a[0]);
        }
    }
}

/// Principal-angle check: the leading right singular subspaces of `H` and
/// `H̃` coincide (all cosines 1) for low-rank data.
#[test]
fn stacked_and_vector_lifts_share_row_space() {
    let (n, s, r) = (32, 4, 3);
    let shape = LiftShape::new(n, s).unwrap();
    for seed in 0..10u64 {
        let model = sample_model(r, s, seed, &separated(n)).unwrap();
        let x = synthesize_data_matrix(&model, n);
        let v1 = vec_hankel(&x, &shape).unwrap().entries().thin_svd().unwrap().V().to_owned();
        let v2 = stacked_hankel(&x, &shape).unwrap().thin_svd().unwrap().V().to_owned();
        let v1r = v1.get(.., ..r).to_owned();
        let v2r = v2.get(.., ..r).to_owned();
        let cosines = singular_values(&(v1r.adjoint() * &v2r));
        assert!(cosines.iter().all(|c| (1.0 - c).abs() < 1e-8), "{cosines:?}");
    }
}

#[test]
fn noise_energy_matches_sigma() {
    let (n, s) = (64, 6);
    let model = sample_model(4, s, 1, &ModelSampling::default()).unwrap();
    let x = synthesize_data_matrix(&model, n);
    for kind in [NoiseKind::Complex, NoiseKind::Real] {
        let sigma = noise_sigma(&x, 10.0);
        let mut total = 0.0;
        for seed in 0..100 {
            let e = add_noise(&x, 10.0, seed, kind).unwrap().subtracted(&x);
            let ratio = e.frobenius_norm().powi(2) / ((s * n) as f64 * sigma * sigma);
            assert!((0.7..1.3).contains(&ratio), "{kind:?}: single draw ratio {ratio}");
            total += ratio;
        }
        let mean = total / 100.0;
        assert!((0.9..=1.1).contains(&mean), "{kind:?}: mean ratio {mean}");
    }
    assert_eq!(add_noise(&x, f64::INFINITY, 0, NoiseKind::Complex).unwrap(), x);
}

#[test]
fn noiseless_music_is_exact_for_every_estimator() {
    let grid = frequency_grid(10_000);
    let step = 1e-4;
    let n = 64;
    for seed in 0..8u64 {
        let r = 1 + seed as usize % 4;
        let s = r + 1;
        let model = sample_model(r, s, seed, &separated(n)).unwrap();
        let x = synthesize_data_matrix(&model, n);
        for est in [Estimator::Vhm, Estimator::Mmv, Estimator::Single] {
            let found = music(&x, r, est, 0, &grid).unwrap();
            assert!(!found.peaks.padded);
            let err = hausdorff(model.taus(), &found.peaks.taus, HausdorffMetric::Wraparound).unwrap();
            assert!(err <= step, "{est} seed {seed}: {err}");
        }
    }
}

#[test]
fn single_estimator_equals_vhm_on_one_row() {
    let grid = frequency_grid(2_000);
    let model = sample_model(3, 1, 4, &separated(48)).unwrap();
    let x = synthesize_data_matrix(&model, 48);
    let single = music(&x, 3, Estimator::Single, 0, &grid).unwrap();
    let vhm = music(&x, 3, Estimator::Vhm, 0, &grid).unwrap();
    assert_eq!(single.curve, vhm.curve);
    assert_eq!(single.peaks, vhm.peaks);
}

#[test]
fn pseudospectrum_peaks_dominate_at_truth() {
    let n = 64;
    let shape = LiftShape::new(n, 3).unwrap();
    let model = sample_model(4, 3, 9, &separated(n)).unwrap();
    let x = synthesize_data_matrix(&model, n);
    let noise = noise_subspace_vhm(&x, 4, &shape).unwrap();
    let at_truth = pseudospectrum(&noise, model.taus());
    let background = pseudospectrum(&noise, &frequency_grid(97));
    let floor = background.values.iter().cloned().fold(f64::INFINITY, f64::min);
    for v in at_truth.values {
        assert!(v > 1e8 * floor);
    }
}

#[test]
fn least_squares_recovers_weights_at_true_frequencies() {
    let (n, s, r) = (64, 3, 4);
    let model = sample_model(r, s, 2, &separated(n)).unwrap();
    let x = synthesize_data_matrix(&model, n);
    let fit = recover_amplitudes(&x, model.taus()).unwrap();
    assert!(fit.residual < 1e-9 * x.frobenius_norm());
    assert!(!fit.ill_conditioned);
    let w = fit.weights();
    for k in 0..r {
        for l in 0..s {
            let truth = model.amps()[k] * model.orients()[(l, k)];
            assert!((w[(l, k)] - truth).norm() < 1e-9 * model.amps()[k].norm());
        }
        assert!((fit.amps_hat[k] - model.amps()[k].norm()).abs() < 1e-9 * fit.amps_hat[k]);
    }
}

#[test]
fn leading_rows_keep_prefix() {
    let x = random_data(5, 8, &mut rng(1));
    let head = x.leading_rows(2).unwrap();
    assert_eq!(head, DataMatrix::from_fn(2, 8, |l, j| x.get(l, j)));
    assert!(x.leading_rows(6).is_err());
}

#[test]
fn refinement_lands_on_off_grid_frequencies() {
    let n = 64;
    let grid = frequency_grid(10_000);
    for seed in 0..5u64 {
        let model = sample_model(3, 2, seed, &separated(n)).unwrap();
        let x = synthesize_data_matrix(&model, n);
        let found = music(&x, 3, Estimator::Vhm, 0, &grid).unwrap();
        let refined = refine_peaks(&found.noise, &found.peaks.taus, 1e-4);
        let err = hausdorff(model.taus(), &refined, HausdorffMetric::Wraparound).unwrap();
        assert!(err < 1e-10, "seed {seed}: {err}");
    }
}
