//! Shared helpers and brute-force oracles for the integration suites.
#![allow(dead_code)]

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use vhlift::{c64, DataMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn cgauss(rng: &mut ChaCha8Rng) -> c64 {
    c64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_data(s: usize, n: usize, rng: &mut ChaCha8Rng) -> DataMatrix {
    DataMatrix::from_fn(s, n, |_, _| cgauss(rng))
}

pub fn random_mat(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<c64> {
    Mat::from_fn(rows, cols, |_, _| cgauss(rng))
}

/// Direct entry-by-entry definition: row `j·s + l`, column `k` holds `x[l, j+k]`.
pub fn naive_hankel(x: &DataMatrix, n1: usize, n2: usize) -> Mat<c64> {
    let s = x.snapshots();
    let mut h = Mat::zeros(s * n1, n2);
    for j in 0..n1 {
        for k in 0..n2 {
            for l in 0..s {
                h[(j * s + l, k)] = x.get(l, j + k);
            }
        }
    }
    h
}

/// Number of `(j, k)` pairs with `j + k = i`, `j < n1`, `k < n2`, by enumeration.
pub fn pair_count(i: usize, n1: usize, n2: usize) -> usize {
    (0..n1).flat_map(|j| (0..n2).map(move |k| j + k)).filter(|&t| t == i).count()
}

pub fn trace_inner(a: &Mat<c64>, b: &Mat<c64>) -> c64 {
    let mut acc = c64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            acc += a[(i, j)].conj() * b[(i, j)];
        }
    }
    acc
}

pub fn frob(a: &Mat<c64>) -> f64 {
    trace_inner(a, a).re.sqrt()
}

pub fn max_abs_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut worst = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            worst = worst.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    worst
}

pub fn singular_values(a: &Mat<c64>) -> Vec<f64> {
    a.singular_values().expect("SVD converges")
}

/// `e^{−2πi·t}` computed without the library's phase reduction.
pub fn phasor(t: f64) -> c64 {
    let angle = -2.0 * std::f64::consts::PI * t;
    c64::new(angle.cos(), angle.sin())
}

/// 2-D point sources: chunk `ℓ`, column `j` of the `s × n²` matrix is
/// `Σ_k d_k h_k e^{−2πi(τ1_k ℓ + τ2_k j)}`.
pub fn synthesize_2d(sources: &[(f64, f64, c64, Vec<c64>)], n: usize) -> DataMatrix {
    let s = sources[0].3.len();
    DataMatrix::from_fn(s, n * n, |l, col| {
        let (chunk, j) = (col / n, col % n);
        sources
            .iter()
            .map(|(t1, t2, d, h)| *d * h[l] * phasor(t1 * chunk as f64 + t2 * j as f64))
            .sum()
    })
}

pub fn unit_vector(s: usize, rng: &mut ChaCha8Rng) -> Vec<c64> {
    let v: Vec<c64> = (0..s).map(|_| cgauss(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}
