//! Seeded generation of measurement ensembles, sparse ground-truth signals,
//! clean intensities and additive white Gaussian noise.
//!
//! Every generator is a pure function of its parameters and a 64-bit seed;
//! per-trial seeds are derived with [`derive_trial_seed`] so any trial of a
//! Monte-Carlo sweep is reproducible in isolation.

use faer::{c64, Col, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hermitian::{ComplexVector, HermitianMatrix};
use crate::measurement::{gaussian_entry, MeasurementEnsemble};
use crate::Field;

/// A complete synthetic problem: sensing vectors, ground truth, measurements.
#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub ensemble: MeasurementEnsemble,
    /// Unit-norm k-sparse ground truth.
    pub x0: ComplexVector,
    /// Sorted support of x0, |support| = k.
    pub support: Vec<usize>,
    /// Measurements b = A(x0 x0*) + w.
    pub b: Col<f64>,
    /// Noise actually added (zero when snr_db is None).
    pub w: Col<f64>,
    pub k: usize,
    pub snr_db: Option<f64>,
    /// The trial seed everything above derives from.
    pub seed: u64,
}

/// splitmix64 finalizer; the fixed avalanche used by all seed derivations.
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Splitting rule for sweep grids: `(base_seed, sweep_point, trial_index)`
/// determine the trial seed. `sweep_bits` is the IEEE bit pattern of the
/// sweep value (`f64::to_bits`), so a trial depends only on its own cell, not
/// on the rest of the grid.
pub fn derive_trial_seed(base_seed: u64, sweep_bits: u64, trial_index: u64) -> u64 {
    mix64(mix64(mix64(base_seed) ^ sweep_bits) ^ trial_index)
}

// Stream separators for the three independent draws inside one trial.
const ENSEMBLE_STREAM: u64 = 0x454E_5345;
const SIGNAL_STREAM: u64 = 0x5349_474E;
const NOISE_STREAM: u64 = 0x4E4F_4953;

/// Gaussian sensing vectors: entries N(0, 1) in the real case,
/// N(0, 1/2) + i N(0, 1/2) in the complex case. Deterministic in the seed.
pub fn gen_ensemble(d: usize, m: usize, field: Field, seed: u64) -> MeasurementEnsemble {
    assert!(d >= 1 && m >= 1, "ensemble needs d >= 1 and m >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Mat::<c64>::zeros(d, m);
    for j in 0..m {
        for i in 0..d {
            a[(i, j)] = gaussian_entry(&mut rng, field);
        }
    }
    MeasurementEnsemble::from_columns(a, field, Some(seed)).expect("generated entries are finite")
}

/// Unit-norm k-sparse signal: support uniform over k-subsets, nonzero entries
/// N(0, 1) (real) or N(0, 1) + i N(0, 1) (complex), normalized after drawing.
pub fn gen_sparse_signal(d: usize, k: usize, field: Field, seed: u64) -> (ComplexVector, Vec<usize>) {
    assert!(k >= 1 && k <= d, "sparsity must satisfy 1 <= k <= d");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut support: Vec<usize> = rand::seq::index::sample(&mut rng, d, k).into_vec();
    support.sort_unstable();
    let mut x = Col::<c64>::zeros(d);
    for &idx in &support {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = match field {
            Field::Real => 0.0,
            Field::Complex => rng.sample(StandardNormal),
        };
        x[idx] = c64::new(re, im);
    }
    let norm = crate::hermitian::vec_norm_l2(&x);
    debug_assert!(norm > 0.0);
    let inv = 1.0 / norm;
    for &idx in &support {
        x[idx] = c64::new(x[idx].re * inv, x[idx].im * inv);
    }
    (x, support)
}

/// Clean intensities b = A(x0 x0*), plus white Gaussian noise at the given
/// SNR: w ~ sqrt((||A(x0)||_2^2 / m) / 10^(snr/10)) N(0, I_m). With no SNR
/// the noise is exactly zero.
pub fn gen_measurements(
    ens: &MeasurementEnsemble,
    x0: &ComplexVector,
    snr_db: Option<f64>,
    seed: u64,
) -> (Col<f64>, Col<f64>) {
    let lifted = HermitianMatrix::from_outer(x0);
    let clean = ens.forward_apply(&lifted).expect("signal dimension matches ensemble");
    let m = ens.m();
    let mut w = Col::<f64>::zeros(m);
    if let Some(snr) = snr_db {
        let mut power = 0.0;
        for i in 0..m {
            power += clean[i] * clean[i];
        }
        let sigma = ((power / m as f64) / 10f64.powf(snr / 10.0)).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..m {
            w[i] = sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    let b = Col::from_fn(m, |i| clean[i] + w[i]);
    (b, w)
}

/// One fully seeded trial: ensemble, signal and noise drawn from independent
/// streams derived from `trial_seed`.
pub fn gen_instance(
    d: usize,
    m: usize,
    k: usize,
    field: Field,
    snr_db: Option<f64>,
    trial_seed: u64,
) -> ProblemInstance {
    let ens_seed = mix64(trial_seed ^ ENSEMBLE_STREAM);
    let sig_seed = mix64(trial_seed ^ SIGNAL_STREAM);
    let noise_seed = mix64(trial_seed ^ NOISE_STREAM);
    let ensemble = gen_ensemble(d, m, field, ens_seed);
    let (x0, support) = gen_sparse_signal(d, k, field, sig_seed);
    let (b, w) = gen_measurements(&ensemble, &x0, snr_db, noise_seed);
    ProblemInstance {
        ensemble,
        x0,
        support,
        b,
        w,
        k,
        snr_db,
        seed: trial_seed,
    }
}
