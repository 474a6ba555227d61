//! Independent reference computations and instance generators for the
//! test suites. Nothing here is used by the solver itself.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::model::{PowerAllocation, RxBeam, TxBeam};
use crate::{CMatrix, CVector};

/// `|u^H H w|²` by explicit double loop over raw entries; deliberately
/// avoids the linear-algebra path used by the implementation.
pub fn triple_product_gain(u: &RxBeam, h: &CMatrix, w: &TxBeam) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 0..h.nrows() {
        for n in 0..h.ncols() {
            acc += u.entries()[m].conj() * h[(m, n)] * w.entries()[n];
        }
    }
    acc.norm_sqr()
}

/// Channel matrix accumulated entry by entry from raw path parameters,
/// without forming steering vectors or outer products.
pub fn entrywise_channel(
    paths: &[(Complex64, f64, f64)],
    n_tx: usize,
    n_rx: usize,
) -> CMatrix {
    DMatrix::from_fn(n_rx, n_tx, |m, n| {
        paths
            .iter()
            .map(|&(coeff, rx_cos, tx_cos)| {
                coeff
                    * Complex64::cis(std::f64::consts::PI * m as f64 * rx_cos)
                    * Complex64::cis(std::f64::consts::PI * n as f64 * tx_cos).conj()
            })
            .sum()
    })
}

/// Central difference of the sum rate when position `k0` gives up power
/// to position `k0 - 1`, evaluated through exact log-ratio identities so
/// no cancellation occurs even for steps far below the rate scale.
///
/// Only the two adjacent rates move under this transfer; both differences
/// reduce to a single `ln_1p` of a rational increment.
pub fn central_diff_sum_rate(position: usize, alloc: &PowerAllocation, noise_power: f64) -> f64 {
    assert!(position >= 1 && position < alloc.order().n_users());
    let gains = alloc.order().gains();
    let powers = alloc.powers();
    let g = gains[position];
    let g_up = gains[position - 1];
    let p_up = powers[position - 1];
    let s: f64 = powers[..position].iter().sum();
    let s_up: f64 = powers[..position - 1].iter().sum();

    let scale = s + powers[position] + noise_power / g;
    let h = (1e-6 * scale).min(0.1 * (s_up + p_up + noise_power / g_up));

    // own rate: numerator + denominator is constant under the transfer,
    // so the difference is a pure denominator ratio
    let own = (2.0 * g * h / (g * (s - h) + noise_power)).ln_1p();
    // donor rate: denominator is constant, numerator moves by -2h
    let donor_n_minus = g_up * s_up + noise_power + g_up * (p_up + h);
    let donor = (-2.0 * g_up * h / donor_n_minus).ln_1p();
    (own + donor) / (2.0 * h * std::f64::consts::LN_2)
}

/// Random complex matrix with i.i.d. standard circularly-symmetric
/// Gaussian entries.
pub fn random_matrix<R: Rng>(rng: &mut R, n_rx: usize, n_tx: usize) -> CMatrix {
    DMatrix::from_fn(n_rx, n_tx, |_, _| {
        Complex64::new(gaussian(rng), gaussian(rng)) / 2f64.sqrt()
    })
}

/// Random exact constant-modulus transmit beam with uniform phases.
pub fn random_cm_tx<R: Rng>(rng: &mut R, n_tx: usize) -> TxBeam {
    TxBeam::from_phases(&random_phases(rng, n_tx))
}

/// Random exact constant-modulus receive beam with uniform phases.
pub fn random_cm_rx<R: Rng>(rng: &mut R, n_rx: usize) -> RxBeam {
    RxBeam::from_phases(&random_phases(rng, n_rx))
}

/// Random relaxed transmit-beam vector drawn uniformly from the per-entry
/// disk of radius `1/sqrt(N)`.
pub fn random_disk_vector<R: Rng>(rng: &mut R, n: usize) -> CVector {
    let radius = 1.0 / (n as f64).sqrt();
    DVector::from_fn(n, |_, _| {
        let r = radius * rng.random::<f64>().sqrt();
        let phi = rng.random_range(0.0..std::f64::consts::TAU);
        Complex64::from_polar(r, phi)
    })
}

fn random_phases<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
        .collect()
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}
