//! Stage 2: closed-form receive beamforming and the reduced objective.
//!
//! For a fixed transmit beam the received vector `Hw` is fixed, and the
//! best constant-modulus receive beam simply co-phases its entries:
//! entry `m` of [`optimal_rx`] is `(1/sqrt(M)) * [Hw]_m / |[Hw]_m|`,
//! which attains the gain `(1/M) (sum_m |[Hw]_m|)²`. This choice does not
//! depend on the decoding order, so [`reduced_objective`] can compute all
//! receive beams first, sort the resulting effective gains, run the
//! closed-form power allocation and collapse the whole problem into a
//! function of the transmit beam alone:
//!
//! ```text
//! R(w) = sum_{k>=1} r_k  +  log2(1 + g_0 p_0 / noise)
//! ```
//!
//! (positions of the sorted order; every constrained user sits exactly at
//! its minimum rate, the strongest user gets the rest).

use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::Error;
use crate::model::{DecodingOrder, PowerAllocation, RxBeam, SystemConfig, TxBeam};
use crate::power::{allocate, Infeasible, RateTargets};
use crate::{CMatrix, CVector};

/// Everything the solver knows about one transmit beam: the achievable
/// sum rate plus all intermediate artifacts, so callers can log per-user
/// diagnostics without recomputation. Per-user fields are indexed by
/// original user; `order` maps them to decoding positions.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBundle {
    pub sum_rate: f64,
    pub rx_beams: Vec<RxBeam>,
    pub gains: Vec<f64>,
    pub order: DecodingOrder,
    pub allocation: PowerAllocation,
}

/// Phase-align a receive beam to `Hw`.
///
/// Entries of `Hw` that are exactly zero contribute no gain and get phase
/// 0; an identically zero `Hw` yields the uniform beam with gain 0.
pub fn optimal_rx(h: &CMatrix, w: &TxBeam) -> Result<RxBeam, Error> {
    if w.len() != h.ncols() {
        return Err(Error::DimensionMismatch {
            operand: "tx beam",
            expected: h.ncols(),
            actual: w.len(),
        });
    }
    let received = h * w.entries();
    Ok(align_to(&received).0)
}

/// Effective gain achieved by [`optimal_rx`]: `(1/M)(sum_m |[Hw]_m|)²`.
pub fn aligned_gain(h: &CMatrix, w: &TxBeam) -> Result<f64, Error> {
    if w.len() != h.ncols() {
        return Err(Error::DimensionMismatch {
            operand: "tx beam",
            expected: h.ncols(),
            actual: w.len(),
        });
    }
    let received = h * w.entries();
    let sum_abs: f64 = received.iter().map(Complex64::norm).sum();
    Ok(sum_abs * sum_abs / received.len() as f64)
}

fn align_to(received: &CVector) -> (RxBeam, f64) {
    let m = received.len();
    let amp = 1.0 / (m as f64).sqrt();
    let mut sum_abs = 0.0;
    let entries = CVector::from_iterator(
        m,
        received.iter().map(|v| {
            let norm = v.norm();
            sum_abs += norm;
            if norm == 0.0 {
                Complex64::new(amp, 0.0)
            } else {
                v * (amp / norm)
            }
        }),
    );
    let beam = RxBeam::new(entries).expect("aligned entries are unit-modulus by construction");
    (beam, sum_abs * sum_abs / m as f64)
}

/// Collapse stages 1–2: optimal receive beams, decoding order, optimal
/// power allocation and the resulting sum rate, all as a function of the
/// transmit beam (exact constant-modulus or relaxed).
///
/// # Panics
///
/// Panics if the channel list does not match the configuration; those are
/// wiring mistakes, not data-dependent conditions. Infeasible rate
/// constraints are reported through the `Err` variant.
pub fn reduced_objective(
    w: &TxBeam,
    channels: &[ChannelRealization],
    config: &SystemConfig,
) -> Result<SolutionBundle, Infeasible> {
    assert_eq!(
        channels.len(),
        config.n_users(),
        "one channel per user is required"
    );
    for ch in channels {
        assert_eq!(ch.n_tx(), config.n_tx(), "channel/tx array size mismatch");
        assert_eq!(ch.n_rx(), config.n_rx(), "channel/rx array size mismatch");
        assert_eq!(ch.n_tx(), w.len(), "beam/tx array size mismatch");
    }

    let mut rx_beams = Vec::with_capacity(channels.len());
    let mut gains = Vec::with_capacity(channels.len());
    for ch in channels {
        let received = ch.matrix() * w.entries();
        let (beam, gain) = align_to(&received);
        rx_beams.push(beam);
        gains.push(gain);
    }

    let order = DecodingOrder::from_gains(&gains).expect("aligned gains are finite and nonnegative");
    let targets =
        RateTargets::from_min_rates(config.min_rates()).expect("validated by SystemConfig");
    let allocation = allocate(&order, &targets, config.total_power(), config.noise_power())?;

    let constrained: f64 = order.permutation()[1..]
        .iter()
        .map(|&user| config.min_rates()[user])
        .sum();
    let sum_rate = constrained + allocation.user_rate(0, config.noise_power());

    Ok(SolutionBundle {
        sum_rate,
        rx_beams,
        gains,
        order,
        allocation,
    })
}
