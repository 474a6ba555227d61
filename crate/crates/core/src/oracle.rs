//! Brute-force references used by tests and acceptance checks: a power
//! grid search, an exhaustive quantized-phase transmit search, and random
//! receive-beam sampling. Deterministic given their seeds and grid
//! parameters.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::channel::ChannelRealization;
use crate::error::Error;
use crate::model::{DecodingOrder, PowerAllocation, SystemConfig, TxBeam};
use crate::power::RateTargets;
use crate::rxbf::{reduced_objective, SolutionBundle};
use crate::CMatrix;

/// Evaluation budget for [`exhaustive_phase_tx`].
pub const PHASE_SEARCH_BUDGET: f64 = 1e7;

/// Slack used when checking minimum rates on grid points.
const GRID_RATE_TOL: f64 = 1e-9;

/// Best transmit beam found by [`exhaustive_phase_tx`].
#[derive(Debug, Clone)]
pub struct PhaseSearch {
    pub beam: TxBeam,
    pub solution: SolutionBundle,
}

/// Enumerate `(p_1, ..., p_{K-1})` (positions below the strongest) on a
/// uniform `[0, P]` grid with the strongest position taking the
/// remainder, and return the feasible grid point with the highest sum
/// rate, or `None` if no grid point is feasible. Targets are indexed by
/// original user. Cost is `points_per_axis^(K-1)`, so `K <= 4`.
pub fn grid_power_search(
    order: &DecodingOrder,
    targets: &RateTargets,
    total_power: f64,
    noise_power: f64,
    points_per_axis: usize,
) -> Option<PowerAllocation> {
    let k = order.n_users();
    assert!(k <= 4, "grid search is exponential in K; use K <= 4");
    assert!(points_per_axis >= 2, "need at least the {{0, P}} endpoints");
    let gains = order.gains();
    let sorted_targets: Vec<f64> = order
        .permutation()
        .iter()
        .map(|&u| targets.min_rate_of(u))
        .collect();

    let axes = k - 1;
    let step = total_power / (points_per_axis - 1) as f64;
    let mut indices = vec![0usize; axes];
    let mut powers = vec![0.0; k];
    let mut best: Option<(f64, Vec<f64>)> = None;

    loop {
        let mut tail = 0.0;
        for (slot, &i) in indices.iter().enumerate() {
            powers[slot + 1] = step * i as f64;
            tail += powers[slot + 1];
        }
        let lead = total_power - tail;
        if lead >= -GRID_RATE_TOL * total_power {
            powers[0] = lead.max(0.0);
            if let Some(sum) =
                feasible_sum_rate(gains, &powers, &sorted_targets, noise_power)
            {
                // strict improvement keeps the lexicographically first
                // argmax, so enumeration order fixes the result
                if best.as_ref().is_none_or(|(b, _)| sum > *b) {
                    best = Some((sum, powers.clone()));
                }
            }
        }

        // odometer over the grid axes
        let mut axis = 0;
        loop {
            if axis == axes {
                let (_, powers) = best?;
                return Some(
                    PowerAllocation::new(powers, order.clone(), total_power)
                        .expect("feasible grid point is within budget"),
                );
            }
            indices[axis] += 1;
            if indices[axis] < points_per_axis {
                break;
            }
            indices[axis] = 0;
            axis += 1;
        }
    }
}

fn feasible_sum_rate(
    gains: &[f64],
    powers: &[f64],
    sorted_targets: &[f64],
    noise_power: f64,
) -> Option<f64> {
    let mut interference = 0.0;
    let mut sum = 0.0;
    for ((&g, &p), &target) in gains.iter().zip(powers).zip(sorted_targets) {
        let rate = (1.0 + g * p / (g * interference + noise_power)).log2();
        if rate < target - GRID_RATE_TOL {
            return None;
        }
        sum += rate;
        interference += p;
    }
    Some(sum)
}

/// Exhaustively search exact constant-modulus transmit beams whose
/// entries take one of `n_phases` equispaced phases. Entry 0 is pinned to
/// phase 0 (the reduced objective is invariant under a global phase
/// rotation), leaving `n_phases^(N-1)` candidates; errors out above
/// [`PHASE_SEARCH_BUDGET`]. Returns `None` if every candidate is
/// infeasible.
pub fn exhaustive_phase_tx(
    channels: &[ChannelRealization],
    config: &SystemConfig,
    n_phases: usize,
) -> Result<Option<PhaseSearch>, Error> {
    assert!(n_phases >= 1, "need at least one phase level");
    let n = config.n_tx();
    let candidates = (n_phases as f64).powi(n as i32 - 1);
    if candidates > PHASE_SEARCH_BUDGET {
        return Err(Error::SearchBudgetExceeded {
            candidates,
            limit: PHASE_SEARCH_BUDGET,
        });
    }
    let total = (n_phases as u64).pow(n as u32 - 1);

    let best = (0..total)
        .into_par_iter()
        .map(|index| {
            let beam = beam_from_index(index, n_phases, n);
            reduced_objective(&beam, channels, config)
                .ok()
                .map(|bundle| (index, bundle.sum_rate))
        })
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) => x,
                (x, None) => x,
                (Some((ia, ra)), Some((ib, rb))) => {
                    // ties break toward the lower index so the reduction
                    // order cannot leak into the result
                    if rb > ra || (rb == ra && ib < ia) {
                        Some((ib, rb))
                    } else {
                        Some((ia, ra))
                    }
                }
            },
        );

    Ok(best.map(|(index, _)| {
        let beam = beam_from_index(index, n_phases, n);
        let solution =
            reduced_objective(&beam, channels, config).expect("winning candidate was feasible");
        PhaseSearch { beam, solution }
    }))
}

fn beam_from_index(index: u64, n_phases: usize, n: usize) -> TxBeam {
    let q = n_phases as u64;
    let mut phases = vec![0.0; n];
    let mut rest = index;
    for phase in phases.iter_mut().skip(1) {
        let digit = rest % q;
        rest /= q;
        *phase = std::f64::consts::TAU * digit as f64 / n_phases as f64;
    }
    TxBeam::from_phases(&phases)
}

/// Best effective gain over `n_samples` random constant-modulus receive
/// beams with i.i.d. uniform phases. Never exceeds the phase-aligned
/// closed form.
pub fn random_rx_sampling<R: Rng>(
    h: &CMatrix,
    w: &TxBeam,
    n_samples: usize,
    rng: &mut R,
) -> f64 {
    assert!(n_samples >= 1, "need at least one sample");
    let received = h * w.entries();
    let amp = 1.0 / (received.len() as f64).sqrt();
    let mut best = f64::NEG_INFINITY;
    for _ in 0..n_samples {
        let z: Complex64 = received
            .iter()
            .map(|v| Complex64::from_polar(amp, -rng.random_range(0.0..std::f64::consts::TAU)) * v)
            .sum();
        best = best.max(z.norm_sqr());
    }
    best
}
