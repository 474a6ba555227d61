//! System configuration, beam vectors, decoding order and rate formulas.
//!
//! Users share one time-frequency resource and are separated in the power
//! domain by successive interference cancellation. Decoding priority is
//! the *increasing* order of effective channel gain `|u^H H w|²`: the user
//! at sorted position `k` (position 0 holds the strongest gain) cancels
//! every weaker-gain user's signal and is interfered only by the users at
//! positions `0..k`. Its achievable rate is
//!
//! ```text
//! R_k = log2(1 + g_k p_k / (g_k (p_0 + ... + p_{k-1}) + noise))
//! ```
//!
//! All types are immutable values after construction and every operation
//! here is a pure function, safe to call from any number of threads.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::Error;
use crate::{CMatrix, CVector};

/// Relative tolerance for the constant-modulus invariant on beam entries.
pub const CM_REL_TOL: f64 = 1e-12;

/// Absolute slack accepted above the disk radius in relaxed mode.
pub const RELAXED_ABS_TOL: f64 = 1e-12;

/// Relative slack accepted on the total power budget.
pub const BUDGET_REL_TOL: f64 = 1e-9;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

/// Static description of one cell: array sizes, user count, power budget,
/// noise power and per-user minimum rates.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    n_tx: usize,
    n_rx: usize,
    n_users: usize,
    total_power: f64,
    noise_power: f64,
    min_rates: Vec<f64>,
}

impl SystemConfig {
    /// Validate and build a configuration.
    ///
    /// Powers are linear (watts, or any consistent noise-normalized unit);
    /// minimum rates are in bits/s/Hz, one per user.
    pub fn new(
        n_tx: usize,
        n_rx: usize,
        n_users: usize,
        total_power: f64,
        noise_power: f64,
        min_rates: Vec<f64>,
    ) -> Result<Self, Error> {
        if n_tx == 0 || n_rx == 0 || n_users == 0 {
            return Err(Error::InvalidConfig(format!(
                "antenna and user counts must be at least 1 (n_tx={n_tx}, n_rx={n_rx}, n_users={n_users})"
            )));
        }
        if !(total_power > 0.0) || !total_power.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "total power must be positive and finite, got {total_power}"
            )));
        }
        if !(noise_power > 0.0) || !noise_power.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise power must be positive and finite, got {noise_power}"
            )));
        }
        if min_rates.len() != n_users {
            return Err(Error::DimensionMismatch {
                operand: "min_rates",
                expected: n_users,
                actual: min_rates.len(),
            });
        }
        if let Some(r) = min_rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "minimum rates must be nonnegative and finite, got {r}"
            )));
        }
        Ok(Self {
            n_tx,
            n_rx,
            n_users,
            total_power,
            noise_power,
            min_rates,
        })
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn min_rates(&self) -> &[f64] {
        &self.min_rates
    }
}

// ---------------------------------------------------------------------------
// Beam vectors
// ---------------------------------------------------------------------------

/// Whether a transmit beam lives on the constant-modulus circle or inside
/// the relaxed per-entry disk used during the swarm search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeamMode {
    ExactCm,
    Relaxed,
}

/// Transmit beamforming vector of length `N`.
///
/// Every antenna is driven by a phase shifter, so in `ExactCm` mode each
/// entry has modulus exactly `1/sqrt(N)` (within [`CM_REL_TOL`] relative).
/// `Relaxed` mode only bounds the modulus from above by `1/sqrt(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TxBeam {
    entries: CVector,
    mode: BeamMode,
}

impl TxBeam {
    /// Build an exact constant-modulus beam, checking every entry.
    pub fn exact_cm(entries: CVector) -> Result<Self, Error> {
        let target = check_len(&entries, "tx beam")?;
        for (i, e) in entries.iter().enumerate() {
            let m = e.norm();
            if (m - target).abs() > CM_REL_TOL * target {
                return Err(Error::ModulusViolation {
                    mode: "constant-modulus",
                    index: i,
                    modulus: m,
                    expected: target,
                });
            }
        }
        Ok(Self {
            entries,
            mode: BeamMode::ExactCm,
        })
    }

    /// Build a relaxed beam whose entries may lie anywhere in the disk of
    /// radius `1/sqrt(N)`.
    pub fn relaxed(entries: CVector) -> Result<Self, Error> {
        let target = check_len(&entries, "tx beam")?;
        for (i, e) in entries.iter().enumerate() {
            let m = e.norm();
            if m > target + RELAXED_ABS_TOL {
                return Err(Error::ModulusViolation {
                    mode: "relaxed",
                    index: i,
                    modulus: m,
                    expected: target,
                });
            }
        }
        Ok(Self {
            entries,
            mode: BeamMode::Relaxed,
        })
    }

    /// Exact constant-modulus beam with the given per-entry phases.
    pub fn from_phases(phases: &[f64]) -> Self {
        let amp = 1.0 / (phases.len() as f64).sqrt();
        let entries = DVector::from_iterator(
            phases.len(),
            phases.iter().map(|&p| Complex64::from_polar(amp, p)),
        );
        Self {
            entries,
            mode: BeamMode::ExactCm,
        }
    }

    /// All-zero-phase beam (every entry `1/sqrt(N)`).
    pub fn uniform(n_tx: usize) -> Self {
        Self::from_phases(&vec![0.0; n_tx])
    }

    pub fn entries(&self) -> &CVector {
        &self.entries
    }

    pub fn mode(&self) -> BeamMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Receive beamforming vector of length `M`; always exact constant
/// modulus `1/sqrt(M)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RxBeam {
    entries: CVector,
}

impl RxBeam {
    pub fn new(entries: CVector) -> Result<Self, Error> {
        let target = check_len(&entries, "rx beam")?;
        for (i, e) in entries.iter().enumerate() {
            let m = e.norm();
            if (m - target).abs() > CM_REL_TOL * target {
                return Err(Error::ModulusViolation {
                    mode: "constant-modulus",
                    index: i,
                    modulus: m,
                    expected: target,
                });
            }
        }
        Ok(Self { entries })
    }

    /// Exact constant-modulus beam with the given per-entry phases.
    pub fn from_phases(phases: &[f64]) -> Self {
        let amp = 1.0 / (phases.len() as f64).sqrt();
        let entries = DVector::from_iterator(
            phases.len(),
            phases.iter().map(|&p| Complex64::from_polar(amp, p)),
        );
        Self { entries }
    }

    /// All-zero-phase beam (every entry `1/sqrt(M)`).
    pub fn uniform(n_rx: usize) -> Self {
        Self::from_phases(&vec![0.0; n_rx])
    }

    pub fn entries(&self) -> &CVector {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn check_len(entries: &CVector, operand: &'static str) -> Result<f64, Error> {
    if entries.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "{operand} must have at least one entry"
        )));
    }
    Ok(1.0 / (entries.len() as f64).sqrt())
}

// ---------------------------------------------------------------------------
// Decoding order and power allocation
// ---------------------------------------------------------------------------

/// User permutation by descending effective channel gain.
///
/// `permutation[k]` is the original user index holding decoding position
/// `k`; `gains[k]` is that user's effective gain. Position 0 is the
/// strongest user, which is decoded last and sees no interference.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodingOrder {
    permutation: Vec<usize>,
    gains: Vec<f64>,
}

impl DecodingOrder {
    /// Sort users by descending effective gain. Ties keep ascending user
    /// index so reruns are reproducible.
    pub fn from_gains(gains: &[f64]) -> Result<Self, Error> {
        if gains.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one effective gain is required".into(),
            ));
        }
        for (i, g) in gains.iter().enumerate() {
            if g.is_nan() {
                return Err(Error::NanGain(i));
            }
            if *g < 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "effective gain for user {i} is negative ({g})"
                )));
            }
        }
        let mut permutation: Vec<usize> = (0..gains.len()).collect();
        // stable sort: equal gains stay in ascending user order
        permutation.sort_by(|&a, &b| gains[b].partial_cmp(&gains[a]).expect("NaN ruled out"));
        let sorted = permutation.iter().map(|&u| gains[u]).collect();
        Ok(Self {
            permutation,
            gains: sorted,
        })
    }

    /// Original user indices in decoding-position order.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Effective gains sorted non-increasing.
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn n_users(&self) -> usize {
        self.permutation.len()
    }

    /// Original user index at decoding position `position`.
    pub fn user_at(&self, position: usize) -> usize {
        self.permutation[position]
    }

    /// Decoding position of original user `user`.
    pub fn position_of(&self, user: usize) -> usize {
        self.permutation
            .iter()
            .position(|&u| u == user)
            .expect("user index out of range")
    }
}

/// Per-user transmit powers, indexed by decoding position and carried with
/// the order under which they were computed.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    powers: Vec<f64>,
    order: DecodingOrder,
}

impl PowerAllocation {
    /// `powers[k]` is the power of the user at decoding position `k`.
    /// Rejects negative entries and totals above `total_power` (within
    /// [`BUDGET_REL_TOL`] relative slack).
    pub fn new(powers: Vec<f64>, order: DecodingOrder, total_power: f64) -> Result<Self, Error> {
        if powers.len() != order.n_users() {
            return Err(Error::DimensionMismatch {
                operand: "powers",
                expected: order.n_users(),
                actual: powers.len(),
            });
        }
        for (i, p) in powers.iter().enumerate() {
            if !(*p >= 0.0) || !p.is_finite() {
                return Err(Error::NegativePower {
                    position: i,
                    power: *p,
                });
            }
        }
        let total = stable_total(&powers);
        if total > total_power * (1.0 + BUDGET_REL_TOL) {
            return Err(Error::OverBudget {
                total,
                budget: total_power,
            });
        }
        Ok(Self { powers, order })
    }

    /// Powers by decoding position (position 0 = strongest user).
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn order(&self) -> &DecodingOrder {
        &self.order
    }

    /// Power of the user with original index `user`.
    pub fn power_of_user(&self, user: usize) -> f64 {
        self.powers[self.order.position_of(user)]
    }

    /// Total allocated power, accumulated from the weakest position up.
    pub fn total(&self) -> f64 {
        stable_total(&self.powers)
    }

    /// Achievable rate of the user at decoding position `position`, in
    /// bits/s/Hz. Interference comes from the stronger-gain positions
    /// `0..position` only; the strongest user (position 0) is
    /// interference-free. Zero gain or zero power yields rate 0, never
    /// NaN.
    pub fn user_rate(&self, position: usize, noise_power: f64) -> f64 {
        let g = self.order.gains()[position];
        let p = self.powers[position];
        let interference: f64 = self.powers[..position].iter().sum();
        (1.0 + g * p / (g * interference + noise_power)).log2()
    }

    /// Achievable sum rate over all users, in bits/s/Hz.
    pub fn sum_rate(&self, noise_power: f64) -> f64 {
        (0..self.powers.len())
            .map(|k| self.user_rate(k, noise_power))
            .sum()
    }
}

/// Sum powers from the weakest decoding position up. Both the allocator
/// and the budget checks use this one accumulation order so the
/// full-budget identity holds bit-exactly.
pub(crate) fn stable_total(powers: &[f64]) -> f64 {
    powers.iter().rev().fold(0.0, |acc, &p| acc + p)
}

// ---------------------------------------------------------------------------
// Gains and rates
// ---------------------------------------------------------------------------

/// Effective channel gain `|u^H H w|²` (linear power units).
pub fn effective_gain(u: &RxBeam, h: &CMatrix, w: &TxBeam) -> Result<f64, Error> {
    if u.len() != h.nrows() {
        return Err(Error::DimensionMismatch {
            operand: "rx beam",
            expected: h.nrows(),
            actual: u.len(),
        });
    }
    if w.len() != h.ncols() {
        return Err(Error::DimensionMismatch {
            operand: "tx beam",
            expected: h.ncols(),
            actual: w.len(),
        });
    }
    let received = h * w.entries();
    let z: Complex64 = u
        .entries()
        .iter()
        .zip(received.iter())
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(z.norm_sqr())
}

/// Rate of one user under orthogonal access with the same beams: the user
/// gets the full power budget but only a `1/K` share of the resource.
pub fn oma_rate(u: &RxBeam, h: &CMatrix, w: &TxBeam, config: &SystemConfig) -> Result<f64, Error> {
    let gain = effective_gain(u, h, w)?;
    Ok(oma_rate_from_gain(gain, config))
}

/// [`oma_rate`] when the effective gain is already known.
pub fn oma_rate_from_gain(gain: f64, config: &SystemConfig) -> f64 {
    let snr = gain * config.total_power() / config.noise_power();
    (1.0 + snr).log2() / config.n_users() as f64
}
