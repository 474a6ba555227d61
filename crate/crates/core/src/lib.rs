//! Sum-rate maximization for a downlink mmWave-NOMA cell with analog
//! beamforming at both ends of the link.
//!
//! A base station with an `N`-antenna phased array serves `K` users (each
//! with an `M`-antenna phased array) on one time-frequency resource,
//! separating them in the power domain. The solver runs in three stages:
//!
//! 1. [`power::allocate`] — closed-form optimal power split for fixed
//!    beams, subject to per-user minimum rates and a total power budget.
//! 2. [`rxbf::optimal_rx`] — closed-form optimal receive beam per user for
//!    a fixed transmit beam (per-entry phase alignment).
//! 3. [`pso::run_bcpso`] — boundary-compressed particle swarm search over
//!    the transmit beam. The per-entry constant-modulus constraint is
//!    relaxed to a disk whose inner radius grows linearly with the
//!    iteration count, so the feasible annulus collapses back onto the
//!    constant-modulus circle by the final iteration.
//!
//! Stages 1–2 fold into [`rxbf::reduced_objective`], a function of the
//! transmit beam alone, which the swarm uses as its fitness. The
//! [`oracle`] module provides brute-force references (power-grid search,
//! exhaustive quantized-phase transmit search, random receive sampling)
//! that back the closed forms in tests.
//!
//! All powers are linear (not dB) and all rates are in bits/s/Hz.

pub mod channel;
pub mod error;
pub mod model;
pub mod oracle;
pub mod power;
pub mod pso;
pub mod rng;
pub mod rxbf;
pub mod testkit;

pub use error::Error;
pub use num_complex::Complex64;

/// Complex column vector (beams, steering vectors, received signals).
pub type CVector = nalgebra::DVector<Complex64>;
/// Complex matrix (channel responses).
pub type CMatrix = nalgebra::DMatrix<Complex64>;
