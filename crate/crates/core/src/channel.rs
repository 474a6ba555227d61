//! mmWave multipath channel synthesis and the statistical ensembles used
//! by the experiment harness.
//!
//! The link between the base station (`N`-antenna ULA) and a user
//! (`M`-antenna ULA), both with half-wavelength spacing, is a sum of `L`
//! planar multipath components. Each component contributes the outer
//! product of a receive and a transmit steering vector weighted by a
//! complex coefficient, so the matrix has rank at most `L` and is fully
//! reconstructible from its path parameters.
//!
//! Two ensembles are provided. The line-of-sight model puts one direct
//! path above `L - 1` diffuse paths, each diffuse path 15 dB weaker on
//! average; the non-line-of-sight model spreads the power evenly over all
//! `L` paths. Both are normalized so the mean per-element channel power
//! `E[|H|²_F / (M N)]` equals the large-scale gain at the user's
//! distance, which is 1 at the 100 m reference point.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::{CMatrix, CVector};

/// Closest user distance drawn by the samplers, in meters.
pub const MIN_DISTANCE_M: f64 = 10.0;
/// Farthest user distance drawn by the samplers, in meters.
pub const MAX_DISTANCE_M: f64 = 500.0;
/// Distance at which the large-scale gain is exactly 1.
pub const REFERENCE_DISTANCE_M: f64 = 100.0;
/// Average power gap between the direct path and each diffuse path in the
/// line-of-sight ensemble.
pub const LOS_DIRECT_TO_DIFFUSE_DB: f64 = 15.0;

/// Parameters of the channel ensembles.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Multipath components per user.
    pub n_paths: usize,
    /// Exponent of the `(100 m / d)^alpha` large-scale power law.
    pub path_loss_exponent: f64,
}

impl ChannelConfig {
    /// Default ensemble: 4 paths, inverse-square large-scale gain.
    pub fn new(n_tx: usize, n_rx: usize) -> Self {
        Self {
            n_tx,
            n_rx,
            n_paths: 4,
            path_loss_exponent: 2.0,
        }
    }
}

/// One multipath component: complex coefficient plus the cosines of its
/// departure and arrival angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub coeff: Complex64,
    pub cos_aod: f64,
    pub cos_aoa: f64,
}

impl PathParams {
    pub fn new(coeff: Complex64, cos_aod: f64, cos_aoa: f64) -> Result<Self, Error> {
        for cos in [cos_aod, cos_aoa] {
            if !(-1.0..=1.0).contains(&cos) {
                return Err(Error::AngleOutOfRange(cos));
            }
        }
        Ok(Self {
            coeff,
            cos_aod,
            cos_aoa,
        })
    }
}

/// Which statistical ensemble produced a realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelModel {
    Los,
    Nlos,
}

/// A sampled channel: the dense matrix together with the generating path
/// parameters, user distance and ensemble tag.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    matrix: CMatrix,
    paths: Vec<PathParams>,
    distance_m: f64,
    model: ChannelModel,
}

impl ChannelRealization {
    /// Synthesize the matrix from path parameters.
    pub fn from_paths(
        paths: Vec<PathParams>,
        n_tx: usize,
        n_rx: usize,
        distance_m: f64,
        model: ChannelModel,
    ) -> Result<Self, Error> {
        if paths.is_empty() {
            return Err(Error::InvalidConfig(
                "a channel needs at least one path".into(),
            ));
        }
        for p in &paths {
            PathParams::new(p.coeff, p.cos_aod, p.cos_aoa)?;
        }
        let matrix = synth_channel(&paths, n_tx, n_rx);
        Ok(Self {
            matrix,
            paths,
            distance_m,
            model,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn paths(&self) -> &[PathParams] {
        &self.paths
    }

    pub fn distance_m(&self) -> f64 {
        self.distance_m
    }

    pub fn model(&self) -> ChannelModel {
        self.model
    }

    pub fn n_tx(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_rx(&self) -> usize {
        self.matrix.nrows()
    }

    /// Serializable form (paths only; the matrix is re-synthesized on
    /// load).
    pub fn to_record(&self) -> ChannelRecord {
        ChannelRecord {
            n_tx: self.n_tx(),
            n_rx: self.n_rx(),
            distance_m: self.distance_m,
            model: self.model,
            paths: self.paths.clone(),
        }
    }
}

/// JSON-serializable channel description; see
/// [`ChannelRealization::to_record`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRecord {
    pub n_tx: usize,
    pub n_rx: usize,
    pub distance_m: f64,
    pub model: ChannelModel,
    pub paths: Vec<PathParams>,
}

impl ChannelRecord {
    /// Rebuild the dense realization from the stored paths.
    pub fn realize(&self) -> Result<ChannelRealization, Error> {
        ChannelRealization::from_paths(
            self.paths.clone(),
            self.n_tx,
            self.n_rx,
            self.distance_m,
            self.model,
        )
    }
}

// ---------------------------------------------------------------------------
// Steering and synthesis
// ---------------------------------------------------------------------------

/// Transmit steering vector: entry `n` is `exp(j pi n cos_angle)`.
pub fn steering_tx(cos_angle: f64, n_tx: usize) -> Result<CVector, Error> {
    check_cos(cos_angle)?;
    Ok(steering(cos_angle, n_tx))
}

/// Receive steering vector: entry `m` is `exp(j pi m cos_angle)`.
pub fn steering_rx(cos_angle: f64, n_rx: usize) -> Result<CVector, Error> {
    check_cos(cos_angle)?;
    Ok(steering(cos_angle, n_rx))
}

fn check_cos(cos_angle: f64) -> Result<(), Error> {
    if (-1.0..=1.0).contains(&cos_angle) {
        Ok(())
    } else {
        Err(Error::AngleOutOfRange(cos_angle))
    }
}

fn steering(cos_angle: f64, len: usize) -> CVector {
    DVector::from_fn(len, |i, _| Complex64::cis(PI * i as f64 * cos_angle))
}

/// Sum of weighted steering outer products over all paths. The receive
/// steering takes the departure cosine and the transmit steering the
/// arrival cosine, matching this model's labeling convention.
pub fn synth_channel(paths: &[PathParams], n_tx: usize, n_rx: usize) -> CMatrix {
    let mut h = DMatrix::zeros(n_rx, n_tx);
    for p in paths {
        let a_rx = steering(p.cos_aod, n_rx);
        let a_tx = steering(p.cos_aoa, n_tx);
        h += a_rx * a_tx.adjoint() * p.coeff;
    }
    h
}

/// Large-scale power gain `(100 m / d)^exponent`; equals 1 at 100 m.
///
/// Defined for any positive distance; the samplers additionally restrict
/// `d` to `[10, 500]` m.
pub fn large_scale_gain(distance_m: f64, exponent: f64) -> f64 {
    (REFERENCE_DISTANCE_M / distance_m).powf(exponent)
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Uniform user distance in `[10, 500]` m.
pub fn sample_user_distance<R: Rng>(rng: &mut R) -> f64 {
    rng.random_range(MIN_DISTANCE_M..=MAX_DISTANCE_M)
}

/// Draw a line-of-sight realization: one direct path plus `L - 1` diffuse
/// paths, each diffuse path [`LOS_DIRECT_TO_DIFFUSE_DB`] weaker on
/// average. Angle cosines are i.i.d. uniform on `[-1, 1]`; coefficients
/// are circularly-symmetric Gaussian.
pub fn sample_los<R: Rng>(
    rng: &mut R,
    config: &ChannelConfig,
    distance_m: f64,
) -> Result<ChannelRealization, Error> {
    check_distance(distance_m)?;
    let total = large_scale_gain(distance_m, config.path_loss_exponent);
    let n_diffuse = config.n_paths.saturating_sub(1);
    let ratio = 10f64.powf(LOS_DIRECT_TO_DIFFUSE_DB / 10.0);
    let direct_power = total * ratio / (ratio + n_diffuse as f64);
    let diffuse_power = total / (ratio + n_diffuse as f64);

    let mut paths = Vec::with_capacity(config.n_paths);
    paths.push(random_path(rng, direct_power));
    for _ in 0..n_diffuse {
        paths.push(random_path(rng, diffuse_power));
    }
    ChannelRealization::from_paths(paths, config.n_tx, config.n_rx, distance_m, ChannelModel::Los)
}

/// Draw a non-line-of-sight realization: `L` statistically identical
/// paths sharing the large-scale power evenly.
pub fn sample_nlos<R: Rng>(
    rng: &mut R,
    config: &ChannelConfig,
    distance_m: f64,
) -> Result<ChannelRealization, Error> {
    check_distance(distance_m)?;
    let total = large_scale_gain(distance_m, config.path_loss_exponent);
    let per_path = total / config.n_paths.max(1) as f64;
    let paths = (0..config.n_paths.max(1))
        .map(|_| random_path(rng, per_path))
        .collect();
    ChannelRealization::from_paths(paths, config.n_tx, config.n_rx, distance_m, ChannelModel::Nlos)
}

fn check_distance(distance_m: f64) -> Result<(), Error> {
    if (MIN_DISTANCE_M..=MAX_DISTANCE_M).contains(&distance_m) {
        Ok(())
    } else {
        Err(Error::DistanceOutOfRange(distance_m))
    }
}

fn random_path<R: Rng>(rng: &mut R, mean_power: f64) -> PathParams {
    let sigma = (mean_power / 2.0).sqrt();
    let re = sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
    let im = sigma * rng.sample::<f64, _>(rand_distr::StandardNormal);
    let cos_aod = rng.random_range(-1.0..=1.0);
    let cos_aoa = rng.random_range(-1.0..=1.0);
    PathParams {
        coeff: Complex64::new(re, im),
        cos_aod,
        cos_aoa,
    }
}
