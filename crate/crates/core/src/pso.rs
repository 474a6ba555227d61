//! Stage 3: boundary-compressed particle swarm search for the transmit
//! beam, plus the plain swarm baseline restricted to the constant-modulus
//! set.
//!
//! The constant-modulus constraint makes the transmit-beam search space
//! highly non-convex, so the swarm explores a relaxed space instead: each
//! beam entry may lie anywhere in the disk of radius `1/sqrt(N)`. An
//! inner boundary of radius `d_t = t / (T sqrt(N))` grows linearly with
//! the iteration count; entries that fall inside it are pushed out onto
//! it (personal bests included) and entries that leave the disk are
//! pulled back onto the outer circle, always preserving their phase. At
//! the final iteration the annulus collapses onto the constant-modulus
//! circle, so the returned beam is exactly feasible.
//!
//! Each complex beam entry is treated as two independent real PSO
//! coordinates with independent `rand()` draws; projections act on the
//! complex modulus. Velocity/position updates read the global-best
//! snapshot from the previous sweep, and the global best is refreshed
//! once per iteration by a fold in particle-index order, so parallel and
//! serial runs agree bitwise. Every (iteration, particle) pair draws from
//! its own seeded stream.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::ChannelRealization;
use crate::error::Error;
use crate::model::{SystemConfig, TxBeam};
use crate::rng::{stream_rng, ChaCha8Rng};
use crate::rxbf::{reduced_objective, SolutionBundle};
use crate::CVector;

const INIT_STREAM: u64 = 0x5157_4152;
const STEP_STREAM: u64 = 0x5354_4550;

/// Swarm hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SwarmConfig {
    /// Particles per swarm.
    pub n_particles: usize,
    /// Outer iterations.
    pub n_iterations: usize,
    /// Cognitive (personal-best) acceleration.
    pub cognitive: f64,
    /// Social (global-best) acceleration.
    pub social: f64,
    /// Inertia weight at the first iteration, annealed linearly...
    pub inertia_max: f64,
    /// ...down to this value at the last iteration.
    pub inertia_min: f64,
    /// Velocity clamp, as a fraction of the search-space diameter
    /// `2/sqrt(N)` per real coordinate.
    pub velocity_clamp: f64,
}

impl Default for SwarmConfig {
    /// Desk-scale defaults: 100 particles, 50 iterations,
    /// `c1 = c2 = 1.4`, inertia 0.9 -> 0.4, clamp 0.2.
    fn default() -> Self {
        Self {
            n_particles: 100,
            n_iterations: 50,
            cognitive: 1.4,
            social: 1.4,
            inertia_max: 0.9,
            inertia_min: 0.4,
            velocity_clamp: 0.2,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.n_particles == 0 || self.n_iterations == 0 {
            return Err(Error::InvalidConfig(
                "swarm needs at least one particle and one iteration".into(),
            ));
        }
        if !(self.cognitive >= 0.0) || !(self.social >= 0.0) {
            return Err(Error::InvalidConfig(
                "acceleration coefficients must be nonnegative".into(),
            ));
        }
        if !(0.0 <= self.inertia_min && self.inertia_min <= self.inertia_max) {
            return Err(Error::InvalidConfig(format!(
                "inertia range [{}, {}] is not ordered",
                self.inertia_min, self.inertia_max
            )));
        }
        if !(self.velocity_clamp > 0.0) || !self.velocity_clamp.is_finite() {
            return Err(Error::InvalidConfig(
                "velocity clamp must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    fn velocity_max(&self, n: usize) -> f64 {
        self.velocity_clamp * 2.0 / (n as f64).sqrt()
    }
}

/// One swarm member.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: CVector,
    pub velocity: CVector,
    pub pbest_position: CVector,
    pub pbest_fitness: f64,
}

/// Swarm snapshot after an iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmState {
    pub particles: Vec<Particle>,
    pub gbest_position: CVector,
    pub gbest_fitness: f64,
    pub iteration: usize,
    pub inner_radius: f64,
    pub inertia: f64,
}

/// One row of the per-iteration fitness trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub gbest_fitness: f64,
    pub inner_radius: f64,
    pub inertia: f64,
}

/// A finished swarm run: the exact constant-modulus beam, its full
/// solution bundle, and the global-best trace.
#[derive(Debug, Clone)]
pub struct PsoRun {
    pub beam: TxBeam,
    pub solution: SolutionBundle,
    pub trace: Vec<TraceRow>,
}

/// Every evaluated position was infeasible; the trace is kept for
/// diagnostics.
#[derive(Debug, Clone)]
pub struct InfeasibleRun {
    pub trace: Vec<TraceRow>,
}

/// Initialize the swarm: positions uniform (by area) in the per-entry
/// disk of radius `1/sqrt(N)`, velocities uniform within the clamp,
/// personal bests at the initial positions, global best by evaluating
/// every particle.
pub fn init_swarm<F>(rng: &mut ChaCha8Rng, config: &SwarmConfig, n: usize, fitness: F) -> SwarmState
where
    F: Fn(&CVector) -> f64,
{
    let radius = 1.0 / (n as f64).sqrt();
    let v_max = config.velocity_max(n);
    let mut particles = Vec::with_capacity(config.n_particles);
    for _ in 0..config.n_particles {
        let position = CVector::from_fn(n, |_, _| {
            let r = radius * rng.random::<f64>().sqrt();
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            Complex64::from_polar(r, phi)
        });
        let velocity = CVector::from_fn(n, |_, _| {
            Complex64::new(
                rng.random_range(-v_max..=v_max),
                rng.random_range(-v_max..=v_max),
            )
        });
        let pbest_fitness = fitness(&position);
        particles.push(Particle {
            pbest_position: position.clone(),
            position,
            velocity,
            pbest_fitness,
        });
    }

    let mut gbest_index = 0;
    for (i, p) in particles.iter().enumerate() {
        if p.pbest_fitness > particles[gbest_index].pbest_fitness {
            gbest_index = i;
        }
    }
    let gbest_position = particles[gbest_index].pbest_position.clone();
    let gbest_fitness = particles[gbest_index].pbest_fitness;
    SwarmState {
        particles,
        gbest_position,
        gbest_fitness,
        iteration: 0,
        inner_radius: 0.0,
        inertia: config.inertia_max,
    }
}

/// Standard PSO velocity/position update, one independent `rand()` pair
/// per real coordinate, velocity clamped per coordinate.
pub fn update_particle<R: Rng>(
    particle: &mut Particle,
    gbest: &CVector,
    inertia: f64,
    rng: &mut R,
    config: &SwarmConfig,
) {
    let v_max = config.velocity_max(particle.position.len());
    for j in 0..particle.position.len() {
        let x = particle.position[j];
        let v = particle.velocity[j];
        let pb = particle.pbest_position[j];
        let gb = gbest[j];

        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let mut v_re =
            inertia * v.re + config.cognitive * r1 * (pb.re - x.re) + config.social * r2 * (gb.re - x.re);
        v_re = v_re.clamp(-v_max, v_max);

        let r3: f64 = rng.random();
        let r4: f64 = rng.random();
        let mut v_im =
            inertia * v.im + config.cognitive * r3 * (pb.im - x.im) + config.social * r4 * (gb.im - x.im);
        v_im = v_im.clamp(-v_max, v_max);

        particle.velocity[j] = Complex64::new(v_re, v_im);
        particle.position[j] = Complex64::new(x.re + v_re, x.im + v_im);
    }
}

/// Project a position onto the annulus `[inner_radius, 1/sqrt(N)]` per
/// entry, and the personal best onto the inner boundary only, preserving
/// phases. A zero entry that must move outward takes phase 0.
pub fn compress_boundary(position: &mut CVector, pbest_position: &mut CVector, inner_radius: f64) {
    let outer = 1.0 / (position.len() as f64).sqrt();
    debug_assert!((0.0..=outer * (1.0 + 1e-9)).contains(&inner_radius));
    for e in position.iter_mut() {
        *e = project_annulus(*e, inner_radius, outer);
    }
    for e in pbest_position.iter_mut() {
        *e = project_outward(*e, inner_radius);
    }
}

fn project_annulus(e: Complex64, inner: f64, outer: f64) -> Complex64 {
    let m = e.norm();
    if m > outer {
        e * (outer / m)
    } else {
        project_outward_with_norm(e, m, inner)
    }
}

fn project_outward(e: Complex64, inner: f64) -> Complex64 {
    project_outward_with_norm(e, e.norm(), inner)
}

fn project_outward_with_norm(e: Complex64, m: f64, inner: f64) -> Complex64 {
    if m >= inner {
        e
    } else if m == 0.0 {
        Complex64::new(inner, 0.0)
    } else {
        e * (inner / m)
    }
}

fn project_cm(position: &mut CVector) {
    let outer = 1.0 / (position.len() as f64).sqrt();
    for e in position.iter_mut() {
        let m = e.norm();
        *e = if m == 0.0 {
            Complex64::new(outer, 0.0)
        } else {
            *e * (outer / m)
        };
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SearchSpace {
    /// Relaxed disk with the growing inner boundary.
    CompressedAnnulus,
    /// Constant-modulus circle every iteration.
    ModulusCircle,
}

/// Boundary-compressed swarm search. Fitness is the reduced objective;
/// infeasible beams score negative infinity and never become a best. The
/// returned beam is exactly constant-modulus and the returned bundle is a
/// fresh evaluation of it.
///
/// Fails with [`InfeasibleRun`] only if no particle ever found a feasible
/// beam (or the final best re-evaluates as infeasible after its last
/// projection).
pub fn run_bcpso(
    seed: u64,
    channels: &[ChannelRealization],
    config: &SystemConfig,
    swarm: &SwarmConfig,
) -> Result<PsoRun, InfeasibleRun> {
    run_swarm(seed, channels, config, swarm, SearchSpace::CompressedAnnulus)
}

/// Plain swarm baseline: identical loop, but positions are projected onto
/// the constant-modulus circle from initialization onward and there is no
/// inner-radius schedule.
pub fn run_plain_pso(
    seed: u64,
    channels: &[ChannelRealization],
    config: &SystemConfig,
    swarm: &SwarmConfig,
) -> Result<PsoRun, InfeasibleRun> {
    run_swarm(seed, channels, config, swarm, SearchSpace::ModulusCircle)
}

fn run_swarm(
    seed: u64,
    channels: &[ChannelRealization],
    config: &SystemConfig,
    swarm: &SwarmConfig,
    space: SearchSpace,
) -> Result<PsoRun, InfeasibleRun> {
    swarm.validate().expect("invalid swarm configuration");
    let n = config.n_tx();
    let outer = 1.0 / (n as f64).sqrt();
    let t_max = swarm.n_iterations;

    let fitness = |position: &CVector| -> f64 {
        let beam = TxBeam::relaxed(position.clone()).expect("projected inside the disk");
        match reduced_objective(&beam, channels, config) {
            Ok(bundle) => bundle.sum_rate,
            Err(_) => f64::NEG_INFINITY,
        }
    };

    let mut init_rng = stream_rng(seed, &[INIT_STREAM]);
    let mut state = init_swarm(&mut init_rng, swarm, n, |position| {
        if space == SearchSpace::ModulusCircle {
            let mut on_circle = position.clone();
            project_cm(&mut on_circle);
            fitness(&on_circle)
        } else {
            fitness(position)
        }
    });
    if space == SearchSpace::ModulusCircle {
        for p in &mut state.particles {
            project_cm(&mut p.position);
            p.pbest_position.copy_from(&p.position);
        }
        project_cm(&mut state.gbest_position);
    }

    let mut trace = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        let frac = t as f64 / t_max as f64;
        let inertia = swarm.inertia_max - frac * (swarm.inertia_max - swarm.inertia_min);
        let inner_radius = match space {
            SearchSpace::CompressedAnnulus => frac * outer,
            SearchSpace::ModulusCircle => outer,
        };
        let gbest_snapshot = state.gbest_position.clone();

        state
            .particles
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, particle)| {
                let mut rng = stream_rng(seed, &[STEP_STREAM, t as u64, i as u64]);
                update_particle(particle, &gbest_snapshot, inertia, &mut rng, swarm);
                match space {
                    SearchSpace::CompressedAnnulus => {
                        compress_boundary(&mut particle.position, &mut particle.pbest_position, inner_radius);
                    }
                    SearchSpace::ModulusCircle => project_cm(&mut particle.position),
                }
                let fit = fitness(&particle.position);
                if fit > particle.pbest_fitness {
                    particle.pbest_fitness = fit;
                    particle.pbest_position.copy_from(&particle.position);
                }
            });

        // deterministic fold in particle-index order
        for particle in &state.particles {
            if particle.pbest_fitness > state.gbest_fitness {
                state.gbest_fitness = particle.pbest_fitness;
                state.gbest_position.copy_from(&particle.pbest_position);
            }
        }
        state.iteration = t;
        state.inner_radius = inner_radius;
        state.inertia = inertia;

        #[cfg(debug_assertions)]
        for particle in &state.particles {
            for e in particle.position.iter() {
                let m = e.norm();
                assert!(
                    m >= inner_radius - 1e-12 && m <= outer + 1e-12,
                    "particle left the annulus: |x| = {m}, bounds [{inner_radius}, {outer}]"
                );
            }
        }

        trace.push(TraceRow {
            iteration: t,
            gbest_fitness: state.gbest_fitness,
            inner_radius,
            inertia,
        });
    }

    if !state.gbest_fitness.is_finite() {
        return Err(InfeasibleRun { trace });
    }
    let beam =
        TxBeam::exact_cm(state.gbest_position.clone()).expect("final projection pins the circle");
    match reduced_objective(&beam, channels, config) {
        Ok(solution) => Ok(PsoRun {
            beam,
            solution,
            trace,
        }),
        Err(_) => Err(InfeasibleRun { trace }),
    }
}

/// First iteration after which the relative global-best improvement stays
/// below `rel_tol` for `window` consecutive steps; the final iteration if
/// that never happens. Iterations are 1-based over `trace`.
pub fn convergence_iteration(trace: &[f64], rel_tol: f64, window: usize) -> usize {
    assert!(!trace.is_empty(), "trace must be non-empty");
    let t_max = trace.len();
    for start in 1..=t_max {
        let end = (start + window - 1).min(t_max - 1);
        if (start..=end).all(|j| relative_step(trace[j - 1], trace[j]) < rel_tol) {
            return start;
        }
    }
    t_max
}

fn relative_step(prev: f64, next: f64) -> f64 {
    if next == prev {
        return 0.0;
    }
    if !prev.is_finite() {
        return f64::INFINITY;
    }
    (next - prev).abs() / prev.abs().max(f64::MIN_POSITIVE)
}

/// Serialize a fitness trace as CSV with columns
/// `iteration,gbest_fitness,inner_radius,inertia`.
pub fn write_trace_csv<W: std::io::Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iteration,gbest_fitness,inner_radius,inertia")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.iteration, row.gbest_fitness, row.inner_radius, row.inertia
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_los, ChannelConfig, ChannelModel, ChannelRealization, PathParams};
    use crate::model::CM_REL_TOL;
    use approx::assert_relative_eq;

    fn tiny_swarm() -> SwarmConfig {
        SwarmConfig {
            n_particles: 12,
            n_iterations: 15,
            ..SwarmConfig::default()
        }
    }

    fn los_channels(seed: u64, n: usize, m: usize, k: usize) -> Vec<ChannelRealization> {
        let config = ChannelConfig::new(n, m);
        let mut rng = stream_rng(seed, &[99]);
        (0..k)
            .map(|_| sample_los(&mut rng, &config, 120.0).unwrap())
            .collect()
    }

    #[test]
    fn config_validation() {
        assert!(SwarmConfig::default().validate().is_ok());
        assert!(SwarmConfig {
            n_particles: 0,
            ..SwarmConfig::default()
        }
        .validate()
        .is_err());
        assert!(SwarmConfig {
            inertia_min: 1.0,
            inertia_max: 0.5,
            ..SwarmConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn init_positions_inside_disk_and_gbest_is_max() {
        let config = tiny_swarm();
        let fitness = |p: &CVector| -p.norm_squared();
        let state = init_swarm(&mut stream_rng(1, &[0]), &config, 4, fitness);
        let radius = 0.5;
        for particle in &state.particles {
            for e in particle.position.iter() {
                assert!(e.norm() <= radius + 1e-12);
            }
            assert!(particle.pbest_fitness <= state.gbest_fitness);
        }
        let best = state
            .particles
            .iter()
            .map(|p| p.pbest_fitness)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, state.gbest_fitness);
    }

    #[test]
    fn init_is_deterministic() {
        let config = tiny_swarm();
        let fitness = |p: &CVector| p.norm_squared();
        let a = init_swarm(&mut stream_rng(2, &[0]), &config, 4, fitness);
        let b = init_swarm(&mut stream_rng(2, &[0]), &config, 4, fitness);
        assert_eq!(a, b);
    }

    #[test]
    fn update_is_pure_drift_without_attraction() {
        // inertia 1, c1 = c2 = 0: position integrates the velocity
        let config = SwarmConfig {
            cognitive: 0.0,
            social: 0.0,
            velocity_clamp: 10.0,
            ..SwarmConfig::default()
        };
        let mut particle = Particle {
            position: CVector::zeros(1),
            velocity: CVector::from_vec(vec![Complex64::new(0.1, 0.0)]),
            pbest_position: CVector::zeros(1),
            pbest_fitness: 0.0,
        };
        let gbest = CVector::zeros(1);
        update_particle(&mut particle, &gbest, 1.0, &mut stream_rng(3, &[0]), &config);
        assert_relative_eq!(particle.velocity[0].re, 0.1, max_relative = 1e-15);
        assert_relative_eq!(particle.position[0].re, 0.1, max_relative = 1e-15);
    }

    #[test]
    fn update_fixed_point_at_shared_best() {
        // x = pbest = gbest with zero inertia: every attraction term
        // vanishes regardless of the random draws
        let config = SwarmConfig {
            cognitive: 1.0,
            social: 0.0,
            ..SwarmConfig::default()
        };
        let x = CVector::from_vec(vec![Complex64::new(0.2, -0.1)]);
        let mut particle = Particle {
            position: x.clone(),
            velocity: CVector::zeros(1),
            pbest_position: x.clone(),
            pbest_fitness: 0.0,
        };
        update_particle(&mut particle, &x, 0.0, &mut stream_rng(4, &[0]), &config);
        assert_eq!(particle.position, x);
        assert_eq!(particle.velocity, CVector::zeros(1));
    }

    #[test]
    fn velocities_contract_when_swarm_agrees() {
        // pbest = gbest = x and inertia < 1: speeds decay geometrically
        let config = SwarmConfig {
            cognitive: 1.4,
            social: 1.4,
            velocity_clamp: 10.0,
            ..SwarmConfig::default()
        };
        let x = CVector::from_vec(vec![Complex64::new(0.1, 0.1); 4]);
        let mut particle = Particle {
            position: x.clone(),
            velocity: CVector::from_vec(vec![Complex64::new(0.3, -0.2); 4]),
            pbest_position: x.clone(),
            pbest_fitness: 0.0,
        };
        let mut rng = stream_rng(5, &[0]);
        let mut speed = particle.velocity.norm();
        for _ in 0..25 {
            // keep position pinned so the attraction terms stay zero
            let pin = particle.pbest_position.clone();
            particle.position.copy_from(&pin);
            update_particle(&mut particle, &pin, 0.7, &mut rng, &config);
            let next = particle.velocity.norm();
            assert!(next <= speed * 0.7 + 1e-15);
            speed = next;
        }
        assert!(speed < 1e-3);
    }

    #[test]
    fn inner_projection_preserves_phase() {
        let phi = std::f64::consts::FRAC_PI_3;
        let mut position = CVector::from_vec(vec![Complex64::from_polar(0.1, phi)]);
        let mut pbest = position.clone();
        compress_boundary(&mut position, &mut pbest, 0.5);
        assert!((position[0] - Complex64::from_polar(0.5, phi)).norm() < 1e-12);
        assert!((pbest[0] - Complex64::from_polar(0.5, phi)).norm() < 1e-12);
    }

    #[test]
    fn outer_projection_caps_modulus() {
        let phi = 1.1;
        let mut position = CVector::from_vec(vec![Complex64::from_polar(1.2, phi)]);
        let mut pbest = CVector::from_vec(vec![Complex64::from_polar(0.9, phi)]);
        compress_boundary(&mut position, &mut pbest, 0.5);
        assert!((position[0] - Complex64::from_polar(1.0, phi)).norm() < 1e-12);
        // personal best is only pushed outward, never capped
        assert!((pbest[0] - Complex64::from_polar(0.9, phi)).norm() < 1e-12);
    }

    #[test]
    fn final_inner_radius_collapses_to_the_circle() {
        let mut position = CVector::from_vec(vec![
            Complex64::from_polar(0.05, 0.3),
            Complex64::from_polar(0.4, -2.0),
            Complex64::from_polar(0.7, 1.0),
        ]);
        let mut pbest = position.clone();
        let outer = 1.0 / 3f64.sqrt();
        compress_boundary(&mut position, &mut pbest, outer);
        for e in position.iter() {
            assert_relative_eq!(e.norm(), outer, max_relative = 1e-12);
        }
    }

    #[test]
    fn zero_entry_moves_to_inner_radius_with_phase_zero() {
        let mut position = CVector::from_vec(vec![Complex64::new(0.0, 0.0)]);
        let mut pbest = position.clone();
        compress_boundary(&mut position, &mut pbest, 0.25);
        assert_eq!(position[0], Complex64::new(0.25, 0.0));
    }

    #[test]
    fn bcpso_trace_is_monotone_and_beam_is_cm() {
        let channels = los_channels(6, 4, 2, 2);
        let config = SystemConfig::new(4, 2, 2, 100.0, 1.0, vec![0.5, 0.5]).unwrap();
        let run = run_bcpso(7, &channels, &config, &tiny_swarm()).unwrap();
        let mut last = f64::NEG_INFINITY;
        for row in &run.trace {
            assert!(row.gbest_fitness >= last);
            last = row.gbest_fitness;
        }
        let target = 0.5;
        for e in run.beam.entries().iter() {
            assert!((e.norm() - target).abs() <= CM_REL_TOL * target);
        }
        assert_eq!(run.trace.len(), tiny_swarm().n_iterations);
    }

    #[test]
    fn bcpso_single_user_single_path_reaches_matched_beam() {
        // one rank-one channel: the conjugate-steering beam achieves
        // gain M*N*|coeff|^2; the swarm should land within 2%
        let coeff = Complex64::new(0.9, 0.4);
        let path = PathParams::new(coeff, 0.37, -0.62).unwrap();
        let ch = ChannelRealization::from_paths(vec![path], 4, 2, 100.0, ChannelModel::Los).unwrap();
        let config = SystemConfig::new(4, 2, 1, 100.0, 1.0, vec![0.0]).unwrap();
        let swarm = SwarmConfig {
            n_particles: 60,
            n_iterations: 40,
            ..SwarmConfig::default()
        };
        let run = run_bcpso(11, &[ch], &config, &swarm).unwrap();
        let ideal = (1.0 + 2.0 * 4.0 * coeff.norm_sqr() * 100.0).log2();
        assert!(
            run.solution.sum_rate >= 0.98 * ideal,
            "swarm rate {} below 98% of matched-beam rate {ideal}",
            run.solution.sum_rate
        );
    }

    #[test]
    fn plain_pso_keeps_beams_on_the_circle() {
        let channels = los_channels(8, 4, 2, 2);
        let config = SystemConfig::new(4, 2, 2, 100.0, 1.0, vec![0.5, 0.5]).unwrap();
        let run = run_plain_pso(9, &channels, &config, &tiny_swarm()).unwrap();
        let target = 0.5;
        for e in run.beam.entries().iter() {
            assert!((e.norm() - target).abs() <= CM_REL_TOL * target);
        }
        let mut last = f64::NEG_INFINITY;
        for row in &run.trace {
            assert!(row.gbest_fitness >= last);
            last = row.gbest_fitness;
        }
    }

    #[test]
    fn runs_are_bitwise_reproducible() {
        let channels = los_channels(10, 4, 2, 2);
        let config = SystemConfig::new(4, 2, 2, 50.0, 1.0, vec![0.5, 0.5]).unwrap();
        let a = run_bcpso(13, &channels, &config, &tiny_swarm()).unwrap();
        let b = run_bcpso(13, &channels, &config, &tiny_swarm()).unwrap();
        assert_eq!(a.beam.entries(), b.beam.entries());
        assert_eq!(a.solution.sum_rate, b.solution.sum_rate);
        assert_eq!(a.trace, b.trace);
        let c = run_bcpso(14, &channels, &config, &tiny_swarm()).unwrap();
        assert_ne!(a.beam.entries(), c.beam.entries());
    }

    #[test]
    fn infeasible_everywhere_is_reported_with_trace() {
        let channels = los_channels(12, 4, 2, 2);
        let config = SystemConfig::new(4, 2, 2, 1.0, 1.0, vec![40.0, 40.0]).unwrap();
        let err = run_bcpso(15, &channels, &config, &tiny_swarm()).unwrap_err();
        assert_eq!(err.trace.len(), tiny_swarm().n_iterations);
        assert!(err.trace.iter().all(|r| r.gbest_fitness == f64::NEG_INFINITY));
    }

    #[test]
    fn convergence_index_examples() {
        assert_eq!(convergence_iteration(&[2.0; 6], 1e-6, 3), 1);
        assert_eq!(convergence_iteration(&[1.0, 2.0, 2.0, 2.0, 2.0], 1e-6, 3), 2);
        let improving: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        assert_eq!(convergence_iteration(&improving, 1e-6, 3), 10);
        assert_eq!(convergence_iteration(&[5.0], 1e-6, 3), 1);
    }

    #[test]
    fn trace_csv_layout() {
        let rows = vec![
            TraceRow {
                iteration: 1,
                gbest_fitness: 2.5,
                inner_radius: 0.1,
                inertia: 0.9,
            },
            TraceRow {
                iteration: 2,
                gbest_fitness: 2.75,
                inner_radius: 0.2,
                inertia: 0.88,
            },
        ];
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,gbest_fitness,inner_radius,inertia");
        assert_eq!(lines[1], "1,2.5,0.1,0.9");
        assert_eq!(lines.len(), 3);
    }
}
