//! Particle swarm optimization with a global-best topology and a repair
//! operator for constraints.
//!
//! Each particle owns an RNG stream derived from the seed and its index, so a
//! run is reproducible whether objective evaluations happen serially or in
//! parallel.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Attempts per particle to draw a feasible starting point.
pub const MAX_INIT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoConfig {
    pub n_particles: usize,
    pub omega_start: f64,
    pub omega_end: f64,
    pub c1: f64,
    pub c2: f64,
    pub max_iters: usize,
    pub seed: u64,
    /// Velocity cap as a fraction of each dimension's range.
    pub v_max_fraction: f64,
    /// Evaluate particles on the rayon pool.
    pub parallel: bool,
}

impl Default for PsoConfig {
    fn default() -> Self {
        Self {
            n_particles: 100,
            omega_start: 0.9,
            omega_end: 0.4,
            c1: 2.0,
            c2: 2.0,
            max_iters: 200,
            seed: 0,
            v_max_fraction: 0.5,
            parallel: false,
        }
    }
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::InvalidArgument("need at least 2 particles".into()));
        }
        if !(self.omega_start >= self.omega_end && self.omega_end > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "inertia must satisfy start >= end > 0, got {} -> {}",
                self.omega_start, self.omega_end
            )));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be >= 1".into()));
        }
        if !(self.v_max_fraction > 0.0) {
            return Err(Error::InvalidArgument("v_max_fraction must be positive".into()));
        }
        Ok(())
    }

    /// Inertia weight at iteration `t`, decaying linearly over the run.
    pub fn inertia(&self, t: usize) -> f64 {
        if self.max_iters <= 1 {
            return self.omega_start;
        }
        let frac = t.min(self.max_iters - 1) as f64 / (self.max_iters - 1) as f64;
        self.omega_start + (self.omega_end - self.omega_start) * frac
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bounds {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::InvalidArgument("bounds must be non-empty and of equal length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| !(l <= h)) {
            return Err(Error::InvalidArgument("each lower bound must not exceed its upper bound".into()));
        }
        Ok(Self { lo, hi })
    }

    pub fn uniform(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    fn clamp(&self, x: &mut [f64]) {
        for ((v, l), h) in x.iter_mut().zip(&self.lo).zip(&self.hi) {
            *v = v.clamp(*l, *h);
        }
    }
}

/// Feasible region beyond the bounding box.
pub trait Constraint: Sync {
    fn is_feasible(&self, x: &[f64]) -> bool;

    /// Moves `x` into the feasible region in place. Returns false when no
    /// feasible point could be produced.
    fn repair(&self, x: &mut [f64]) -> bool;
}

/// Only the bounding box applies.
pub struct BoxOnly;

impl Constraint for BoxOnly {
    fn is_feasible(&self, _x: &[f64]) -> bool {
        true
    }

    fn repair(&self, _x: &mut [f64]) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    pub best_score: f64,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub global_best_position: Vec<f64>,
    pub global_best_score: f64,
    pub iteration: usize,
}

fn score<F: Fn(&[f64]) -> f64>(objective: &F, x: &[f64]) -> f64 {
    let v = objective(x);
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

impl Swarm {
    /// Draws particles uniformly in the box and repairs them into the
    /// feasible region. Each entry of `seeds` that is feasible after repair
    /// replaces the next particle in order.
    pub fn initialize<F>(
        bounds: &Bounds,
        constraint: &dyn Constraint,
        config: &PsoConfig,
        objective: &F,
        seeds: &[Vec<f64>],
    ) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        config.validate()?;
        let dim = bounds.dim();
        let mut particles = Vec::with_capacity(config.n_particles);
        for i in 0..config.n_particles {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64 + 1);
            let mut position = None;
            for _ in 0..MAX_INIT_ATTEMPTS {
                let mut x: Vec<f64> = (0..dim)
                    .map(|d| {
                        let (l, h) = (bounds.lo[d], bounds.hi[d]);
                        if l == h {
                            l
                        } else {
                            rng.random_range(l..=h)
                        }
                    })
                    .collect();
                if constraint.repair(&mut x) && constraint.is_feasible(&x) {
                    position = Some(x);
                    break;
                }
            }
            let Some(position) = position else {
                return Err(Error::Infeasible(format!(
                    "no feasible starting point after {MAX_INIT_ATTEMPTS} draws"
                )));
            };
            let velocity = (0..dim)
                .map(|d| {
                    let span = 0.1 * (bounds.hi[d] - bounds.lo[d]);
                    if span > 0.0 {
                        rng.random_range(-span..=span)
                    } else {
                        0.0
                    }
                })
                .collect();
            particles.push(Particle {
                best_position: position.clone(),
                position,
                velocity,
                best_score: f64::NEG_INFINITY,
                rng,
            });
        }
        let mut slot = 0;
        for seed in seeds {
            if slot == particles.len() {
                break;
            }
            let mut x = seed.clone();
            if x.len() != dim {
                continue;
            }
            bounds.clamp(&mut x);
            if constraint.repair(&mut x) && constraint.is_feasible(&x) {
                particles[slot].position = x.clone();
                particles[slot].best_position = x;
                slot += 1;
            }
        }
        let eval = |p: &mut Particle| {
            p.best_score = score(objective, &p.position);
        };
        if config.parallel {
            particles.par_iter_mut().for_each(eval);
        } else {
            particles.iter_mut().for_each(eval);
        }
        let mut swarm = Swarm {
            global_best_position: particles[0].position.clone(),
            global_best_score: f64::NEG_INFINITY,
            particles,
            iteration: 0,
        };
        swarm.refresh_global_best();
        Ok(swarm)
    }

    fn refresh_global_best(&mut self) {
        for p in &self.particles {
            if p.best_score > self.global_best_score {
                self.global_best_score = p.best_score;
                self.global_best_position.clone_from(&p.best_position);
            }
        }
    }

    /// One synchronous velocity/position update of every particle.
    pub fn step<F>(&mut self, objective: &F, constraint: &dyn Constraint, bounds: &Bounds, config: &PsoConfig)
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let omega = config.inertia(self.iteration);
        let gbest = self.global_best_position.clone();
        let v_max: Vec<f64> = bounds
            .lo
            .iter()
            .zip(&bounds.hi)
            .map(|(l, h)| config.v_max_fraction * (h - l))
            .collect();
        let update = |p: &mut Particle| {
            for d in 0..p.position.len() {
                let r1: f64 = p.rng.random();
                let r2: f64 = p.rng.random();
                let x = p.position[d];
                let v = omega * p.velocity[d]
                    + config.c1 * r1 * (p.best_position[d] - x)
                    + config.c2 * r2 * (gbest[d] - x);
                p.velocity[d] = v.clamp(-v_max[d], v_max[d]);
                p.position[d] = x + p.velocity[d];
            }
            bounds.clamp(&mut p.position);
            if !(constraint.repair(&mut p.position) && constraint.is_feasible(&p.position)) {
                return;
            }
            let s = score(objective, &p.position);
            if s > p.best_score {
                p.best_score = s;
                p.best_position.clone_from(&p.position);
            }
        };
        if config.parallel {
            self.particles.par_iter_mut().for_each(update);
        } else {
            self.particles.iter_mut().for_each(update);
        }
        self.refresh_global_best();
        self.iteration += 1;
    }
}

#[derive(Debug, Clone)]
pub struct PsoOutcome {
    pub best_position: Vec<f64>,
    pub best_score: f64,
    /// Global best score after initialization and after each iteration.
    pub trace: Vec<f64>,
}

/// Maximizes `objective` over the feasible part of `bounds`.
pub fn optimize<F>(
    objective: &F,
    constraint: &dyn Constraint,
    bounds: &Bounds,
    config: &PsoConfig,
    seeds: &[Vec<f64>],
) -> Result<PsoOutcome>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut swarm = Swarm::initialize(bounds, constraint, config, objective, seeds)?;
    let mut trace = Vec::with_capacity(config.max_iters + 1);
    trace.push(swarm.global_best_score);
    for _ in 0..config.max_iters {
        swarm.step(objective, constraint, bounds, config);
        trace.push(swarm.global_best_score);
    }
    Ok(PsoOutcome {
        best_position: swarm.global_best_position,
        best_score: swarm.global_best_score,
        trace,
    })
}

/// Writes `iteration,best_score` rows.
pub fn write_trace_csv(trace: &[f64], path: impl AsRef<std::path::Path>) -> Result<()> {
    use std::io::Write;
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "iteration,best_score").map_err(io)?;
    for (i, s) in trace.iter().enumerate() {
        writeln!(w, "{i},{s}").map_err(io)?;
    }
    w.flush().map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: &[f64]) -> f64 {
        -x.iter().map(|v| v * v).sum::<f64>()
    }

    fn cfg(seed: u64) -> PsoConfig {
        PsoConfig { seed, ..Default::default() }
    }

    #[test]
    fn same_seed_same_swarm() {
        let b = Bounds::uniform(6, -5.0, 5.0).unwrap();
        let a = Swarm::initialize(&b, &BoxOnly, &cfg(3), &sphere, &[]).unwrap();
        let c = Swarm::initialize(&b, &BoxOnly, &cfg(3), &sphere, &[]).unwrap();
        assert_eq!(a.particles.len(), 100);
        for (p, q) in a.particles.iter().zip(&c.particles) {
            assert_eq!(p.position, q.position);
            assert_eq!(p.velocity, q.velocity);
        }
    }

    #[test]
    fn degenerate_box_pins_every_particle() {
        let b = Bounds::new(vec![1.0, -2.0], vec![1.0, -2.0]).unwrap();
        let s = Swarm::initialize(&b, &BoxOnly, &cfg(0), &sphere, &[]).unwrap();
        assert!(s.particles.iter().all(|p| p.position == vec![1.0, -2.0]));
        assert!(s.particles.iter().all(|p| p.velocity == vec![0.0, 0.0]));
    }

    #[test]
    fn converged_swarm_is_a_fixed_point() {
        let b = Bounds::uniform(3, -1.0, 1.0).unwrap();
        let config = cfg(1);
        let mut s = Swarm::initialize(&b, &BoxOnly, &config, &sphere, &[]).unwrap();
        for p in &mut s.particles {
            p.position = vec![0.0; 3];
            p.best_position = vec![0.0; 3];
            p.velocity = vec![0.0; 3];
            p.best_score = 0.0;
        }
        s.global_best_position = vec![0.0; 3];
        s.global_best_score = 0.0;
        s.step(&sphere, &BoxOnly, &b, &config);
        assert!(s.particles.iter().all(|p| p.position == vec![0.0; 3] && p.velocity == vec![0.0; 3]));
        assert_eq!(s.global_best_score, 0.0);
    }

    #[test]
    fn sphere_benchmark() {
        let b = Bounds::uniform(6, -5.0, 5.0).unwrap();
        let out = optimize(&sphere, &BoxOnly, &b, &cfg(42), &[]).unwrap();
        let norm = out.best_position.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(norm < 1e-2, "{norm}");
        assert!(out.trace.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(out.trace.len(), 201);
    }

    #[test]
    fn linear_objective_hits_the_upper_corner() {
        let b = Bounds::uniform(6, -1.0, 1.0).unwrap();
        let f = |x: &[f64]| x.iter().sum::<f64>();
        let out = optimize(&f, &BoxOnly, &b, &cfg(5), &[]).unwrap();
        assert!(out.best_position.iter().all(|v| (v - 1.0).abs() < 1e-3), "{:?}", out.best_position);
    }

    #[test]
    fn flat_objective_returns_the_constant() {
        let b = Bounds::uniform(6, -1.0, 1.0).unwrap();
        let out = optimize(&|_: &[f64]| 7.5, &BoxOnly, &b, &cfg(5), &[]).unwrap();
        assert_eq!(out.best_score, 7.5);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let b = Bounds::uniform(6, -5.0, 5.0).unwrap();
        let serial = optimize(&sphere, &BoxOnly, &b, &cfg(9), &[]).unwrap();
        let par = PsoConfig { parallel: true, ..cfg(9) };
        let parallel = optimize(&sphere, &BoxOnly, &b, &par, &[]).unwrap();
        assert_eq!(serial.trace, parallel.trace);
        assert_eq!(serial.best_position, parallel.best_position);
    }

    struct HalfSpace;

    impl Constraint for HalfSpace {
        fn is_feasible(&self, x: &[f64]) -> bool {
            x.iter().sum::<f64>() <= 1.0 + 1e-12
        }

        fn repair(&self, x: &mut [f64]) -> bool {
            let s: f64 = x.iter().sum();
            if s > 1.0 {
                let shift = (s - 1.0) / x.len() as f64;
                x.iter_mut().for_each(|v| *v -= shift);
            }
            true
        }
    }

    #[test]
    fn constrained_best_is_feasible() {
        let b = Bounds::uniform(4, -1.0, 1.0).unwrap();
        let f = |x: &[f64]| x.iter().sum::<f64>() - x[0] * x[0];
        let out = optimize(&f, &HalfSpace, &b, &cfg(2), &[]).unwrap();
        assert!(HalfSpace.is_feasible(&out.best_position));
        assert!((out.best_score - 1.0).abs() < 1e-3);
    }

    #[test]
    fn warm_start_seeds_the_first_particle() {
        let b = Bounds::uniform(2, -1.0, 1.0).unwrap();
        let s = Swarm::initialize(&b, &BoxOnly, &cfg(0), &sphere, &[vec![0.0, 0.0]]).unwrap();
        assert_eq!(s.global_best_score, 0.0);
        assert_eq!(s.global_best_position, vec![0.0, 0.0]);
    }

    struct Nowhere;

    impl Constraint for Nowhere {
        fn is_feasible(&self, _x: &[f64]) -> bool {
            false
        }

        fn repair(&self, _x: &mut [f64]) -> bool {
            false
        }
    }

    #[test]
    fn empty_region_is_reported() {
        let b = Bounds::uniform(2, -1.0, 1.0).unwrap();
        assert!(matches!(
            Swarm::initialize(&b, &Nowhere, &cfg(0), &sphere, &[]),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn inertia_schedule_endpoints() {
        let c = PsoConfig::default();
        assert_eq!(c.inertia(0), 0.9);
        assert!((c.inertia(199) - 0.4).abs() < 1e-15);
    }
}
