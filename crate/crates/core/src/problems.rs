//! Fitness interface and the benchmark problems.
//!
//! Every problem takes a solution `x ∈ [0,1]^dx` and a task `θ ∈ [0,1]^dθ`
//! and returns a fitness in `[0,1]`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed, Stream};

pub trait Problem: Send + Sync {
    fn name(&self) -> String;
    fn solution_dim(&self) -> usize;
    fn task_dim(&self) -> usize;

    /// Fitness of `x` on task `theta`. Inputs are assumed to have the right
    /// dimensions; see [`Problem::fitness`] for the checked form.
    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64;

    fn fitness(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        if x.len() != self.solution_dim() || theta.len() != self.task_dim() {
            return Err(Error::invalid(format!(
                "{} expects x in R^{} and theta in R^{}, got {} and {}",
                self.name(),
                self.solution_dim(),
                self.task_dim(),
                x.len(),
                theta.len()
            )));
        }
        Ok(self.evaluate(x, theta))
    }
}

// ---------------------------------------------------------------------------
// 10-DoF planar arm

pub const ARM_JOINTS: usize = 10;
pub const ARM_TARGET: [f64; 2] = [0.5, 0.5];
pub const ARM_MIN_ANGLE_RANGE: f64 = 0.1;
pub const ARM_MIN_LENGTH: f64 = 0.5;
pub const ARM_MAX_LENGTH: f64 = 1.0;

/// End effector of a planar chain rooted at the origin, each segment
/// `segment_length` long, joint angles accumulating from the base.
pub fn arm_forward_kinematics(angles: &[f64], segment_length: f64) -> [f64; 2] {
    let mut heading = 0.0;
    let mut pos = [0.0, 0.0];
    for a in angles {
        heading += a;
        pos[0] += segment_length * heading.cos();
        pos[1] += segment_length * heading.sin();
    }
    pos
}

/// `θ = (θα, θL)`: maximum joint deflection and total arm length.
pub fn arm_fitness(x: &[f64], theta: &[f64]) -> f64 {
    let alpha_max = ARM_MIN_ANGLE_RANGE + theta[0] * (PI - ARM_MIN_ANGLE_RANGE);
    let total = ARM_MIN_LENGTH + (ARM_MAX_LENGTH - ARM_MIN_LENGTH) * theta[1];
    let angles: Vec<f64> = x.iter().map(|v| (2.0 * v - 1.0) * alpha_max).collect();
    let ee = arm_forward_kinematics(&angles, total / x.len() as f64);
    let d2 = (ee[0] - ARM_TARGET[0]).powi(2) + (ee[1] - ARM_TARGET[1]).powi(2);
    (-d2).exp()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arm;

impl Problem for Arm {
    fn name(&self) -> String {
        "arm10".into()
    }
    fn solution_dim(&self) -> usize {
        ARM_JOINTS
    }
    fn task_dim(&self) -> usize {
        2
    }
    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64 {
        arm_fitness(x, theta)
    }
}

// ---------------------------------------------------------------------------
// Archery

pub const ARCHERY_MIN_DISTANCE: f64 = 5.0;
pub const ARCHERY_MAX_DISTANCE: f64 = 40.0;
pub const ARCHERY_MAX_WIND: f64 = 10.0;
pub const ARCHERY_MAX_ANGLE: f64 = PI / 12.0;
pub const ARCHERY_SPEED: f64 = 70.0;
pub const GRAVITY: f64 = 9.81;
pub const RING_WIDTH: f64 = 0.061;

/// Squared distance (m²) between the impact point and the target centre,
/// measured in the target plane. Scoring rings are spaced by
/// [`RING_WIDTH`] in this quantity.
pub fn archery_miss(x: &[f64], theta: &[f64]) -> f64 {
    let distance =
        ARCHERY_MIN_DISTANCE + (ARCHERY_MAX_DISTANCE - ARCHERY_MIN_DISTANCE) * theta[0];
    let wind = -ARCHERY_MAX_WIND + 2.0 * ARCHERY_MAX_WIND * theta[1];
    let yaw = (2.0 * x[0] - 1.0) * ARCHERY_MAX_ANGLE;
    let pitch = (2.0 * x[1] - 1.0) * ARCHERY_MAX_ANGLE;
    let dir = [-yaw.sin(), yaw.cos() * pitch.cos(), yaw.cos() * pitch.sin()];
    let t = distance / (ARCHERY_SPEED * dir[1]);
    let lateral = 0.5 * wind * t * t + ARCHERY_SPEED * dir[0] * t;
    let vertical = -0.5 * GRAVITY * t * t + ARCHERY_SPEED * dir[2] * t;
    lateral * lateral + vertical * vertical
}

/// Ring score in tenths: 1.0 inside the inner ring, 0.0 beyond the tenth.
pub fn archery_score(miss: f64) -> f64 {
    let ring = (miss / RING_WIDTH).floor();
    (10.0 - ring).max(0.0) / 10.0
}

/// `x = (yaw, pitch)`, `θ = (distance, wind)`, all normalised to `[0,1]`.
pub fn archery_fitness(x: &[f64], theta: &[f64]) -> f64 {
    archery_score(archery_miss(x, theta))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Archery;

impl Problem for Archery {
    fn name(&self) -> String {
        "archery".into()
    }
    fn solution_dim(&self) -> usize {
        2
    }
    fn task_dim(&self) -> usize {
        2
    }
    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64 {
        archery_fitness(x, theta)
    }
}

// ---------------------------------------------------------------------------
// Linear toy with a known optimum

pub const LINEAR_TOY_SOLUTION_DIM: usize = 4;
pub const LINEAR_TOY_TASK_DIM: usize = 2;

/// `f = exp(-|x - (Aθ + b)|²)` with `Aθ + b ∈ [0.1, 0.9]^dx` on the whole task cube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearToy {
    seed: u64,
    matrix: Vec<Vec<f64>>,
    offset: Vec<f64>,
}

impl LinearToy {
    pub fn new(seed: u64) -> Self {
        Self::with_dims(seed, LINEAR_TOY_SOLUTION_DIM, LINEAR_TOY_TASK_DIM)
            .expect("default dimensions are valid")
    }

    pub fn with_dims(seed: u64, solution_dim: usize, task_dim: usize) -> Result<Self> {
        if solution_dim < task_dim || task_dim == 0 {
            return Err(Error::invalid(
                "linear toy needs solution_dim >= task_dim >= 1 for a full-rank map",
            ));
        }
        let mut rng = rng_from_seed(derive_seed(seed, Stream::Problem, 0));
        loop {
            let mut matrix = Vec::with_capacity(solution_dim);
            let mut offset = Vec::with_capacity(solution_dim);
            for _ in 0..solution_dim {
                let raw: Vec<f64> = (0..task_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                let width: f64 = raw.iter().map(|a| a.abs()).sum();
                // row spans at most 80% of [0.1, 0.9]
                let span = 0.8 * rng.random_range(0.5..1.0);
                let scale = span / width.max(1e-12);
                let row: Vec<f64> = raw.iter().map(|a| a * scale).collect();
                let low: f64 = row.iter().map(|a| a.min(0.0)).sum();
                let slack = 0.8 - span;
                offset.push(0.1 - low + rng.random::<f64>() * slack);
                matrix.push(row);
            }
            if crate::delaunay::affine_rank(&transpose_with_origin(&matrix), task_dim) == task_dim {
                return Ok(LinearToy {
                    seed,
                    matrix,
                    offset,
                });
            }
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The analytic optimum `Aθ + b`.
    pub fn optimum(&self, theta: &[f64]) -> Vec<f64> {
        self.matrix
            .iter()
            .zip(&self.offset)
            .map(|(row, b)| b + row.iter().zip(theta).map(|(a, t)| a * t).sum::<f64>())
            .collect()
    }
}

/// Columns of `matrix` as points, preceded by the origin, for a rank check.
fn transpose_with_origin(matrix: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let cols = matrix[0].len();
    let mut pts = vec![vec![0.0; matrix.len()]];
    for c in 0..cols {
        pts.push(matrix.iter().map(|row| row[c]).collect());
    }
    pts
}

impl Problem for LinearToy {
    fn name(&self) -> String {
        format!("linear_toy({})", self.seed)
    }
    fn solution_dim(&self) -> usize {
        self.matrix.len()
    }
    fn task_dim(&self) -> usize {
        self.matrix[0].len()
    }
    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64 {
        let opt = self.optimum(theta);
        let d2: f64 = x.iter().zip(&opt).map(|(a, b)| (a - b) * (a - b)).sum();
        (-d2).exp()
    }
}

// ---------------------------------------------------------------------------
// Selection by name

/// The benchmark problems, addressable by name: `arm10`, `archery`,
/// `linear_toy` or `linear_toy(<seed>)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Benchmark {
    Arm(Arm),
    Archery(Archery),
    LinearToy(LinearToy),
}

impl Benchmark {
    fn inner(&self) -> &dyn Problem {
        match self {
            Benchmark::Arm(p) => p,
            Benchmark::Archery(p) => p,
            Benchmark::LinearToy(p) => p,
        }
    }
}

impl Problem for Benchmark {
    fn name(&self) -> String {
        self.inner().name()
    }
    fn solution_dim(&self) -> usize {
        self.inner().solution_dim()
    }
    fn task_dim(&self) -> usize {
        self.inner().task_dim()
    }
    fn evaluate(&self, x: &[f64], theta: &[f64]) -> f64 {
        match self {
            Benchmark::Arm(_) => arm_fitness(x, theta),
            Benchmark::Archery(_) => archery_fitness(x, theta),
            Benchmark::LinearToy(p) => p.evaluate(x, theta),
        }
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "arm10" | "arm" => return Ok(Benchmark::Arm(Arm)),
            "archery" => return Ok(Benchmark::Archery(Archery)),
            "linear_toy" => return Ok(Benchmark::LinearToy(LinearToy::new(0))),
            _ => {}
        }
        if let Some(arg) = s
            .strip_prefix("linear_toy(")
            .and_then(|rest| rest.strip_suffix(')'))
        {
            let seed = arg
                .trim()
                .parse::<u64>()
                .map_err(|_| Error::invalid(format!("bad linear_toy seed '{arg}'")))?;
            return Ok(Benchmark::LinearToy(LinearToy::new(seed)));
        }
        Err(Error::invalid(format!(
            "unknown problem '{s}' (expected arm10, archery or linear_toy(<seed>))"
        )))
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn straight_chains() {
        let p = arm_forward_kinematics(&[0.0; 10], 0.1);
        assert!(close(p[0], 1.0, 1e-12) && close(p[1], 0.0, 1e-12));
        let mut angles = [0.0; 10];
        angles[0] = PI / 2.0;
        let p = arm_forward_kinematics(&angles, 0.1);
        assert!(close(p[0], 0.0, 1e-12) && close(p[1], 1.0, 1e-12));
    }

    #[test]
    fn staircase_chain() {
        // +90, -90, ... alternates between heading up and heading right
        let angles: Vec<f64> = (0..10)
            .map(|i| if i % 2 == 0 { PI / 2.0 } else { -PI / 2.0 })
            .collect();
        let p = arm_forward_kinematics(&angles, 0.1);
        assert!(close(p[0], 0.5, 1e-12) && close(p[1], 0.5, 1e-12), "{p:?}");
    }

    #[test]
    fn arm_hand_computed_values() {
        let x = [0.5; 10];
        assert!(close(arm_fitness(&x, &[0.3, 1.0]), (-0.5f64).exp(), 1e-12));
        assert!(close(arm_fitness(&x, &[0.9, 0.0]), (-0.25f64).exp(), 1e-12));
        assert!(close((-0.5f64).exp(), 0.6065, 1e-4));
        assert!(close((-0.25f64).exp(), 0.7788, 1e-4));
    }

    #[test]
    fn archery_short_straight_shot_hits_the_centre() {
        let x = [0.5, 0.5];
        let theta = [0.0, 0.5];
        let miss = archery_miss(&x, &theta);
        let t = 5.0 / 70.0;
        let dz = -0.5 * GRAVITY * t * t;
        assert!(close(t, 0.071429, 1e-6));
        assert!(close(dz, -0.025026, 1e-6));
        assert!(close(miss, dz * dz, 1e-15));
        assert_eq!(archery_fitness(&x, &theta), 1.0);
    }

    #[test]
    fn archery_gross_miss_scores_zero() {
        // pitch = -pi/12 at 40 m: the arrow lands more than 12 m low
        let x = [0.5, 0.0];
        let theta = [1.0, 0.5];
        assert!(archery_miss(&x, &theta).sqrt() > 12.0);
        assert_eq!(archery_fitness(&x, &theta), 0.0);
    }

    #[test]
    fn archery_score_steps_at_ring_boundaries() {
        for k in 1..=10 {
            let edge = k as f64 * RING_WIDTH;
            let below = archery_score(edge * (1.0 - 1e-9));
            let above = archery_score(edge * (1.0 + 1e-9));
            assert!(close(below - above, 0.1, 1e-12), "ring {k}: {below} {above}");
        }
        assert_eq!(archery_score(0.0), 1.0);
        assert_eq!(archery_score(10.0 * RING_WIDTH), 0.0);
    }

    #[test]
    fn linear_toy_optimum_and_unit_offset() {
        let toy = LinearToy::new(3);
        let theta = [0.2, 0.7];
        let opt = toy.optimum(&theta);
        assert_eq!(toy.evaluate(&opt, &theta), 1.0);
        let mut off = opt.clone();
        off[0] += 1.0;
        assert!(close(toy.evaluate(&off, &theta), (-1.0f64).exp(), 1e-12));
    }

    #[test]
    fn linear_toy_optimum_stays_inside_margin() {
        for seed in 0..20 {
            let toy = LinearToy::new(seed);
            for corner in [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]] {
                for v in toy.optimum(&corner) {
                    assert!((0.1 - 1e-12..=0.9 + 1e-12).contains(&v), "seed {seed}: {v}");
                }
            }
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("arm10".parse::<Benchmark>().unwrap().solution_dim(), 10);
        assert_eq!("archery".parse::<Benchmark>().unwrap().name(), "archery");
        let toy: Benchmark = "linear_toy(12)".parse().unwrap();
        assert_eq!(toy.name(), "linear_toy(12)");
        assert!("door".parse::<Benchmark>().is_err());
        assert!("linear_toy(x)".parse::<Benchmark>().is_err());
    }

    #[test]
    fn checked_fitness_rejects_wrong_dimensions() {
        assert!(Archery.fitness(&[0.5], &[0.5, 0.5]).is_err());
        assert!(Arm.fitness(&[0.5; 10], &[0.5, 0.5]).is_ok());
    }
}
