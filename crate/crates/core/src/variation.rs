//! Candidate generators: SBX crossover with a bandit-tuned task tournament,
//! and a local linear model of the task → solution map.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::archive::Archive;
use crate::error::{Error, Result};
use crate::kdtree::squared_distance;
use crate::tessellation::Tessellation;

/// Ridge term added to the normal equations of the local fit.
pub const RIDGE: f64 = 1e-8;

/// Spread factor of simulated binary crossover for a uniform draw `u`.
pub fn sbx_spread(u: f64, eta: f64) -> f64 {
    let exponent = 1.0 / (eta + 1.0);
    if u <= 0.5 {
        (2.0 * u).powf(exponent)
    } else {
        (1.0 / (2.0 * (1.0 - u))).powf(exponent)
    }
}

/// One SBX child coordinate before clipping; `mirror` selects the second child.
pub fn sbx_coordinate(a: f64, b: f64, eta: f64, u: f64, mirror: bool) -> f64 {
    // 0.5((1±β)a + (1∓β)b), written so that a == b returns a exactly
    let half_spread = 0.5 * sbx_spread(u, eta) * (a - b);
    let mean = 0.5 * (a + b);
    if mirror {
        mean - half_spread
    } else {
        mean + half_spread
    }
}

/// Single-offspring SBX, clipped to the unit cube.
pub fn sbx_crossover<R: Rng + ?Sized>(p1: &[f64], p2: &[f64], eta: f64, rng: &mut R) -> Vec<f64> {
    debug_assert_eq!(p1.len(), p2.len());
    p1.iter()
        .zip(p2)
        .map(|(&a, &b)| {
            let u: f64 = rng.random();
            let mirror = rng.random_bool(0.5);
            sbx_coordinate(a, b, eta, u, mirror).clamp(0.0, 1.0)
        })
        .collect()
}

/// Index of the candidate closest to `reference`, first on ties.
pub fn closest_to(reference: &[f64], candidates: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (i, c) in candidates.iter().enumerate() {
        let d = squared_distance(c, reference);
        if d < best.1 {
            best = (i, d);
        }
    }
    best.0
}

/// Draws `size` uniform tasks and keeps the one nearest `reference`.
pub fn tournament_select_task<R: Rng + ?Sized>(
    reference: &[f64],
    size: usize,
    dim: usize,
    rng: &mut R,
) -> Vec<f64> {
    let candidates: Vec<Vec<f64>> = (0..size.max(1))
        .map(|_| (0..dim).map(|_| rng.random()).collect())
        .collect();
    let pick = closest_to(reference, &candidates);
    candidates.into_iter().nth(pick).expect("at least one candidate")
}

/// Tournament over a fixed task pool; returns the index of the chosen pool task.
pub fn tournament_select_from_pool<R: Rng + ?Sized>(
    reference: &[f64],
    size: usize,
    pool: &[Vec<f64>],
    rng: &mut R,
) -> usize {
    let mut best = (0, f64::INFINITY);
    for _ in 0..size.max(1) {
        let idx = rng.random_range(0..pool.len());
        let d = squared_distance(&pool[idx], reference);
        if d < best.1 {
            best = (idx, d);
        }
    }
    best.0
}

/// UCB1 counters over candidate tournament sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditState {
    sizes: Vec<usize>,
    selected: Vec<u64>,
    successes: Vec<u64>,
    current: usize,
}

impl BanditState {
    pub fn new(sizes: Vec<usize>) -> Result<Self> {
        if sizes.is_empty() || sizes.contains(&0) {
            return Err(Error::invalid("tournament sizes must be a non-empty list of positive integers"));
        }
        let mut seen = sizes.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != sizes.len() {
            return Err(Error::invalid("tournament sizes must be distinct"));
        }
        let n = sizes.len();
        let current = sizes[0];
        Ok(BanditState {
            sizes,
            selected: vec![0; n],
            successes: vec![0; n],
            current,
        })
    }

    /// Bandit state with explicit counters, mostly for tests and replay.
    pub fn with_counts(sizes: Vec<usize>, selected: Vec<u64>, successes: Vec<u64>) -> Result<Self> {
        let mut state = Self::new(sizes)?;
        if selected.len() != state.sizes.len() || successes.len() != state.sizes.len() {
            return Err(Error::invalid("counter lengths must match the size list"));
        }
        if successes.iter().zip(&selected).any(|(s, n)| s > n) {
            return Err(Error::invalid("successes cannot exceed selections"));
        }
        state.selected = selected;
        state.successes = successes;
        Ok(state)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn selected(&self) -> &[u64] {
        &self.selected
    }

    pub fn successes(&self) -> &[u64] {
        &self.successes
    }

    pub fn current(&self) -> usize {
        self.current
    }

    fn slot(&self, size: usize) -> Result<usize> {
        self.sizes
            .iter()
            .position(|&s| s == size)
            .ok_or_else(|| Error::invalid(format!("tournament size {size} is not an arm")))
    }

    /// Size for the next tournament: each arm once in order, then UCB1.
    pub fn next_size(&mut self) -> usize {
        self.current = match self.selected.iter().position(|&n| n == 0) {
            Some(slot) => self.sizes[slot],
            None => ucb1_select(self).expect("all arms warmed up"),
        };
        self.current
    }

    pub fn record_selection(&mut self, size: usize) -> Result<()> {
        let slot = self.slot(size)?;
        self.selected[slot] += 1;
        Ok(())
    }

    pub fn record_success(&mut self, size: usize) -> Result<()> {
        let slot = self.slot(size)?;
        if self.successes[slot] >= self.selected[slot] {
            return Err(Error::invalid(format!(
                "size {size} cannot succeed more often than it was selected"
            )));
        }
        self.successes[slot] += 1;
        Ok(())
    }

    /// Selection followed by an optional success.
    pub fn update(&mut self, size: usize, success: bool) -> Result<()> {
        self.record_selection(size)?;
        if success {
            self.record_success(size)?;
        }
        Ok(())
    }
}

/// Size maximising `successes/selected + sqrt(2 ln(total)/selected)`, lowest index on ties.
pub fn ucb1_select(bandit: &BanditState) -> Result<usize> {
    if bandit.selected.contains(&0) {
        return Err(Error::invalid("UCB1 needs every arm selected at least once"));
    }
    let total: u64 = bandit.selected.iter().sum();
    let log_total = (total as f64).ln();
    let mut best = (0, f64::NEG_INFINITY);
    for (j, (&n, &s)) in bandit.selected.iter().zip(&bandit.successes).enumerate() {
        let n = n as f64;
        let score = s as f64 / n + (2.0 * log_total / n).sqrt();
        if score > best.1 {
            best = (j, score);
        }
    }
    Ok(bandit.sizes[best.0])
}

/// Candidate for task `theta` from an affine least-squares fit over the
/// elites of its cell and the adjacent cells, plus Gaussian noise scaled by
/// the per-coordinate spread of those elites. Falls back to a uniform
/// solution when fewer than two elites are available.
pub fn local_linear_candidate<R: Rng + ?Sized>(
    archive: &Archive,
    tess: &Tessellation,
    theta: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    let cell = tess.locate(theta);
    let neighbourhood = std::iter::once(cell).chain(tess.neighbors(cell).iter().copied());
    let elites: Vec<_> = neighbourhood.filter_map(|c| archive.elite(c)).collect();
    let solution_dim = match archive.elites().next() {
        Some(e) => e.x.len(),
        None => return Vec::new(),
    };
    if elites.len() < 2 {
        return (0..solution_dim).map(|_| rng.random()).collect();
    }
    let rows = elites.len();
    let task_dim = theta.len();
    let design = DMatrix::from_fn(rows, task_dim + 1, |r, c| {
        if c < task_dim {
            elites[r].theta[c]
        } else {
            1.0
        }
    });
    let targets = DMatrix::from_fn(rows, solution_dim, |r, c| elites[r].x[c]);
    let model = fit_affine(&design, &targets);
    let query = DVector::from_iterator(task_dim + 1, theta.iter().copied().chain([1.0]));
    let prediction = model.transpose() * query;

    (0..solution_dim)
        .map(|c| {
            let column = targets.column(c);
            let mean = column.mean();
            let variance = column.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rows as f64;
            let noise = if variance > 0.0 && sigma > 0.0 {
                let z: f64 = rng.sample(StandardNormal);
                sigma * variance.sqrt() * z
            } else {
                0.0
            };
            (prediction[c] + noise).clamp(0.0, 1.0)
        })
        .collect()
}

/// Ridge-regularised least squares `(DᵀD + λI)⁻¹ DᵀX`.
fn fit_affine(design: &DMatrix<f64>, targets: &DMatrix<f64>) -> DMatrix<f64> {
    let cols = design.ncols();
    let gram = design.transpose() * design + DMatrix::identity(cols, cols) * RIDGE;
    let rhs = design.transpose() * targets;
    match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .unwrap_or_else(|| DMatrix::zeros(cols, targets.ncols())),
    }
}
