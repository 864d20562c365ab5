//! Re-archiving at arbitrary resolution, QD-Score, multi-resolution QD-Score,
//! inference score and a one-sided rank-sum test.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::archive::Archive;
use crate::engine::Evaluation;
use crate::error::{Error, Result};
use crate::problems::Problem;
use crate::seed::{derive_seed, Stream};
use crate::tessellation::Tessellation;

pub const DEFAULT_RESOLUTION_COUNT: usize = 50;
pub const MAX_RESOLUTION: usize = 100_000;
/// Sample sizes up to this bound get an exact rank-sum p-value.
pub const EXACT_RANK_SUM_LIMIT: usize = 8;
/// Master seed for re-archiving geometry shared by every run and method.
pub const DEFAULT_GEOMETRY_SEED: u64 = 0;
/// Probe tasks used to score a distilled policy.
pub const DEFAULT_PROBE_COUNT: usize = 10_000;
/// Master seed of the probe set, shared by every policy so scores are comparable.
pub const DEFAULT_PROBE_SEED: u64 = 0;

/// Archive resolutions (cell counts), kept in nondecreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionSchedule {
    resolutions: Vec<usize>,
}

impl ResolutionSchedule {
    pub fn new(mut resolutions: Vec<usize>) -> Result<Self> {
        if resolutions.is_empty() {
            return Err(Error::invalid("resolution schedule is empty"));
        }
        if resolutions.contains(&0) {
            return Err(Error::invalid("resolutions must be positive"));
        }
        resolutions.sort_unstable();
        Ok(ResolutionSchedule { resolutions })
    }

    /// `count` points evenly spaced in log between `low` and `high`, rounded
    /// to integers with duplicates removed.
    pub fn logspace(low: usize, high: usize, count: usize) -> Result<Self> {
        if low == 0 || high < low || count == 0 {
            return Err(Error::invalid(format!(
                "logspace needs 1 <= low <= high and count >= 1 (got {low}, {high}, {count})"
            )));
        }
        let (a, b) = ((low as f64).ln(), (high as f64).ln());
        let mut res: Vec<usize> = (0..count)
            .map(|i| {
                let t = if count == 1 { 1.0 } else { i as f64 / (count - 1) as f64 };
                ((a + t * (b - a)).exp().round() as usize).clamp(low, high)
            })
            .collect();
        res.dedup();
        Self::new(res)
    }

    /// 50 log-spaced resolutions from 1 to `min(100 000, budget)`.
    pub fn for_budget(budget: usize) -> Result<Self> {
        Self::logspace(1, budget.clamp(1, MAX_RESOLUTION), DEFAULT_RESOLUTION_COUNT)
    }

    pub fn resolutions(&self) -> &[usize] {
        &self.resolutions
    }

    pub fn len(&self) -> usize {
        self.resolutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resolutions.is_empty()
    }
}

/// `logspace:LOW:HIGH:COUNT` or a comma-separated list of cell counts.
impl FromStr for ResolutionSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::invalid(format!("cannot parse schedule '{s}'"));
        if let Some(rest) = s.strip_prefix("logspace:") {
            let parts: Vec<usize> = rest
                .split(':')
                .map(|p| p.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            let [low, high, count] = parts[..] else {
                return Err(bad());
            };
            return Self::logspace(low, high, count);
        }
        let list = s.strip_prefix("list:").unwrap_or(s);
        let values = list
            .split(',')
            .map(|p| p.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| bad())?;
        Self::new(values)
    }
}

impl fmt::Display for ResolutionSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.resolutions.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// Shares CVT geometry across re-archiving calls, keyed by `(cells, dim, seed)`.
#[derive(Debug, Default)]
pub struct GeometryCache {
    entries: Mutex<HashMap<(usize, usize, u64), Arc<Tessellation>>>,
}

impl GeometryCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, cells: usize, dim: usize, seed: u64) -> Result<Arc<Tessellation>> {
        let key = (cells, dim, seed);
        if let Some(t) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(t));
        }
        let built = Arc::new(Tessellation::cvt(cells, dim, seed)?);
        let mut entries = self.entries.lock().expect("cache lock");
        Ok(Arc::clone(entries.entry(key).or_insert(built)))
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// CVT seed used for resolution `cells` under a shared geometry seed.
pub fn resolution_seed(geometry_seed: u64, cells: usize) -> u64 {
    derive_seed(geometry_seed, Stream::Geometry, cells as u64)
}

/// Replays `records` into an empty archive over `tess`. A record claims its
/// cell when its fitness is at least the current one (empty cells read 0).
pub fn rearchive_into(tess: &Tessellation, records: &[Evaluation]) -> Archive {
    let mut archive = Archive::empty(tess.len());
    for r in records {
        let cell = tess.locate(&r.theta);
        archive.update(cell, &r.theta, &r.x, r.f);
    }
    archive
}

/// Re-archives `records` (tasks of dimension `dim`) into `cells` fresh CVT cells.
pub fn rearchive(records: &[Evaluation], cells: usize, dim: usize, geometry_seed: u64) -> Result<Archive> {
    let tess = Tessellation::cvt(cells, dim, resolution_seed(geometry_seed, cells))?;
    Ok(rearchive_into(&tess, records))
}

pub fn qd_score(archive: &Archive) -> f64 {
    archive.qd_score()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResolutionScore {
    pub resolution: usize,
    pub qd_score: f64,
}

/// Re-archiving bound to one task dimension, geometry seed and cache.
#[derive(Debug, Clone, Copy)]
pub struct Rearchiver<'c> {
    pub dim: usize,
    pub geometry_seed: u64,
    pub cache: &'c GeometryCache,
}

impl<'c> Rearchiver<'c> {
    pub fn new(dim: usize, geometry_seed: u64, cache: &'c GeometryCache) -> Self {
        Rearchiver {
            dim,
            geometry_seed,
            cache,
        }
    }

    pub fn tessellation(&self, cells: usize) -> Result<Arc<Tessellation>> {
        self.cache
            .get(cells, self.dim, resolution_seed(self.geometry_seed, cells))
    }

    pub fn rearchive(&self, records: &[Evaluation], cells: usize) -> Result<Archive> {
        Ok(rearchive_into(&*self.tessellation(cells)?, records))
    }

    pub fn qd_profile(
        &self,
        records: &[Evaluation],
        schedule: &ResolutionSchedule,
    ) -> Result<Vec<ResolutionScore>> {
        schedule
            .resolutions()
            .iter()
            .map(|&n| {
                Ok(ResolutionScore {
                    resolution: n,
                    qd_score: self.rearchive(records, n)?.qd_score(),
                })
            })
            .collect()
    }

    pub fn mr_qd_score(&self, records: &[Evaluation], schedule: &ResolutionSchedule) -> Result<f64> {
        let profile = self.qd_profile(records, schedule)?;
        Ok(mean_score(&profile))
    }
}

/// Mean QD-Score over a per-resolution profile.
pub fn mean_score(profile: &[ResolutionScore]) -> f64 {
    profile.iter().map(|p| p.qd_score).sum::<f64>() / profile.len() as f64
}

/// Multi-resolution QD-Score with a private geometry cache.
pub fn mr_qd_score(
    records: &[Evaluation],
    dim: usize,
    schedule: &ResolutionSchedule,
    geometry_seed: u64,
) -> Result<f64> {
    let cache = GeometryCache::new();
    Rearchiver::new(dim, geometry_seed, &cache).mr_qd_score(records, schedule)
}

/// `m` CVT probe tasks for inference scoring.
pub fn probe_tasks(m: usize, dim: usize, seed: u64) -> Result<Tessellation> {
    Tessellation::cvt(m, dim, derive_seed(seed, Stream::Probes, m as u64))
}

/// Mean fitness of the policy's answers over the probe tasks.
pub fn inference_score<P, F>(policy: F, problem: &P, probes: &[Vec<f64>]) -> Result<f64>
where
    P: Problem + ?Sized,
    F: Fn(&[f64]) -> Vec<f64>,
{
    if probes.is_empty() {
        return Err(Error::invalid("inference score needs at least one probe task"));
    }
    let mut total = 0.0;
    for theta in probes {
        let x = policy(theta);
        total += problem.fitness(&x, theta)?;
    }
    Ok(total / probes.len() as f64)
}

/// One-sided Mann-Whitney rank-sum test of "a tends to exceed b".
///
/// Exact over all rank assignments (with midranks for ties) when the smaller
/// sample has at most [`EXACT_RANK_SUM_LIMIT`] values, normal approximation
/// with tie-corrected variance otherwise.
pub fn rank_sum_test(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("rank-sum test needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(Error::invalid("rank-sum test samples contain NaN"));
    }
    let doubled = doubled_midranks(a, b);
    let (ranks_a, ranks_b) = doubled.split_at(a.len());
    if a.len().min(b.len()) <= EXACT_RANK_SUM_LIMIT {
        Ok(exact_upper_tail(ranks_a, ranks_b))
    } else {
        Ok(normal_upper_tail(a.len(), b.len(), ranks_a, &doubled))
    }
}

/// Midranks of the pooled sample, times two so that they are integers.
fn doubled_midranks(a: &[f64], b: &[f64]) -> Vec<u64> {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        // ranks start..end (1-based start+1..=end) share (start+1+end)/2
        let doubled = (start + 1 + end) as u64;
        for &k in &order[start..end] {
            ranks[k] = doubled;
        }
        start = end;
    }
    ranks
}

fn exact_upper_tail(ranks_a: &[u64], ranks_b: &[u64]) -> f64 {
    let all: Vec<u64> = ranks_a.iter().chain(ranks_b).copied().collect();
    let observed_a: u64 = ranks_a.iter().sum();
    let total: u64 = all.iter().sum();
    // enumerate subsets of the smaller group's size
    let (k, a_is_small) = if ranks_a.len() <= ranks_b.len() {
        (ranks_a.len(), true)
    } else {
        (ranks_b.len(), false)
    };
    let max_sum = all.iter().copied().max().unwrap_or(0) as usize * k;
    let mut ways = vec![vec![0.0_f64; max_sum + 1]; k + 1];
    ways[0][0] = 1.0;
    for (seen, &r) in all.iter().enumerate() {
        let r = r as usize;
        for j in (1..=k.min(seen + 1)).rev() {
            let (lower, upper) = ways.split_at_mut(j);
            for s in (r..=max_sum).rev() {
                let add = lower[j - 1][s - r];
                if add != 0.0 {
                    upper[0][s] += add;
                }
            }
        }
    }
    let dist = &ways[k];
    let count: f64 = dist.iter().sum();
    let hits: f64 = if a_is_small {
        dist.iter().enumerate().filter(|&(s, _)| s as u64 >= observed_a).map(|(_, c)| c).sum()
    } else {
        let observed_b = total - observed_a;
        dist.iter().enumerate().filter(|&(s, _)| s as u64 <= observed_b).map(|(_, c)| c).sum()
    };
    (hits / count).min(1.0)
}

fn normal_upper_tail(na: usize, nb: usize, doubled_a: &[u64], doubled_all: &[u64]) -> f64 {
    let (na_f, nb_f) = (na as f64, nb as f64);
    let n = na_f + nb_f;
    let rank_sum = doubled_a.iter().sum::<u64>() as f64 / 2.0;
    let u = rank_sum - na_f * (na_f + 1.0) / 2.0;
    let mean = na_f * nb_f / 2.0;
    let mut ties: HashMap<u64, f64> = HashMap::new();
    for &r in doubled_all {
        *ties.entry(r).or_insert(0.0) += 1.0;
    }
    let tie_term: f64 = ties.values().map(|t| t * t * t - t).sum();
    let variance = na_f * nb_f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        return 0.5;
    }
    let z = (u - mean) / variance.sqrt();
    0.5 * statrs::function::erf::erfc(z / std::f64::consts::SQRT_2)
}
