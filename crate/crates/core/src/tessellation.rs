//! Centroidal Voronoi tessellation of the unit task cube.
//!
//! Centroids come from Lloyd iterations on a dense uniform sample. Cell
//! lookup is an exact nearest-centroid query; adjacency is the Delaunay edge
//! graph of the centroids (symmetric k-nearest graph above three dimensions).

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::delaunay;
use crate::error::{Error, Result};
use crate::kdtree::{squared_distance, KdTree};
use crate::seed::{derive_seed, rng_from_seed, Stream};

/// Uniform samples drawn per centroid for Lloyd iterations.
pub const CVT_SAMPLES_PER_CELL: usize = 100;
pub const CVT_MAX_ITERATIONS: usize = 50;
/// Floor on the sample count. With too few samples per cell, Lloyd stalls once
/// centroid updates drop below the sample spacing.
pub const CVT_MIN_SAMPLES: usize = 20_000;
/// Small tessellations keep iterating until this many sample assignments
/// have been spent; Lloyd's slowest mode decays like `cos²(π/2n)` per step.
pub const CVT_SMALL_WORK_BUDGET: usize = 20_000_000;
/// Stop when the largest centroid step, relative to the cube diagonal, falls below this.
pub const CVT_TOLERANCE: f64 = 1e-4;
/// Magnitude of the perturbation applied to centroids before triangulating.
pub const DELAUNAY_JITTER: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Tessellation {
    dim: usize,
    seed: u64,
    centroids: Vec<Vec<f64>>,
    adjacency: Option<Vec<Vec<usize>>>,
    tree: KdTree,
}

#[derive(Debug, Serialize, Deserialize)]
struct TessellationDoc {
    dim: usize,
    seed: u64,
    centroids: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    adjacency: Option<Vec<Vec<usize>>>,
}

impl Tessellation {
    /// Builds `n` centroids approximating a CVT of `[0,1]^dim`.
    pub fn cvt(n: usize, dim: usize, seed: u64) -> Result<Self> {
        let centroids = cvt_centroids(n, dim, seed)?;
        Self::from_centroids(centroids, seed)
    }

    pub fn from_centroids(centroids: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        let dim = centroids
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::invalid("tessellation needs at least one centroid"))?;
        if dim == 0 {
            return Err(Error::invalid("task dimension must be positive"));
        }
        if let Some(bad) = centroids.iter().position(|c| c.len() != dim) {
            return Err(Error::invalid(format!(
                "centroid {bad} has dimension {}, expected {dim}",
                centroids[bad].len()
            )));
        }
        if centroids
            .iter()
            .flatten()
            .any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::invalid("centroid coordinates must lie in [0, 1]"));
        }
        let flat: Vec<f64> = centroids.iter().flatten().copied().collect();
        let tree = KdTree::new(&flat, dim);
        Ok(Tessellation {
            dim,
            seed,
            centroids,
            adjacency: None,
            tree,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }

    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn centroid(&self, cell: usize) -> &[f64] {
        &self.centroids[cell]
    }

    /// Exact nearest centroid; ties go to the lowest index.
    pub fn nearest_cell(&self, theta: &[f64]) -> Result<usize> {
        if theta.len() != self.dim {
            return Err(Error::invalid(format!(
                "task has dimension {}, tessellation has {}",
                theta.len(),
                self.dim
            )));
        }
        Ok(self.locate(theta))
    }

    /// Unchecked variant of [`nearest_cell`](Self::nearest_cell) for hot loops.
    pub(crate) fn locate(&self, theta: &[f64]) -> usize {
        self.tree.nearest(theta).map(|(i, _)| i).unwrap_or(0)
    }

    pub fn adjacency(&self) -> Option<&[Vec<usize>]> {
        self.adjacency.as_deref()
    }

    /// Neighbours of `cell`, empty when adjacency has not been built.
    pub fn neighbors(&self, cell: usize) -> &[usize] {
        self.adjacency
            .as_ref()
            .map(|a| a[cell].as_slice())
            .unwrap_or(&[])
    }

    pub fn has_adjacency(&self) -> bool {
        self.adjacency.is_some()
    }

    /// Computes and stores the adjacency graph.
    pub fn build_adjacency(&mut self) -> Result<()> {
        if self.adjacency.is_none() {
            self.adjacency = Some(build_adjacency(self)?);
        }
        Ok(())
    }

    pub fn with_adjacency(mut self) -> Result<Self> {
        self.build_adjacency()?;
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = TessellationDoc {
            dim: self.dim,
            seed: self.seed,
            centroids: self.centroids.clone(),
            adjacency: self.adjacency.clone(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TessellationDoc = serde_json::from_str(text)?;
        let mut tess = Self::from_centroids(doc.centroids, doc.seed)?;
        if tess.dim != doc.dim {
            return Err(Error::invalid(format!(
                "declared dim {} does not match centroids ({})",
                doc.dim, tess.dim
            )));
        }
        if let Some(adj) = doc.adjacency {
            validate_adjacency(&adj, tess.len())?;
            tess.adjacency = Some(adj);
        }
        Ok(tess)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn validate_adjacency(adj: &[Vec<usize>], n: usize) -> Result<()> {
    if adj.len() != n {
        return Err(Error::invalid("adjacency length differs from centroid count"));
    }
    for (i, list) in adj.iter().enumerate() {
        for &j in list {
            if j >= n || j == i || !adj[j].contains(&i) {
                return Err(Error::invalid(format!(
                    "adjacency entry {i} -> {j} is out of range, a self-loop, or asymmetric"
                )));
            }
        }
    }
    Ok(())
}

const PRIMES: [u64; 24] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
];

fn radical_inverse(mut k: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut scale = inv;
    let mut value = 0.0;
    while k > 0 {
        value += (k % base) as f64 * scale;
        k /= base;
        scale *= inv;
    }
    value
}

/// `count` points of a Halton sequence under a seeded random shift modulo 1.
/// Each point is marginally uniform on the cube; above the tabulated prime
/// bases the coordinates fall back to independent uniform draws.
pub fn shifted_halton(count: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let shift: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
    let mut out = Vec::with_capacity(count * dim);
    for k in 1..=count as u64 {
        for (d, s) in shift.iter().enumerate() {
            let v = match PRIMES.get(d) {
                Some(&base) => (radical_inverse(k, base) + s).fract(),
                None => rng.random(),
            };
            out.push(v);
        }
    }
    out
}

/// Lloyd iterations on `CVT_SAMPLES_PER_CELL * n` uniformly distributed samples.
pub fn cvt_centroids(n: usize, dim: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if n == 0 || dim == 0 {
        return Err(Error::invalid(format!(
            "CVT needs n >= 1 and dim >= 1 (got n = {n}, dim = {dim})"
        )));
    }
    let sample_count = (n * CVT_SAMPLES_PER_CELL).max(CVT_MIN_SAMPLES);
    let samples = shifted_halton(sample_count, dim, derive_seed(seed, Stream::Geometry, 0));
    let mut centroids: Vec<f64> = samples[..n * dim].to_vec();

    let mut sums = vec![0.0; n * dim];
    let mut counts = vec![0usize; n];
    // previous assignment seeds each query with a tight bound
    let mut assignment = vec![0usize; sample_count];
    let diagonal = (dim as f64).sqrt();
    let iterations = CVT_MAX_ITERATIONS.max(CVT_SMALL_WORK_BUDGET / sample_count);
    for _ in 0..iterations {
        let tree = KdTree::new(&centroids, dim);
        sums.iter_mut().for_each(|s| *s = 0.0);
        counts.iter_mut().for_each(|c| *c = 0);
        for (sample, cell) in samples.chunks_exact(dim).zip(&mut assignment) {
            *cell = tree.nearest_with_hint(sample, *cell).expect("non-empty tree").0;
            let cell = *cell;
            counts[cell] += 1;
            sums[cell * dim..(cell + 1) * dim]
                .iter_mut()
                .zip(sample)
                .for_each(|(s, v)| *s += v);
        }
        let mut max_step = 0.0_f64;
        for cell in 0..n {
            if counts[cell] == 0 {
                continue; // empty cluster keeps its position
            }
            let inv = 1.0 / counts[cell] as f64;
            let row = &mut centroids[cell * dim..(cell + 1) * dim];
            let mut step = 0.0;
            for (c, s) in row.iter_mut().zip(&sums[cell * dim..(cell + 1) * dim]) {
                let next = s * inv;
                step += (next - *c) * (next - *c);
                *c = next;
            }
            max_step = max_step.max(step.sqrt());
        }
        if max_step / diagonal < CVT_TOLERANCE {
            break;
        }
    }
    Ok(centroids.chunks_exact(dim).map(<[f64]>::to_vec).collect())
}

/// Delaunay adjacency for `dim <= 3`, symmetric `2 * (dim + 1)`-nearest graph above.
pub fn build_adjacency(tess: &Tessellation) -> Result<Vec<Vec<usize>>> {
    let dim = tess.dim;
    let n = tess.len();
    if dim > 3 {
        if n < 2 {
            return Err(Error::DegenerateGeometry(
                "adjacency needs at least two centroids".into(),
            ));
        }
        return Ok(knn_adjacency(&tess.centroids, 2 * (dim + 1)));
    }
    let mut rng = rng_from_seed(derive_seed(tess.seed, Stream::Jitter, 0));
    let jittered: Vec<Vec<f64>> = tess
        .centroids
        .iter()
        .map(|c| {
            c.iter()
                .map(|v| v + DELAUNAY_JITTER * (2.0 * rng.random::<f64>() - 1.0))
                .collect()
        })
        .collect();
    delaunay::delaunay_edges(&jittered, dim)
}

fn knn_adjacency(points: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut sets = vec![std::collections::BTreeSet::new(); n];
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (squared_distance(&points[i], &points[j]), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(k) {
            sets[i].insert(j);
            sets[j].insert(i);
        }
    }
    sets.into_iter().map(|s| s.into_iter().collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_nearest(c: &[Vec<f64>], q: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, p) in c.iter().enumerate() {
            let d = squared_distance(p, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    #[test]
    fn rejects_empty_requests() {
        assert!(matches!(cvt_centroids(0, 2, 0), Err(Error::InvalidArgument(_))));
        assert!(matches!(cvt_centroids(3, 0, 0), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_cell_sits_at_the_centre() {
        let c = cvt_centroids(1, 2, 11).unwrap();
        assert!((c[0][0] - 0.5).abs() < 0.02 && (c[0][1] - 0.5).abs() < 0.02);
    }

    #[test]
    fn four_cells_on_the_unit_interval() {
        let mut c: Vec<f64> = cvt_centroids(4, 1, 5).unwrap().into_iter().map(|p| p[0]).collect();
        c.sort_by(f64::total_cmp);
        for (got, want) in c.iter().zip([0.125, 0.375, 0.625, 0.875]) {
            assert!((got - want).abs() < 0.02, "{c:?}");
        }
    }

    #[test]
    fn one_dimensional_cvt_is_equispaced_up_to_sixteen_cells() {
        for n in 1..=16 {
            for seed in 0..3 {
                let mut c: Vec<f64> =
                    cvt_centroids(n, 1, seed).unwrap().into_iter().map(|p| p[0]).collect();
                c.sort_by(f64::total_cmp);
                for (k, got) in c.iter().enumerate() {
                    let want = (k as f64 + 0.5) / n as f64;
                    assert!((got - want).abs() < 0.02, "n={n} seed={seed} {c:?}");
                }
            }
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = cvt_centroids(50, 2, 9).unwrap();
        let b = cvt_centroids(50, 2, 9).unwrap();
        let c = cvt_centroids(50, 2, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn coverage_of_the_unit_square() {
        let tess = Tessellation::cvt(200, 2, 1).unwrap();
        let mut rng = rng_from_seed(77);
        let mut worst = 0.0_f64;
        for _ in 0..10_000 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            let cell = tess.nearest_cell(&q).unwrap();
            worst = worst.max(squared_distance(&q, tess.centroid(cell)).sqrt());
        }
        assert!(worst < 0.12, "max probe distance {worst}");
    }

    #[test]
    fn nearest_cell_examples() {
        let tess = Tessellation::from_centroids(vec![vec![0.2], vec![0.8]], 0).unwrap();
        assert_eq!(tess.nearest_cell(&[0.3]).unwrap(), 0);
        assert_eq!(tess.nearest_cell(&[0.5]).unwrap(), 0);
        assert_eq!(tess.nearest_cell(&[0.51]).unwrap(), 1);
        assert!(matches!(tess.nearest_cell(&[0.5, 0.5]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn nearest_cell_matches_brute_force() {
        let tess = Tessellation::cvt(200, 2, 4).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..1000 {
            let q = [rng.random::<f64>(), rng.random::<f64>()];
            assert_eq!(tess.nearest_cell(&q).unwrap(), brute_nearest(tess.centroids(), &q));
        }
    }

    #[test]
    fn square_corners_are_symmetric_neighbours() {
        let corners = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let tess = Tessellation::from_centroids(corners, 3).unwrap().with_adjacency().unwrap();
        let adj = tess.adjacency().unwrap();
        for (i, list) in adj.iter().enumerate() {
            assert!(list.len() >= 2);
            for &j in list {
                assert!(adj[j].contains(&i));
            }
        }
    }

    #[test]
    fn high_dimensional_adjacency_uses_nearest_neighbours() {
        let tess = Tessellation::cvt(60, 4, 2).unwrap().with_adjacency().unwrap();
        let adj = tess.adjacency().unwrap();
        for (i, list) in adj.iter().enumerate() {
            assert!(list.len() >= 10);
            assert!(!list.contains(&i));
            for &j in list {
                assert!(adj[j].contains(&i));
            }
        }
    }

    #[test]
    fn degenerate_adjacency_is_reported() {
        let tess = Tessellation::from_centroids(vec![vec![0.5, 0.5]], 0).unwrap();
        assert!(matches!(build_adjacency(&tess), Err(Error::DegenerateGeometry(_))));
    }

    #[test]
    fn json_round_trip_keeps_geometry() {
        let tess = Tessellation::cvt(30, 2, 8).unwrap().with_adjacency().unwrap();
        let back = Tessellation::from_json(&tess.to_json().unwrap()).unwrap();
        assert_eq!(back.centroids(), tess.centroids());
        assert_eq!(back.adjacency(), tess.adjacency());
        assert_eq!(back.seed(), 8);
    }

    #[test]
    fn json_rejects_asymmetric_adjacency() {
        let doc = r#"{"dim":1,"seed":0,"centroids":[[0.2],[0.8]],"adjacency":[[1],[]]}"#;
        assert!(Tessellation::from_json(doc).is_err());
    }
}
