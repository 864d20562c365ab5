//! Delaunay edge extraction for point sets in one to three dimensions.
//!
//! Bowyer-Watson insertion inside a large enclosing simplex. Only the edge
//! graph is kept; simplices are discarded once the triangulation is built.

use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::kdtree::squared_distance;

/// Half-width of the enclosing simplex relative to the unit cube. Large enough
/// that its vertices sit outside the circumspheres of hull slivers produced by
/// CVT centroids.
const ENCLOSING_SCALE: f64 = 1.0e5;

#[derive(Debug, Clone)]
struct Simplex {
    vertices: Vec<usize>,
    center: Vec<f64>,
    radius2: f64,
    alive: bool,
}

/// Returns, for each point, the sorted list of points sharing a Delaunay edge.
pub fn delaunay_edges(points: &[Vec<f64>], dim: usize) -> Result<Vec<Vec<usize>>> {
    if !(1..=3).contains(&dim) {
        return Err(Error::invalid(format!(
            "exact Delaunay adjacency supports dimensions 1 to 3, got {dim}"
        )));
    }
    let rank = affine_rank(points, dim);
    if rank < dim {
        return Err(Error::DegenerateGeometry(format!(
            "need {} affinely independent points in dimension {dim}, found {}",
            dim + 1,
            rank + 1
        )));
    }
    if dim == 1 {
        return Ok(chain_edges(points));
    }
    let mut tri = Triangulation::new(points, dim)?;
    for i in 0..points.len() {
        tri.insert(i)?;
    }
    Ok(tri.edges(points.len()))
}

fn chain_edges(points: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a][0].total_cmp(&points[b][0]).then(a.cmp(&b)));
    let mut adj = vec![Vec::new(); points.len()];
    for w in order.windows(2) {
        adj[w[0]].push(w[1]);
        adj[w[1]].push(w[0]);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

/// Number of affinely independent directions spanned by the points, capped at `dim`.
pub(crate) fn affine_rank(points: &[Vec<f64>], dim: usize) -> usize {
    let Some(origin) = points.first() else {
        return 0;
    };
    let scale = points
        .iter()
        .map(|p| squared_distance(p, origin))
        .fold(0.0_f64, f64::max)
        .sqrt();
    if scale == 0.0 {
        return 0;
    }
    let tol = 1e-12 * scale;
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(dim);
    for p in points.iter().skip(1) {
        let mut v: Vec<f64> = p.iter().zip(origin).map(|(a, b)| a - b).collect();
        for b in &basis {
            let dot: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > tol {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v);
            if basis.len() == dim {
                break;
            }
        }
    }
    basis.len()
}

struct Triangulation<'a> {
    dim: usize,
    points: &'a [Vec<f64>],
    enclosing: Vec<Vec<f64>>,
    simplices: Vec<Simplex>,
}

impl<'a> Triangulation<'a> {
    fn new(points: &'a [Vec<f64>], dim: usize) -> Result<Self> {
        // simplex {x_i >= -S, sum x_i <= S * (dim + 1)} contains [0,1]^dim
        let s = ENCLOSING_SCALE;
        let base = vec![-s; dim];
        let mut enclosing = vec![base.clone()];
        for axis in 0..dim {
            let mut v = base.clone();
            v[axis] += s * (2 * dim + 1) as f64;
            enclosing.push(v);
        }
        let mut tri = Triangulation {
            dim,
            points,
            enclosing,
            simplices: Vec::new(),
        };
        let n = points.len();
        let root = tri.make_simplex((n..n + dim + 1).collect())?;
        tri.simplices.push(root);
        Ok(tri)
    }

    fn vertex(&self, id: usize) -> &[f64] {
        if id < self.points.len() {
            &self.points[id]
        } else {
            &self.enclosing[id - self.points.len()]
        }
    }

    fn make_simplex(&self, vertices: Vec<usize>) -> Result<Simplex> {
        let (center, radius2) = circumsphere(
            &vertices.iter().map(|&v| self.vertex(v)).collect::<Vec<_>>(),
            self.dim,
        )
        .ok_or_else(|| Error::DegenerateGeometry("flat simplex during triangulation".into()))?;
        Ok(Simplex {
            vertices,
            center,
            radius2,
            alive: true,
        })
    }

    fn insert(&mut self, point: usize) -> Result<()> {
        let p = self.points[point].clone();
        let bad: Vec<usize> = self
            .simplices
            .iter()
            .enumerate()
            .filter(|(_, s)| s.alive && squared_distance(&s.center, &p) < s.radius2)
            .map(|(i, _)| i)
            .collect();
        if bad.is_empty() {
            return Err(Error::Numerical(format!(
                "point {point} lies in no circumsphere"
            )));
        }
        let mut faces: HashMap<Vec<usize>, usize> = HashMap::new();
        for &b in &bad {
            let verts = &self.simplices[b].vertices;
            for skip in 0..verts.len() {
                let mut face: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &v)| v)
                    .collect();
                face.sort_unstable();
                *faces.entry(face).or_insert(0) += 1;
            }
        }
        for &b in &bad {
            self.simplices[b].alive = false;
        }
        let mut boundary: Vec<Vec<usize>> = faces
            .into_iter()
            .filter(|&(_, count)| count == 1)
            .map(|(face, _)| face)
            .collect();
        boundary.sort_unstable();
        for mut face in boundary {
            face.push(point);
            let s = self.make_simplex(face)?;
            self.simplices.push(s);
        }
        self.simplices.retain(|s| s.alive);
        Ok(())
    }

    fn edges(&self, n: usize) -> Vec<Vec<usize>> {
        let mut adj = vec![BTreeSet::new(); n];
        for s in &self.simplices {
            for (k, &a) in s.vertices.iter().enumerate() {
                for &b in &s.vertices[k + 1..] {
                    if a < n && b < n {
                        adj[a].insert(b);
                        adj[b].insert(a);
                    }
                }
            }
        }
        adj.into_iter().map(|s| s.into_iter().collect()).collect()
    }
}

/// Circumcentre and squared circumradius of a `dim`-simplex, or `None` when flat.
fn circumsphere(vertices: &[&[f64]], dim: usize) -> Option<(Vec<f64>, f64)> {
    let origin = vertices[0];
    // 2 (v_i - v_0) . u = |v_i - v_0|^2, solved by Gaussian elimination
    let mut rows: Vec<Vec<f64>> = vertices[1..]
        .iter()
        .map(|v| {
            let rel: Vec<f64> = v.iter().zip(origin).map(|(a, b)| a - b).collect();
            let rhs = rel.iter().map(|x| x * x).sum::<f64>();
            let mut row: Vec<f64> = rel.iter().map(|x| 2.0 * x).collect();
            row.push(rhs);
            row
        })
        .collect();
    for col in 0..dim {
        let pivot = (col..dim).max_by(|&a, &b| rows[a][col].abs().total_cmp(&rows[b][col].abs()))?;
        if rows[pivot][col].abs() < 1e-300 {
            return None;
        }
        rows.swap(col, pivot);
        for r in 0..dim {
            if r != col {
                let factor = rows[r][col] / rows[col][col];
                if factor != 0.0 {
                    for c in col..=dim {
                        rows[r][c] -= factor * rows[col][c];
                    }
                }
            }
        }
    }
    let u: Vec<f64> = (0..dim).map(|i| rows[i][dim] / rows[i][i]).collect();
    if u.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let radius2 = u.iter().map(|x| x * x).sum();
    let center = u.iter().zip(origin).map(|(a, b)| a + b).collect();
    Some((center, radius2))
}
