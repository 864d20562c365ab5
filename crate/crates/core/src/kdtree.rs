//! Static k-d tree over a flat point buffer with exact nearest-neighbour
//! queries. Ties on distance resolve to the lowest point index, matching a
//! forward linear scan.

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// `points` is row-major with `dim` coordinates per point.
    pub fn new(points: &[f64], dim: usize) -> Self {
        assert!(dim > 0, "dimension must be positive");
        assert_eq!(points.len() % dim, 0, "point buffer not a multiple of dim");
        let n = points.len() / dim;
        let mut tree = KdTree {
            dim,
            points: points.to_vec(),
            order: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn coord(&self, point: usize, axis: usize) -> f64 {
        self.points[point * self.dim + axis]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of largest spread
        let mut axis = 0;
        let mut best_spread = f64::NEG_INFINITY;
        for a in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &p in &self.order[start..end] {
                let c = self.coord(p, a);
                lo = lo.min(c);
                hi = hi.max(c);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = a;
            }
        }
        let mid = start + (end - start) / 2;
        let (points, dim) = (&self.points, self.dim);
        self.order[start..end].select_nth_unstable_by(mid - start, |&p, &q| {
            points[p * dim + axis].total_cmp(&points[q * dim + axis])
        });
        let value = self.coord(self.order[mid], axis);
        self.nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// Index and squared distance of the nearest point to `query`.
    pub fn nearest(&self, query: &[f64]) -> Option<(usize, f64)> {
        debug_assert_eq!(query.len(), self.dim);
        if self.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, query, &mut best);
        Some(best)
    }

    /// Same result as [`Self::nearest`], with the search bounded from the
    /// start by the distance to point `hint`.
    pub fn nearest_with_hint(&self, query: &[f64], hint: usize) -> Option<(usize, f64)> {
        if hint >= self.len() {
            return self.nearest(query);
        }
        let row = &self.points[hint * self.dim..(hint + 1) * self.dim];
        let mut best = (hint, squared_distance(row, query));
        self.search(0, query, &mut best);
        Some(best)
    }

    fn search(&self, node: usize, query: &[f64], best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &p in &self.order[start..end] {
                    let row = &self.points[p * self.dim..(p + 1) * self.dim];
                    let d2 = squared_distance(row, query);
                    if d2 < best.1 || (d2 == best.1 && p < best.0) {
                        *best = (p, d2);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = query[axis] - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, best);
                // `<=` keeps equal-distance candidates with a lower index reachable
                if delta * delta <= best.1 {
                    self.search(far, query, best);
                }
            }
        }
    }
}

#[inline]
pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn brute(points: &[f64], dim: usize, q: &[f64]) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, row) in points.chunks_exact(dim).enumerate() {
            let d = squared_distance(row, q);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    #[test]
    fn agrees_with_linear_scan() {
        let mut rng = crate::seed::rng_from_seed(3);
        for dim in 1..=4 {
            let pts: Vec<f64> = (0..500 * dim).map(|_| rng.random()).collect();
            let tree = KdTree::new(&pts, dim);
            for _ in 0..500 {
                let q: Vec<f64> = (0..dim).map(|_| rng.random()).collect();
                assert_eq!(tree.nearest(&q).unwrap().0, brute(&pts, dim, &q));
            }
        }
    }

    #[test]
    fn duplicate_points_resolve_to_lowest_index() {
        let pts = vec![0.5; 40];
        let tree = KdTree::new(&pts, 1);
        assert_eq!(tree.nearest(&[0.1]).unwrap().0, 0);
    }

    #[test]
    fn hint_does_not_change_the_answer() {
        let mut rng = crate::seed::rng_from_seed(4);
        let pts: Vec<f64> = (0..600).map(|_| rng.random()).collect();
        let tree = KdTree::new(&pts, 2);
        for _ in 0..500 {
            let q = [rng.random(), rng.random()];
            let hint = rng.random_range(0..300);
            assert_eq!(tree.nearest_with_hint(&q, hint), tree.nearest(&q));
        }
        let dup = KdTree::new(&[0.5; 40], 1);
        assert_eq!(dup.nearest_with_hint(&[0.1], 39).unwrap().0, 0);
    }

    #[test]
    fn empty_tree() {
        let tree = KdTree::new(&[], 2);
        assert!(tree.nearest(&[0.0, 0.0]).is_none());
    }
}
