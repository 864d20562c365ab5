use serde::{Deserialize, Serialize};

/// Best known `(θ, x, f)` for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub theta: Vec<f64>,
    pub x: Vec<f64>,
    pub f: f64,
}

/// One slot per tessellation cell. Empty cells read as fitness 0, the floor
/// of every problem's fitness range.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Archive {
    cells: Vec<Option<Elite>>,
}

impl Archive {
    pub fn empty(cells: usize) -> Self {
        Archive {
            cells: vec![None; cells],
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn elite(&self, cell: usize) -> Option<&Elite> {
        self.cells[cell].as_ref()
    }

    pub fn fitness(&self, cell: usize) -> f64 {
        self.cells[cell].as_ref().map_or(0.0, |e| e.f)
    }

    pub fn filled(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn cells(&self) -> &[Option<Elite>] {
        &self.cells
    }

    pub fn elites(&self) -> impl Iterator<Item = &Elite> {
        self.cells.iter().flatten()
    }

    /// Unconditionally stores an elite (archive initialisation).
    pub fn set(&mut self, cell: usize, elite: Elite) {
        self.cells[cell] = Some(elite);
    }

    /// Replaces the cell's elite iff `f` is at least the current fitness; ties replace.
    pub fn update(&mut self, cell: usize, theta: &[f64], x: &[f64], f: f64) -> bool {
        if f >= self.fitness(cell) {
            self.cells[cell] = Some(Elite {
                theta: theta.to_vec(),
                x: x.to_vec(),
                f,
            });
            true
        } else {
            false
        }
    }

    /// Sum of elite fitness, empty cells contributing 0.
    pub fn qd_score(&self) -> f64 {
        self.elites().map(|e| e.f).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_replace_and_worse_candidates_do_not() {
        let mut a = Archive::empty(2);
        assert!(a.update(0, &[0.1], &[0.2], 0.5));
        assert!(a.update(0, &[0.3], &[0.4], 0.5));
        assert_eq!(a.elite(0).unwrap().theta, vec![0.3]);
        assert!(!a.update(0, &[0.9], &[0.9], 0.4));
        assert_eq!(a.elite(0).unwrap().x, vec![0.4]);
        assert_eq!(a.fitness(1), 0.0);
        assert_eq!(a.filled(), 1);
    }

    #[test]
    fn qd_score_sums_filled_cells() {
        let mut a = Archive::empty(4);
        assert_eq!(a.qd_score(), 0.0);
        for c in 0..3 {
            a.update(c, &[0.0], &[0.0], 0.5);
        }
        assert_eq!(a.qd_score(), 1.5);
    }
}
