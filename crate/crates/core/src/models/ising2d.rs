use crate::model::{grid_bonds, Adjacency, Model};
use crate::state::{Encoding, Layout, SparseDelta};

/// Nearest-neighbour Ising model on a `rows x cols` lattice.
///
/// Statistics: `g1 = -sum_<ij> s_i s_j` and, with a field, `g2 = -sum_i s_i`.
#[derive(Debug, Clone)]
pub struct Ising2d {
    rows: usize,
    cols: usize,
    field: bool,
    periodic: bool,
    bonds: Vec<(usize, usize)>,
    adj: Adjacency,
}

impl Ising2d {
    /// Free (non-periodic) boundaries.
    pub fn new(rows: usize, cols: usize, include_field: bool) -> Self {
        Self::with_boundary(rows, cols, include_field, false)
    }

    pub fn with_boundary(rows: usize, cols: usize, include_field: bool, periodic: bool) -> Self {
        assert!(rows >= 1 && cols >= 1, "lattice must have at least one site");
        let bonds = grid_bonds(rows, cols, periodic);
        let edges: Vec<_> = bonds.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Self {
            rows,
            cols,
            field: include_field,
            periodic,
            adj: Adjacency::from_edges(rows * cols, &edges),
            bonds,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn num_bonds(&self) -> usize {
        self.bonds.len()
    }
}

impl Model for Ising2d {
    fn name(&self) -> &str {
        if self.field {
            "ising2d-field"
        } else {
            "ising2d"
        }
    }

    fn encoding(&self) -> Encoding {
        Encoding::Spin
    }

    fn layout(&self) -> Layout {
        Layout::Grid {
            rows: self.rows,
            cols: self.cols,
        }
    }

    fn num_stats(&self) -> usize {
        1 + self.field as usize
    }

    fn stat_names(&self) -> Vec<String> {
        let mut names = vec!["bonds".to_string()];
        if self.field {
            names.push("field".to_string());
        }
        names
    }

    fn write_stats(&self, s: &[i8], out: &mut [f64]) {
        let pair: i64 = self
            .bonds
            .iter()
            .map(|&(i, j)| (s[i] * s[j]) as i64)
            .sum();
        out[0] = -(pair as f64);
        if self.field {
            out[1] = -(s.iter().map(|&v| v as i64).sum::<i64>() as f64);
        }
    }

    #[inline]
    fn push_change(&self, s: &[i8], site: usize, out: &mut SparseDelta) {
        let sk = s[site] as i32;
        let local: i32 = self
            .adj
            .neighbors(site)
            .iter()
            .map(|&j| s[j as usize] as i32)
            .sum();
        out.push(0, (2 * sk * local) as f64);
        if self.field {
            out.push(1, (2 * sk) as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{BinaryState, Proposal};

    fn grid(rows: usize, cols: usize, v: Vec<i8>) -> BinaryState {
        BinaryState::new(Encoding::Spin, Layout::Grid { rows, cols }, v).unwrap()
    }

    #[test]
    fn aligned_lattices() {
        let m = Ising2d::new(2, 2, false);
        assert_eq!(m.suff_stats(&grid(2, 2, vec![1; 4])).unwrap().0, vec![-4.0]);
        let m = Ising2d::new(8, 8, false);
        assert_eq!(m.suff_stats(&grid(8, 8, vec![1; 64])).unwrap().0, vec![-112.0]);
        let m = Ising2d::new(2, 2, true);
        assert_eq!(m.suff_stats(&grid(2, 2, vec![1; 4])).unwrap().0, vec![-4.0, -4.0]);
    }

    #[test]
    fn checkerboard_is_antialigned() {
        let m = Ising2d::new(2, 2, false);
        assert_eq!(m.suff_stats(&grid(2, 2, vec![1, -1, -1, 1])).unwrap().0, vec![4.0]);
    }

    #[test]
    fn corner_flip_change() {
        let m = Ising2d::new(2, 2, false);
        let d = m.change_stats(&grid(2, 2, vec![1; 4]), &Proposal::symmetric(0, 4)).unwrap();
        assert_eq!(d.0, vec![4.0]);
    }

    #[test]
    fn rejects_wrong_layout() {
        let m = Ising2d::new(2, 2, false);
        assert!(m.suff_stats(&grid(1, 4, vec![1; 4])).is_err());
        let tie = BinaryState::filled(Encoding::Tie, Layout::Grid { rows: 2, cols: 2 }, 0).unwrap();
        assert!(m.suff_stats(&tie).is_err());
        assert!(m.change_stats(&grid(2, 2, vec![1; 4]), &Proposal::symmetric(4, 4)).is_err());
    }
}
