use crate::model::Model;
use crate::state::{Encoding, Layout, SparseDelta};

/// Fully visible Boltzmann machine over `N` spins with symmetric couplings.
///
/// One statistic `-x_i x_j` per pair `i < j`, flattened row-major:
/// `(0,1), (0,2), ..., (0,N-1), (1,2), ...`.
#[derive(Debug, Clone)]
pub struct Vbm {
    n: usize,
    /// `pair[i * n + j]` is the flat index of the unordered pair `{i, j}`.
    pair: Vec<usize>,
}

impl Vbm {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "a Boltzmann machine needs at least two units");
        let mut pair = vec![usize::MAX; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                pair[i * n + j] = k;
                pair[j * n + i] = k;
                k += 1;
            }
        }
        Self { n, pair }
    }

    pub fn units(&self) -> usize {
        self.n
    }

    /// Flat statistic index of pair `{i, j}`, `i != j`.
    pub fn pair_index(&self, i: usize, j: usize) -> usize {
        assert!(i != j && i < self.n && j < self.n);
        self.pair[i * self.n + j]
    }

    /// All pairs in flat-index order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).map(move |j| (i, j)))
    }
}

impl Model for Vbm {
    fn name(&self) -> &str {
        "vbm"
    }

    fn encoding(&self) -> Encoding {
        Encoding::Spin
    }

    fn layout(&self) -> Layout {
        Layout::Chain { len: self.n }
    }

    fn num_stats(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn stat_names(&self) -> Vec<String> {
        self.pairs().map(|(i, j)| format!("pair_{i}_{j}")).collect()
    }

    fn write_stats(&self, x: &[i8], out: &mut [f64]) {
        for (k, (i, j)) in self.pairs().enumerate() {
            out[k] = -((x[i] * x[j]) as f64);
        }
    }

    #[inline]
    fn push_change(&self, x: &[i8], site: usize, out: &mut SparseDelta) {
        let row = &self.pair[site * self.n..(site + 1) * self.n];
        let xk = x[site];
        for (j, &k) in row.iter().enumerate() {
            if j != site {
                out.push(k, 2.0 * (xk * x[j]) as f64);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{BinaryState, Proposal};

    #[test]
    fn fifteen_units_give_105_statistics() {
        let m = Vbm::new(15);
        assert_eq!(m.num_stats(), 105);
        let x = BinaryState::filled(Encoding::Spin, Layout::Chain { len: 15 }, 1).unwrap();
        assert_eq!(m.suff_stats(&x).unwrap().0, vec![-1.0; 105]);
        assert_eq!(m.pair_index(13, 14), 104);
        assert_eq!(m.pair_index(1, 0), 0);
    }

    #[test]
    fn flipping_unit_zero() {
        let m = Vbm::new(3);
        let x = BinaryState::filled(Encoding::Spin, Layout::Chain { len: 3 }, 1).unwrap();
        let y = x.apply_proposal(&Proposal::symmetric(0, 3)).unwrap();
        assert_eq!(m.suff_stats(&y).unwrap().0, vec![1.0, 1.0, -1.0]);
    }
}
