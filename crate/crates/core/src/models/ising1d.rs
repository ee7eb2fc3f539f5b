use crate::model::Model;
use crate::state::{Encoding, Layout, SparseDelta};

/// Periodic 1D Ising chain with one free coupling per bond.
///
/// Statistic `b` is `-x_b x_{(b+1) mod N}`, so `L = N`.
#[derive(Debug, Clone)]
pub struct Ising1dPeriodic {
    n: usize,
}

impl Ising1dPeriodic {
    pub fn new(n: usize) -> Self {
        assert!(n >= 3, "periodic chain needs at least 3 sites");
        Self { n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The pair `(i, j)` with `i < j` joined by bond `b`.
    pub fn bond_sites(&self, b: usize) -> (usize, usize) {
        let (i, j) = (b, (b + 1) % self.n);
        (i.min(j), i.max(j))
    }
}

impl Model for Ising1dPeriodic {
    fn name(&self) -> &str {
        "ising1d"
    }

    fn encoding(&self) -> Encoding {
        Encoding::Spin
    }

    fn layout(&self) -> Layout {
        Layout::Chain { len: self.n }
    }

    fn num_stats(&self) -> usize {
        self.n
    }

    fn stat_names(&self) -> Vec<String> {
        (0..self.n)
            .map(|b| format!("bond_{}_{}", b, (b + 1) % self.n))
            .collect()
    }

    fn write_stats(&self, x: &[i8], out: &mut [f64]) {
        for b in 0..self.n {
            out[b] = -((x[b] * x[(b + 1) % self.n]) as f64);
        }
    }

    #[inline]
    fn push_change(&self, x: &[i8], site: usize, out: &mut SparseDelta) {
        let n = self.n;
        let prev = (site + n - 1) % n;
        let next = (site + 1) % n;
        out.push(prev, 2.0 * (x[prev] * x[site]) as f64);
        out.push(site, 2.0 * (x[site] * x[next]) as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{BinaryState, Proposal};

    fn chain(v: Vec<i8>) -> BinaryState {
        let len = v.len();
        BinaryState::new(Encoding::Spin, Layout::Chain { len }, v).unwrap()
    }

    #[test]
    fn aligned_chain() {
        let m = Ising1dPeriodic::new(15);
        assert_eq!(m.suff_stats(&chain(vec![1; 15])).unwrap().0, vec![-1.0; 15]);
    }

    #[test]
    fn flip_first_site_of_three() {
        let m = Ising1dPeriodic::new(3);
        let x = chain(vec![1; 3]);
        let p = Proposal::symmetric(0, 3);
        let after = m.suff_stats(&x.apply_proposal(&p).unwrap()).unwrap();
        assert_eq!(after.0, vec![1.0, -1.0, 1.0]);
        let d = m.change_stats(&x, &p).unwrap();
        assert_eq!(d.iter().sum::<f64>(), 4.0);
    }

    #[test]
    fn alternating_chain() {
        let m = Ising1dPeriodic::new(4);
        assert_eq!(m.suff_stats(&chain(vec![1, -1, 1, -1])).unwrap().0, vec![1.0; 4]);
    }
}
