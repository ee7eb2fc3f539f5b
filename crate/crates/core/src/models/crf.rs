use crate::error::{Error, Result};
use crate::model::{grid_bonds, Adjacency, Model};
use crate::state::{Encoding, Layout, SparseDelta};

/// Pairwise conditional random field for binary image labels given a noisy image `y`.
///
/// Node features are `[1, y_j]`, edge features `[1, |y_i - y_j|]` on the
/// 4-neighbour grid. Parameters are `[h1, h2, J1, J2]` and the statistics
/// (each unordered edge counted once):
///
/// ```text
/// g_h1 = -sum_j x_j            g_J1 = -sum_{i~j} x_i x_j
/// g_h2 = -sum_j y_j x_j        g_J2 = -sum_{i~j} |y_i - y_j| x_i x_j
/// ```
#[derive(Debug, Clone)]
pub struct Crf {
    rows: usize,
    cols: usize,
    y: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    adj: Adjacency,
}

impl Crf {
    pub fn new(y: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || y.len() != rows * cols {
            return Err(Error::invalid(format!(
                "feature image has {} pixels, expected {rows}x{cols}",
                y.len()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature image contains non-finite values"));
        }
        let edges: Vec<_> = grid_bonds(rows, cols, false)
            .into_iter()
            .map(|(i, j)| (i, j, (y[i] - y[j]).abs()))
            .collect();
        Ok(Self {
            rows,
            cols,
            adj: Adjacency::from_edges(rows * cols, &edges),
            y,
            edges,
        })
    }

    pub fn features(&self) -> &[f64] {
        &self.y
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

impl Model for Crf {
    fn name(&self) -> &str {
        "crf"
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
        4
    }

    fn stat_names(&self) -> Vec<String> {
        ["h1", "h2", "J1", "J2"].map(String::from).to_vec()
    }

    fn write_stats(&self, x: &[i8], out: &mut [f64]) {
        let mut g = [0.0f64; 4];
        for (&xj, &yj) in x.iter().zip(&self.y) {
            g[0] -= xj as f64;
            g[1] -= yj * xj as f64;
        }
        for &(i, j, w) in &self.edges {
            let p = (x[i] * x[j]) as f64;
            g[2] -= p;
            g[3] -= w * p;
        }
        out.copy_from_slice(&g);
    }

    #[inline]
    fn push_change(&self, x: &[i8], site: usize, out: &mut SparseDelta) {
        let xk = x[site] as f64;
        let (mut plain, mut weighted) = (0.0, 0.0);
        for (j, w) in self.adj.weighted(site) {
            let xj = x[j] as f64;
            plain += xj;
            weighted += w * xj;
        }
        out.push(0, 2.0 * xk);
        out.push(1, 2.0 * self.y[site] * xk);
        out.push(2, 2.0 * xk * plain);
        out.push(3, 2.0 * xk * weighted);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::{BinaryState, Proposal};

    #[test]
    fn two_pixel_substitution() {
        let m = Crf::new(vec![1.0, -1.0], 1, 2).unwrap();
        let x = BinaryState::filled(Encoding::Spin, Layout::Grid { rows: 1, cols: 2 }, 1).unwrap();
        assert_eq!(m.suff_stats(&x).unwrap().0, vec![-2.0, 0.0, -1.0, -2.0]);
    }

    #[test]
    fn flat_features_zero_the_feature_statistics() {
        let m = Crf::new(vec![0.0; 9], 3, 3).unwrap();
        let x = BinaryState::filled(Encoding::Spin, Layout::Grid { rows: 3, cols: 3 }, -1).unwrap();
        let g = m.suff_stats(&x).unwrap();
        assert_eq!(g[1], 0.0);
        assert_eq!(g[3], 0.0);
        assert_eq!(g[2], -12.0);
    }

    #[test]
    fn interior_flip_moves_h1_by_two() {
        let m = Crf::new((0..9).map(|v| v as f64 * 0.3).collect(), 3, 3).unwrap();
        let x = BinaryState::filled(Encoding::Spin, Layout::Grid { rows: 3, cols: 3 }, 1).unwrap();
        let d = m.change_stats(&x, &Proposal::symmetric(4, 9)).unwrap();
        assert_eq!(d[0].abs(), 2.0);
    }

    #[test]
    fn rejects_mismatched_features() {
        assert!(Crf::new(vec![0.0; 5], 2, 3).is_err());
    }
}
