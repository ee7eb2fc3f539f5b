use crate::error::{Error, Result};
use crate::model::Model;
use crate::state::{arc_endpoints, arc_index, Encoding, Layout, SparseDelta};

pub const ARC: usize = 0;
pub const MUTUAL: usize = 1;

/// Directed exponential random graph model with Arc and Mutual statistics.
///
/// Ties are `x_ij` for ordered pairs `i != j`; `Arc = sum x_ij` and
/// `Mutual = sum_{i<j} x_ij x_ji`. A toggle updates both in O(1).
#[derive(Debug, Clone)]
pub struct MiniErgm {
    nodes: usize,
    pinned: [Option<f64>; 2],
}

impl MiniErgm {
    pub fn new(nodes: usize) -> Self {
        assert!(nodes >= 2, "a digraph needs at least two nodes");
        Self {
            nodes,
            pinned: [None; 2],
        }
    }

    /// Hold the parameter of `stat` at `value` during estimation.
    pub fn pin(mut self, stat: usize, value: f64) -> Self {
        self.pinned[stat] = Some(value);
        self
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn arc(&self, from: usize, to: usize) -> usize {
        arc_index(self.nodes, from, to)
    }

    /// Err when the observed statistics lie on the boundary of the achievable
    /// set along a free parameter's direction, where no finite MLE exists.
    pub fn check_interior(&self, g: &[f64]) -> Result<()> {
        let dyads = (self.nodes * (self.nodes - 1) / 2) as f64;
        let (arcs, mutual) = (g[ARC], g[MUTUAL]);
        let boundary = |what: String| Err(Error::Nonexistence(what));
        match (self.pinned[ARC].is_none(), self.pinned[MUTUAL].is_none()) {
            // hull is the triangle (0,0), (D,0), (2D,D)
            (true, true) => {
                if mutual <= 0.0 || mutual <= arcs - dyads || 2.0 * mutual >= arcs {
                    return boundary(format!(
                        "(arc, mutual) = ({arcs}, {mutual}) lies on the boundary of the achievable set"
                    ));
                }
            }
            (true, false) => {
                if arcs <= 0.0 || arcs >= 2.0 * dyads {
                    return boundary(format!("arc count {arcs} is at the boundary [0, {}]", 2.0 * dyads));
                }
            }
            (false, true) => {
                if mutual <= 0.0 || mutual >= dyads {
                    return boundary(format!("mutual count {mutual} is at the boundary [0, {dyads}]"));
                }
            }
            (false, false) => {}
        }
        Ok(())
    }
}

impl Model for MiniErgm {
    fn name(&self) -> &str {
        "ergm"
    }

    fn encoding(&self) -> Encoding {
        Encoding::Tie
    }

    fn layout(&self) -> Layout {
        Layout::Digraph { nodes: self.nodes }
    }

    fn num_stats(&self) -> usize {
        2
    }

    fn stat_names(&self) -> Vec<String> {
        vec!["arc".into(), "mutual".into()]
    }

    fn pinned(&self) -> Vec<Option<f64>> {
        self.pinned.to_vec()
    }

    fn write_stats(&self, x: &[i8], out: &mut [f64]) {
        let n = self.nodes;
        let arcs: i64 = x.iter().map(|&v| v as i64).sum();
        let mut mutual = 0i64;
        for i in 0..n {
            for j in i + 1..n {
                mutual += (x[arc_index(n, i, j)] * x[arc_index(n, j, i)]) as i64;
            }
        }
        out[ARC] = arcs as f64;
        out[MUTUAL] = mutual as f64;
    }

    #[inline]
    fn push_change(&self, x: &[i8], site: usize, out: &mut SparseDelta) {
        let (i, j) = arc_endpoints(self.nodes, site);
        let sign = (1 - 2 * x[site]) as f64;
        out.push(ARC, sign);
        let reverse = x[arc_index(self.nodes, j, i)];
        if reverse != 0 {
            out.push(MUTUAL, sign);
        }
    }
}
