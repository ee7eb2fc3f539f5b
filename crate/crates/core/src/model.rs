//! The exponential-family model abstraction.
//!
//! A model assigns `pi(x | theta) = exp(theta . g(x)) / Z(theta)` to binary
//! configurations `x`. Implementors provide the sufficient statistics `g` and,
//! separately, the local change `g(x') - g(x)` for toggling one site. The
//! sampler only ever uses the local form; the full form exists for
//! construction, enumeration and tests.

use crate::error::{Error, Result};
use crate::state::{BinaryState, Encoding, Layout, Proposal, SparseDelta, StatVector};

pub trait Model: Send + Sync {
    /// Short identifier, e.g. `"ising2d"`.
    fn name(&self) -> &str;

    fn encoding(&self) -> Encoding;

    fn layout(&self) -> Layout;

    /// Number of sufficient statistics `L`.
    fn num_stats(&self) -> usize;

    fn stat_names(&self) -> Vec<String>;

    /// Write `g(values)` into `out` (length `L`), overwriting it.
    fn write_stats(&self, values: &[i8], out: &mut [f64]);

    /// Append `g(x') - g(x)` for toggling `site` of `values` to `out`.
    ///
    /// Cost must depend only on the site's neighbourhood.
    fn push_change(&self, values: &[i8], site: usize, out: &mut SparseDelta);

    /// Parameters held fixed during estimation, by statistic index.
    fn pinned(&self) -> Vec<Option<f64>> {
        vec![None; self.num_stats()]
    }

    fn num_sites(&self) -> usize {
        self.layout().len()
    }

    fn check_state(&self, x: &BinaryState) -> Result<()> {
        if x.encoding() != self.encoding() {
            return Err(Error::invalid(format!(
                "{} expects {} encoding, got {}",
                self.name(),
                self.encoding(),
                x.encoding()
            )));
        }
        if x.layout() != self.layout() {
            return Err(Error::invalid(format!(
                "{} expects layout `{}`, got `{}`",
                self.name(),
                self.layout(),
                x.layout()
            )));
        }
        Ok(())
    }

    /// `g(x)` from scratch.
    fn suff_stats(&self, x: &BinaryState) -> Result<StatVector> {
        self.check_state(x)?;
        let mut out = StatVector::zeros(self.num_stats());
        self.write_stats(x.values(), &mut out);
        Ok(out)
    }

    /// `g(x') - g(x)` where `x'` is `x` with the proposal applied.
    fn change_stats(&self, x: &BinaryState, p: &Proposal) -> Result<StatVector> {
        self.check_state(x)?;
        x.check_site(p.site)?;
        let mut delta = SparseDelta::new();
        self.push_change(x.values(), p.site, &mut delta);
        Ok(delta.to_dense(self.num_stats()))
    }
}

impl<M: Model + ?Sized> Model for &M {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn encoding(&self) -> Encoding {
        (**self).encoding()
    }
    fn layout(&self) -> Layout {
        (**self).layout()
    }
    fn num_stats(&self) -> usize {
        (**self).num_stats()
    }
    fn stat_names(&self) -> Vec<String> {
        (**self).stat_names()
    }
    fn write_stats(&self, values: &[i8], out: &mut [f64]) {
        (**self).write_stats(values, out)
    }
    fn push_change(&self, values: &[i8], site: usize, out: &mut SparseDelta) {
        (**self).push_change(values, site, out)
    }
    fn pinned(&self) -> Vec<Option<f64>> {
        (**self).pinned()
    }
}

/// Compact neighbour table (CSR) with optional per-edge weights.
#[derive(Debug, Clone)]
pub(crate) struct Adjacency {
    offsets: Vec<usize>,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
}

impl Adjacency {
    /// Build from an undirected edge list; each edge is recorded at both endpoints.
    pub(crate) fn from_edges(sites: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut degree = vec![0usize; sites];
        for &(i, j, _) in edges {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(sites + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..sites].to_vec();
        let mut neighbors = vec![0u32; offsets[sites]];
        let mut weights = vec![0.0; offsets[sites]];
        for &(i, j, w) in edges {
            neighbors[fill[i]] = j as u32;
            weights[fill[i]] = w;
            fill[i] += 1;
            neighbors[fill[j]] = i as u32;
            weights[fill[j]] = w;
            fill[j] += 1;
        }
        Self {
            offsets,
            neighbors,
            weights,
        }
    }

    #[inline]
    pub(crate) fn neighbors(&self, site: usize) -> &[u32] {
        &self.neighbors[self.offsets[site]..self.offsets[site + 1]]
    }

    #[inline]
    pub(crate) fn weighted(&self, site: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[site]..self.offsets[site + 1];
        self.neighbors[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&j, &w)| (j as usize, w))
    }
}

/// 4-neighbour bonds of a `rows x cols` grid, each unordered bond listed once.
pub(crate) fn grid_bonds(rows: usize, cols: usize, periodic: bool) -> Vec<(usize, usize)> {
    let mut bonds = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            if c + 1 < cols {
                bonds.push((i, i + 1));
            } else if periodic && cols > 2 {
                bonds.push((i, r * cols));
            }
            if r + 1 < rows {
                bonds.push((i, i + cols));
            } else if periodic && rows > 2 {
                bonds.push((i, c));
            }
        }
    }
    bonds
}
