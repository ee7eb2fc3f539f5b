//! Binary configurations, parameter and statistic vectors, and single-site proposals.

use std::fmt;
use std::ops::{Deref, DerefMut};

use rand::Rng;

use crate::error::{Error, Result};

/// How a binary site is encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Encoding {
    /// Values in {-1, +1}.
    Spin,
    /// Values in {0, 1}.
    Tie,
}

impl Encoding {
    pub fn is_legal(self, v: i8) -> bool {
        match self {
            Encoding::Spin => v == 1 || v == -1,
            Encoding::Tie => v == 0 || v == 1,
        }
    }

    /// The opposite legal value.
    #[inline]
    pub fn toggle(self, v: i8) -> i8 {
        match self {
            Encoding::Spin => -v,
            Encoding::Tie => 1 - v,
        }
    }

    /// Value represented by a set (`true`) or cleared bit.
    #[inline]
    pub fn from_bit(self, bit: bool) -> i8 {
        match (self, bit) {
            (Encoding::Spin, true) => 1,
            (Encoding::Spin, false) => -1,
            (Encoding::Tie, true) => 1,
            (Encoding::Tie, false) => 0,
        }
    }

    #[inline]
    pub fn to_bit(self, v: i8) -> bool {
        v == 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Spin => "spin",
            Encoding::Tie => "tie",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "spin" => Some(Encoding::Spin),
            "tie" => Some(Encoding::Tie),
            _ => None,
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Geometry attached to a state vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    /// Row-major image or lattice.
    Grid { rows: usize, cols: usize },
    /// Plain vector of sites (1D chains, fully connected machines).
    Chain { len: usize },
    /// Directed graph without self-loops; one tie per ordered pair.
    Digraph { nodes: usize },
}

impl Layout {
    pub fn len(&self) -> usize {
        match *self {
            Layout::Grid { rows, cols } => rows * cols,
            Layout::Chain { len } => len,
            Layout::Digraph { nodes } => nodes * nodes.saturating_sub(1),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Layout::Grid { rows, cols } => write!(f, "{rows} {cols}"),
            Layout::Chain { len } => write!(f, "chain {len}"),
            Layout::Digraph { nodes } => write!(f, "digraph {nodes}"),
        }
    }
}

/// Flat index of the arc `from -> to` in a digraph tie vector (row-major, diagonal skipped).
#[inline]
pub fn arc_index(nodes: usize, from: usize, to: usize) -> usize {
    debug_assert!(from != to && from < nodes && to < nodes);
    from * (nodes - 1) + if to < from { to } else { to - 1 }
}

/// Inverse of [`arc_index`].
#[inline]
pub fn arc_endpoints(nodes: usize, index: usize) -> (usize, usize) {
    let from = index / (nodes - 1);
    let r = index % (nodes - 1);
    (from, if r < from { r } else { r + 1 })
}

/// A configuration `x` of binary site variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryState {
    encoding: Encoding,
    layout: Layout,
    values: Vec<i8>,
}

impl BinaryState {
    pub fn new(encoding: Encoding, layout: Layout, values: Vec<i8>) -> Result<Self> {
        if layout.len() != values.len() {
            return Err(Error::invalid(format!(
                "layout {layout} expects {} sites, got {}",
                layout.len(),
                values.len()
            )));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !encoding.is_legal(v))
        {
            return Err(Error::invalid(format!(
                "site {i} holds {v}, not a legal {encoding} value"
            )));
        }
        Ok(Self {
            encoding,
            layout,
            values,
        })
    }

    /// Every site set to `value`.
    pub fn filled(encoding: Encoding, layout: Layout, value: i8) -> Result<Self> {
        Self::new(encoding, layout, vec![value; layout.len()])
    }

    /// Independent fair coin per site.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, encoding: Encoding, layout: Layout) -> Self {
        let values = (0..layout.len())
            .map(|_| encoding.from_bit(rng.random::<bool>()))
            .collect();
        Self {
            encoding,
            layout,
            values,
        }
    }

    /// Decode an enumeration index: bit `k` of `code` is site `k`.
    pub fn from_code(encoding: Encoding, layout: Layout, code: u64) -> Self {
        let mut values = vec![0i8; layout.len()];
        decode_into(encoding, code, &mut values);
        Self {
            encoding,
            layout,
            values,
        }
    }

    pub fn to_code(&self) -> u64 {
        debug_assert!(self.values.len() <= 64);
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| self.encoding.to_bit(v))
            .fold(0u64, |acc, (k, _)| acc | (1u64 << k))
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, site: usize) -> i8 {
        self.values[site]
    }

    /// Toggle one site in place.
    #[inline]
    pub fn toggle(&mut self, site: usize) {
        let v = self.values[site];
        self.values[site] = self.encoding.toggle(v);
    }

    /// Returns a copy with the proposal's site toggled.
    pub fn apply_proposal(&self, p: &Proposal) -> Result<Self> {
        self.check_site(p.site)?;
        let mut out = self.clone();
        out.toggle(p.site);
        Ok(out)
    }

    pub(crate) fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.values.len() {
            return Err(Error::invalid(format!(
                "site {site} out of range for state of length {}",
                self.values.len()
            )));
        }
        Ok(())
    }
}

/// Fill `values` from the low bits of `code`.
#[inline]
pub(crate) fn decode_into(encoding: Encoding, code: u64, values: &mut [i8]) {
    for (k, v) in values.iter_mut().enumerate() {
        *v = encoding.from_bit((code >> k) & 1 == 1);
    }
}

macro_rules! real_vector {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Default)]
        pub struct $name(pub Vec<f64>);

        impl $name {
            pub fn zeros(len: usize) -> Self {
                Self(vec![0.0; len])
            }

            pub fn into_inner(self) -> Vec<f64> {
                self.0
            }

            pub fn dot(&self, other: &[f64]) -> f64 {
                dot(&self.0, other)
            }

            pub fn max_abs(&self) -> f64 {
                self.0.iter().fold(0.0f64, |m, v| m.max(v.abs()))
            }
        }

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut [f64] {
                &mut self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }

        impl FromIterator<f64> for $name {
            fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
                Self(iter.into_iter().collect())
            }
        }
    };
}

real_vector!(
    /// Canonical parameters `theta`, one per sufficient statistic.
    ParamVector
);
real_vector!(
    /// Sufficient statistics `g(x)` or a difference of them.
    StatVector
);

impl ParamVector {
    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl StatVector {
    /// Elementwise `self - other`.
    pub fn sub(&self, other: &StatVector) -> StatVector {
        self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect()
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sparse statistic change produced by toggling one site.
///
/// Entries may repeat an index; consumers sum them.
#[derive(Debug, Clone, Default)]
pub struct SparseDelta {
    entries: Vec<(usize, f64)>,
}

impl SparseDelta {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn clear(&mut self) {
        self.entries.clear();
    }

    #[inline]
    pub fn push(&mut self, index: usize, value: f64) {
        self.entries.push((index, value));
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    #[inline]
    pub fn dot(&self, theta: &[f64]) -> f64 {
        self.entries.iter().map(|&(k, v)| theta[k] * v).sum()
    }

    #[inline]
    pub fn add_to(&self, dense: &mut [f64]) {
        for &(k, v) in &self.entries {
            dense[k] += v;
        }
    }

    pub fn extend_from(&mut self, other: &SparseDelta) {
        self.entries.extend_from_slice(&other.entries);
    }

    pub fn to_dense(&self, len: usize) -> StatVector {
        let mut out = StatVector::zeros(len);
        self.add_to(&mut out);
        out
    }
}

/// A single-site toggle proposal with its forward and reverse proposal probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub site: usize,
    pub forward_weight: f64,
    pub reverse_weight: f64,
}

impl Proposal {
    /// Uniform single-site proposal over `len` sites.
    pub fn symmetric(site: usize, len: usize) -> Self {
        let w = 1.0 / len as f64;
        Self {
            site,
            forward_weight: w,
            reverse_weight: w,
        }
    }

    /// `ln(q(x'->x) / q(x->x'))`.
    #[inline]
    pub fn log_proposal_ratio(&self) -> f64 {
        if self.forward_weight == self.reverse_weight {
            0.0
        } else {
            (self.reverse_weight / self.forward_weight).ln()
        }
    }

    pub fn validate(&self, len: usize) -> Result<()> {
        if self.site >= len {
            return Err(Error::invalid(format!(
                "proposal site {} out of range for {len} sites",
                self.site
            )));
        }
        let ok = |w: f64| w > 0.0 && w <= 1.0;
        if !ok(self.forward_weight) || !ok(self.reverse_weight) {
            return Err(Error::invalid("proposal weights must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toggle_spin_and_tie() {
        let mut s = BinaryState::filled(Encoding::Spin, Layout::Chain { len: 3 }, 1).unwrap();
        s.toggle(1);
        assert_eq!(s.values(), &[1, -1, 1]);
        let t = BinaryState::filled(Encoding::Tie, Layout::Digraph { nodes: 2 }, 0).unwrap();
        let t2 = t.apply_proposal(&Proposal::symmetric(1, 2)).unwrap();
        assert_eq!(t2.values(), &[0, 1]);
        assert_eq!(t2.apply_proposal(&Proposal::symmetric(1, 2)).unwrap(), t);
    }

    #[test]
    fn rejects_illegal_values_and_dims() {
        assert!(BinaryState::new(Encoding::Spin, Layout::Chain { len: 2 }, vec![1, 0]).is_err());
        assert!(BinaryState::new(Encoding::Tie, Layout::Grid { rows: 2, cols: 2 }, vec![1; 3]).is_err());
        assert!(BinaryState::new(Encoding::Tie, Layout::Digraph { nodes: 3 }, vec![0; 6]).is_ok());
    }

    #[test]
    fn out_of_range_site_is_an_error() {
        let s = BinaryState::filled(Encoding::Spin, Layout::Chain { len: 3 }, 1).unwrap();
        assert!(s.apply_proposal(&Proposal::symmetric(3, 3)).is_err());
    }

    #[test]
    fn code_round_trip() {
        let layout = Layout::Grid { rows: 2, cols: 3 };
        for code in 0..64u64 {
            let s = BinaryState::from_code(Encoding::Spin, layout, code);
            assert_eq!(s.to_code(), code);
        }
    }

    #[test]
    fn arc_index_is_a_bijection() {
        let n = 5;
        let mut seen = vec![false; n * (n - 1)];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let k = arc_index(n, i, j);
                assert!(!seen[k]);
                seen[k] = true;
                assert_eq!(arc_endpoints(n, k), (i, j));
            }
        }
    }
}
