//! Concrete model families.

mod crf;
mod ergm;
mod ising1d;
mod ising2d;
mod vbm;

pub use crf::Crf;
pub use ergm::{MiniErgm, ARC, MUTUAL};
pub use ising1d::Ising1dPeriodic;
pub use ising2d::Ising2d;
pub use vbm::Vbm;

/// Convenience constructors.
pub fn build_ising2d(rows: usize, cols: usize, include_field: bool) -> Ising2d {
    Ising2d::new(rows, cols, include_field)
}

pub fn build_ising1d_periodic(n: usize) -> Ising1dPeriodic {
    Ising1dPeriodic::new(n)
}

pub fn build_vbm(n: usize) -> Vbm {
    Vbm::new(n)
}

pub fn build_crf(y: Vec<f64>, rows: usize, cols: usize) -> crate::Result<Crf> {
    Crf::new(y, rows, cols)
}

pub fn build_mini_ergm(nodes: usize) -> MiniErgm {
    MiniErgm::new(nodes)
}
