//! Parameter estimators: contrastive divergence (initialiser), equilibrium
//! expectation (main estimator) and persistent contrastive divergence (baseline).

mod cd;
mod ee;
mod ensemble;
mod pcd;

pub use cd::{cd_estimate, CdRunner};
pub use ee::{ee_estimate, ee_soft_step, ee_step, EeRunner, EeUpdate};
pub use ensemble::{Dataset, Ensemble, Observation};
pub use pcd::{pcd_estimate, pcd_step, LearningRate};

use crate::error::{Error, Result};
use crate::state::ParamVector;

/// Step-size shape `f(|theta|, c)` multiplying the learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepSizeKind {
    /// `max(|theta|, c)`
    #[default]
    MaxAbsC,
    /// `|theta| + c`
    AbsPlusC,
    /// `max(sqrt|theta|, c)`
    MaxSqrtC,
}

impl StepSizeKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "max" | "max-abs" | "maxabsc" => Some(Self::MaxAbsC),
            "abs-plus" | "absplusc" => Some(Self::AbsPlusC),
            "max-sqrt" | "maxsqrtc" => Some(Self::MaxSqrtC),
            _ => None,
        }
    }
}

#[inline]
pub fn step_size(kind: StepSizeKind, theta: f64, c: f64) -> f64 {
    match kind {
        StepSizeKind::MaxAbsC => theta.abs().max(c),
        StepSizeKind::AbsPlusC => theta.abs() + c,
        StepSizeKind::MaxSqrtC => theta.abs().sqrt().max(c),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    /// Learning rate.
    pub a: f64,
    /// Floor that lets parameters cross zero.
    pub c: f64,
    /// Metropolis-Hastings steps per parameter update.
    pub m: usize,
    /// Parameter updates.
    pub t_max: usize,
    /// Updates discarded before averaging.
    pub t_burnin: usize,
    /// Abort when any `|theta_i|` exceeds this.
    pub theta_guard: f64,
    pub step_fn: StepSizeKind,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            a: 0.001,
            c: 0.01,
            m: 1,
            t_max: 100_000,
            t_burnin: 50_000,
            theta_guard: 50.0,
            step_fn: StepSizeKind::MaxAbsC,
        }
    }
}

impl EstimatorConfig {
    pub fn new(a: f64, c: f64, m: usize, t_max: usize) -> Self {
        Self {
            a,
            c,
            m,
            t_max,
            t_burnin: t_max / 2,
            ..Self::default()
        }
    }

    pub fn with_burnin(mut self, t_burnin: usize) -> Self {
        self.t_burnin = t_burnin;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::config(format!("learning rate a = {} must be > 0", self.a)));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config(format!("c = {} must be > 0", self.c)));
        }
        if self.m == 0 {
            return Err(Error::config("m must be at least 1"));
        }
        if self.t_burnin >= self.t_max {
            return Err(Error::config(format!(
                "burn-in {} must be below t_max {}",
                self.t_burnin, self.t_max
            )));
        }
        if !(self.theta_guard > 0.0) {
            return Err(Error::config("theta_guard must be > 0"));
        }
        Ok(())
    }
}

/// Per-update record of parameters, statistic discrepancies and acceptances.
///
/// Row `t` (0-based) holds `theta_{t+1}`, the discrepancy `d_{t+1}` that
/// produced it and the number of accepted moves during that update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EstimationTrace {
    dim: usize,
    theta: Vec<f64>,
    d: Vec<f64>,
    accepted: Vec<u64>,
}

impl EstimationTrace {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn with_capacity(dim: usize, rows: usize) -> Self {
        Self {
            dim,
            theta: Vec::with_capacity(dim * rows),
            d: Vec::with_capacity(dim * rows),
            accepted: Vec::with_capacity(rows),
        }
    }

    pub fn push(&mut self, theta: &[f64], d: &[f64], accepted: u64) {
        debug_assert_eq!(theta.len(), self.dim);
        debug_assert_eq!(d.len(), self.dim);
        self.theta.extend_from_slice(theta);
        self.d.extend_from_slice(d);
        self.accepted.push(accepted);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn theta(&self, row: usize) -> &[f64] {
        &self.theta[row * self.dim..(row + 1) * self.dim]
    }

    pub fn d(&self, row: usize) -> &[f64] {
        &self.d[row * self.dim..(row + 1) * self.dim]
    }

    pub fn accepted(&self, row: usize) -> u64 {
        self.accepted[row]
    }

    /// Column `i` of theta over rows `from..`.
    pub fn theta_column(&self, i: usize, from: usize) -> impl Iterator<Item = f64> + '_ {
        (from..self.len()).map(move |r| self.theta[r * self.dim + i])
    }

    pub fn d_column(&self, i: usize, from: usize) -> impl Iterator<Item = f64> + '_ {
        (from..self.len()).map(move |r| self.d[r * self.dim + i])
    }

    pub fn last_theta(&self) -> Option<ParamVector> {
        (!self.is_empty()).then(|| ParamVector(self.theta(self.len() - 1).to_vec()))
    }

    pub fn append(&mut self, other: &EstimationTrace) {
        assert_eq!(self.dim, other.dim);
        self.theta.extend_from_slice(&other.theta);
        self.d.extend_from_slice(&other.d);
        self.accepted.extend_from_slice(&other.accepted);
    }
}

/// Mean of `theta_j` over `j > t_burnin` (1-based update index).
pub fn tail_average(trace: &EstimationTrace, t_burnin: usize) -> Result<ParamVector> {
    if t_burnin >= trace.len() {
        return Err(Error::invalid(format!(
            "burn-in {t_burnin} leaves an empty tail in a trace of {} updates",
            trace.len()
        )));
    }
    let n = (trace.len() - t_burnin) as f64;
    Ok((0..trace.dim())
        .map(|i| trace.theta_column(i, t_burnin).sum::<f64>() / n)
        .collect())
}

/// Sample standard deviation of `theta_j` over `j > t_burnin`.
pub fn tail_std(trace: &EstimationTrace, t_burnin: usize) -> Result<ParamVector> {
    if trace.len() < t_burnin + 2 {
        return Err(Error::invalid("tail needs at least two updates"));
    }
    Ok((0..trace.dim())
        .map(|i| crate::convergence::sample_std(trace.theta_column(i, t_burnin)).1)
        .collect())
}

pub(crate) fn guard(theta: &[f64], limit: f64) -> Result<()> {
    for (index, &value) in theta.iter().enumerate() {
        if !(value.abs() <= limit) {
            return Err(Error::Divergence {
                index,
                value: value.abs(),
                guard: limit,
            });
        }
    }
    Ok(())
}

/// Theta starting point with pinned coordinates overwritten.
pub(crate) fn apply_pins(theta: &mut [f64], pinned: &[Option<f64>]) {
    for (t, p) in theta.iter_mut().zip(pinned) {
        if let Some(v) = p {
            *t = *v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_size_forms() {
        assert_eq!(step_size(StepSizeKind::MaxAbsC, -0.5, 0.01), 0.5);
        assert_eq!(step_size(StepSizeKind::MaxAbsC, 0.0, 0.01), 0.01);
        assert_eq!(step_size(StepSizeKind::AbsPlusC, 0.5, 0.01), 0.51);
        assert_eq!(step_size(StepSizeKind::MaxSqrtC, 0.25, 0.01), 0.5);
        assert_eq!(step_size(StepSizeKind::MaxSqrtC, 1e-6, 0.01), 0.01);
    }

    fn trace_of(values: &[f64]) -> EstimationTrace {
        let mut t = EstimationTrace::new(1);
        for &v in values {
            t.push(&[v], &[0.0], 0);
        }
        t
    }

    #[test]
    fn tail_average_examples() {
        assert!((tail_average(&trace_of(&[0.189; 10]), 3).unwrap()[0] - 0.189).abs() < 1e-15);
        assert_eq!(tail_average(&trace_of(&[1.0, 2.0, 3.0, 4.0]), 2).unwrap().0, vec![3.5]);
        assert_eq!(
            tail_average(&trace_of(&[0.3, -0.3, 0.3, -0.3, 0.3, -0.3]), 2).unwrap().0,
            vec![0.0]
        );
        assert!(tail_average(&trace_of(&[1.0, 2.0]), 2).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EstimatorConfig::default().validate().is_ok());
        let mut c = EstimatorConfig::default();
        c.t_burnin = c.t_max;
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        assert!(EstimatorConfig::new(0.0, 0.01, 1, 10).validate().is_err());
        assert!(EstimatorConfig::new(0.1, 0.01, 0, 10).validate().is_err());
    }

    #[test]
    fn guard_names_the_parameter() {
        match guard(&[0.1, -60.0], 50.0) {
            Err(Error::Divergence { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(guard(&[f64::NAN], 50.0).is_err());
    }
}
