use rand::Rng;

use super::{apply_pins, guard, tail_average, Dataset, Ensemble, EstimationTrace};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::sampler::mh_step;
use crate::state::{BinaryState, ParamVector};

/// Learning-rate schedule `a_t` for persistent contrastive divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LearningRate {
    Constant(f64),
    /// `a0 / t` for update `t = 1, 2, ...`
    Harmonic(f64),
}

impl LearningRate {
    #[inline]
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LearningRate::Constant(a) => a,
            LearningRate::Harmonic(a0) => a0 / t.max(1) as f64,
        }
    }
}

/// One stochastic-approximation step: advance `x` by one sampler transition,
/// then `theta += a_t (g(x_obs) - g(x_{t+1}))`.
pub fn pcd_step<R: Rng + ?Sized, M: Model + ?Sized>(
    rng: &mut R,
    model: &M,
    theta: &ParamVector,
    x: &BinaryState,
    x_obs: &BinaryState,
    a_t: f64,
) -> Result<(ParamVector, BinaryState)> {
    if !(a_t > 0.0) {
        return Err(Error::invalid("learning rate must be positive"));
    }
    let next = mh_step(rng, model, theta, x)?.state;
    let g_obs = model.suff_stats(x_obs)?;
    let g_next = model.suff_stats(&next)?;
    let theta = theta
        .iter()
        .zip(g_obs.iter().zip(g_next.iter()))
        .map(|(t, (o, n))| t + a_t * (o - n))
        .collect();
    Ok((theta, next))
}

/// Persistent contrastive divergence over the dataset's chains (one sampler
/// step per chain per update); returns the tail average after `t_burnin`.
pub fn pcd_estimate<M: Model + ?Sized>(
    seed: u64,
    data: &Dataset<'_, M>,
    theta0: &ParamVector,
    rate: LearningRate,
    t_max: usize,
    t_burnin: usize,
    theta_guard: f64,
) -> Result<(ParamVector, EstimationTrace)> {
    if t_burnin >= t_max {
        return Err(Error::config("burn-in must be below t_max"));
    }
    let mut theta = theta0.clone();
    apply_pins(&mut theta, data.pinned());
    let free: Vec<bool> = data.pinned().iter().map(Option::is_none).collect();
    let mut ensemble = Ensemble::new(data, seed);
    let mut trace = EstimationTrace::with_capacity(data.dim(), t_max);
    let mut d = vec![0.0; data.dim()];
    for t in 1..=t_max {
        let accepted = ensemble.advance(&theta, 1, true);
        ensemble.discrepancy_into(&mut d);
        let a_t = rate.at(t);
        for ((th, di), f) in theta.iter_mut().zip(&d).zip(&free) {
            if *f {
                *th -= a_t * di;
            }
        }
        guard(&theta, theta_guard)?;
        trace.push(&theta, &d, accepted);
    }
    Ok((tail_average(&trace, t_burnin)?, trace))
}
