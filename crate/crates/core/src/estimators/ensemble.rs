use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::sampler::{mh_step_in_place, ChainRng, RngStream};
use crate::state::{BinaryState, SparseDelta, StatVector};

/// Chains fewer than this advance sequentially.
const PARALLEL_MIN_CHAINS: usize = 32;

/// One training instance: the observed configuration and where its chain starts.
#[derive(Debug, Clone)]
pub struct Observation<'a, M: ?Sized> {
    pub model: &'a M,
    pub target: BinaryState,
    pub start: BinaryState,
}

/// Training data for the estimators. A single observation is the special case
/// of an ensemble of one; the moment target is the mean of `g` over targets.
#[derive(Debug, Clone)]
pub struct Dataset<'a, M: ?Sized> {
    obs: Vec<Observation<'a, M>>,
    target_stats: Vec<StatVector>,
    dim: usize,
    pinned: Vec<Option<f64>>,
}

impl<'a, M: Model + ?Sized> Dataset<'a, M> {
    pub fn new(obs: Vec<Observation<'a, M>>) -> Result<Self> {
        let first = obs
            .first()
            .ok_or_else(|| Error::invalid("dataset has no observations"))?;
        let dim = first.model.num_stats();
        let pinned = first.model.pinned();
        let mut target_stats = Vec::with_capacity(obs.len());
        for o in &obs {
            if o.model.num_stats() != dim || o.model.pinned() != pinned {
                return Err(Error::invalid(
                    "all observations must share the statistic layout and pins",
                ));
            }
            o.model.check_state(&o.start)?;
            if o.start.is_empty() {
                return Err(Error::invalid("observation has no sites"));
            }
            target_stats.push(o.model.suff_stats(&o.target)?);
        }
        Ok(Self {
            obs,
            target_stats,
            dim,
            pinned,
        })
    }

    /// One observation; the chain starts at the data.
    pub fn single(model: &'a M, x_obs: BinaryState) -> Result<Self> {
        Self::shared(model, vec![x_obs])
    }

    /// Several observations of one model, each chain starting at its own instance.
    pub fn shared(model: &'a M, targets: Vec<BinaryState>) -> Result<Self> {
        Self::new(
            targets
                .into_iter()
                .map(|x| Observation {
                    model,
                    start: x.clone(),
                    target: x,
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.obs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.obs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pinned(&self) -> &[Option<f64>] {
        &self.pinned
    }

    pub fn observations(&self) -> &[Observation<'a, M>] {
        &self.obs
    }

    pub fn target_stats(&self) -> &[StatVector] {
        &self.target_stats
    }

    /// Data-side mean statistics.
    pub fn target_mean(&self) -> StatVector {
        let mut mean = StatVector::zeros(self.dim);
        for g in &self.target_stats {
            for (m, v) in mean.iter_mut().zip(g.iter()) {
                *m += v;
            }
        }
        let n = self.obs.len() as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

struct Member<'a, M: ?Sized> {
    model: &'a M,
    state: BinaryState,
    /// g(state) - g(target), maintained incrementally.
    acc: Vec<f64>,
    rng: ChainRng,
    scratch: SparseDelta,
    pending: SparseDelta,
    accepted: u64,
}

impl<M: Model + ?Sized> Member<'_, M> {
    fn advance(&mut self, theta: &[f64], m: usize, perform_moves: bool) {
        self.pending.clear();
        self.accepted = 0;
        for _ in 0..m {
            if mh_step_in_place(
                &mut self.rng,
                self.model,
                theta,
                &mut self.state,
                perform_moves,
                &mut self.scratch,
            ) {
                self.accepted += 1;
                self.scratch.add_to(&mut self.acc);
                self.pending.extend_from(&self.scratch);
            }
        }
    }
}

/// A set of chains advanced in lock-step between parameter updates.
///
/// Chain `k` draws from stream `k` of the ensemble seed, so results do not
/// depend on the thread count. The ensemble sum of accumulators is folded in
/// chain order after every advance.
pub struct Ensemble<'a, M: ?Sized> {
    members: Vec<Member<'a, M>>,
    total: Vec<f64>,
}

impl<'a, M: Model + ?Sized> Ensemble<'a, M> {
    /// Chains start at each observation's configured start.
    pub fn new(data: &Dataset<'a, M>, seed: u64) -> Self {
        Self::build(data, seed, false)
    }

    /// Chains start at the observed targets themselves.
    pub fn at_targets(data: &Dataset<'a, M>, seed: u64) -> Self {
        Self::build(data, seed, true)
    }

    fn build(data: &Dataset<'a, M>, seed: u64, at_targets: bool) -> Self {
        let dim = data.dim();
        let mut total = vec![0.0; dim];
        let members = data
            .observations()
            .iter()
            .zip(data.target_stats())
            .enumerate()
            .map(|(k, (o, g_target))| {
                let start = if at_targets { &o.target } else { &o.start };
                let mut acc = vec![0.0; dim];
                if start != &o.target {
                    o.model.write_stats(start.values(), &mut acc);
                    for (a, t) in acc.iter_mut().zip(g_target.iter()) {
                        *a -= t;
                    }
                }
                for (s, a) in total.iter_mut().zip(&acc) {
                    *s += a;
                }
                Member {
                    model: o.model,
                    state: start.clone(),
                    acc,
                    rng: RngStream::new(seed, k as u64).rng(),
                    scratch: SparseDelta::new(),
                    pending: SparseDelta::new(),
                    accepted: 0,
                }
            })
            .collect();
        Self { members, total }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Every chain performs `m` steps at `theta`; returns total acceptances.
    pub fn advance(&mut self, theta: &[f64], m: usize, perform_moves: bool) -> u64 {
        if self.members.len() >= PARALLEL_MIN_CHAINS {
            self.members
                .par_iter_mut()
                .with_min_len(8)
                .for_each(|mb| mb.advance(theta, m, perform_moves));
        } else {
            for mb in &mut self.members {
                mb.advance(theta, m, perform_moves);
            }
        }
        let mut accepted = 0;
        for mb in &self.members {
            mb.pending.add_to(&mut self.total);
            accepted += mb.accepted;
        }
        accepted
    }

    /// Zero every accumulator without moving the chains.
    pub fn reset_accumulators(&mut self) {
        for mb in &mut self.members {
            mb.acc.iter_mut().for_each(|a| *a = 0.0);
        }
        self.total.iter_mut().for_each(|a| *a = 0.0);
    }

    /// Ensemble mean of the accumulators.
    pub fn discrepancy(&self) -> StatVector {
        let n = self.members.len() as f64;
        self.total.iter().map(|s| s / n).collect()
    }

    pub fn discrepancy_into(&self, out: &mut [f64]) {
        let n = self.members.len() as f64;
        for (o, s) in out.iter_mut().zip(&self.total) {
            *o = s / n;
        }
    }

    pub fn states(&self) -> impl Iterator<Item = &BinaryState> {
        self.members.iter().map(|m| &m.state)
    }

    pub fn accumulators(&self) -> impl Iterator<Item = &[f64]> {
        self.members.iter().map(|m| m.acc.as_slice())
    }
}
