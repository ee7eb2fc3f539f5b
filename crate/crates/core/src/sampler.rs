//! Single-site Metropolis-Hastings sampling.
//!
//! With `E(x) = -theta . g(x)` and unit inverse temperature the acceptance
//! probability of a toggle is `min{1, exp(theta . dg) * q_rev / q_fwd}`, where
//! `dg` comes from the model's local change statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::state::{BinaryState, Proposal, SparseDelta, StatVector};

/// Log-ratios are clamped to this magnitude before exponentiation.
pub const LOG_RATIO_CLAMP: f64 = 700.0;

/// Per-chain generator.
pub type ChainRng = ChaCha8Rng;

/// Identifies one reproducible random stream: the same `(seed, stream)` always
/// yields the same draws, independent of thread scheduling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChainRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Derive an independent seed for a labelled sub-task.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    RngStream::new(seed, label ^ 0x9e37_79b9_7f4a_7c15).rng().random()
}

/// Outcome of a multi-step sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sum of the realised statistic changes.
    pub delta: StatVector,
    pub accepted: u64,
    pub proposed: u64,
}

/// Pick a site uniformly; the proposal is symmetric.
#[inline]
pub fn propose_uniform_flip<R: Rng + ?Sized>(rng: &mut R, x: &BinaryState) -> Proposal {
    debug_assert!(!x.is_empty());
    let len = x.len();
    Proposal::symmetric(rng.random_range(0..len), len)
}

#[inline]
fn log_acceptance(delta: &SparseDelta, theta: &[f64], p: &Proposal) -> f64 {
    (delta.dot(theta) + p.log_proposal_ratio()).clamp(-LOG_RATIO_CLAMP, LOG_RATIO_CLAMP)
}

/// `min{1, exp(theta . dg) q_rev / q_fwd}` using the model's change statistics.
pub fn acceptance_prob<M: Model + ?Sized>(
    model: &M,
    theta: &[f64],
    x: &BinaryState,
    p: &Proposal,
) -> Result<f64> {
    model.check_state(x)?;
    p.validate(x.len())?;
    check_theta(model, theta)?;
    let mut delta = SparseDelta::new();
    model.push_change(x.values(), p.site, &mut delta);
    Ok(log_acceptance(&delta, theta, p).exp().min(1.0))
}

fn check_theta<M: Model + ?Sized>(model: &M, theta: &[f64]) -> Result<()> {
    if theta.len() != model.num_stats() {
        return Err(Error::invalid(format!(
            "theta has {} entries, model has {} statistics",
            theta.len(),
            model.num_stats()
        )));
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("theta must be finite"));
    }
    Ok(())
}

/// One proposal plus accept/reject. On acceptance the change statistics are
/// left in `scratch` (and the move applied when `perform_move`); on rejection
/// `scratch` is empty.
#[inline]
pub fn mh_step_in_place<R: Rng + ?Sized, M: Model + ?Sized>(
    rng: &mut R,
    model: &M,
    theta: &[f64],
    x: &mut BinaryState,
    perform_move: bool,
    scratch: &mut SparseDelta,
) -> bool {
    let p = propose_uniform_flip(rng, x);
    scratch.clear();
    model.push_change(x.values(), p.site, scratch);
    let log_ratio = log_acceptance(scratch, theta, &p);
    let accept = log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp();
    if accept {
        if perform_move {
            x.toggle(p.site);
        }
    } else {
        scratch.clear();
    }
    accept
}

/// Result of [`mh_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: BinaryState,
    pub accepted: bool,
    /// Realised change: the proposal's change statistics if accepted, else zero.
    pub delta: StatVector,
}

/// One Metropolis-Hastings transition from `x`.
pub fn mh_step<R: Rng + ?Sized, M: Model + ?Sized>(
    rng: &mut R,
    model: &M,
    theta: &[f64],
    x: &BinaryState,
) -> Result<StepOutcome> {
    model.check_state(x)?;
    check_theta(model, theta)?;
    if x.is_empty() {
        return Err(Error::invalid("cannot sample an empty state"));
    }
    let mut state = x.clone();
    let mut scratch = SparseDelta::new();
    let accepted = mh_step_in_place(rng, model, theta, &mut state, true, &mut scratch);
    Ok(StepOutcome {
        state,
        accepted,
        delta: scratch.to_dense(model.num_stats()),
    })
}

/// `m` Metropolis-Hastings steps accumulating the accepted change statistics.
///
/// With `perform_moves = false` every proposal is evaluated against the
/// initial state, which is returned unchanged.
pub fn run_sweep<R: Rng + ?Sized, M: Model + ?Sized>(
    rng: &mut R,
    model: &M,
    theta: &[f64],
    x: &BinaryState,
    m: usize,
    perform_moves: bool,
) -> Result<(BinaryState, SweepResult)> {
    model.check_state(x)?;
    check_theta(model, theta)?;
    if m == 0 {
        return Err(Error::invalid("a sweep needs at least one step"));
    }
    if x.is_empty() {
        return Err(Error::invalid("cannot sample an empty state"));
    }
    let mut state = x.clone();
    let mut delta = StatVector::zeros(model.num_stats());
    let mut scratch = SparseDelta::new();
    let mut accepted = 0;
    for _ in 0..m {
        if mh_step_in_place(rng, model, theta, &mut state, perform_moves, &mut scratch) {
            accepted += 1;
            scratch.add_to(&mut delta);
        }
    }
    Ok((
        state,
        SweepResult {
            delta,
            accepted,
            proposed: m as u64,
        },
    ))
}

/// Run `steps` transitions at fixed `theta`, discarding statistics.
pub fn equilibrate<R: Rng + ?Sized, M: Model + ?Sized>(
    rng: &mut R,
    model: &M,
    theta: &[f64],
    x: &BinaryState,
    steps: usize,
) -> Result<BinaryState> {
    model.check_state(x)?;
    check_theta(model, theta)?;
    let mut state = x.clone();
    if steps > 0 && !state.is_empty() {
        let mut scratch = SparseDelta::new();
        for _ in 0..steps {
            mh_step_in_place(rng, model, theta, &mut state, true, &mut scratch);
        }
    }
    Ok(state)
}

/// Equilibrate every chain in parallel; chain `k` draws from stream `k` of `seed`.
pub fn equilibrate_ensemble<M: Model + ?Sized>(
    seed: u64,
    model: &M,
    theta: &[f64],
    chains: &[BinaryState],
    steps: usize,
) -> Result<Vec<BinaryState>> {
    chains
        .par_iter()
        .enumerate()
        .map(|(k, x)| {
            let mut rng = RngStream::new(seed, k as u64).rng();
            equilibrate(&mut rng, model, theta, x, steps)
        })
        .collect()
}

/// Elementwise mean of `g` over the ensemble.
pub fn ensemble_mean_stats<M: Model + ?Sized>(
    chains: &[BinaryState],
    model: &M,
) -> Result<StatVector> {
    if chains.is_empty() {
        return Err(Error::invalid("ensemble is empty"));
    }
    let mut sum = StatVector::zeros(model.num_stats());
    let mut g = StatVector::zeros(model.num_stats());
    for x in chains {
        model.check_state(x)?;
        model.write_stats(x.values(), &mut g);
        for (s, v) in sum.iter_mut().zip(g.iter()) {
            *s += v;
        }
    }
    let n = chains.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Ising2d, Vbm};
    use crate::state::{Encoding, Layout};

    fn spins(rows: usize, cols: usize, v: i8) -> BinaryState {
        BinaryState::filled(Encoding::Spin, Layout::Grid { rows, cols }, v).unwrap()
    }

    #[test]
    fn acceptance_examples() {
        let m = Ising2d::new(1, 2, false);
        let x = spins(1, 2, 1);
        let p = Proposal::symmetric(0, 2);
        assert_eq!(acceptance_prob(&m, &[0.0], &x, &p).unwrap(), 1.0);
        // aligned pair: flipping gives dg = +2, so theta = -ln2/2 halves the rate
        let a = acceptance_prob(&m, &[-(2f64.ln()) / 2.0], &x, &p).unwrap();
        assert!((a - 0.5).abs() < 1e-15);
        let m = Ising2d::new(2, 2, false);
        assert_eq!(acceptance_prob(&m, &[0.189], &spins(2, 2, 1), &Proposal::symmetric(0, 4)).unwrap(), 1.0);
    }

    #[test]
    fn extreme_theta_saturates() {
        let m = Ising2d::new(2, 2, false);
        let p = Proposal::symmetric(0, 4);
        assert_eq!(acceptance_prob(&m, &[1e6], &spins(2, 2, 1), &p).unwrap(), 1.0);
        let a = acceptance_prob(&m, &[-1e6], &spins(2, 2, 1), &p).unwrap();
        assert!(a >= 0.0 && a < 1e-300);
    }

    #[test]
    fn asymmetric_proposal_enters_the_ratio() {
        let m = Ising2d::new(1, 2, false);
        let p = Proposal {
            site: 0,
            forward_weight: 0.8,
            reverse_weight: 0.2,
        };
        let a = acceptance_prob(&m, &[0.0], &spins(1, 2, 1), &p).unwrap();
        assert!((a - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_site_proposals_always_pick_zero() {
        let mut rng = RngStream::new(1, 0).rng();
        let x = spins(1, 1, 1);
        for _ in 0..100 {
            let p = propose_uniform_flip(&mut rng, &x);
            assert_eq!(p.site, 0);
            assert_eq!(p.forward_weight, p.reverse_weight);
        }
    }

    #[test]
    fn zero_theta_accepts_everything() {
        let m = Vbm::new(5);
        let x = BinaryState::filled(Encoding::Spin, Layout::Chain { len: 5 }, 1).unwrap();
        let mut rng = RngStream::new(3, 0).rng();
        let (end, res) = run_sweep(&mut rng, &m, &[0.0; 10], &x, 50, true).unwrap();
        assert_eq!(res.accepted, 50);
        let diff = m.suff_stats(&end).unwrap().sub(&m.suff_stats(&x).unwrap());
        assert_eq!(diff, res.delta);
    }

    #[test]
    fn rejected_step_leaves_state() {
        let m = Ising2d::new(2, 2, false);
        let x = spins(2, 2, 1);
        let mut rng = RngStream::new(5, 0).rng();
        for _ in 0..200 {
            let out = mh_step(&mut rng, &m, &[-50.0], &x).unwrap();
            assert!(!out.accepted);
            assert_eq!(out.state, x);
            assert_eq!(out.delta.0, vec![0.0]);
        }
    }

    #[test]
    fn frozen_sweep_keeps_state() {
        let m = Ising2d::new(3, 3, true);
        let mut rng = RngStream::new(9, 0).rng();
        let x = BinaryState::random(&mut rng, Encoding::Spin, m.layout());
        let (end, res) = run_sweep(&mut rng, &m, &[0.1, -0.2], &x, 100, false).unwrap();
        assert_eq!(end, x);
        assert_eq!(res.proposed, 100);
    }

    #[test]
    fn zero_step_sweep_is_invalid_and_zero_equilibration_is_identity() {
        let m = Ising2d::new(2, 2, false);
        let x = spins(2, 2, 1);
        let mut rng = RngStream::new(0, 0).rng();
        assert!(run_sweep(&mut rng, &m, &[0.0], &x, 0, true).is_err());
        assert_eq!(equilibrate(&mut rng, &m, &[0.3], &x, 0).unwrap(), x);
    }

    #[test]
    fn ensemble_means() {
        let m = Vbm::new(4);
        let up = BinaryState::filled(Encoding::Spin, Layout::Chain { len: 4 }, 1).unwrap();
        let down = BinaryState::filled(Encoding::Spin, Layout::Chain { len: 4 }, -1).unwrap();
        assert_eq!(ensemble_mean_stats(&[up.clone()], &m).unwrap(), m.suff_stats(&up).unwrap());
        assert_eq!(ensemble_mean_stats(&[up, down], &m).unwrap().0, vec![-1.0; 6]);
        assert!(ensemble_mean_stats(&[], &m).is_err());
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 1).rng(), |r, _| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 1).rng(), |r, _| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(RngStream::new(7, 2).rng(), |r, _| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
