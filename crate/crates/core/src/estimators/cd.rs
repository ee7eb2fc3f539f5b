use super::{apply_pins, guard, Dataset, Ensemble, EstimationTrace, EstimatorConfig};
use crate::error::Result;
use crate::model::Model;
use crate::state::{BinaryState, ParamVector};

/// Contrastive divergence with frozen chains.
///
/// Each update proposes `m` moves from every observed configuration without
/// performing them, sums the accepted statistic changes and steps
/// `theta <- theta - a * dg` (ensemble mean of `dg`). The fixed point zeroes the
/// expected one-step change at the data.
pub struct CdRunner<'a, M: ?Sized> {
    ensemble: Ensemble<'a, M>,
    theta: ParamVector,
    free: Vec<bool>,
    d: Vec<f64>,
}

impl<'a, M: Model + ?Sized> CdRunner<'a, M> {
    /// Starts from `theta = 0` (pinned coordinates at their pinned values).
    pub fn new(data: &Dataset<'a, M>, seed: u64) -> Self {
        let mut theta = ParamVector::zeros(data.dim());
        apply_pins(&mut theta, data.pinned());
        Self {
            ensemble: Ensemble::at_targets(data, seed),
            free: data.pinned().iter().map(Option::is_none).collect(),
            d: vec![0.0; data.dim()],
            theta,
        }
    }

    pub fn theta(&self) -> &ParamVector {
        &self.theta
    }

    /// The working configurations; CD never moves them.
    pub fn working_states(&self) -> impl Iterator<Item = &BinaryState> {
        self.ensemble.states()
    }

    pub fn run(
        &mut self,
        a: f64,
        m: usize,
        updates: usize,
        theta_guard: f64,
        trace: &mut EstimationTrace,
    ) -> Result<()> {
        for _ in 0..updates {
            self.ensemble.reset_accumulators();
            let accepted = self.ensemble.advance(&self.theta, m, false);
            self.ensemble.discrepancy_into(&mut self.d);
            for ((t, d), free) in self.theta.iter_mut().zip(&self.d).zip(&self.free) {
                if *free {
                    *t -= a * d;
                }
            }
            guard(&self.theta, theta_guard)?;
            trace.push(&self.theta, &self.d, accepted);
        }
        Ok(())
    }
}

/// Run `cfg.t_max` contrastive-divergence updates from `theta = 0`.
///
/// Only `a`, `m`, `t_max` and `theta_guard` of `cfg` are used.
pub fn cd_estimate<M: Model + ?Sized>(
    seed: u64,
    data: &Dataset<'_, M>,
    cfg: &EstimatorConfig,
) -> Result<(ParamVector, EstimationTrace)> {
    let mut relaxed = cfg.clone();
    relaxed.t_burnin = 0;
    relaxed.validate()?;
    let mut runner = CdRunner::new(data, seed);
    let mut trace = EstimationTrace::with_capacity(data.dim(), cfg.t_max);
    runner.run(cfg.a, cfg.m, cfg.t_max, cfg.theta_guard, &mut trace)?;
    Ok((runner.theta().clone(), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::models::{Ising2d, MiniErgm};
    use crate::state::{Encoding, Layout};

    #[test]
    fn no_acceptances_leave_theta_unchanged() {
        // a single proposal per update from the empty graph is an arc addition,
        // which a pinned-very-negative arc parameter never accepts
        let m = MiniErgm::new(3).pin(0, -40.0);
        let x = BinaryState::filled(Encoding::Tie, Layout::Digraph { nodes: 3 }, 0).unwrap();
        let data = Dataset::single(&m, x).unwrap();
        let (theta, trace) = cd_estimate(1, &data, &EstimatorConfig::new(0.1, 0.01, 1, 20)).unwrap();
        assert_eq!(theta.0, vec![-40.0, 0.0]);
        assert!((0..trace.len()).all(|r| trace.accepted(r) == 0));
    }

    #[test]
    fn update_arithmetic() {
        // 2x2 aligned lattice, theta = 0: every corner flip is accepted with dg = +4
        let m = Ising2d::new(2, 2, false);
        let x = BinaryState::filled(Encoding::Spin, Layout::Grid { rows: 2, cols: 2 }, 1).unwrap();
        let data = Dataset::single(&m, x).unwrap();
        let (theta, trace) = cd_estimate(4, &data, &EstimatorConfig::new(0.1, 0.01, 1, 1)).unwrap();
        assert_eq!(trace.d(0), &[4.0]);
        assert_eq!(theta.0, vec![0.0 - 0.1 * 4.0]);
    }

    #[test]
    fn working_state_is_never_moved() {
        let m = Ising2d::new(4, 4, true);
        let mut rng = crate::sampler::RngStream::new(2, 0).rng();
        let x = BinaryState::random(&mut rng, Encoding::Spin, m.layout());
        let data = Dataset::single(&m, x.clone()).unwrap();
        let mut runner = CdRunner::new(&data, 11);
        let mut trace = EstimationTrace::new(2);
        runner.run(0.01, 3, 500, 50.0, &mut trace).unwrap();
        assert_eq!(runner.working_states().next().unwrap(), &x);
    }

    #[test]
    fn degenerate_data_trips_the_guard() {
        // the all-aligned 1x2 chain sits on the hull boundary; CD keeps pushing theta down
        let m = Ising2d::new(1, 2, false);
        let x = BinaryState::filled(Encoding::Spin, Layout::Grid { rows: 1, cols: 2 }, 1).unwrap();
        let data = Dataset::single(&m, x).unwrap();
        let mut cfg = EstimatorConfig::new(6.0, 0.01, 1, 10_000);
        cfg.theta_guard = 10.0;
        match cd_estimate(3, &data, &cfg) {
            Err(Error::Divergence { index: 0, .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}
