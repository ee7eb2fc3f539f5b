use super::{
    apply_pins, guard, step_size, tail_average, Dataset, Ensemble, EstimationTrace,
    EstimatorConfig, StepSizeKind,
};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::state::{BinaryState, ParamVector};

/// Which equilibrium-expectation update to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EeUpdate {
    /// `theta - a f(theta) sign(d)`
    #[default]
    Sign,
    /// `theta - a f(theta) d`
    Soft,
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn update_in_place(
    theta: &mut [f64],
    d: &[f64],
    free: &[bool],
    a: f64,
    c: f64,
    f: StepSizeKind,
    kind: EeUpdate,
) {
    for ((t, &di), &is_free) in theta.iter_mut().zip(d).zip(free) {
        if !is_free {
            continue;
        }
        let drive = match kind {
            EeUpdate::Sign => sign(di),
            EeUpdate::Soft => di,
        };
        *t -= a * step_size(f, *t, c) * drive;
    }
}

/// Sign update with discrepancy `d = g(x_{t+1}) - g(x_obs)`; `sign(0) = 0`.
pub fn ee_step(theta: &ParamVector, d: &[f64], cfg: &EstimatorConfig, f: StepSizeKind) -> ParamVector {
    let mut out = theta.clone();
    let free = vec![true; theta.len()];
    update_in_place(&mut out, d, &free, cfg.a, cfg.c, f, EeUpdate::Sign);
    out
}

/// Magnitude-weighted variant: the discrepancy replaces its sign.
pub fn ee_soft_step(
    theta: &ParamVector,
    d: &[f64],
    cfg: &EstimatorConfig,
    f: StepSizeKind,
) -> ParamVector {
    let mut out = theta.clone();
    let free = vec![true; theta.len()];
    update_in_place(&mut out, d, &free, cfg.a, cfg.c, f, EeUpdate::Soft);
    out
}

/// Equilibrium-expectation estimation state: persistent chains plus current theta.
///
/// The discrepancy accumulators are initialised once and never reset, so the
/// update sees `g(x_t) - g(x_obs)` directly. Calling [`EeRunner::run`] several
/// times continues the same chains, e.g. for learning-rate phases.
pub struct EeRunner<'a, M: ?Sized> {
    ensemble: Ensemble<'a, M>,
    theta: ParamVector,
    free: Vec<bool>,
    d: Vec<f64>,
    updates: usize,
}

impl<'a, M: Model + ?Sized> EeRunner<'a, M> {
    pub fn new(data: &Dataset<'a, M>, theta0: &ParamVector, seed: u64) -> Result<Self> {
        if theta0.len() != data.dim() {
            return Err(Error::invalid(format!(
                "theta0 has {} entries, model has {} statistics",
                theta0.len(),
                data.dim()
            )));
        }
        if !theta0.is_finite() {
            return Err(Error::invalid("theta0 must be finite"));
        }
        let mut theta = theta0.clone();
        apply_pins(&mut theta, data.pinned());
        Ok(Self {
            ensemble: Ensemble::new(data, seed),
            free: data.pinned().iter().map(Option::is_none).collect(),
            d: vec![0.0; data.dim()],
            theta,
            updates: 0,
        })
    }

    pub fn theta(&self) -> &ParamVector {
        &self.theta
    }

    pub fn updates(&self) -> usize {
        self.updates
    }

    pub fn states(&self) -> impl Iterator<Item = &BinaryState> {
        self.ensemble.states()
    }

    /// Per-chain `g(x_t) - g(x_target)` accumulators.
    pub fn accumulators(&self) -> impl Iterator<Item = &[f64]> {
        self.ensemble.accumulators()
    }

    /// Run `updates` parameter updates, calling `observe(t, theta)` after each.
    pub fn run_with<F>(
        &mut self,
        cfg: &EstimatorConfig,
        kind: EeUpdate,
        updates: usize,
        trace: &mut EstimationTrace,
        mut observe: F,
    ) -> Result<()>
    where
        F: FnMut(usize, &ParamVector) -> Result<()>,
    {
        for _ in 0..updates {
            let accepted = self.ensemble.advance(&self.theta, cfg.m, true);
            self.ensemble.discrepancy_into(&mut self.d);
            update_in_place(&mut self.theta, &self.d, &self.free, cfg.a, cfg.c, cfg.step_fn, kind);
            guard(&self.theta, cfg.theta_guard)?;
            trace.push(&self.theta, &self.d, accepted);
            self.updates += 1;
            observe(self.updates, &self.theta)?;
        }
        Ok(())
    }

    pub fn run(
        &mut self,
        cfg: &EstimatorConfig,
        kind: EeUpdate,
        updates: usize,
        trace: &mut EstimationTrace,
    ) -> Result<()> {
        self.run_with(cfg, kind, updates, trace, |_, _| Ok(()))
    }
}

/// Run `cfg.t_max` sign updates from `theta0` (normally the CD estimate) and
/// return the tail average over updates after `cfg.t_burnin`.
pub fn ee_estimate<M: Model + ?Sized>(
    seed: u64,
    data: &Dataset<'_, M>,
    theta0: &ParamVector,
    cfg: &EstimatorConfig,
    f: StepSizeKind,
) -> Result<(ParamVector, EstimationTrace)> {
    cfg.validate()?;
    let cfg = EstimatorConfig {
        step_fn: f,
        ..cfg.clone()
    };
    let mut runner = EeRunner::new(data, theta0, seed)?;
    let mut trace = EstimationTrace::with_capacity(data.dim(), cfg.t_max);
    runner.run(&cfg, EeUpdate::Sign, cfg.t_max, &mut trace)?;
    Ok((tail_average(&trace, cfg.t_burnin)?, trace))
}
