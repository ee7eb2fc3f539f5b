use rayon::prelude::*;

use crate::error::Result;
use crate::estimators::{
    tail_average, CdRunner, Dataset, EeRunner, EeUpdate, EstimationTrace, EstimatorConfig, StepSizeKind,
};
use crate::io::KeyValues;
use crate::model::Model;
use crate::models::{Ising1dPeriodic, Vbm};
use crate::oracle::{EnumerationTable, MleOptions};
use crate::sampler::derive_seed;
use crate::state::{BinaryState, ParamVector};

use super::data::{generate_vbm_dataset, VbmDataset};
use super::set;

#[derive(Debug, Clone, PartialEq)]
pub struct VbmConfig {
    pub units: usize,
    pub samples: usize,
    /// Single-site transitions per chain when generating the data.
    pub anneal_steps: usize,
    pub cd_a: f64,
    pub cd_m: usize,
    pub cd_steps: usize,
    pub ee_a: f64,
    pub ee_c: f64,
    pub ee_m: usize,
    pub ee_steps: usize,
    pub ee_burnin: usize,
    /// CD update whose parameters seed EE, for the VBM and the chain fit.
    pub handoff_vbm: usize,
    pub handoff_ising: usize,
    /// Exact log-likelihood is evaluated every this many updates.
    pub likelihood_stride: usize,
    pub theta_guard: f64,
    pub seed: u64,
}

impl Default for VbmConfig {
    fn default() -> Self {
        Self {
            units: 15,
            samples: 1000,
            anneal_steps: 100_000,
            cd_a: 0.1,
            cd_m: 1,
            cd_steps: 40_000,
            ee_a: 0.005,
            ee_c: 0.001,
            ee_m: 1,
            ee_steps: 40_000,
            ee_burnin: 20_000,
            handoff_vbm: 4,
            handoff_ising: 29,
            likelihood_stride: 50,
            theta_guard: 50.0,
            seed: 1,
        }
    }
}

impl VbmConfig {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        set(kv, "units", &mut self.units)?;
        set(kv, "samples", &mut self.samples)?;
        set(kv, "anneal_steps", &mut self.anneal_steps)?;
        set(kv, "cd_a", &mut self.cd_a)?;
        set(kv, "cd_m", &mut self.cd_m)?;
        set(kv, "cd_steps", &mut self.cd_steps)?;
        set(kv, "ee_a", &mut self.ee_a)?;
        set(kv, "ee_c", &mut self.ee_c)?;
        set(kv, "ee_m", &mut self.ee_m)?;
        set(kv, "ee_steps", &mut self.ee_steps)?;
        set(kv, "ee_burnin", &mut self.ee_burnin)?;
        set(kv, "handoff_vbm", &mut self.handoff_vbm)?;
        set(kv, "handoff_ising", &mut self.handoff_ising)?;
        set(kv, "likelihood_stride", &mut self.likelihood_stride)?;
        set(kv, "theta_guard", &mut self.theta_guard)?;
        set(kv, "seed", &mut self.seed)?;
        Ok(())
    }

    fn ee_config(&self) -> EstimatorConfig {
        EstimatorConfig {
            a: self.ee_a,
            c: self.ee_c,
            m: self.ee_m,
            t_max: self.ee_steps,
            t_burnin: self.ee_burnin,
            theta_guard: self.theta_guard,
            step_fn: StepSizeKind::MaxAbsC,
        }
    }
}

/// One model fitted by CD and by EE, with exact likelihood curves.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub label: String,
    pub handoff: usize,
    pub cd_trace: EstimationTrace,
    pub ee_trace: EstimationTrace,
    /// `(update, log-likelihood)`; EE updates are numbered from the handoff.
    pub cd_curve: Vec<(usize, f64)>,
    pub ee_curve: Vec<(usize, f64)>,
    pub theta_cd: ParamVector,
    pub theta_ee: ParamVector,
    pub theta_mle: ParamVector,
    pub l_cd: f64,
    pub l_ee: f64,
    pub l_mle: f64,
    /// The target has no finite maximiser; `l_mle` approximates the supremum.
    pub mle_boundary: bool,
}

impl FitReport {
    /// `(l_mle - l) / |l_mle|`.
    pub fn relative_gap(&self, l: f64) -> f64 {
        (self.l_mle - l) / self.l_mle.abs()
    }
}

#[derive(Debug, Clone)]
pub struct VbmReport {
    pub dataset: VbmDataset,
    pub vbm: FitReport,
    pub ising1d: FitReport,
}

/// Generate VBM data, then fit it with the full VBM and with the periodic chain.
pub fn run_vbm_experiment(cfg: &VbmConfig) -> Result<VbmReport> {
    cfg.ee_config().validate()?;
    let dataset = generate_vbm_dataset(cfg.seed, cfg.units, cfg.samples, cfg.anneal_steps, None)?;
    let vbm = Vbm::new(cfg.units);
    let chain = Ising1dPeriodic::new(cfg.units);
    let vbm_fit = fit("vbm", &vbm, &dataset.samples, cfg, cfg.handoff_vbm, derive_seed(cfg.seed, 20))?;
    let chain_fit = fit("ising1d", &chain, &dataset.samples, cfg, cfg.handoff_ising, derive_seed(cfg.seed, 21))?;
    Ok(VbmReport {
        dataset,
        vbm: vbm_fit,
        ising1d: chain_fit,
    })
}

/// CD for `cfg.cd_steps` updates and, from the CD parameters after `handoff`
/// updates, EE for `cfg.ee_steps`. The estimators see only the samples; the
/// exact likelihood is computed afterwards from the recorded traces.
pub fn fit<M: Model>(
    label: &str,
    model: &M,
    samples: &[BinaryState],
    cfg: &VbmConfig,
    handoff: usize,
    seed: u64,
) -> Result<FitReport> {
    let data = Dataset::shared(model, samples.to_vec())?;
    let mut cd = CdRunner::new(&data, derive_seed(seed, 1));
    let mut cd_trace = EstimationTrace::with_capacity(data.dim(), cfg.cd_steps);
    cd.run(cfg.cd_a, cfg.cd_m, cfg.cd_steps, cfg.theta_guard, &mut cd_trace)?;
    let theta_cd = cd.theta().clone();

    let handoff = handoff.min(cd_trace.len());
    let theta0 = if handoff == 0 {
        ParamVector::zeros(data.dim())
    } else {
        ParamVector(cd_trace.theta(handoff - 1).to_vec())
    };
    let ee_cfg = cfg.ee_config();
    let mut ee = EeRunner::new(&data, &theta0, derive_seed(seed, 2))?;
    let mut ee_trace = EstimationTrace::with_capacity(data.dim(), ee_cfg.t_max);
    ee.run(&ee_cfg, EeUpdate::Sign, ee_cfg.t_max, &mut ee_trace)?;
    let theta_ee = tail_average(&ee_trace, ee_cfg.t_burnin)?;

    let table = EnumerationTable::new(model)?;
    let g_bar = data.target_mean();
    let stride = cfg.likelihood_stride.max(1);
    let zero = ParamVector::zeros(data.dim());
    let cd_points: Vec<usize> = (0..=cd_trace.len()).step_by(stride).collect();
    let cd_curve = cd_points
        .par_iter()
        .map(|&t| {
            let theta = if t == 0 { &zero[..] } else { cd_trace.theta(t - 1) };
            Ok((t, table.log_likelihood(theta, &g_bar)?))
        })
        .collect::<Result<Vec<_>>>()?;
    let ee_points: Vec<usize> = (1..=ee_trace.len()).filter(|t| t % stride == 0 || *t == 1).collect();
    let ee_curve = ee_points
        .par_iter()
        .map(|&t| Ok((handoff + t, table.log_likelihood(ee_trace.theta(t - 1), &g_bar)?)))
        .collect::<Result<Vec<_>>>()?;

    let fit = table.maximize(&g_bar, None, MleOptions::default())?;
    Ok(FitReport {
        label: label.to_string(),
        handoff,
        l_cd: table.log_likelihood(&theta_cd, &g_bar)?,
        l_ee: table.log_likelihood(&theta_ee, &g_bar)?,
        l_mle: fit.log_likelihood,
        mle_boundary: fit.boundary,
        theta_mle: fit.theta,
        cd_trace,
        ee_trace,
        cd_curve,
        ee_curve,
        theta_cd,
        theta_ee,
    })
}
