use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    tail_average, CdRunner, Dataset, EeRunner, EeUpdate, EstimationTrace, EstimatorConfig, Observation,
    StepSizeKind,
};
use crate::io::KeyValues;
use crate::models::Crf;
use crate::sampler::{derive_seed, equilibrate, RngStream};
use crate::state::{BinaryState, Encoding, ParamVector};

use super::data::{classification_error, generate_crf_dataset, threshold, CrfDataset};
use super::set;

#[derive(Debug, Clone, PartialEq)]
pub struct CrfConfig {
    pub rows: usize,
    pub cols: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub noise_sd: f64,
    pub cd_a: f64,
    pub cd_m: usize,
    pub cd_steps: usize,
    pub ee_c: f64,
    /// Proposals per chain per EE update; one sweep of the image when unset.
    pub ee_m: Option<usize>,
    /// `(learning rate, updates)` per EE phase; chains persist across phases.
    pub ee_phases: Vec<(f64, usize)>,
    /// Tail average over EE updates after this many.
    pub ee_burnin: usize,
    /// Start the EE chains at the thresholded noisy images instead of the
    /// training labels.
    pub ee_start_noisy: bool,
    /// Sweeps (one proposal per pixel each) applied to a test image at fixed theta.
    pub anneal_sweeps: usize,
    /// Classification error is measured every this many updates.
    pub eval_stride: usize,
    pub theta_guard: f64,
    pub seed: u64,
}

impl Default for CrfConfig {
    fn default() -> Self {
        Self {
            rows: 40,
            cols: 40,
            n_train: 10,
            n_test: 5,
            noise_sd: 1.0,
            cd_a: 0.03,
            cd_m: 1,
            cd_steps: 10_000,
            ee_c: 0.001,
            ee_m: None,
            ee_phases: vec![(0.01, 5000), (0.001, 5000)],
            ee_burnin: 7500,
            ee_start_noisy: true,
            anneal_sweeps: 500,
            eval_stride: 500,
            theta_guard: 50.0,
            seed: 1,
        }
    }
}

impl CrfConfig {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        set(kv, "rows", &mut self.rows)?;
        set(kv, "cols", &mut self.cols)?;
        set(kv, "n_train", &mut self.n_train)?;
        set(kv, "n_test", &mut self.n_test)?;
        set(kv, "noise_sd", &mut self.noise_sd)?;
        set(kv, "cd_a", &mut self.cd_a)?;
        set(kv, "cd_m", &mut self.cd_m)?;
        set(kv, "cd_steps", &mut self.cd_steps)?;
        set(kv, "ee_c", &mut self.ee_c)?;
        if let Some(m) = kv.get("ee_m")? {
            self.ee_m = Some(m);
        }
        if let Some(p) = kv.get_str("ee_phases") {
            self.ee_phases = parse_phases(p)?;
        }
        set(kv, "ee_burnin", &mut self.ee_burnin)?;
        set(kv, "ee_start_noisy", &mut self.ee_start_noisy)?;
        set(kv, "anneal_sweeps", &mut self.anneal_sweeps)?;
        set(kv, "eval_stride", &mut self.eval_stride)?;
        set(kv, "theta_guard", &mut self.theta_guard)?;
        set(kv, "seed", &mut self.seed)?;
        Ok(())
    }

    fn ee_updates(&self) -> usize {
        self.ee_phases.iter().map(|p| p.1).sum()
    }
}

/// `"0.01:5000, 0.001:5000"`
fn parse_phases(text: &str) -> Result<Vec<(f64, usize)>> {
    text.split(',')
        .map(|p| {
            let (a, n) = p
                .trim()
                .split_once(':')
                .ok_or_else(|| Error::config(format!("phase `{p}` is not `a:updates`")))?;
            let a: f64 = a.trim().parse().map_err(|_| Error::config(format!("bad rate `{a}`")))?;
            let n: usize = n.trim().parse().map_err(|_| Error::config(format!("bad count `{n}`")))?;
            Ok((a, n))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CrfReport {
    pub dataset: CrfDataset,
    pub cd_trace: EstimationTrace,
    pub ee_trace: EstimationTrace,
    /// `(update, error)`; EE updates continue the CD numbering.
    pub cd_error: Vec<(usize, f64)>,
    pub ee_error: Vec<(usize, f64)>,
    pub theta_cd: ParamVector,
    pub theta_ee: ParamVector,
    pub initial_error: f64,
    pub final_cd_error: f64,
    pub final_ee_error: f64,
}

/// Fit the denoising CRF on the training images with CD, continue with EE,
/// and track the test classification error along both runs.
pub fn run_crf_experiment(cfg: &CrfConfig) -> Result<CrfReport> {
    if cfg.ee_phases.is_empty() || cfg.ee_burnin >= cfg.ee_updates() {
        return Err(Error::config("EE needs at least one phase and a burn-in below its length"));
    }
    let dataset = generate_crf_dataset(cfg.seed, cfg.rows, cfg.cols, cfg.n_train, cfg.n_test, cfg.noise_sd)?;
    let (rows, cols) = (cfg.rows, cfg.cols);
    let train: Vec<Crf> = dataset
        .train
        .iter()
        .map(|y| Crf::new(y.clone(), rows, cols))
        .collect::<Result<_>>()?;
    let test: Vec<Crf> = dataset
        .test
        .iter()
        .map(|y| Crf::new(y.clone(), rows, cols))
        .collect::<Result<_>>()?;

    let at_orig = Dataset::new(
        train
            .iter()
            .map(|m| Observation {
                model: m,
                target: dataset.x_orig.clone(),
                start: dataset.x_orig.clone(),
            })
            .collect(),
    )?;
    let mut cd = CdRunner::new(&at_orig, derive_seed(cfg.seed, 30));
    let mut cd_trace = EstimationTrace::with_capacity(4, cfg.cd_steps);
    cd.run(cfg.cd_a, cfg.cd_m, cfg.cd_steps, cfg.theta_guard, &mut cd_trace)?;
    let theta_cd = cd.theta().clone();

    let ee_data = Dataset::new(
        train
            .iter()
            .zip(&dataset.train)
            .map(|(m, y)| Observation {
                model: m,
                target: dataset.x_orig.clone(),
                start: if cfg.ee_start_noisy {
                    threshold(y, rows, cols)
                } else {
                    dataset.x_orig.clone()
                },
            })
            .collect(),
    )?;
    let mut ee = EeRunner::new(&ee_data, &theta_cd, derive_seed(cfg.seed, 31))?;
    let mut ee_trace = EstimationTrace::with_capacity(4, cfg.ee_updates());
    for &(a, updates) in &cfg.ee_phases {
        let phase = EstimatorConfig {
            a,
            c: cfg.ee_c,
            m: cfg.ee_m.unwrap_or(rows * cols),
            t_max: updates,
            t_burnin: 0,
            theta_guard: cfg.theta_guard,
            step_fn: StepSizeKind::MaxAbsC,
        };
        ee.run(&phase, EeUpdate::Sign, updates, &mut ee_trace)?;
    }
    let theta_ee = tail_average(&ee_trace, cfg.ee_burnin)?;

    // every evaluation point anneals every test image; all in parallel
    let stride = cfg.eval_stride.max(1);
    let mut points: Vec<(usize, ParamVector)> = (0..=cd_trace.len())
        .step_by(stride)
        .map(|t| {
            let th = if t == 0 {
                ParamVector::zeros(4)
            } else {
                ParamVector(cd_trace.theta(t - 1).to_vec())
            };
            (t, th)
        })
        .collect();
    let n_cd = points.len();
    points.extend(
        (stride..=ee_trace.len())
            .step_by(stride)
            .map(|t| (cd_trace.len() + t, ParamVector(ee_trace.theta(t - 1).to_vec()))),
    );
    let errors = points
        .par_iter()
        .map(|(t, th)| test_error(&test, &dataset.x_orig, th, cfg.anneal_sweeps, derive_seed(cfg.seed, 1000 + *t as u64)))
        .collect::<Result<Vec<f64>>>()?;
    let finals = [&theta_cd, &theta_ee]
        .par_iter()
        .enumerate()
        .map(|(i, th)| test_error(&test, &dataset.x_orig, th, cfg.anneal_sweeps, derive_seed(cfg.seed, 33 + i as u64)))
        .collect::<Result<Vec<f64>>>()?;
    let (final_cd_error, final_ee_error) = (finals[0], finals[1]);
    let labels = points.iter().map(|p| p.0);
    let mut cd_error: Vec<(usize, f64)> = labels.zip(errors).collect();
    let ee_error = cd_error.split_off(n_cd);
    Ok(CrfReport {
        initial_error: cd_error[0].1,
        dataset,
        cd_trace,
        ee_trace,
        cd_error,
        ee_error,
        theta_cd,
        theta_ee,
        final_cd_error,
        final_ee_error,
    })
}

/// Anneal each test image from a uniformly random labelling at fixed `theta`
/// and return the classification error against the clean image.
pub fn test_error(models: &[Crf], x_orig: &BinaryState, theta: &[f64], sweeps: usize, seed: u64) -> Result<f64> {
    let states = models
        .par_iter()
        .enumerate()
        .map(|(k, m)| {
            let mut rng = RngStream::new(seed, k as u64).rng();
            let start = BinaryState::random(&mut rng, Encoding::Spin, x_orig.layout());
            equilibrate(&mut rng, m, theta, &start, sweeps * x_orig.len())
        })
        .collect::<Result<Vec<_>>>()?;
    classification_error(&states, x_orig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phases_parse() {
        assert_eq!(parse_phases("0.01:5000, 0.001:5000").unwrap(), vec![(0.01, 5000), (0.001, 5000)]);
        assert!(parse_phases("0.01").is_err());
    }
}
