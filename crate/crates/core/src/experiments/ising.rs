use std::path::PathBuf;

use crate::convergence::{diagnose, ConvergenceReport};
use crate::error::{Error, Result};
use crate::estimators::{cd_estimate, ee_estimate, tail_std, Dataset, EstimationTrace, EstimatorConfig};
use crate::io::{read_state, KeyValues};
use crate::model::Model;
use crate::models::Ising2d;
use crate::oracle::{EnumerationTable, MleOptions, MAX_ENUM_SITES};
use crate::sampler::{derive_seed, equilibrate, RngStream};
use crate::state::{BinaryState, Encoding, Layout};

use super::set;

/// Single-image estimation of the nearest-neighbour coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingConfig {
    /// Observed image; a synthetic one is drawn when absent.
    pub image: Option<PathBuf>,
    pub rows: usize,
    pub cols: usize,
    /// Coupling used to draw the synthetic image.
    pub theta_star: f64,
    pub cd_a: f64,
    pub cd_steps: usize,
    pub ee: EstimatorConfig,
    pub tau: f64,
    pub seed: u64,
}

impl Default for IsingConfig {
    fn default() -> Self {
        Self {
            image: None,
            rows: 4,
            cols: 4,
            theta_star: 0.3,
            cd_a: 0.001,
            cd_steps: 20_000,
            ee: EstimatorConfig::new(0.001, 0.01, 1, 200_000),
            tau: 0.1,
            seed: 1,
        }
    }
}

impl IsingConfig {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(p) = kv.get_str("image") {
            self.image = Some(PathBuf::from(p));
        }
        set(kv, "rows", &mut self.rows)?;
        set(kv, "cols", &mut self.cols)?;
        set(kv, "theta_star", &mut self.theta_star)?;
        set(kv, "cd_a", &mut self.cd_a)?;
        set(kv, "cd_steps", &mut self.cd_steps)?;
        super::apply_estimator(kv, "ee", &mut self.ee)?;
        set(kv, "tau", &mut self.tau)?;
        set(kv, "seed", &mut self.seed)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ImageSource {
    File(PathBuf),
    /// Drawn exactly from the enumerated distribution.
    Exact { theta_star: f64 },
    /// The most typical of a run of equilibrated Metropolis-Hastings samples.
    Mcmc { theta_star: f64 },
}

#[derive(Debug, Clone)]
pub struct IsingReport {
    pub source: ImageSource,
    pub image: BinaryState,
    pub g_obs: f64,
    pub theta_cd: f64,
    /// Tail average of the EE trace.
    pub theta_hat: f64,
    /// Tail standard deviation of the EE trace.
    pub theta_std: f64,
    /// Exact maximiser, when the image is small enough to enumerate.
    pub oracle_mle: Option<f64>,
    pub convergence: ConvergenceReport,
    pub cd_trace: EstimationTrace,
    pub trace: EstimationTrace,
}

impl IsingReport {
    /// `(theta_hat - oracle) / theta_std`.
    pub fn z_score(&self) -> Option<f64> {
        self.oracle_mle.map(|m| (self.theta_hat - m) / self.theta_std)
    }
}

/// Draw an image from the coupling-only model at `theta`.
///
/// Images that fit the enumeration limit are drawn exactly, skipping draws
/// whose statistic has no finite maximiser. Larger ones are equilibrated for
/// 2000 sweeps, sampled 200 times 10 sweeps apart, and the sample whose
/// statistic is closest to the sample mean is returned.
pub fn synthetic_ising_image(seed: u64, rows: usize, cols: usize, theta: f64) -> Result<(BinaryState, ImageSource)> {
    let model = Ising2d::new(rows, cols, false);
    let n = rows * cols;
    if n <= MAX_ENUM_SITES {
        let table = EnumerationTable::new(&model)?;
        let mut rng = RngStream::new(derive_seed(seed, 10), 0).rng();
        for _ in 0..1000 {
            let x = table.sample(&mut rng, &[theta], 1)?.remove(0);
            let g = model.suff_stats(&x)?;
            if !table.maximize(&g, None, MleOptions::default())?.boundary {
                return Ok((x, ImageSource::Exact { theta_star: theta }));
            }
        }
        return Err(Error::Nonexistence("no interior image in 1000 draws".into()));
    }
    let mut rng = RngStream::new(derive_seed(seed, 11), 0).rng();
    let start = BinaryState::random(&mut rng, Encoding::Spin, Layout::Grid { rows, cols });
    let mut x = equilibrate(&mut rng, &model, &[theta], &start, 2000 * n)?;
    let mut samples = Vec::with_capacity(200);
    for _ in 0..200 {
        x = equilibrate(&mut rng, &model, &[theta], &x, 10 * n)?;
        let g = model.suff_stats(&x)?[0];
        samples.push((g, x.clone()));
    }
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / samples.len() as f64;
    let (_, typical) = samples
        .into_iter()
        .min_by(|a, b| (a.0 - mean).abs().total_cmp(&(b.0 - mean).abs()))
        .expect("non-empty");
    Ok((typical, ImageSource::Mcmc { theta_star: theta }))
}

/// Contrastive divergence from zero, then equilibrium expectation from the CD
/// estimate, on one image.
pub fn run_ising_experiment(cfg: &IsingConfig) -> Result<IsingReport> {
    cfg.ee.validate()?;
    let (image, source) = match &cfg.image {
        Some(path) => {
            let x = read_state(path)?;
            (x, ImageSource::File(path.clone()))
        }
        None => synthetic_ising_image(cfg.seed, cfg.rows, cfg.cols, cfg.theta_star)?,
    };
    let Layout::Grid { rows, cols } = image.layout() else {
        return Err(Error::invalid("the Ising experiment needs a grid image"));
    };
    if image.encoding() != Encoding::Spin {
        return Err(Error::invalid("the Ising experiment needs spin values"));
    }
    let model = Ising2d::new(rows, cols, false);
    let g_obs = model.suff_stats(&image)?[0];
    let bonds = model.num_bonds() as f64;
    if g_obs.abs() >= bonds {
        return Err(Error::Nonexistence(format!(
            "every bond of the image has the same sign (g = {g_obs})"
        )));
    }
    let data = Dataset::single(&model, image.clone())?;
    let cd_cfg = EstimatorConfig {
        a: cfg.cd_a,
        t_max: cfg.cd_steps,
        t_burnin: 0,
        ..cfg.ee.clone()
    };
    let (theta_cd, cd_trace) = cd_estimate(derive_seed(cfg.seed, 12), &data, &cd_cfg)?;
    let (theta_hat, trace) = ee_estimate(derive_seed(cfg.seed, 13), &data, &theta_cd, &cfg.ee, cfg.ee.step_fn)?;
    let theta_std = tail_std(&trace, cfg.ee.t_burnin)?[0];
    let convergence = diagnose(&trace, cfg.ee.t_burnin, cfg.tau, cfg.ee.c)?;
    let oracle_mle = if image.len() <= MAX_ENUM_SITES {
        Some(EnumerationTable::new(&model)?.mle(&[g_obs], None, MleOptions::default())?[0])
    } else {
        None
    };
    Ok(IsingReport {
        source,
        image,
        g_obs,
        theta_cd: theta_cd[0],
        theta_hat: theta_hat[0],
        theta_std,
        oracle_mle,
        convergence,
        cd_trace,
        trace,
    })
}
