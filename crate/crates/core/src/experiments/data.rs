use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::models::Vbm;
use crate::sampler::{derive_seed, ensemble_mean_stats, equilibrate_ensemble, RngStream};
use crate::state::{BinaryState, Encoding, Layout, ParamVector, StatVector};

/// Ensemble training data for the fully visible Boltzmann machine.
#[derive(Debug, Clone)]
pub struct VbmDataset {
    pub units: usize,
    pub theta_star: ParamVector,
    pub samples: Vec<BinaryState>,
    /// Mean VBM statistics over the samples.
    pub g_bar: StatVector,
}

/// Draw `theta* ~ N(0, 1)` per pair (unless given), start `samples` chains at
/// random and equilibrate each for `anneal_steps` single-site transitions.
pub fn generate_vbm_dataset(
    seed: u64,
    units: usize,
    samples: usize,
    anneal_steps: usize,
    theta_star: Option<ParamVector>,
) -> Result<VbmDataset> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let model = Vbm::new(units);
    let theta_star = match theta_star {
        Some(t) if t.len() == model.num_stats() => t,
        Some(t) => {
            return Err(Error::invalid(format!(
                "theta* has {} entries, expected {}",
                t.len(),
                model.num_stats()
            )))
        }
        None => {
            let mut rng = RngStream::new(derive_seed(seed, 1), 0).rng();
            (0..model.num_stats())
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect()
        }
    };
    let layout = model.layout();
    let starts: Vec<BinaryState> = (0..samples)
        .map(|k| {
            let mut rng = RngStream::new(derive_seed(seed, 2), k as u64).rng();
            BinaryState::random(&mut rng, Encoding::Spin, layout)
        })
        .collect();
    let chains = equilibrate_ensemble(derive_seed(seed, 3), &model, &theta_star, &starts, anneal_steps)?;
    let g_bar = ensemble_mean_stats(&chains, &model)?;
    Ok(VbmDataset {
        units,
        theta_star,
        samples: chains,
        g_bar,
    })
}

/// Noisy observations of a binary image.
#[derive(Debug, Clone)]
pub struct CrfDataset {
    pub rows: usize,
    pub cols: usize,
    pub x_orig: BinaryState,
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
}

/// `+1` on the two diagonal bands of half-width 2, `-1` elsewhere.
pub fn x_shape(rows: usize, cols: usize) -> BinaryState {
    let values = (0..rows * cols)
        .map(|i| {
            let (r, c) = ((i / cols) as isize, (i % cols) as isize);
            let anti = (r + c - (rows as isize - 1)).abs();
            if (r - c).abs() <= 2 || anti <= 2 {
                1
            } else {
                -1
            }
        })
        .collect();
    BinaryState::new(Encoding::Spin, Layout::Grid { rows, cols }, values).expect("legal spins")
}

/// `y = x_orig + noise_sd * N(0, 1)` per pixel, for `n_train + n_test` images.
pub fn generate_crf_dataset(
    seed: u64,
    rows: usize,
    cols: usize,
    n_train: usize,
    n_test: usize,
    noise_sd: f64,
) -> Result<CrfDataset> {
    if rows < 5 || cols < 5 {
        return Err(Error::invalid("image must be at least 5x5"));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(Error::invalid("noise level must be finite and non-negative"));
    }
    let x_orig = x_shape(rows, cols);
    let noisy = |stream: u64| -> Vec<f64> {
        let mut rng = RngStream::new(derive_seed(seed, 4), stream).rng();
        x_orig
            .values()
            .iter()
            .map(|&v| v as f64 + noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect()
    };
    let train = (0..n_train).map(|k| noisy(k as u64)).collect();
    let test = (0..n_test).map(|k| noisy((n_train + k) as u64)).collect();
    Ok(CrfDataset {
        rows,
        cols,
        x_orig,
        train,
        test,
    })
}

/// Labels thresholded at zero.
pub fn threshold(y: &[f64], rows: usize, cols: usize) -> BinaryState {
    let values = y.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect();
    BinaryState::new(Encoding::Spin, Layout::Grid { rows, cols }, values).expect("legal spins")
}

/// Fraction of mislabelled pixels, `sum_k sum_i |x_i^k - x_i| / (2 K n)`.
pub fn classification_error(states: &[BinaryState], x_orig: &BinaryState) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::invalid("no test states"));
    }
    let mut wrong = 0usize;
    for s in states {
        if s.layout() != x_orig.layout() || s.encoding() != x_orig.encoding() {
            return Err(Error::invalid("test state does not match the reference image"));
        }
        wrong += s
            .values()
            .iter()
            .zip(x_orig.values())
            .filter(|(a, b)| a != b)
            .count();
    }
    Ok(wrong as f64 / (states.len() * x_orig.len()) as f64)
}
