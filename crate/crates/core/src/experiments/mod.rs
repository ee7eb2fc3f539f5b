//! Experiment runners: data generation, the Ising, VBM, CRF and mini-ERGM
//! studies, and thread configuration.

mod crf;
mod data;
mod ergm;
mod ising;
mod vbm;

pub use crf::{run_crf_experiment, test_error, CrfConfig, CrfReport};
pub use data::{
    classification_error, generate_crf_dataset, generate_vbm_dataset, threshold, x_shape, CrfDataset,
    VbmDataset,
};
pub use ergm::{ergm_update_timing, run_ergm_demo, sample_ergm_graph, ErgmConfig, ErgmReport};
pub use ising::{run_ising_experiment, synthetic_ising_image, ImageSource, IsingConfig, IsingReport};
pub use vbm::{fit, run_vbm_experiment, FitReport, VbmConfig, VbmReport};

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, StepSizeKind};
use crate::io::KeyValues;

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "EESTIM_THREADS";

/// Size the global thread pool from `EESTIM_THREADS` when set. Returns the
/// requested count, or `None` when the variable is absent.
pub fn init_threads() -> Result<Option<usize>> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::config(format!("{THREADS_ENV} must be a positive integer, got `{v}`")))?;
    // a pool that is already running keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}

pub(crate) fn set<T: FromStr>(kv: &KeyValues, key: &str, field: &mut T) -> Result<()> {
    if let Some(v) = kv.get(key)? {
        *field = v;
    }
    Ok(())
}

/// Reads `<prefix>_a`, `<prefix>_c`, `<prefix>_m`, `<prefix>_steps`,
/// `<prefix>_burnin`, `<prefix>_guard` and `<prefix>_stepfn`.
pub(crate) fn apply_estimator(kv: &KeyValues, prefix: &str, cfg: &mut EstimatorConfig) -> Result<()> {
    set(kv, &format!("{prefix}_a"), &mut cfg.a)?;
    set(kv, &format!("{prefix}_c"), &mut cfg.c)?;
    set(kv, &format!("{prefix}_m"), &mut cfg.m)?;
    let steps_key = format!("{prefix}_steps");
    if let Some(t) = kv.get::<usize>(&steps_key)? {
        cfg.t_max = t;
        cfg.t_burnin = t / 2;
    }
    set(kv, &format!("{prefix}_burnin"), &mut cfg.t_burnin)?;
    set(kv, &format!("{prefix}_guard"), &mut cfg.theta_guard)?;
    if let Some(f) = kv.get_str(&format!("{prefix}_stepfn")) {
        cfg.step_fn = StepSizeKind::parse(f).ok_or_else(|| Error::config(format!("unknown step function `{f}`")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_keys() {
        let kv = KeyValues::parse("ee_a = 0.01\nee_steps = 1000\nee_stepfn = abs-plus\n").unwrap();
        let mut cfg = EstimatorConfig::default();
        apply_estimator(&kv, "ee", &mut cfg).unwrap();
        assert_eq!(cfg.a, 0.01);
        assert_eq!((cfg.t_max, cfg.t_burnin), (1000, 500));
        assert_eq!(cfg.step_fn, StepSizeKind::AbsPlusC);
        let bad = KeyValues::parse("ee_stepfn = cubic\n").unwrap();
        assert!(apply_estimator(&bad, "ee", &mut cfg).is_err());
    }
}
