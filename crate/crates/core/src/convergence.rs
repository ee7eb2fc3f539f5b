//! Convergence diagnostics over the tail of an estimation trace.

use std::fmt;

use crate::error::{Error, Result};
use crate::estimators::EstimationTrace;

/// Default threshold for the t-ratio test.
pub const DEFAULT_TAU: f64 = 0.1;

/// `(mean, sample std)` with the `n - 1` denominator.
pub fn sample_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticRatio {
    pub mean: f64,
    pub std: f64,
    /// `|mean| / std`; infinite when degenerate.
    pub ratio: f64,
    /// Zero spread with nonzero mean.
    pub degenerate: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub tau: f64,
    pub t_burnin: usize,
    pub tail_len: usize,
    pub statistics: Vec<StatisticRatio>,
    /// Present when the report was built together with the sigma condition.
    pub sigma: Option<SigmaCondition>,
}

impl ConvergenceReport {
    pub fn pass(&self) -> bool {
        self.statistics.iter().all(|s| s.pass)
    }

    pub fn max_ratio(&self) -> f64 {
        self.statistics.iter().fold(0.0f64, |m, s| m.max(s.ratio))
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "tau = {}", self.tau)?;
        writeln!(f, "burnin = {}", self.t_burnin)?;
        writeln!(f, "tail = {}", self.tail_len)?;
        for (i, s) in self.statistics.iter().enumerate() {
            writeln!(f, "t_ratio_{} = {}", i + 1, s.ratio)?;
            if s.degenerate {
                writeln!(f, "degenerate_{} = true", i + 1)?;
            }
        }
        if let Some(sigma) = &self.sigma {
            for (i, a) in sigma.a.iter().enumerate() {
                writeln!(f, "A_{} = {a}", i + 1)?;
            }
            match sigma.dispersion {
                Some(d) => writeln!(f, "A_dispersion = {d}")?,
                None => writeln!(f, "A_dispersion = undefined")?,
            }
        }
        writeln!(f, "converged = {}", self.pass())
    }
}

/// `|<d_i>| / sigma(d_i)` over updates after `t_burnin`; passes when every
/// ratio is below `tau`.
pub fn t_ratio_test(trace: &EstimationTrace, t_burnin: usize, tau: f64) -> Result<ConvergenceReport> {
    let tail_len = trace.len().saturating_sub(t_burnin);
    if tail_len < 2 {
        return Err(Error::invalid(format!(
            "t-ratio test needs at least two tail updates, got {tail_len}"
        )));
    }
    let statistics = (0..trace.dim())
        .map(|i| {
            let (mean, std) = sample_std(trace.d_column(i, t_burnin));
            let (ratio, degenerate) = if std > 0.0 {
                (mean.abs() / std, false)
            } else if mean == 0.0 {
                (0.0, false)
            } else {
                (f64::INFINITY, true)
            };
            StatisticRatio {
                mean,
                std,
                ratio,
                degenerate,
                pass: !degenerate && ratio < tau,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        tau,
        t_burnin,
        tail_len,
        statistics,
        sigma: None,
    })
}

/// Measured learning-rate condition `sigma(theta_i) ~ A_i max(|<theta_i>|, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaCondition {
    pub a: Vec<f64>,
    pub mean_theta: Vec<f64>,
    pub std_theta: Vec<f64>,
    /// `max_i A_i / min_i A_i`; `None` when some `A_i` is zero.
    pub dispersion: Option<f64>,
}

pub fn sigma_condition(trace: &EstimationTrace, t_burnin: usize, c: f64) -> Result<SigmaCondition> {
    if trace.len() < t_burnin + 2 {
        return Err(Error::invalid("sigma condition needs at least two tail updates"));
    }
    let (mut a, mut mean_theta, mut std_theta) = (vec![], vec![], vec![]);
    for i in 0..trace.dim() {
        let (mean, std) = sample_std(trace.theta_column(i, t_burnin));
        a.push(std / mean.abs().max(c));
        mean_theta.push(mean);
        std_theta.push(std);
    }
    let max = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = a.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(SigmaCondition {
        dispersion: (min > 0.0).then(|| max / min),
        a,
        mean_theta,
        std_theta,
    })
}

/// Both diagnostics in one report.
pub fn diagnose(trace: &EstimationTrace, t_burnin: usize, tau: f64, c: f64) -> Result<ConvergenceReport> {
    let mut report = t_ratio_test(trace, t_burnin, tau)?;
    report.sigma = Some(sigma_condition(trace, t_burnin, c)?);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d_trace(d: &[f64]) -> EstimationTrace {
        let mut t = EstimationTrace::new(1);
        for &v in d {
            t.push(&[0.0], &[v], 0);
        }
        t
    }

    fn theta_trace(th: &[f64]) -> EstimationTrace {
        let mut t = EstimationTrace::new(1);
        for &v in th {
            t.push(&[v], &[0.0], 0);
        }
        t
    }

    #[test]
    fn t_ratio_examples() {
        let r = t_ratio_test(&d_trace(&[1.0, -1.0, 1.0, -1.0]), 0, 0.1).unwrap();
        assert_eq!(r.statistics[0].ratio, 0.0);
        assert!(r.pass());

        let r = t_ratio_test(&d_trace(&[1.0, 2.0, 3.0]), 0, 0.1).unwrap();
        assert_eq!(r.statistics[0].mean, 2.0);
        assert_eq!(r.statistics[0].std, 1.0);
        assert_eq!(r.statistics[0].ratio, 2.0);
        assert!(!r.pass());

        let r = t_ratio_test(&d_trace(&[5.0, 5.0, 5.0]), 0, 0.1).unwrap();
        assert!(r.statistics[0].degenerate);
        assert!(!r.pass());

        let r = t_ratio_test(&d_trace(&[0.0, 0.0]), 0, 0.1).unwrap();
        assert!(r.pass());
    }

    #[test]
    fn burnin_is_excluded() {
        let r = t_ratio_test(&d_trace(&[100.0, 100.0, 1.0, -1.0]), 2, 0.1).unwrap();
        assert!(r.pass());
        assert!(t_ratio_test(&d_trace(&[1.0, 2.0]), 1, 0.1).is_err());
    }

    #[test]
    fn sigma_examples() {
        let s = sigma_condition(&theta_trace(&[0.189; 5]), 0, 0.01).unwrap();
        assert_eq!(s.a, vec![0.0]);
        assert_eq!(s.dispersion, None);

        let s = sigma_condition(&theta_trace(&[0.9, 1.1, 0.9, 1.1]), 0, 0.01).unwrap();
        assert!((s.mean_theta[0] - 1.0).abs() < 1e-12);
        // sample std of {0.9, 1.1, 0.9, 1.1} is sqrt(0.04 / 3)
        assert!((s.a[0] - (0.04f64 / 3.0).sqrt()).abs() < 1e-12);
        let s2 = sigma_condition(&theta_trace(&[0.9, 1.1]), 0, 0.01).unwrap();
        assert!((s2.a[0] - 0.141421356).abs() < 1e-8);
    }

    #[test]
    fn report_renders_key_values() {
        let r = diagnose(&d_trace(&[1.0, -1.0, 2.0]), 0, 0.1, 0.01).unwrap();
        let text = r.to_string();
        assert!(text.contains("t_ratio_1 = "));
        assert!(text.contains("converged = "));
    }
}
