//! Exact enumeration over every configuration of a small model.
//!
//! States are identified by integer codes (bit `k` is site `k`). All sums are
//! taken in the log domain and split into fixed-size chunks; chunk partials are
//! merged in code order, so results do not depend on the thread count.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Model;
use crate::sampler::LOG_RATIO_CLAMP;
use crate::state::{decode_into, BinaryState, ParamVector, StatVector};

/// Enumeration limit in sites.
pub const MAX_ENUM_SITES: usize = 20;
/// Limit for routines that build the full transition kernel.
pub const MAX_KERNEL_SITES: usize = 12;

const CHUNK: usize = 1 << 12;
/// Statistic tables larger than this many entries are recomputed on demand.
const CACHE_ENTRIES: usize = 1 << 24;

/// Every configuration of a model, with an optional statistics cache.
pub struct EnumerationTable<'m, M: ?Sized> {
    model: &'m M,
    sites: usize,
    dim: usize,
    stats: Option<Vec<f64>>,
}

/// `log Z` and `E_theta g`.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub log_z: f64,
    pub mean: StatVector,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Stop once `max_i |g_bar_i - E g_i|` falls below this.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Declare nonexistence once any `|theta_i|` exceeds this.
    pub guard: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iter: 100_000,
            guard: 50.0,
        }
    }
}

/// Result of [`EnumerationTable::maximize`].
#[derive(Debug, Clone, PartialEq)]
pub struct MleFit {
    pub theta: ParamVector,
    pub log_likelihood: f64,
    /// `max_i |g_bar_i - E g_i|` over free coordinates.
    pub residual: f64,
    pub iterations: usize,
    /// The target sits on the boundary: no finite maximiser exists.
    pub boundary: bool,
}

/// Converged once the Newton step is below this in every coordinate.
const NEWTON_STEP_TOL: f64 = 1e-6;
/// Fisher information eigenvalues below this fraction of `max(1, largest)` count as zero.
const SINGULAR_RATIO: f64 = 1e-10;
/// Relative likelihood gain below which an iteration counts as stalled.
const STALL_TOL: f64 = 1e-13;
/// Relative tolerance for a target to sit on a statistic's extreme value.
const FACE_TOL: f64 = 1e-9;

fn singular(h: &DMatrix<f64>) -> bool {
    let eig = h.clone().symmetric_eigenvalues();
    eig.min() <= SINGULAR_RATIO * eig.max().max(1.0)
}

impl<'m, M: Model + ?Sized> EnumerationTable<'m, M> {
    pub fn new(model: &'m M) -> Result<Self> {
        Self::build(model, MAX_ENUM_SITES)
    }

    fn build(model: &'m M, limit: usize) -> Result<Self> {
        let sites = model.num_sites();
        if sites > limit {
            return Err(Error::TooLarge { sites, limit });
        }
        let dim = model.num_stats();
        let mut table = Self {
            model,
            sites,
            dim,
            stats: None,
        };
        if (1usize << sites) * dim <= CACHE_ENTRIES {
            let stats = (0..table.num_chunks())
                .into_par_iter()
                .flat_map_iter(|c| table.compute_chunk(c))
                .collect();
            table.stats = Some(stats);
        }
        Ok(table)
    }

    pub fn model(&self) -> &M {
        self.model
    }

    pub fn num_states(&self) -> usize {
        1 << self.sites
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn num_chunks(&self) -> usize {
        self.num_states().div_ceil(CHUNK)
    }

    fn chunk_range(&self, c: usize) -> std::ops::Range<usize> {
        c * CHUNK..((c + 1) * CHUNK).min(self.num_states())
    }

    fn compute_chunk(&self, c: usize) -> Vec<f64> {
        let range = self.chunk_range(c);
        let mut out = vec![0.0; range.len() * self.dim];
        let mut values = vec![0i8; self.sites];
        let enc = self.model.encoding();
        for (row, code) in out.chunks_exact_mut(self.dim.max(1)).zip(range) {
            decode_into(enc, code as u64, &mut values);
            self.model.write_stats(&values, row);
        }
        out
    }

    /// Statistics of the states in chunk `c`, row-major.
    fn with_chunk<R>(&self, c: usize, f: impl FnOnce(&[f64]) -> R) -> R {
        match &self.stats {
            Some(s) => {
                let r = self.chunk_range(c);
                f(&s[r.start * self.dim..r.end * self.dim])
            }
            None => f(&self.compute_chunk(c)),
        }
    }

    /// `g` of the state with the given code.
    pub fn stats_of(&self, code: usize) -> StatVector {
        match &self.stats {
            Some(s) => StatVector(s[code * self.dim..(code + 1) * self.dim].to_vec()),
            None => {
                let mut values = vec![0i8; self.sites];
                decode_into(self.model.encoding(), code as u64, &mut values);
                let mut out = StatVector::zeros(self.dim);
                self.model.write_stats(&values, &mut out);
                out
            }
        }
    }

    pub fn state(&self, code: usize) -> BinaryState {
        BinaryState::from_code(self.model.encoding(), self.model.layout(), code as u64)
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dim {
            return Err(Error::invalid(format!(
                "theta has {} entries, model has {} statistics",
                theta.len(),
                self.dim
            )));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("theta must be finite"));
        }
        Ok(())
    }

    fn check_target(&self, g_bar: &[f64]) -> Result<()> {
        if g_bar.len() != self.dim || g_bar.iter().any(|g| !g.is_finite()) {
            return Err(Error::invalid("target statistics must be finite with one entry per statistic"));
        }
        Ok(())
    }

    /// `log Z(theta)`.
    pub fn log_partition(&self, theta: &[f64]) -> Result<f64> {
        self.check_theta(theta)?;
        let partials: Vec<(f64, f64)> = (0..self.num_chunks())
            .into_par_iter()
            .map(|c| {
                self.with_chunk(c, |rows| {
                    let w: Vec<f64> = rows.chunks_exact(self.dim.max(1)).map(|g| dot(theta, g)).collect();
                    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    (max, w.iter().map(|x| (x - max).exp()).sum())
                })
            })
            .collect();
        Ok(merge_log_sums(&partials))
    }

    /// Exact log-likelihood `theta . g_bar - log Z(theta)`.
    pub fn log_likelihood(&self, theta: &[f64], g_bar: &[f64]) -> Result<f64> {
        self.check_target(g_bar)?;
        Ok(dot(theta, g_bar) - self.log_partition(theta)?)
    }

    pub fn moments(&self, theta: &[f64]) -> Result<Moments> {
        self.check_theta(theta)?;
        Ok(self.moments_on(theta, None))
    }

    /// Moments of `pi` restricted to the states flagged in `support`.
    fn moments_on(&self, theta: &[f64], support: Option<&[bool]>) -> Moments {
        let dim = self.dim;
        let partials: Vec<(f64, f64, Vec<f64>)> = (0..self.num_chunks())
            .into_par_iter()
            .map(|c| {
                let keep = chunk_support(support, self.chunk_range(c));
                self.with_chunk(c, |rows| {
                    let w: Vec<f64> = rows
                        .chunks_exact(dim.max(1))
                        .enumerate()
                        .map(|(r, g)| if keep(r) { dot(theta, g) } else { f64::NEG_INFINITY })
                        .collect();
                    let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let mut s0 = 0.0;
                    let mut s1 = vec![0.0; dim];
                    if max == f64::NEG_INFINITY {
                        return (max, s0, s1);
                    }
                    for (wi, g) in w.iter().zip(rows.chunks_exact(dim.max(1))) {
                        let p = (wi - max).exp();
                        s0 += p;
                        for (a, gv) in s1.iter_mut().zip(g) {
                            *a += p * gv;
                        }
                    }
                    (max, s0, s1)
                })
            })
            .collect();
        let max = partials.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        let mut mean = vec![0.0; dim];
        for (m, s0, s1) in &partials {
            if *s0 == 0.0 {
                continue;
            }
            let scale = (m - max).exp();
            total += scale * s0;
            for (a, v) in mean.iter_mut().zip(s1) {
                *a += scale * v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= total);
        Moments {
            log_z: max + total.ln(),
            mean: StatVector(mean),
        }
    }

    /// `Cov_theta(g)`, the negated Hessian of the log-likelihood.
    pub fn covariance(&self, theta: &[f64], moments: &Moments) -> Result<DMatrix<f64>> {
        self.check_theta(theta)?;
        Ok(self.covariance_on(theta, moments, None))
    }

    fn covariance_on(&self, theta: &[f64], moments: &Moments, support: Option<&[bool]>) -> DMatrix<f64> {
        let dim = self.dim;
        let partials: Vec<DMatrix<f64>> = (0..self.num_chunks())
            .into_par_iter()
            .map(|c| {
                let keep = chunk_support(support, self.chunk_range(c));
                self.with_chunk(c, |rows| {
                    let n = rows.len() / dim.max(1);
                    let mut centered = DMatrix::<f64>::zeros(n, dim);
                    for (r, g) in rows.chunks_exact(dim.max(1)).enumerate() {
                        if !keep(r) {
                            continue;
                        }
                        let sp = (0.5 * (dot(theta, g) - moments.log_z)).exp();
                        for (i, gv) in g.iter().enumerate() {
                            centered[(r, i)] = sp * (gv - moments.mean[i]);
                        }
                    }
                    centered.transpose() * &centered
                })
            })
            .collect();
        partials
            .into_iter()
            .fold(DMatrix::zeros(dim, dim), |acc, m| acc + m)
    }

    /// Per-coordinate `(min, max)` of the statistics over the supported states.
    fn stat_ranges(&self, support: Option<&[bool]>) -> Vec<(f64, f64)> {
        let dim = self.dim;
        let partials: Vec<Vec<(f64, f64)>> = (0..self.num_chunks())
            .into_par_iter()
            .map(|c| {
                let keep = chunk_support(support, self.chunk_range(c));
                self.with_chunk(c, |rows| {
                    let mut r = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
                    for (_, g) in rows.chunks_exact(dim.max(1)).enumerate().filter(|(k, _)| keep(*k)) {
                        for (b, &v) in r.iter_mut().zip(g) {
                            *b = (b.0.min(v), b.1.max(v));
                        }
                    }
                    r
                })
            })
            .collect();
        partials.into_iter().fold(vec![(f64::INFINITY, f64::NEG_INFINITY); dim], |acc, p| {
            acc.iter().zip(&p).map(|(a, b)| (a.0.min(b.0), a.1.max(b.1))).collect()
        })
    }

    /// Shrink the support to the face of the statistic range that contains
    /// `g_bar`, one coordinate extreme at a time. Returns the support (`None`
    /// when nothing was removed) and, per coordinate, `Some(direction)` for
    /// coordinates eliminated on the way: `+1`/`-1` for a target at the
    /// maximum/minimum, `0` for a coordinate that is constant on the face.
    #[allow(clippy::type_complexity)]
    fn reduce_to_face(&self, g_bar: &[f64], free: &[usize]) -> Result<(Option<Vec<bool>>, Vec<Option<i8>>)> {
        let mut support: Option<Vec<bool>> = None;
        let mut fixed: Vec<Option<i8>> = vec![None; self.dim];
        loop {
            let ranges = self.stat_ranges(support.as_deref());
            let mut cut: Option<(usize, f64)> = None;
            for &i in free {
                if fixed[i].is_some() {
                    continue;
                }
                let (lo, hi) = ranges[i];
                let tol = FACE_TOL * lo.abs().max(hi.abs()).max(1.0);
                if g_bar[i] > hi + tol || g_bar[i] < lo - tol {
                    return Err(Error::Nonexistence(format!(
                        "target statistic {i} = {} is outside the achievable range [{lo}, {hi}]",
                        g_bar[i]
                    )));
                }
                if hi - lo <= tol {
                    fixed[i] = Some(0);
                } else if g_bar[i] >= hi - tol {
                    fixed[i] = Some(1);
                    cut = Some((i, hi));
                    break;
                } else if g_bar[i] <= lo + tol {
                    fixed[i] = Some(-1);
                    cut = Some((i, lo));
                    break;
                }
            }
            let Some((i, v)) = cut else {
                return Ok((support, fixed));
            };
            let tol = FACE_TOL * v.abs().max(1.0);
            let mut next = support.take().unwrap_or_else(|| vec![true; self.num_states()]);
            for c in 0..self.num_chunks() {
                let range = self.chunk_range(c);
                let start = range.start;
                self.with_chunk(c, |rows| {
                    for (r, g) in rows.chunks_exact(self.dim.max(1)).enumerate() {
                        if (g[i] - v).abs() > tol {
                            next[start + r] = false;
                        }
                    }
                });
            }
            support = Some(next);
        }
    }

    /// Normalised probabilities of every state, indexed by code.
    pub fn probabilities(&self, theta: &[f64]) -> Result<Vec<f64>> {
        let log_z = self.log_partition(theta)?;
        let chunks: Vec<Vec<f64>> = (0..self.num_chunks())
            .into_par_iter()
            .map(|c| {
                self.with_chunk(c, |rows| {
                    rows.chunks_exact(self.dim.max(1))
                        .map(|g| (dot(theta, g) - log_z).exp())
                        .collect()
                })
            })
            .collect();
        Ok(chunks.concat())
    }

    /// Maximise the exact log-likelihood for the mean target `g_bar`.
    ///
    /// Fails with [`Error::Nonexistence`] when the target lies on the boundary
    /// of the achievable statistics; see [`Self::maximize`] for the supremum.
    pub fn mle(&self, g_bar: &[f64], start: Option<&[f64]>, opts: MleOptions) -> Result<ParamVector> {
        let fit = self.maximize(g_bar, start, opts)?;
        if fit.boundary {
            return Err(Error::Nonexistence(format!(
                "target lies on the boundary of the achievable statistics \
                 (max |theta| = {:.3}, moment residual {:.3e})",
                fit.theta.max_abs(),
                fit.residual
            )));
        }
        Ok(fit.theta)
    }

    /// Damped Newton ascent with the exact Hessian and backtracking; pinned
    /// coordinates stay at their pinned values. Falls back to a gradient step
    /// when the Newton direction cannot make progress.
    ///
    /// A coordinate whose target equals the largest or smallest achievable
    /// value has no finite maximiser. The supremum is then the maximum of the
    /// model restricted to the states attaining that value, which is found
    /// directly; such coordinates are reported at `+-guard`. Other boundary
    /// targets make the ascent run off towards infinity, detected by the
    /// guard or by a numerically singular Fisher information. Either way the
    /// fit is flagged and its likelihood approximates the supremum.
    pub fn maximize(&self, g_bar: &[f64], start: Option<&[f64]>, opts: MleOptions) -> Result<MleFit> {
        self.check_target(g_bar)?;
        let pinned = self.model.pinned();
        let mut theta = match start {
            Some(s) => {
                self.check_theta(s)?;
                s.to_vec()
            }
            None => vec![0.0; self.dim],
        };
        crate::estimators::apply_pins(&mut theta, &pinned);
        let free: Vec<usize> = (0..self.dim).filter(|&i| pinned[i].is_none()).collect();
        let (support, fixed) = self.reduce_to_face(g_bar, &free)?;
        let support = support.as_deref();
        let on_face = support.is_some();
        let free: Vec<usize> = free.into_iter().filter(|&i| fixed[i].is_none()).collect();
        let mut mom = self.moments_on(&theta, support);
        let mut ll = dot(&theta, g_bar) - mom.log_z;
        // eliminated coordinates are constant on the face, so the restricted
        // likelihood does not depend on them
        let finish = |mut theta: Vec<f64>, ll: f64, residual: f64, iterations: usize, boundary: bool| {
            for (t, f) in theta.iter_mut().zip(&fixed) {
                if let Some(d @ (1 | -1)) = f {
                    *t = f64::from(*d) * opts.guard;
                }
            }
            MleFit {
                theta: ParamVector(theta),
                log_likelihood: ll,
                residual,
                iterations,
                boundary: boundary || on_face,
            }
        };
        if free.is_empty() {
            return Ok(finish(theta, ll, 0.0, 0, false));
        }
        for iter in 0..opts.max_iter {
            let grad: Vec<f64> = free.iter().map(|&i| g_bar[i] - mom.mean[i]).collect();
            let residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
            if theta.iter().any(|t| t.abs() > opts.guard) {
                return Ok(finish(theta, ll, residual, iter, true));
            }
            let (hessian, newton) = self.newton_direction(&theta, &mom, &free, &grad, support);
            let step = newton
                .as_ref()
                .map_or(f64::INFINITY, |d| d.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            if residual < opts.tolerance && step < NEWTON_STEP_TOL {
                return Ok(finish(theta, ll, residual, iter, singular(&hessian)));
            }
            let mut moved = false;
            let before = ll;
            for dir in newton.iter().chain(std::iter::once(&grad)) {
                if let Some((t, m, l)) = self.line_search(&theta, g_bar, &free, dir, ll, &grad, support) {
                    theta = t;
                    mom = m;
                    ll = l;
                    moved = true;
                    break;
                }
            }
            // along a direction of recession the likelihood saturates while the
            // Newton step stays finite
            if moved && residual < opts.tolerance && ll - before <= STALL_TOL * (1.0 + ll.abs()) {
                let boundary = step >= NEWTON_STEP_TOL || singular(&hessian);
                return Ok(finish(theta, ll, residual, iter + 1, boundary));
            }
            if !moved {
                if residual < opts.tolerance {
                    return Ok(finish(theta, ll, residual, iter, singular(&hessian)));
                }
                return Err(Error::Nonexistence(format!(
                    "ascent stalled with moment residual {residual:.3e}"
                )));
            }
        }
        Err(Error::Nonexistence(format!(
            "no convergence within {} iterations",
            opts.max_iter
        )))
    }

    /// Free-coordinate covariance and the Newton direction, if it could be solved.
    fn newton_direction(
        &self,
        theta: &[f64],
        mom: &Moments,
        free: &[usize],
        grad: &[f64],
        support: Option<&[bool]>,
    ) -> (DMatrix<f64>, Option<Vec<f64>>) {
        let cov = self.covariance_on(theta, mom, support);
        let k = free.len();
        let h = DMatrix::from_fn(k, k, |a, b| cov[(free[a], free[b])]);
        let scale = h.diagonal().max().max(f64::MIN_POSITIVE);
        let g = DVector::from_column_slice(grad);
        let mut ridge = 1e-12 * scale;
        for _ in 0..8 {
            let damped = &h + DMatrix::identity(k, k) * ridge;
            if let Some(chol) = damped.cholesky() {
                let step = chol.solve(&g);
                if step.iter().all(|s| s.is_finite()) {
                    return (h, Some(step.iter().cloned().collect()));
                }
            }
            ridge *= 100.0;
        }
        (h, None)
    }

    /// Backtrack along `dir` (free coordinates) until the likelihood does not
    /// decrease; `None` if no admissible step was found.
    #[allow(clippy::type_complexity)]
    fn line_search(
        &self,
        theta: &[f64],
        g_bar: &[f64],
        free: &[usize],
        dir: &[f64],
        ll: f64,
        grad: &[f64],
        support: Option<&[bool]>,
    ) -> Option<(Vec<f64>, Moments, f64)> {
        let slope: f64 = dir.iter().zip(grad).map(|(d, g)| d * g).sum();
        if !(slope > 0.0) {
            return None;
        }
        let old_residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let mut t = 1.0;
        // cap the first trial so a near-singular Hessian cannot jump far past the guard
        let longest = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if longest > 10.0 {
            t = 10.0 / longest;
        }
        let slack = 1e-13 * (1.0 + ll.abs());
        for _ in 0..60 {
            let mut cand = theta.to_vec();
            for (&i, d) in free.iter().zip(dir) {
                cand[i] += t * d;
            }
            let mom = self.moments_on(&cand, support);
            let l = dot(&cand, g_bar) - mom.log_z;
            if l > ll - slack {
                let residual = free
                    .iter()
                    .fold(0.0f64, |m, &i| m.max((g_bar[i] - mom.mean[i]).abs()));
                // within rounding of the optimum the likelihood is flat, so
                // also require the gradient not to grow
                if l > ll + slack || residual <= old_residual {
                    return Some((cand, mom, l));
                }
            }
            t *= 0.5;
        }
        None
    }

    /// Independent draws from `pi(. | theta)` by inverting the cumulative distribution.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, theta: &[f64], count: usize) -> Result<Vec<BinaryState>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        let probs = self.probabilities(theta)?;
        let mut cdf = probs;
        let mut acc = 0.0;
        for p in cdf.iter_mut() {
            acc += *p;
            *p = acc;
        }
        let last = cdf.len() - 1;
        Ok((0..count)
            .map(|_| {
                let u = rng.random::<f64>() * acc;
                let code = cdf.partition_point(|&c| c <= u).min(last);
                self.state(code)
            })
            .collect())
    }
}

/// Membership test for the rows of one chunk.
fn chunk_support(support: Option<&[bool]>, range: std::ops::Range<usize>) -> impl Fn(usize) -> bool + '_ {
    let slice = support.map(|s| &s[range]);
    move |r| slice.is_none_or(|s| s[r])
}

fn merge_log_sums(partials: &[(f64, f64)]) -> f64 {
    let max = partials.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = partials.iter().map(|(m, s)| (m - max).exp() * s).sum();
    max + total.ln()
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `log Z(theta)` by enumeration.
pub fn partition_function<M: Model + ?Sized>(model: &M, theta: &[f64]) -> Result<f64> {
    EnumerationTable::new(model)?.log_partition(theta)
}

/// `theta . g_bar - log Z(theta)`; pass `g(x_obs)` for a single observation.
pub fn log_likelihood<M: Model + ?Sized>(model: &M, theta: &[f64], g_bar: &[f64]) -> Result<f64> {
    EnumerationTable::new(model)?.log_likelihood(theta, g_bar)
}

pub fn exact_expectations<M: Model + ?Sized>(model: &M, theta: &[f64]) -> Result<StatVector> {
    Ok(EnumerationTable::new(model)?.moments(theta)?.mean)
}

pub fn exact_mle<M: Model + ?Sized>(model: &M, g_bar: &[f64]) -> Result<ParamVector> {
    EnumerationTable::new(model)?.mle(g_bar, None, MleOptions::default())
}

pub fn exact_sample<R: Rng + ?Sized, M: Model + ?Sized>(
    rng: &mut R,
    model: &M,
    theta: &[f64],
    count: usize,
) -> Result<Vec<BinaryState>> {
    EnumerationTable::new(model)?.sample(rng, theta, count)
}

/// The exact single-flip Metropolis-Hastings kernel with uniform site choice.
///
/// Row `x` holds `P(x -> x ^ (1 << k))` for every site `k`; the rejection mass
/// sits on the diagonal.
pub struct TransitionKernel {
    sites: usize,
    /// `flip[x * sites + k]`
    flip: Vec<f64>,
    stay: Vec<f64>,
    pi: Vec<f64>,
    /// `g` per state, row-major.
    stats: Vec<f64>,
    dim: usize,
}

impl TransitionKernel {
    /// Built from full statistics only; the model's change statistics are not used.
    pub fn new<M: Model + ?Sized>(model: &M, theta: &[f64]) -> Result<Self> {
        let table = EnumerationTable::build(model, MAX_KERNEL_SITES)?;
        let pi = table.probabilities(theta)?;
        let sites = table.sites;
        let dim = table.dim;
        let states = table.num_states();
        let stats: Vec<f64> = (0..states).flat_map(|c| table.stats_of(c).0).collect();
        let q = 1.0 / sites as f64;
        let mut flip = vec![0.0; states * sites];
        let mut stay = vec![0.0; states];
        for x in 0..states {
            let gx = &stats[x * dim..(x + 1) * dim];
            let mut moved = 0.0;
            for k in 0..sites {
                let y = x ^ (1 << k);
                let gy = &stats[y * dim..(y + 1) * dim];
                let log_ratio: f64 = theta.iter().zip(gy.iter().zip(gx)).map(|(t, (a, b))| t * (a - b)).sum();
                let alpha = log_ratio.clamp(-LOG_RATIO_CLAMP, LOG_RATIO_CLAMP).exp().min(1.0);
                flip[x * sites + k] = q * alpha;
                moved += q * alpha;
            }
            stay[x] = 1.0 - moved;
        }
        Ok(Self {
            sites,
            flip,
            stay,
            pi,
            stats,
            dim,
        })
    }

    pub fn stationary(&self) -> &[f64] {
        &self.pi
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return self.stay[x];
        }
        let diff = x ^ y;
        if diff.is_power_of_two() {
            self.flip[x * self.sites + diff.trailing_zeros() as usize]
        } else {
            0.0
        }
    }

    fn g(&self, x: usize) -> &[f64] {
        &self.stats[x * self.dim..(x + 1) * self.dim]
    }

    /// `max_i |sum_x pi(x) sum_x' P(x -> x') (g_i(x') - g_i(x))|`.
    pub fn expected_change_residual(&self) -> f64 {
        let mut total = vec![0.0; self.dim];
        for (x, &px) in self.pi.iter().enumerate() {
            let gx = self.g(x);
            for k in 0..self.sites {
                let y = x ^ (1 << k);
                let w = px * self.flip[x * self.sites + k];
                for ((t, a), b) in total.iter_mut().zip(self.g(y)).zip(gx) {
                    *t += w * (a - b);
                }
            }
        }
        total.iter().fold(0.0, |m, t| m.max(t.abs()))
    }

    /// `||pi P - pi||_inf`.
    pub fn stationarity_residual(&self) -> f64 {
        (0..self.pi.len())
            .map(|y| {
                let inflow: f64 = (0..self.sites)
                    .map(|k| {
                        let x = y ^ (1 << k);
                        self.pi[x] * self.flip[x * self.sites + k]
                    })
                    .sum();
                (self.pi[y] * self.stay[y] + inflow - self.pi[y]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `max |pi(x) P(x -> x') - pi(x') P(x' -> x)|` over all neighbouring pairs.
    pub fn detailed_balance_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for x in 0..self.pi.len() {
            for k in 0..self.sites {
                let y = x ^ (1 << k);
                let fwd = self.pi[x] * self.flip[x * self.sites + k];
                let back = self.pi[y] * self.flip[y * self.sites + k];
                worst = worst.max((fwd - back).abs());
            }
        }
        worst
    }

    /// Largest deviation of a row sum from one.
    pub fn row_sum_error(&self) -> f64 {
        (0..self.pi.len())
            .map(|x| {
                let s: f64 = self.flip[x * self.sites..(x + 1) * self.sites].iter().sum::<f64>() + self.stay[x];
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Stationary expected statistic change under the exact kernel; zero up to
/// rounding for every model and every `theta`.
pub fn theorem1_residual<M: Model + ?Sized>(model: &M, theta: &[f64]) -> Result<f64> {
    Ok(TransitionKernel::new(model, theta)?.expected_change_residual())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Ising2d, MiniErgm, Vbm};
    use crate::sampler::RngStream;
    use rand::Rng;

    fn bond() -> Ising2d {
        Ising2d::new(1, 2, false)
    }

    #[test]
    fn uniform_partition_function() {
        let vbm = Vbm::new(15);
        let log_z = partition_function(&vbm, &vec![0.0; 105]).unwrap();
        assert!((log_z - 15.0 * 2f64.ln()).abs() < 1e-10);
        let ll = log_likelihood(&vbm, &vec![0.0; 105], &vec![-1.0; 105]).unwrap();
        assert!((ll + 10.397208).abs() < 1e-6);
    }

    #[test]
    fn single_spin_and_bond_closed_forms() {
        let spin = Ising2d::new(1, 1, true);
        let th = 0.7;
        let log_z = partition_function(&spin, &[0.0, th]).unwrap();
        assert!((log_z - (2.0 * th.cosh()).ln()).abs() < 1e-12);

        let th = 0.5f64;
        let log_z = partition_function(&bond(), &[th]).unwrap();
        assert!((log_z - (2.0 * th.exp() + 2.0 * (-th).exp()).ln()).abs() < 1e-12);
        let ll = log_likelihood(&bond(), &[th], &[-1.0]).unwrap();
        assert!((ll - (-0.5 - (2.0 * th.exp() + 2.0 * (-th).exp()).ln())).abs() < 1e-12);
        for t in [-1.3, 0.0, 0.549, 2.0] {
            let e = exact_expectations(&bond(), &[t]).unwrap();
            assert!((e[0] - f64::tanh(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn bond_mle_is_atanh() {
        let th = exact_mle(&bond(), &[0.5]).unwrap();
        assert!((th[0] - 0.5f64.atanh()).abs() < 1e-9);
        assert!((th[0] - 0.549306).abs() < 1e-6);
        let zero = exact_mle(&bond(), &[0.0]).unwrap();
        assert!(zero[0].abs() < 1e-9);
    }

    #[test]
    fn boundary_target_has_no_mle() {
        assert!(matches!(exact_mle(&bond(), &[-1.0]), Err(Error::Nonexistence(_))));
        assert!(matches!(exact_mle(&bond(), &[1.0]), Err(Error::Nonexistence(_))));
    }

    #[test]
    fn face_supremum_matches_a_far_point() {
        // units 0 and 1 always agree in the data
        let m = Vbm::new(3);
        let table = EnumerationTable::new(&m).unwrap();
        let data: Vec<[i8; 3]> = vec![[1, 1, 1], [1, 1, -1], [-1, -1, -1], [1, 1, 1], [-1, -1, 1]];
        let mut g_bar = vec![0.0; 3];
        for x in &data {
            let mut g = vec![0.0; 3];
            m.write_stats(x, &mut g);
            g_bar.iter_mut().zip(&g).for_each(|(a, b)| *a += b / data.len() as f64);
        }
        let fit = table.maximize(&g_bar, None, MleOptions::default()).unwrap();
        assert!(fit.boundary);
        assert_eq!(fit.theta[m.pair_index(0, 1)], -50.0);
        let far = table.log_likelihood(&fit.theta, &g_bar).unwrap();
        assert!((far - fit.log_likelihood).abs() < 1e-12);
        assert!(fit.log_likelihood > table.log_likelihood(&[-5.0, 0.3, 0.3], &g_bar).unwrap());
        assert!(matches!(table.mle(&g_bar, None, MleOptions::default()), Err(Error::Nonexistence(_))));
    }

    #[test]
    fn ergm_fair_coin_arcs() {
        let m = MiniErgm::new(4);
        let e = exact_expectations(&m, &[0.0, 0.0]).unwrap();
        assert!((e[0] - 6.0).abs() < 1e-10);
        assert!((e[1] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn too_large_is_rejected() {
        let big = Ising2d::new(5, 5, false);
        assert!(matches!(partition_function(&big, &[0.0]), Err(Error::TooLarge { .. })));
        let mid = Ising2d::new(4, 4, false);
        assert!(matches!(theorem1_residual(&mid, &[0.1]), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let model = Ising2d::new(2, 3, true);
        let table = EnumerationTable::new(&model).unwrap();
        let g_bar = [-1.5, 0.5];
        let mut rng = RngStream::new(3, 0).rng();
        for _ in 0..10 {
            let th: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mom = table.moments(&th).unwrap();
            for i in 0..2 {
                let h = 1e-5;
                let mut up = th.clone();
                up[i] += h;
                let mut dn = th.clone();
                dn[i] -= h;
                let fd = (table.log_likelihood(&up, &g_bar).unwrap()
                    - table.log_likelihood(&dn, &g_bar).unwrap())
                    / (2.0 * h);
                let exact = g_bar[i] - mom.mean[i];
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-3), "{fd} vs {exact}");
            }
        }
    }

    #[test]
    fn covariance_matches_moment_derivative() {
        let model = Ising2d::new(2, 2, true);
        let table = EnumerationTable::new(&model).unwrap();
        let th = [0.3, -0.2];
        let mom = table.moments(&th).unwrap();
        let cov = table.covariance(&th, &mom).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut up = th;
            up[j] += h;
            let mut dn = th;
            dn[j] -= h;
            let mu = table.moments(&up).unwrap().mean;
            let md = table.moments(&dn).unwrap().mean;
            for i in 0..2 {
                let fd = (mu[i] - md[i]) / (2.0 * h);
                assert!((fd - cov[(i, j)]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mle_respects_pins_and_start() {
        let model = MiniErgm::new(3).pin(crate::models::MUTUAL, 0.4);
        let table = EnumerationTable::new(&model).unwrap();
        let th = table.mle(&[2.0, 0.7], None, MleOptions::default()).unwrap();
        assert_eq!(th[1], 0.4);
        let mom = table.moments(&th).unwrap();
        assert!((mom.mean[0] - 2.0).abs() < 1e-8);
        let th2 = table
            .mle(&[2.0, 0.7], Some(&[1.5, 0.0]), MleOptions::default())
            .unwrap();
        assert!((th[0] - th2[0]).abs() < 1e-6);
    }

    #[test]
    fn kernel_hand_example() {
        // two-spin bond: from an aligned state each flip raises g by 2
        let th = 0.7;
        let k = TransitionKernel::new(&bond(), &[th]).unwrap();
        assert!((k.prob(0b00, 0b01) - 0.5).abs() < 1e-15);
        assert!((k.prob(0b01, 0b00) - 0.5 * (-2.0 * th).exp()).abs() < 1e-15);
        assert!((k.prob(0b01, 0b01) - (1.0 - (-2.0 * th).exp())).abs() < 1e-15);
        assert_eq!(k.prob(0b00, 0b11), 0.0);
        assert!(k.expected_change_residual() < 1e-12);
        assert!(k.stationarity_residual() < 1e-12);
        assert!(k.detailed_balance_residual() < 1e-12);
        assert!(k.row_sum_error() < 1e-12);
    }

    #[test]
    fn sampling_counts() {
        let mut rng = RngStream::new(1, 0).rng();
        assert!(exact_sample(&mut rng, &bond(), &[0.0], 0).unwrap().is_empty());
        let draws = exact_sample(&mut rng, &bond(), &[-6.0], 2000).unwrap();
        // theta = -6 puts almost all mass on the two aligned states
        let aligned = draws.iter().filter(|s| s.get(0) == s.get(1)).count();
        assert!(aligned > 1990);
    }
}
