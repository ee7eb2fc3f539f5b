use std::path::PathBuf;
use std::time::Instant;

use rand::Rng;

use crate::convergence::{diagnose, ConvergenceReport};
use crate::error::{Error, Result};
use crate::estimators::{
    cd_estimate, tail_average, tail_std, Dataset, EeRunner, EeUpdate, EstimationTrace, EstimatorConfig,
};
use crate::io::{read_edge_list, KeyValues};
use crate::model::Model;
use crate::models::MiniErgm;
use crate::oracle::{EnumerationTable, MleOptions, MAX_ENUM_SITES};
use crate::sampler::{derive_seed, equilibrate, RngStream};
use crate::state::{BinaryState, Encoding, Layout, ParamVector};

use super::set;

#[derive(Debug, Clone, PartialEq)]
pub struct ErgmConfig {
    /// Observed digraph as an edge list; one is sampled at `theta_star` when absent.
    pub graph: Option<PathBuf>,
    pub nodes: usize,
    pub theta_star: [f64; 2],
    pub cd_a: f64,
    pub cd_steps: usize,
    pub ee: EstimatorConfig,
    pub tau: f64,
    pub seed: u64,
}

impl Default for ErgmConfig {
    fn default() -> Self {
        Self {
            graph: None,
            nodes: 4,
            theta_star: [-1.0, 0.5],
            cd_a: 0.01,
            cd_steps: 5000,
            ee: EstimatorConfig::new(0.001, 0.01, 1, 400_000),
            tau: 0.1,
            seed: 1,
        }
    }
}

impl ErgmConfig {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(p) = kv.get_str("graph") {
            self.graph = Some(PathBuf::from(p));
        }
        set(kv, "nodes", &mut self.nodes)?;
        set(kv, "theta_arc", &mut self.theta_star[0])?;
        set(kv, "theta_mutual", &mut self.theta_star[1])?;
        set(kv, "cd_a", &mut self.cd_a)?;
        set(kv, "cd_steps", &mut self.cd_steps)?;
        super::apply_estimator(kv, "ee", &mut self.ee)?;
        set(kv, "tau", &mut self.tau)?;
        set(kv, "seed", &mut self.seed)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct ErgmReport {
    pub graph: BinaryState,
    pub g_obs: [f64; 2],
    pub theta_cd: ParamVector,
    pub theta_hat: ParamVector,
    pub theta_std: ParamVector,
    /// Exact maximiser for graphs small enough to enumerate.
    pub oracle_mle: Option<ParamVector>,
    pub convergence: ConvergenceReport,
    pub trace: EstimationTrace,
}

impl ErgmReport {
    /// Per-parameter `(theta_hat - oracle) / theta_std`.
    pub fn z_scores(&self) -> Option<Vec<f64>> {
        self.oracle_mle.as_ref().map(|m| {
            self.theta_hat
                .iter()
                .zip(m.iter())
                .zip(self.theta_std.iter())
                .map(|((h, o), s)| (h - o) / s)
                .collect()
        })
    }
}

/// A digraph from the arc/mutual model at `theta` whose statistics admit a
/// finite maximiser. Small graphs are drawn exactly; larger ones by 1000
/// sweeps of Metropolis-Hastings from the empty graph.
pub fn sample_ergm_graph(seed: u64, nodes: usize, theta: &[f64; 2]) -> Result<BinaryState> {
    let model = MiniErgm::new(nodes);
    let layout = Layout::Digraph { nodes };
    if layout.len() <= MAX_ENUM_SITES {
        let table = EnumerationTable::new(&model)?;
        let mut rng = RngStream::new(derive_seed(seed, 40), 0).rng();
        for _ in 0..1000 {
            let x = table.sample(&mut rng, theta, 1)?.remove(0);
            if model.check_interior(&model.suff_stats(&x)?).is_ok() {
                return Ok(x);
            }
        }
        return Err(Error::Nonexistence("no interior graph in 1000 draws".into()));
    }
    let mut rng = RngStream::new(derive_seed(seed, 41), 0).rng();
    let mut x = BinaryState::filled(Encoding::Tie, layout, 0)?;
    for _ in 0..100 {
        x = equilibrate(&mut rng, &model, theta, &x, 10 * layout.len())?;
        if model.check_interior(&model.suff_stats(&x)?).is_ok() {
            return Ok(x);
        }
    }
    Err(Error::Nonexistence("sampled graphs stay on the boundary".into()))
}

/// CD from zero, then EE from the CD estimate, on one digraph.
pub fn run_ergm_demo(cfg: &ErgmConfig) -> Result<ErgmReport> {
    cfg.ee.validate()?;
    let graph = match &cfg.graph {
        Some(p) => read_edge_list(p)?,
        None => sample_ergm_graph(cfg.seed, cfg.nodes, &cfg.theta_star)?,
    };
    let Layout::Digraph { nodes } = graph.layout() else {
        unreachable!("edge lists and samples are digraphs")
    };
    if nodes > 200 {
        return Err(Error::invalid(format!("the demo is limited to 200 nodes, got {nodes}")));
    }
    let model = MiniErgm::new(nodes);
    let g = model.suff_stats(&graph)?;
    model.check_interior(&g)?;
    let data = Dataset::single(&model, graph.clone())?;
    let cd_cfg = EstimatorConfig {
        a: cfg.cd_a,
        t_max: cfg.cd_steps,
        t_burnin: 0,
        ..cfg.ee.clone()
    };
    let (theta_cd, _) = cd_estimate(derive_seed(cfg.seed, 42), &data, &cd_cfg)?;
    let mut runner = EeRunner::new(&data, &theta_cd, derive_seed(cfg.seed, 43))?;
    let mut trace = EstimationTrace::with_capacity(2, cfg.ee.t_max);
    runner.run(&cfg.ee, EeUpdate::Sign, cfg.ee.t_max, &mut trace)?;
    let theta_hat = tail_average(&trace, cfg.ee.t_burnin)?;
    let theta_std = tail_std(&trace, cfg.ee.t_burnin)?;
    let convergence = diagnose(&trace, cfg.ee.t_burnin, cfg.tau, cfg.ee.c)?;
    let oracle_mle = if graph.len() <= MAX_ENUM_SITES {
        Some(EnumerationTable::new(&model)?.mle(&g, None, MleOptions::default())?)
    } else {
        None
    };
    Ok(ErgmReport {
        graph,
        g_obs: [g[0], g[1]],
        theta_cd,
        theta_hat,
        theta_std,
        oracle_mle,
        convergence,
        trace,
    })
}

/// Median wall time in seconds of one EE update with `m` proposals on an
/// `nodes`-node digraph, over `repeats` timed runs of `updates` updates.
///
/// The observed graph is Bernoulli with arc density 0.05; EE starts at the
/// matching arc parameter.
pub fn ergm_update_timing(nodes: usize, m: usize, updates: usize, repeats: usize, seed: u64) -> Result<f64> {
    if updates == 0 || repeats == 0 {
        return Err(Error::invalid("timing needs at least one update and one repeat"));
    }
    let model = MiniErgm::new(nodes);
    let layout = Layout::Digraph { nodes };
    let mut rng = RngStream::new(derive_seed(seed, 44), 0).rng();
    let values = (0..layout.len()).map(|_| rng.random_bool(0.05) as i8).collect();
    let graph = BinaryState::new(Encoding::Tie, layout, values)?;
    let data = Dataset::single(&model, graph)?;
    let theta0 = ParamVector(vec![(0.05f64 / 0.95).ln(), 0.0]);
    let cfg = EstimatorConfig::new(0.001, 0.01, m, updates);
    let mut runner = EeRunner::new(&data, &theta0, derive_seed(seed, 45))?;
    // warm-up
    runner.run(&cfg, EeUpdate::Sign, updates.min(10_000), &mut EstimationTrace::new(2))?;
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let mut trace = EstimationTrace::with_capacity(2, updates);
        let start = Instant::now();
        runner.run(&cfg, EeUpdate::Sign, updates, &mut trace)?;
        times.push(start.elapsed().as_secs_f64() / updates as f64);
    }
    times.sort_by(f64::total_cmp);
    Ok(times[times.len() / 2])
}
