use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eestim::convergence::{diagnose, DEFAULT_TAU};
use eestim::estimators::{
    cd_estimate, ee_estimate, pcd_estimate, tail_std, Dataset, EstimatorConfig, LearningRate,
    Observation, StepSizeKind,
};
use eestim::experiments::{
    init_threads, run_crf_experiment, run_ergm_demo, run_ising_experiment, run_vbm_experiment, CrfConfig, ErgmConfig,
    FitReport, IsingConfig, VbmConfig,
};
use eestim::io::{
    format_edge_list, format_state, parse_edge_list, parse_reals, parse_state, read_trace_file, write_state,
    write_trace_file, KeyValues,
};
use eestim::models::{Crf, Ising1dPeriodic, Ising2d, MiniErgm, Vbm};
use eestim::oracle::{EnumerationTable, MleOptions, MAX_ENUM_SITES};
use eestim::sampler::{derive_seed, equilibrate, RngStream};
use eestim::{BinaryState, Error, Layout, Model, ParamVector};

const EXIT_INVALID: u8 = 2;
const EXIT_NONEXISTENCE: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;

#[derive(Parser)]
#[command(name = "eestim", version, about = "Monte Carlo maximum-likelihood estimation by equilibrium expectation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw states from a model at given parameters.
    Generate(GenerateArgs),
    /// Estimate parameters from observed states.
    Estimate(EstimateArgs),
    /// Exact maximum-likelihood estimate by enumeration (at most 20 sites).
    Exact(ExactArgs),
    /// Convergence diagnostics for a trace file.
    Diagnose(DiagnoseArgs),
    /// Run one of the bundled experiments.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelKind {
    /// Nearest-neighbour coupling on a grid.
    Ising,
    /// Grid coupling plus a field term.
    IsingField,
    /// Periodic chain with one coupling per bond.
    Chain,
    /// Fully visible Boltzmann machine.
    Vbm,
    /// Denoising CRF; needs `--features`.
    Crf,
    /// Arc and mutual statistics on a digraph.
    Ergm,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Ee,
    Cd,
    Pcd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentId {
    Ising,
    Vbm,
    Crf,
    Ergm,
}

#[derive(Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    model: ModelKind,
    /// CRF pixel features, whitespace-separated reals in row-major order; one
    /// file per input state.
    #[arg(long)]
    features: Vec<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// `ROWSxCOLS` for grids, a site or node count otherwise.
    #[arg(long)]
    size: String,
    /// Comma-separated parameters, one per statistic.
    #[arg(long, allow_hyphen_values = true)]
    theta: String,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Metropolis-Hastings sweeps per draw when the model is too large to enumerate.
    #[arg(long, default_value_t = 1000)]
    sweeps: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file; a directory when `--count` exceeds one. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Observed states; several make an ensemble with one chain each.
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Ee)]
    method: Method,
    #[arg(long, default_value_t = 0.001)]
    a: f64,
    #[arg(long, default_value_t = 0.01)]
    c: f64,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, default_value_t = 100_000)]
    steps: usize,
    /// Updates discarded before averaging; half of `--steps` when absent.
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// max-abs, abs-plus or max-sqrt.
    #[arg(long, default_value = "max-abs")]
    stepfn: String,
    /// CD learning rate for the initial estimate.
    #[arg(long, default_value_t = 0.01)]
    cd_a: f64,
    #[arg(long, default_value_t = 1000)]
    cd_steps: usize,
    #[arg(long, default_value_t = 50.0)]
    guard: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trace CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    /// Trace CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Half the trace when absent.
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TAU)]
    tau: f64,
    /// Floor used by the learning-rate condition.
    #[arg(long, default_value_t = 0.01)]
    c: f64,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    id: ExperimentId,
    /// `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    stepfn: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Input image (ising) or edge list (ergm).
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Directory for traces, curves and the summary.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Non-error outcomes that still map to a nonzero exit status.
enum Status {
    Ok,
    NoMaximiser,
    NotConverged,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|_| match cli.command {
        Command::Generate(a) => generate(a),
        Command::Estimate(a) => estimate(a),
        Command::Exact(a) => exact(a),
        Command::Diagnose(a) => diagnose_trace(a),
        Command::Experiment(a) => experiment(a),
    });
    match result {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::NoMaximiser) => ExitCode::from(EXIT_NONEXISTENCE),
        Ok(Status::NotConverged) => ExitCode::from(EXIT_NOT_CONVERGED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Divergence { .. } | Error::Nonexistence(_) => EXIT_NONEXISTENCE,
                _ => EXIT_INVALID,
            })
        }
    }
}

fn build_model(kind: ModelKind, layout: Layout, features: Option<&Path>) -> eestim::Result<Box<dyn Model>> {
    let bad = || Error::InvalidInput(format!("layout `{layout}` does not fit this model"));
    Ok(match (kind, layout) {
        (ModelKind::Ising, Layout::Grid { rows, cols }) => Box::new(Ising2d::new(rows, cols, false)),
        (ModelKind::IsingField, Layout::Grid { rows, cols }) => Box::new(Ising2d::new(rows, cols, true)),
        (ModelKind::Chain, Layout::Chain { len }) if len >= 3 => Box::new(Ising1dPeriodic::new(len)),
        (ModelKind::Vbm, Layout::Chain { len }) if len >= 2 => Box::new(Vbm::new(len)),
        (ModelKind::Ergm, Layout::Digraph { nodes }) => Box::new(MiniErgm::new(nodes)),
        (ModelKind::Crf, Layout::Grid { rows, cols }) => {
            let path = features.ok_or_else(|| Error::InvalidInput("the CRF needs --features".into()))?;
            Box::new(Crf::new(parse_reals(&fs::read_to_string(path)?)?, rows, cols)?)
        }
        _ => return Err(bad()),
    })
}

fn parse_size(kind: ModelKind, size: &str) -> eestim::Result<Layout> {
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::InvalidInput(format!("bad size `{size}`")))
    };
    Ok(match kind {
        ModelKind::Ising | ModelKind::IsingField | ModelKind::Crf => {
            let (r, c) = size
                .split_once('x')
                .ok_or_else(|| Error::InvalidInput(format!("grid size must be ROWSxCOLS, got `{size}`")))?;
            Layout::Grid { rows: num(r)?, cols: num(c)? }
        }
        ModelKind::Chain | ModelKind::Vbm => Layout::Chain { len: num(size)? },
        ModelKind::Ergm => Layout::Digraph { nodes: num(size)? },
    })
}

fn parse_theta(text: &str) -> eestim::Result<Vec<f64>> {
    text.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidInput(format!("bad parameter `{t}`")))
        })
        .collect()
}

/// A state file, or an edge list when the first line is a bare node count.
fn read_observation(path: &Path) -> eestim::Result<BinaryState> {
    let text = fs::read_to_string(path)?;
    let first = text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('#'));
    if first.is_some_and(|l| l.parse::<usize>().is_ok()) {
        parse_edge_list(&text)
    } else {
        parse_state(&text)
    }
}

fn load(model: &ModelArgs, inputs: &[PathBuf]) -> eestim::Result<(Vec<Box<dyn Model>>, Vec<BinaryState>)> {
    if model.model == ModelKind::Crf && model.features.len() != inputs.len() {
        return Err(Error::InvalidInput(format!(
            "{} inputs need as many --features files, got {}",
            inputs.len(),
            model.features.len()
        )));
    }
    let states = inputs.iter().map(|p| read_observation(p)).collect::<eestim::Result<Vec<_>>>()?;
    // one model per observation only when the observations carry features
    let count = if model.model == ModelKind::Crf { states.len() } else { 1 };
    let models = (0..count)
        .map(|k| build_model(model.model, states[k].layout(), model.features.get(k).map(PathBuf::as_path)))
        .collect::<eestim::Result<Vec<_>>>()?;
    Ok((models, states))
}

fn dataset<'a>(models: &'a [Box<dyn Model>], states: &[BinaryState]) -> eestim::Result<Dataset<'a, dyn Model>> {
    Dataset::new(
        states
            .iter()
            .enumerate()
            .map(|(k, x)| Observation {
                model: models[k.min(models.len() - 1)].as_ref(),
                target: x.clone(),
                start: x.clone(),
            })
            .collect(),
    )
}

fn print_params(out: &mut String, key: &str, names: &[String], values: &[f64]) {
    for (n, v) in names.iter().zip(values) {
        let _ = writeln!(out, "{key}.{n} = {v}");
    }
}

fn generate(args: GenerateArgs) -> eestim::Result<Status> {
    if args.count == 0 {
        return Err(Error::InvalidInput("--count must be at least 1".into()));
    }
    let layout = parse_size(args.model.model, &args.size)?;
    let model = build_model(args.model.model, layout, args.model.features.first().map(PathBuf::as_path))?;
    let theta = parse_theta(&args.theta)?;
    if theta.len() != model.num_stats() {
        return Err(Error::InvalidInput(format!(
            "--theta has {} values, the model has {} statistics ({})",
            theta.len(),
            model.num_stats(),
            model.stat_names().join(", ")
        )));
    }
    let mut rng = RngStream::new(derive_seed(args.seed, 50), 0).rng();
    let states = if layout.len() <= MAX_ENUM_SITES {
        EnumerationTable::new(model.as_ref())?.sample(&mut rng, &theta, args.count)?
    } else {
        let steps = args.sweeps.max(1) * layout.len();
        let mut x = BinaryState::random(&mut rng, model.encoding(), layout);
        let mut out = Vec::with_capacity(args.count);
        for _ in 0..args.count {
            x = equilibrate(&mut rng, model.as_ref(), &theta, &x, steps)?;
            out.push(x.clone());
        }
        out
    };
    match (&args.out, args.count) {
        (None, _) => states.iter().for_each(|x| print!("{}", format_state(x))),
        (Some(path), 1) => write_state(path, &states[0])?,
        (Some(dir), _) => {
            fs::create_dir_all(dir)?;
            for (k, x) in states.iter().enumerate() {
                write_state(dir.join(format!("state_{k:04}.txt")), x)?;
            }
        }
    }
    Ok(Status::Ok)
}

fn estimate(args: EstimateArgs) -> eestim::Result<Status> {
    let (models, states) = load(&args.model, &args.inputs)?;
    let data = dataset(&models, &states)?;
    let step_fn = StepSizeKind::parse(&args.stepfn)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown step function `{}`", args.stepfn)))?;
    let cfg = EstimatorConfig {
        a: args.a,
        c: args.c,
        m: args.m,
        t_max: args.steps,
        t_burnin: args.burnin.unwrap_or(args.steps / 2),
        theta_guard: args.guard,
        step_fn,
    };
    cfg.validate()?;
    let names = models[0].stat_names();
    let mut out = String::new();
    let (theta, trace) = match args.method {
        Method::Cd => cd_estimate(derive_seed(args.seed, 60), &data, &cfg)?,
        Method::Ee => {
            let cd_cfg = EstimatorConfig {
                a: args.cd_a,
                t_max: args.cd_steps,
                t_burnin: 0,
                ..cfg.clone()
            };
            let (theta_cd, _) = cd_estimate(derive_seed(args.seed, 60), &data, &cd_cfg)?;
            print_params(&mut out, "theta_cd", &names, &theta_cd);
            ee_estimate(derive_seed(args.seed, 61), &data, &theta_cd, &cfg, step_fn)?
        }
        Method::Pcd => pcd_estimate(
            derive_seed(args.seed, 62),
            &data,
            &ParamVector::zeros(data.dim()),
            LearningRate::Constant(args.a),
            cfg.t_max,
            cfg.t_burnin,
            cfg.theta_guard,
        )?,
    };
    if let Some(path) = &args.out {
        write_trace_file(path, &trace)?;
    }
    print_params(&mut out, "theta", &names, &theta);
    let mut status = Status::Ok;
    if args.method != Method::Cd {
        print_params(&mut out, "theta_std", &names, &tail_std(&trace, cfg.t_burnin)?);
        let report = diagnose(&trace, cfg.t_burnin, args.tau, cfg.c)?;
        out.push_str(&report.to_string());
        if !report.pass() {
            status = Status::NotConverged;
        }
    }
    print!("{out}");
    Ok(status)
}

fn exact(args: ExactArgs) -> eestim::Result<Status> {
    let (models, states) = load(&args.model, &args.inputs)?;
    if models.len() > 1 {
        return Err(Error::InvalidInput("exact fits take a single feature set".into()));
    }
    let data = dataset(&models, &states)?;
    let table = EnumerationTable::new(models[0].as_ref())?;
    let g_bar = data.target_mean();
    let fit = table.maximize(&g_bar, None, MleOptions::default())?;
    let mut out = String::new();
    let names = models[0].stat_names();
    print_params(&mut out, "g_bar", &names, &g_bar);
    print_params(&mut out, "theta", &names, &fit.theta);
    let _ = writeln!(out, "log_likelihood = {}", fit.log_likelihood);
    let _ = writeln!(out, "residual = {}", fit.residual);
    let _ = writeln!(out, "iterations = {}", fit.iterations);
    let _ = writeln!(out, "boundary = {}", fit.boundary);
    print!("{out}");
    if fit.boundary {
        eprintln!("no finite maximiser: the reported likelihood is the supremum");
        return Ok(Status::NoMaximiser);
    }
    Ok(Status::Ok)
}

fn diagnose_trace(args: DiagnoseArgs) -> eestim::Result<Status> {
    let trace = read_trace_file(&args.input)?;
    let burnin = args.burnin.unwrap_or(trace.len() / 2);
    let report = diagnose(&trace, burnin, args.tau, args.c)?;
    print!("{report}");
    Ok(if report.pass() { Status::Ok } else { Status::NotConverged })
}

/// Flags shared by every experiment, as configuration keys.
fn overrides(args: &ExperimentArgs) -> String {
    let mut kv = String::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            let _ = writeln!(kv, "{k} = {v}");
        }
    };
    put("ee_a", args.a.map(|v| v.to_string()));
    put("ee_c", args.c.map(|v| v.to_string()));
    put("ee_m", args.m.map(|v| v.to_string()));
    put("ee_steps", args.steps.map(|v| v.to_string()));
    put("ee_burnin", args.burnin.map(|v| v.to_string()));
    put("tau", args.tau.map(|v| v.to_string()));
    put("ee_stepfn", args.stepfn.clone());
    put("seed", args.seed.map(|v| v.to_string()));
    kv
}

fn experiment(args: ExperimentArgs) -> eestim::Result<Status> {
    let file = match &args.config {
        Some(p) => KeyValues::read(p)?,
        None => KeyValues::default(),
    };
    let flags = KeyValues::parse(&overrides(&args))?;
    let unsupported: &[&str] = match args.id {
        ExperimentId::Ising | ExperimentId::Ergm => &[],
        ExperimentId::Vbm => &["tau", "ee_stepfn"],
        ExperimentId::Crf => &["ee_a", "ee_steps", "tau", "ee_stepfn"],
    };
    if let Some(k) = flags.keys().find(|k| unsupported.contains(k)) {
        return Err(Error::InvalidConfig(format!("`{k}` does not apply to this experiment")));
    }
    if args.input.is_some() && matches!(args.id, ExperimentId::Vbm | ExperimentId::Crf) {
        return Err(Error::InvalidConfig("--in applies to the ising and ergm experiments".into()));
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir)?;
    }
    let out = args.out.as_deref();
    match args.id {
        ExperimentId::Ising => {
            let mut cfg = IsingConfig::default();
            cfg.apply(&file)?;
            cfg.apply(&flags)?;
            if let Some(p) = &args.input {
                cfg.image = Some(p.clone());
            }
            run_ising(&cfg, out)
        }
        ExperimentId::Vbm => {
            let mut cfg = VbmConfig::default();
            cfg.apply(&file)?;
            cfg.apply(&flags)?;
            run_vbm(&cfg, out)
        }
        ExperimentId::Crf => {
            let mut cfg = CrfConfig::default();
            cfg.apply(&file)?;
            cfg.apply(&flags)?;
            run_crf(&cfg, out)
        }
        ExperimentId::Ergm => {
            let mut cfg = ErgmConfig::default();
            cfg.apply(&file)?;
            cfg.apply(&flags)?;
            if let Some(p) = &args.input {
                cfg.graph = Some(p.clone());
            }
            run_ergm(&cfg, out)
        }
    }
}

fn finish(summary: String, out: Option<&Path>) -> eestim::Result<()> {
    print!("{summary}");
    if let Some(dir) = out {
        fs::write(dir.join("summary.txt"), summary)?;
    }
    Ok(())
}

fn run_ising(cfg: &IsingConfig, out: Option<&Path>) -> eestim::Result<Status> {
    let rep = run_ising_experiment(cfg)?;
    let mut s = String::new();
    let _ = writeln!(s, "source = {:?}", rep.source);
    let _ = writeln!(s, "g_obs = {}", rep.g_obs);
    let _ = writeln!(s, "theta_cd = {}", rep.theta_cd);
    let _ = writeln!(s, "theta_hat = {}", rep.theta_hat);
    let _ = writeln!(s, "theta_std = {}", rep.theta_std);
    if let Some(m) = rep.oracle_mle {
        let _ = writeln!(s, "theta_exact = {m}");
    }
    s.push_str(&rep.convergence.to_string());
    if let Some(dir) = out {
        write_state(dir.join("image.txt"), &rep.image)?;
        write_trace_file(dir.join("cd_trace.csv"), &rep.cd_trace)?;
        write_trace_file(dir.join("trace.csv"), &rep.trace)?;
    }
    finish(s, out)?;
    Ok(if rep.convergence.pass() { Status::Ok } else { Status::NotConverged })
}

fn write_fit(dir: &Path, fit: &FitReport, curves: &mut String) -> eestim::Result<()> {
    write_trace_file(dir.join(format!("{}_cd_trace.csv", fit.label)), &fit.cd_trace)?;
    write_trace_file(dir.join(format!("{}_ee_trace.csv", fit.label)), &fit.ee_trace)?;
    for (name, curve) in [("cd", &fit.cd_curve), ("ee", &fit.ee_curve)] {
        for (t, l) in curve {
            let _ = writeln!(curves, "{},{name},{t},{l}", fit.label);
        }
    }
    Ok(())
}

fn run_vbm(cfg: &VbmConfig, out: Option<&Path>) -> eestim::Result<Status> {
    let rep = run_vbm_experiment(cfg)?;
    let mut s = String::new();
    for fit in [&rep.vbm, &rep.ising1d] {
        let l = &fit.label;
        let _ = writeln!(s, "{l}.handoff = {}", fit.handoff);
        let _ = writeln!(s, "{l}.l_cd = {}", fit.l_cd);
        let _ = writeln!(s, "{l}.l_ee = {}", fit.l_ee);
        let _ = writeln!(s, "{l}.l_max = {}", fit.l_mle);
        let _ = writeln!(s, "{l}.max_is_supremum = {}", fit.mle_boundary);
        let _ = writeln!(s, "{l}.gap_cd = {}", fit.relative_gap(fit.l_cd));
        let _ = writeln!(s, "{l}.gap_ee = {}", fit.relative_gap(fit.l_ee));
    }
    if let Some(dir) = out {
        let mut curves = String::from("fit,estimator,t,log_likelihood\n");
        write_fit(dir, &rep.vbm, &mut curves)?;
        write_fit(dir, &rep.ising1d, &mut curves)?;
        fs::write(dir.join("likelihood.csv"), curves)?;
        let theta: Vec<String> = rep.dataset.theta_star.iter().map(f64::to_string).collect();
        fs::write(dir.join("theta_star.txt"), theta.join("\n") + "\n")?;
    }
    finish(s, out)?;
    Ok(Status::Ok)
}

fn run_crf(cfg: &CrfConfig, out: Option<&Path>) -> eestim::Result<Status> {
    let rep = run_crf_experiment(cfg)?;
    let mut s = String::new();
    let names = ["h1", "h2", "J1", "J2"];
    let _ = writeln!(s, "initial_error = {}", rep.initial_error);
    let _ = writeln!(s, "final_cd_error = {}", rep.final_cd_error);
    let _ = writeln!(s, "final_ee_error = {}", rep.final_ee_error);
    for (i, n) in names.iter().enumerate().take(rep.theta_cd.len()) {
        let _ = writeln!(s, "theta_cd.{n} = {}", rep.theta_cd[i]);
        let _ = writeln!(s, "theta_ee.{n} = {}", rep.theta_ee[i]);
    }
    if let Some(dir) = out {
        write_trace_file(dir.join("cd_trace.csv"), &rep.cd_trace)?;
        write_trace_file(dir.join("ee_trace.csv"), &rep.ee_trace)?;
        let mut curve = String::from("estimator,t,error\n");
        for (name, pts) in [("cd", &rep.cd_error), ("ee", &rep.ee_error)] {
            for (t, e) in pts {
                let _ = writeln!(curve, "{name},{t},{e}");
            }
        }
        fs::write(dir.join("error.csv"), curve)?;
        write_state(dir.join("x_orig.txt"), &rep.dataset.x_orig)?;
    }
    finish(s, out)?;
    Ok(Status::Ok)
}

fn run_ergm(cfg: &ErgmConfig, out: Option<&Path>) -> eestim::Result<Status> {
    let rep = run_ergm_demo(cfg)?;
    let mut s = String::new();
    let names = ["arc", "mutual"];
    for (i, n) in names.iter().enumerate() {
        let _ = writeln!(s, "g_obs.{n} = {}", rep.g_obs[i]);
        let _ = writeln!(s, "theta_cd.{n} = {}", rep.theta_cd[i]);
        let _ = writeln!(s, "theta_hat.{n} = {}", rep.theta_hat[i]);
        let _ = writeln!(s, "theta_std.{n} = {}", rep.theta_std[i]);
        if let Some(m) = &rep.oracle_mle {
            let _ = writeln!(s, "theta_exact.{n} = {}", m[i]);
        }
    }
    s.push_str(&rep.convergence.to_string());
    if let Some(dir) = out {
        fs::write(dir.join("graph.txt"), format_edge_list(&rep.graph)?)?;
        write_trace_file(dir.join("trace.csv"), &rep.trace)?;
    }
    finish(s, out)?;
    Ok(if rep.convergence.pass() { Status::Ok } else { Status::NotConverged })
}
