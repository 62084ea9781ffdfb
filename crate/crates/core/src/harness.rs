//! Batch experiments: configuration, orchestration over strategies and
//! parameter points, CSV and manifest emission.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::apps::{self, evaluate_points, evaluate_rule_metrics, RuleMetrics, SampleRecord, Strategy};
use crate::conic::ConicProgram;
use crate::dp::{calibrate_gaussian, calibrate_laplace, monte_carlo_noise, NoiseSpec};
use crate::error::{Error, Result};
use crate::ldr::{privatize, ChanceSpec, EtaBar, Privatized, QueryConstraint, SafetyKind};
use crate::risk::{augment_with_cvar, cvar_empirical, CVaRSpec, CvarObjective, LinearLoss};
use crate::solver::{solve, Solution, SolverSettings, Status};
use crate::util::inf_f64;

/// Caps the worker pool when set to a positive integer.
pub const THREADS_ENV: &str = "DP_CONIC_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum App {
    SimpleLp,
    Opf,
    Svm,
    Regression,
    Ellipsoid,
}

impl App {
    pub fn name(self) -> &'static str {
        match self {
            App::SimpleLp => "simple-lp",
            App::Opf => "opf",
            App::Svm => "svm",
            App::Regression => "regression",
            App::Ellipsoid => "ellipsoid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacyConfig {
    pub epsilon: f64,
    /// Zero selects Laplace noise, anything in `(0, 1)` Gaussian.
    #[serde(default)]
    pub delta: f64,
    /// Adjacency radii for apps with a closed-form sensitivity; the sampled
    /// apps use an unbounded universe.
    #[serde(default = "default_alpha")]
    pub alpha: Vec<f64>,
    /// Confidence of the sampled sensitivity estimate.
    #[serde(default = "default_conf")]
    pub gamma: f64,
    #[serde(default = "default_conf")]
    pub beta: f64,
}

fn default_alpha() -> Vec<f64> {
    vec![1.0]
}

fn default_conf() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChanceMethod {
    Vertex,
    Individual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EtaPolicy {
    /// `η` split evenly over the rows.
    Uniform,
    /// `η` on every row.
    Each,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChanceConfig {
    pub method: ChanceMethod,
    pub eta: f64,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_policy")]
    pub policy: EtaPolicy,
    /// Tightening for the Individual method; defaults to the distribution-free bound.
    #[serde(default)]
    pub safety: Option<SafetyKind>,
}

fn default_beta() -> f64 {
    0.01
}

fn default_policy() -> EtaPolicy {
    EtaPolicy::Uniform
}

impl ChanceConfig {
    pub fn spec(&self) -> ChanceSpec {
        match self.method {
            ChanceMethod::Vertex => ChanceSpec::vertex(self.eta, self.beta),
            ChanceMethod::Individual => ChanceSpec::Individual {
                eta_bar: match self.policy {
                    EtaPolicy::Uniform => EtaBar::Uniform(self.eta),
                    EtaPolicy::Each => EtaBar::Each(self.eta),
                },
                safety: self.safety,
            },
        }
    }
}

/// CVaR-optimised program perturbation at every `q` (CVaR over the worst
/// `1 − q` of `samples` scenarios).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvarConfig {
    pub q: Vec<f64>,
    #[serde(default = "default_cvar_samples")]
    pub samples: usize,
    /// Generators whose aggregate output is released; half of them at random
    /// when absent.
    #[serde(default)]
    pub subset: Option<Vec<usize>>,
}

fn default_cvar_samples() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub app: App,
    #[serde(default = "all_strategies")]
    pub strategies: Vec<Strategy>,
    pub privacy: PrivacyConfig,
    pub chance: ChanceConfig,
    #[serde(default)]
    pub cvar: Option<CvarConfig>,
    /// Monte Carlo draws per parameter point.
    pub mc_samples: usize,
    pub seed: u64,
    /// Data file, or a bundled name (`net3`, `net5`, `wind`).
    #[serde(default)]
    pub dataset: Option<String>,
    /// Directory receiving `results.csv` and `manifest.json`.
    pub output: PathBuf,
}

fn all_strategies() -> Vec<Strategy> {
    vec![Strategy::Input, Strategy::Output, Strategy::Program]
}

impl ExperimentConfig {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.privacy;
        if !(p.epsilon > 0.0 && p.epsilon.is_finite()) {
            return Err(Error::arg(format!("ε must be positive, got {}", p.epsilon)));
        }
        if !(p.delta >= 0.0 && p.delta < 1.0) {
            return Err(Error::arg(format!("δ must lie in [0, 1), got {}", p.delta)));
        }
        if p.alpha.is_empty() || p.alpha.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::arg("α grid must be nonempty and positive"));
        }
        if !(self.chance.eta > 0.0 && self.chance.eta < 1.0) {
            return Err(Error::arg(format!("η must lie in (0, 1), got {}", self.chance.eta)));
        }
        if self.strategies.is_empty() {
            return Err(Error::arg("no strategies selected"));
        }
        if self.mc_samples == 0 {
            return Err(Error::arg("mc_samples must be positive"));
        }
        if let Some(c) = &self.cvar {
            if c.q.iter().any(|q| !(*q > 0.0 && *q < 1.0)) || c.samples == 0 {
                return Err(Error::arg("CVaR levels must lie in (0, 1) with a positive sample count"));
            }
        }
        if let Some(d) = &self.dataset {
            if !is_bundled(self.app, d) && !Path::new(d).exists() {
                return Err(Error::arg(format!("dataset {d} does not exist")));
            }
        }
        if matches!(self.app, App::Regression | App::Ellipsoid) && !(p.delta > 0.0) {
            return Err(Error::arg("this app uses the Gaussian mechanism; set δ > 0"));
        }
        Ok(())
    }
}

fn is_bundled(app: App, name: &str) -> bool {
    matches!((app, name), (App::Opf, "net3" | "net5") | (App::Regression, "wind" | "cubic") | (App::Svm, "synthetic"))
}

/// One CSV line. Failed points keep their parameters and leave the metric
/// columns empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub strategy: Strategy,
    #[serde(with = "inf_f64")]
    pub alpha: f64,
    pub eps: f64,
    pub loss_mean: Option<f64>,
    pub loss_cvar: Option<f64>,
    pub infeasibility: Option<f64>,
    pub status: String,
    pub app: App,
    pub delta: f64,
    pub eta: f64,
    pub q: Option<f64>,
    pub sensitivity: Option<f64>,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointManifest {
    pub strategy: Strategy,
    #[serde(with = "inf_f64")]
    pub alpha: f64,
    pub q: Option<f64>,
    pub seed: u64,
    pub mc_samples: usize,
    pub sensitivity_samples: Option<usize>,
    pub vertex_samples: Option<usize>,
    /// Failure message of a point whose status is not `ok`.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Manifest {
    pub version: &'static str,
    pub config: ExperimentConfig,
    pub csv: String,
    pub points: Vec<PointManifest>,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub csv: PathBuf,
    pub manifest: PathBuf,
}

struct Point {
    strategy: Strategy,
    alpha: f64,
    q: Option<f64>,
    seed: u64,
}

#[derive(Default)]
struct Outcome {
    loss_mean: Option<f64>,
    loss_cvar: Option<f64>,
    infeasibility: Option<f64>,
    status: String,
    sensitivity: Option<f64>,
    sensitivity_samples: Option<usize>,
    vertex_samples: Option<usize>,
    error: Option<String>,
}

impl Outcome {
    fn failed(status: impl Into<String>) -> Self {
        Self { status: status.into(), ..Self::default() }
    }

    fn from_error(e: &Error) -> Self {
        Self { error: Some(e.to_string()), ..Self::failed(status_of(e)) }
    }

    fn from_metrics(m: &RuleMetrics) -> Self {
        Self {
            loss_mean: Some(m.mean_loss),
            loss_cvar: Some(m.cvar05),
            infeasibility: Some(m.infeasibility_rate),
            status: "ok".into(),
            ..Self::default()
        }
    }
}

/// Runs every `(strategy, α, q)` point, then writes `results.csv` and
/// `manifest.json` under `config.output`. Output is identical for equal
/// configs regardless of the worker count.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let points = expand(config);
    let run = || -> Vec<Outcome> { points.par_iter().map(|p| run_point(config, p)).collect() };
    let outcomes = match worker_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::arg(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let rows: Vec<ReportRow> = points
        .iter()
        .zip(&outcomes)
        .map(|(p, o)| ReportRow {
            strategy: p.strategy,
            alpha: p.alpha,
            eps: config.privacy.epsilon,
            loss_mean: o.loss_mean,
            loss_cvar: o.loss_cvar,
            infeasibility: o.infeasibility,
            status: o.status.clone(),
            app: config.app,
            delta: config.privacy.delta,
            eta: config.chance.eta,
            q: p.q,
            sensitivity: o.sensitivity,
            samples: config.mc_samples,
            seed: p.seed,
        })
        .collect();

    std::fs::create_dir_all(&config.output)?;
    let csv_path = config.output.join("results.csv");
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&csv_path)?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: config.clone(),
        csv: "results.csv".into(),
        points: points
            .iter()
            .zip(&outcomes)
            .map(|(p, o)| PointManifest {
                strategy: p.strategy,
                alpha: p.alpha,
                q: p.q,
                seed: p.seed,
                mc_samples: config.mc_samples,
                sensitivity_samples: o.sensitivity_samples,
                vertex_samples: o.vertex_samples,
                error: o.error.clone(),
            })
            .collect(),
    };
    let manifest_path = config.output.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(ExperimentReport { rows, csv: csv_path, manifest: manifest_path })
}

fn worker_cap() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::arg(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        _ => Ok(None),
    }
}

fn closed_form(app: App) -> bool {
    matches!(app, App::SimpleLp | App::Opf)
}

/// Points share a seed per α so strategies are compared on matched draws.
fn expand(config: &ExperimentConfig) -> Vec<Point> {
    let alphas: Vec<f64> = if closed_form(config.app) { config.privacy.alpha.clone() } else { vec![f64::INFINITY] };
    let mut out = Vec::new();
    for &strategy in &config.strategies {
        for (ai, &alpha) in alphas.iter().enumerate() {
            let seed = config.seed.wrapping_add(ai as u64);
            let qs: Vec<Option<f64>> = match (&config.cvar, strategy) {
                (Some(c), Strategy::Program) if closed_form(config.app) => c.q.iter().map(|&q| Some(q)).collect(),
                _ => vec![None],
            };
            for q in qs {
                out.push(Point { strategy, alpha, q, seed });
            }
        }
    }
    out
}

fn run_point(config: &ExperimentConfig, p: &Point) -> Outcome {
    let r = match config.app {
        App::SimpleLp => simple_lp_point(config, p),
        App::Opf => opf_point(config, p),
        App::Svm => svm_point(config, p),
        App::Regression => regression_point(config, p),
        App::Ellipsoid => ellipsoid_point(config, p),
    };
    r.unwrap_or_else(|e| Outcome::from_error(&e))
}

fn status_of(e: &Error) -> String {
    match e {
        Error::Infeasible(Status::PrimalInfeasible) => "infeasible".into(),
        Error::Infeasible(Status::DualInfeasible) => "unbounded".into(),
        Error::Infeasible(Status::MaxIter) | Error::NumericalBreakdown(_) | Error::SolveFailure { .. } => {
            "solver_failure".into()
        }
        Error::ConflictingConstraints(_) => "conflicting_constraints".into(),
        _ => "error".into(),
    }
}

fn noise_for(config: &ExperimentConfig, sensitivity: f64, dim: usize) -> Result<NoiseSpec> {
    let pr = &config.privacy;
    if pr.delta > 0.0 {
        calibrate_gaussian(sensitivity, pr.epsilon, pr.delta, dim)
    } else {
        calibrate_laplace(sensitivity, pr.epsilon, dim)
    }
}

/// Program perturbation with an optional CVaR objective over the cost.
fn solve_program(
    mut pv: Privatized,
    noise: &NoiseSpec,
    cost: &DVector<f64>,
    q: Option<f64>,
    cvar: Option<&CvarConfig>,
    seed: u64,
    settings: &SolverSettings,
) -> Result<crate::ldr::DecisionRule> {
    if let (Some(q), Some(c)) = (q, cvar) {
        let spec = CVaRSpec { q, samples: c.samples, loss: LinearLoss::new(cost.iter().copied().collect()) };
        let draws = scenario_draws(noise, seed, c.samples);
        pv.program = augment_with_cvar(&pv.program, &pv.layout, &spec, &draws, CvarObjective::Replace)?.program;
    }
    Ok(pv.solve(settings)?.0)
}

/// Optimisation scenarios come from a stream the evaluation never touches.
fn scenario_draws(noise: &NoiseSpec, seed: u64, count: usize) -> nalgebra::DMatrix<f64> {
    let mut r = crate::dp::rng::stream(seed, crate::dp::rng::SCENARIO_STREAM);
    noise.draw_many(&mut r, count)
}

fn load_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

fn simple_lp_point(config: &ExperimentConfig, p: &Point) -> Result<Outcome> {
    let lp: apps::SimpleLp = match &config.dataset {
        Some(d) => load_json(d)?,
        None => apps::SimpleLp::default(),
    };
    let settings = SolverSettings::default();
    let program = lp.program()?;
    let base = solve(&program, &settings)?.into_optimal()?;
    // x* = ℓ moves one-for-one with the private bound
    let noise = noise_for(config, p.alpha, 1)?;
    let n = config.mc_samples;
    let mut out = match p.strategy {
        Strategy::Output => {
            let z = monte_carlo_noise(&noise, p.seed, n)?;
            let xs: Vec<DVector<f64>> = (0..n).map(|s| &base.x + z.row(s).transpose()).collect();
            Outcome::from_metrics(&evaluate_points(&program, &base, &xs)?)
        }
        Strategy::Input => {
            let z = monte_carlo_noise(&noise, p.seed, n)?;
            let records = (0..n)
                .into_par_iter()
                .map(|s| {
                    let noisy = apps::SimpleLp { lower: lp.lower + z[(s, 0)], ..lp };
                    resolve_record(&program, &base, &noisy.program()?, &settings)
                })
                .collect::<Result<Vec<_>>>()?;
            Outcome::from_metrics(&apps::metrics::summarize(base.objective, records))
        }
        Strategy::Program => {
            let pv = privatize(&program, &noise, &QueryConstraint::identity(1), &config.chance.spec(), p.seed)?;
            let vs = pv.sample_size;
            let rule = solve_program(pv, &noise, &program.c, p.q, config.cvar.as_ref(), p.seed, &settings)?;
            let mut o = Outcome::from_metrics(&evaluate_rule_metrics(&rule, &program, &base, &noise, n, p.seed)?);
            o.vertex_samples = vs;
            o
        }
    };
    out.sensitivity = Some(p.alpha);
    Ok(out)
}

/// Solves the perturbed program and scores its optimum against the true one.
fn resolve_record(
    program: &ConicProgram,
    base: &Solution,
    noisy: &ConicProgram,
    settings: &SolverSettings,
) -> Result<SampleRecord> {
    let sol = solve(noisy, settings)?;
    if !sol.is_optimal() {
        return Ok(SampleRecord { loss: 0.0, feasible: false });
    }
    let m = evaluate_points(program, base, std::slice::from_ref(&sol.x))?;
    Ok(m.samples[0])
}

fn opf_point(config: &ExperimentConfig, p: &Point) -> Result<Outcome> {
    let net = match config.dataset.as_deref() {
        None => apps::PowerNetwork::bundled("net5")?,
        Some(name @ ("net3" | "net5")) => apps::PowerNetwork::bundled(name)?,
        Some(path) => apps::PowerNetwork::read(path)?,
    };
    let settings = SolverSettings::default();
    let chance = config.chance.spec();
    let eps = config.privacy.epsilon;
    let n = config.mc_samples;
    let mut out = match (p.strategy, p.q) {
        (Strategy::Program, Some(q)) => {
            // a cost-weighted query would fix the cost noise and leave nothing to optimise
            let program = apps::build_opf(&net)?;
            let base = solve(&program, &settings)?.into_optimal()?;
            let subset = match config.cvar.as_ref().and_then(|c| c.subset.clone()) {
                Some(s) => s,
                None => cvar_subset(net.nodes, config.seed),
            };
            let noise = calibrate_laplace(p.alpha, eps, 1)?;
            let pv = privatize(&program, &noise, &QueryConstraint::Sum { support: subset }, &chance, p.seed)?;
            let vs = pv.sample_size;
            let rule = solve_program(pv, &noise, &program.c, Some(q), config.cvar.as_ref(), p.seed, &settings)?;
            let mut o = Outcome::from_metrics(&evaluate_rule_metrics(&rule, &program, &base, &noise, n, p.seed)?);
            o.vertex_samples = vs;
            o.sensitivity = Some(p.alpha);
            return Ok(o);
        }
        (s, _) => {
            Outcome::from_metrics(&apps::evaluate_opf_strategy(&net, s, eps, p.alpha, &chance, n, p.seed, &settings)?)
        }
    };
    out.sensitivity = Some(apps::opf_sensitivity_bound(&net.c, p.alpha));
    Ok(out)
}

/// Half of the generators, drawn once per experiment seed; the aggregate
/// output of the subset is the released query of the CVaR sweep.
pub fn cvar_subset(nodes: usize, seed: u64) -> Vec<usize> {
    let mut r = crate::dp::rng::stream(seed, crate::dp::rng::SCENARIO_STREAM - 1);
    let mut idx: Vec<usize> = (0..nodes).collect();
    idx.shuffle(&mut r);
    let mut s: Vec<usize> = idx.into_iter().take(nodes.div_ceil(2)).collect();
    s.sort_unstable();
    s
}

fn svm_point(config: &ExperimentConfig, p: &Point) -> Result<Outcome> {
    let settings = SolverSettings::default();
    let (train, test) = match config.dataset.as_deref() {
        None | Some("synthetic") => {
            let train = apps::LabeledPoints::two_gaussians(100, 1e-5, config.seed, 0)?;
            let mm = train.min_max();
            let test = apps::LabeledPoints::two_gaussians(1000, 1e-5, config.seed, 1)?.transformed(&mm);
            (train.transformed(&mm), test)
        }
        Some(path) => {
            let d = apps::LabeledPoints::read_csv(path, 1e-5)?;
            (d.clone(), d)
        }
    };
    if p.strategy == Strategy::Input {
        return Ok(Outcome::failed("unsupported"));
    }
    let rep = apps::svm_sensitivity(&train, config.privacy.gamma, config.privacy.beta, config.seed)?;
    let n = train.dim();
    let noise = rep.privacy(config.privacy.epsilon, config.privacy.delta).noise(n + 1)?;
    let (w, b) = match p.strategy {
        Strategy::Output => apps::hyperplane(&apps::solve_svm(&train, &settings)?.x, n),
        _ => apps::privatize_svm_with(&train, &noise, &config.chance.spec(), p.seed, &settings)?.nominal(),
    };
    let acc = apps::perturbed_accuracy(&w, b, &noise, &test, config.mc_samples, p.seed)?;
    let err: Vec<f64> = acc.iter().map(|a| 1.0 - a).collect();
    Ok(Outcome {
        loss_mean: Some(err.iter().sum::<f64>() / err.len() as f64),
        loss_cvar: Some(cvar_empirical(&err, 0.95)?),
        infeasibility: None,
        status: "ok".into(),
        sensitivity: Some(rep.delta_p),
        sensitivity_samples: Some(rep.sample_size),
        ..Outcome::default()
    })
}

fn regression_point(config: &ExperimentConfig, p: &Point) -> Result<Outcome> {
    let settings = SolverSettings::default();
    let model = match config.dataset.as_deref() {
        None | Some("cubic") => apps::RegressionModel::cubic_example(100, 15.0, 1e-4, config.seed)?,
        Some("wind") => apps::build_wind_curve_dataset(&apps::bundled_wind_curve()?, 0.1, 1e-4, config.seed)?,
        Some(path) => load_json(path)?,
    };
    if p.strategy == Strategy::Input {
        return Ok(Outcome::failed("unsupported"));
    }
    let rep = apps::regression_sensitivity(&model, config.privacy.gamma, config.privacy.beta, config.seed)?;
    let mb = model.basis.dim();
    let noise = rep.privacy(config.privacy.epsilon, config.privacy.delta).noise(mb)?;
    let w: Vec<f64> = match p.strategy {
        Strategy::Output => apps::solve_regression(&model, &settings)?.x.rows(0, mb).iter().copied().collect(),
        _ => apps::privatize_regression_with(&model, &noise, &config.chance.spec(), p.seed, &settings)?.nominal(),
    };
    let m = apps::evaluate_regression(&model, &w, &noise, config.mc_samples, p.seed)?;
    Ok(Outcome {
        loss_mean: Some(m.mean_loss),
        loss_cvar: Some(cvar_empirical(&m.losses, 0.95)?),
        infeasibility: Some(m.violation_rate),
        status: "ok".into(),
        sensitivity: Some(rep.delta_p),
        sensitivity_samples: Some(rep.sample_size),
        ..Outcome::default()
    })
}

/// A pentagon used when no polygon file is given.
pub fn default_polygon() -> apps::EllipsoidInstance {
    apps::EllipsoidInstance {
        a: vec![[-1.0, 0.0], [0.0, -1.0], [1.0, 1.0], [1.0, -0.5], [-0.5, 1.0]],
        b: vec![1.0, 1.0, 2.0, 1.5, 1.5],
    }
}

fn ellipsoid_point(config: &ExperimentConfig, p: &Point) -> Result<Outcome> {
    let settings = SolverSettings::default();
    let inst = match &config.dataset {
        Some(path) => load_json(path)?,
        None => default_polygon(),
    };
    if p.strategy == Strategy::Input {
        return Ok(Outcome::failed("unsupported"));
    }
    let (best, sol) = apps::solve_ellipsoid(&inst, &settings)?;
    let rep = apps::ellipsoid_sensitivity(&inst, 0.01, config.privacy.gamma, config.privacy.beta, config.seed)?;
    let noise = rep.privacy(config.privacy.epsilon, config.privacy.delta).noise(6)?;
    let (rule, vs) = match p.strategy {
        Strategy::Output => {
            (crate::ldr::DecisionRule::new(sol.x.rows(0, 6).into_owned(), nalgebra::DMatrix::identity(6, 6)), None)
        }
        _ => {
            let e = apps::privatize_ellipsoid_with(&inst, &noise, &config.chance.spec(), 32, p.seed, &settings)?;
            (e.rule, e.privatized.sample_size)
        }
    };
    let m = apps::evaluate_ellipsoids(&inst, &rule, &noise, config.mc_samples, p.seed)?;
    let loss: Vec<f64> = m.volumes.iter().map(|v| best.volume() - v).collect();
    Ok(Outcome {
        loss_mean: Some(best.volume() - m.mean_volume),
        loss_cvar: Some(cvar_empirical(&loss, 0.95)?),
        infeasibility: Some(1.0 - m.containment_rate),
        status: "ok".into(),
        sensitivity: Some(rep.delta_p),
        sensitivity_samples: Some(rep.sample_size),
        vertex_samples: vs,
        ..Outcome::default()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(dir: &Path) -> ExperimentConfig {
        serde_json::from_value(serde_json::json!({
            "app": "simple-lp",
            "privacy": { "epsilon": 1.0, "alpha": [1.0] },
            "chance": { "method": "vertex", "eta": 0.05 },
            "mc_samples": 2000,
            "seed": 3,
            "output": dir,
        }))
        .unwrap()
    }

    #[test]
    fn simple_lp_rows() {
        let dir = tempfile::tempdir().unwrap();
        let rep = run_experiment(&config(dir.path())).unwrap();
        assert_eq!(rep.rows.len(), 3);
        let inf: Vec<f64> = rep.rows.iter().map(|r| r.infeasibility.unwrap()).collect();
        assert!((inf[0] - 0.5).abs() < 0.05 && (inf[1] - 0.5).abs() < 0.05 && inf[2] <= 0.06, "{inf:?}");
        let head = std::fs::read_to_string(&rep.csv).unwrap();
        assert!(head.starts_with("strategy,alpha,eps,loss_mean,loss_cvar,infeasibility,status,"));
    }

    #[test]
    fn rejects_bad_values() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(dir.path());
        c.privacy.epsilon = 0.0;
        assert!(matches!(run_experiment(&c), Err(Error::InvalidArgument(_))));
        let mut c = config(dir.path());
        c.dataset = Some("/nonexistent/file.json".into());
        assert!(c.validate().is_err());
    }
}
