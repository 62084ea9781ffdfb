use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use dp_conic::apps::{self, Strategy};
use dp_conic::conic::ConicProgram;
use dp_conic::dp::{
    calibrate_gaussian, calibrate_laplace, estimate_sensitivity, NormOrder, SensitivityConfig, SensitivityReport,
};
use dp_conic::harness::{self, App, ExperimentConfig};
use dp_conic::ldr::{privatize, ChanceSpec, EtaBar, QueryConstraint, SafetyKind};
use dp_conic::{solve, Error, SolverSettings, Status};

#[derive(Parser)]
#[command(name = "dp-conic", version, about = "Differentially private conic optimization")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a conic program stored as JSON and print the solution.
    Solve(SolveArgs),
    /// Estimate the sensitivity of an application query by sampling adjacent pairs.
    Sensitivity(SensitivityArgs),
    /// Build the chance-constrained counterpart of a program under additive noise.
    Privatize(PrivatizeArgs),
    /// Run a batch experiment from a JSON config.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SolverFlags {
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolverFlags {
    fn settings(&self) -> SolverSettings {
        let mut s = SolverSettings::default();
        if let Some(t) = self.tol {
            s.tol = t;
            s.reduced_tol = s.reduced_tol.max(t);
        }
        if let Some(m) = self.max_iter {
            s.max_iter = m;
        }
        s
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[command(flatten)]
    solver: SolverFlags,
    /// Write the solution here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SensitivityArgs {
    #[arg(long, value_enum)]
    app: CliApp,
    /// Adjacency radius; `inf` for the unbounded universe of the sampled apps.
    #[arg(long, default_value = "inf", value_parser = parse_f64)]
    alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Pairs to draw; defaults to the smallest admissible sample.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Data file, or `net3`/`net5` for the bundled networks.
    #[arg(long)]
    dataset: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliApp {
    SimpleLp,
    Opf,
    Svm,
    Regression,
    Ellipsoid,
}

#[derive(Clone, Copy, ValueEnum)]
enum QueryKind {
    Identity,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Vertex,
    Chebyshev,
    Gaussian,
}

#[derive(Args)]
struct PrivatizeArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Sensitivity of the released query.
    #[arg(long)]
    sensitivity: f64,
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
    /// Zero for Laplace noise, positive for Gaussian.
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, value_enum, default_value = "identity")]
    query: QueryKind,
    #[arg(long, value_enum, default_value = "vertex")]
    method: Method,
    #[arg(long, default_value_t = 0.05)]
    eta: f64,
    #[arg(long, default_value_t = 0.01)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the transformed program here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also solve the counterpart and print the rule.
    #[arg(long)]
    solve: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    mc_samples: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Comma-separated α grid.
    #[arg(long, value_delimiter = ',', value_parser = parse_f64)]
    alpha: Option<Vec<f64>>,
    /// Comma-separated subset of input, output, program.
    #[arg(long, value_delimiter = ',')]
    strategies: Option<Vec<String>>,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        v => v.parse().map_err(|e| format!("{s}: {e}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Cmd::Solve(a) => run_solve(a),
        Cmd::Sensitivity(a) => run_sensitivity(a),
        Cmd::Privatize(a) => run_privatize(a),
        Cmd::Experiment(a) => run_experiment(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NumericalBreakdown(_) | Error::SolveFailure { .. } | Error::Infeasible(_) => 3,
        _ => 2,
    }
}

fn emit(value: &impl serde::Serialize, out: Option<&PathBuf>) -> dp_conic::Result<()> {
    let s = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => std::fs::write(p, s)?,
        None => print!("{s}"),
    }
    Ok(())
}

fn run_solve(a: SolveArgs) -> dp_conic::Result<()> {
    let settings = a.solver.settings();
    settings.check()?;
    let program = ConicProgram::read(&a.input)?;
    let sol = solve(&program, &settings)?;
    match sol.status {
        Status::Optimal | Status::PrimalInfeasible | Status::DualInfeasible => emit(&sol, a.out.as_ref()),
        s => Err(Error::Infeasible(s)),
    }
}

fn run_sensitivity(a: SensitivityArgs) -> dp_conic::Result<()> {
    let cfg = |p| {
        let c = SensitivityConfig::new(p, a.gamma, a.beta, a.seed);
        match a.samples {
            Some(s) => c.with_samples(s),
            None => c,
        }
    };
    let sampled_only = |name: &str| -> dp_conic::Result<()> {
        if a.alpha.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "{name} adjacency uses an unbounded universe; pass --alpha inf"
            )));
        }
        Ok(())
    };
    let finite_alpha = || -> dp_conic::Result<f64> {
        if a.alpha.is_finite() && a.alpha >= 0.0 {
            Ok(a.alpha)
        } else {
            Err(Error::InvalidArgument("this app needs a finite, nonnegative --alpha".into()))
        }
    };
    let report: SensitivityReport = match a.app {
        CliApp::SimpleLp => {
            let base = match &a.dataset {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => apps::SimpleLp::default(),
            };
            estimate_sensitivity(&apps::SimpleLpAdjacency { base, alpha: finite_alpha()? }, &cfg(NormOrder::L1))?
        }
        CliApp::Opf => {
            let net = match a.dataset.as_deref() {
                None => apps::PowerNetwork::bundled("net5")?,
                Some(name @ ("net3" | "net5")) => apps::PowerNetwork::bundled(name)?,
                Some(path) => apps::PowerNetwork::read(path)?,
            };
            estimate_sensitivity(&apps::OpfAdjacency { net, alpha: finite_alpha()? }, &cfg(NormOrder::L1))?
        }
        CliApp::Svm => {
            sampled_only("svm")?;
            let data = match &a.dataset {
                Some(p) => apps::LabeledPoints::read_csv(p, 1e-5)?,
                None => {
                    let d = apps::LabeledPoints::two_gaussians(100, 1e-5, a.seed, 0)?;
                    d.transformed(&d.min_max())
                }
            };
            estimate_sensitivity(&apps::SvmAdjacency { data, radius: 0.05 }, &cfg(NormOrder::L1))?
        }
        CliApp::Regression => {
            sampled_only("regression")?;
            let model = match &a.dataset {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => apps::RegressionModel::cubic_example(100, 15.0, 1e-4, a.seed)?,
            };
            estimate_sensitivity(&apps::RegressionAdjacency::new(model), &cfg(NormOrder::L2))?
        }
        CliApp::Ellipsoid => {
            sampled_only("ellipsoid")?;
            let inst = match &a.dataset {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => harness::default_polygon(),
            };
            inst.check_bounded(&SolverSettings::default())?;
            estimate_sensitivity(&apps::EllipsoidAdjacency { inst, gamma: 0.01 }, &cfg(NormOrder::L2))?
        }
    };
    emit(&report, None)
}

fn run_privatize(a: PrivatizeArgs) -> dp_conic::Result<()> {
    let settings = a.solver.settings();
    settings.check()?;
    let program = ConicProgram::read(&a.input)?;
    let n = program.n();
    let (query, k) = match a.query {
        QueryKind::Identity => (QueryConstraint::identity(n), n),
        QueryKind::Sum => (QueryConstraint::sum(n), 1),
    };
    let noise = if a.delta > 0.0 {
        calibrate_gaussian(a.sensitivity, a.epsilon, a.delta, k)?
    } else {
        calibrate_laplace(a.sensitivity, a.epsilon, k)?
    };
    let chance = match a.method {
        Method::Vertex => ChanceSpec::vertex(a.eta, a.beta),
        Method::Chebyshev => {
            ChanceSpec::Individual { eta_bar: EtaBar::Uniform(a.eta), safety: Some(SafetyKind::Chebyshev) }
        }
        Method::Gaussian => {
            ChanceSpec::Individual { eta_bar: EtaBar::Uniform(a.eta), safety: Some(SafetyKind::GaussianExact) }
        }
    };
    let p = privatize(&program, &noise, &query, &chance, a.seed)?;
    match &a.out {
        Some(path) => p.program.write(path)?,
        None => println!("{}", p.program.to_json()?),
    }
    if a.solve {
        let (rule, sol) = p.solve(&settings)?;
        let rows: Vec<Vec<f64>> = (0..rule.n()).map(|i| rule.x.row(i).iter().copied().collect()).collect();
        let summary = json!({
            "noise": noise,
            "vertex_samples": p.sample_size,
            "objective": sol.objective + p.objective_offset,
            "xbar": rule.xbar.as_slice(),
            "X": rows,
        });
        // keep stdout parseable when it already carries the program
        if a.out.is_some() {
            emit(&summary, None)?;
        } else {
            eprintln!("{}", serde_json::to_string_pretty(&summary)?);
        }
    }
    Ok(())
}

fn run_experiment(a: ExperimentArgs) -> dp_conic::Result<()> {
    let mut cfg = ExperimentConfig::read(&a.config)?;
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    if let Some(v) = a.mc_samples {
        cfg.mc_samples = v;
    }
    if let Some(v) = a.output {
        cfg.output = v;
    }
    if let Some(v) = a.dataset {
        cfg.dataset = Some(v);
    }
    if let Some(v) = a.epsilon {
        cfg.privacy.epsilon = v;
    }
    if let Some(v) = a.eta {
        cfg.chance.eta = v;
    }
    if let Some(v) = a.alpha {
        cfg.privacy.alpha = v;
    }
    if let Some(v) = a.strategies {
        cfg.strategies = v
            .iter()
            .map(|s| match s.trim() {
                "input" => Ok(Strategy::Input),
                "output" => Ok(Strategy::Output),
                "program" => Ok(Strategy::Program),
                other => Err(Error::InvalidArgument(format!("unknown strategy {other}"))),
            })
            .collect::<dp_conic::Result<_>>()?;
    }
    let rep = harness::run_experiment(&cfg)?;
    let failed = rep.rows.iter().filter(|r| r.status != "ok").count();
    eprintln!(
        "{}: {} rows ({} not ok) -> {}, {}",
        App::name(cfg.app),
        rep.rows.len(),
        failed,
        rep.csv.display(),
        rep.manifest.display()
    );
    Ok(())
}
